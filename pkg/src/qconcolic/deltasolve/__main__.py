import argparse
import sys

from . import UnsupportedInput, format_outcome, solve_text
from ..sexpr import SexprError


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m qconcolic.deltasolve")
    ap.add_argument("file")
    ap.add_argument("--model", action="store_true", help="print a model on delta-sat")
    ap.add_argument("--precision", type=float, default=0.001)
    ap.add_argument("--time-limit", type=float, default=60.0)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    try:
        with open(args.file) as fh:
            text = fh.read()
        p, out = solve_text(text, args.precision, args.time_limit, args.seed)
    except (OSError, UnsupportedInput, SexprError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    sys.stdout.write(format_outcome(p, out, args.precision, args.model))
    return 0


if __name__ == "__main__":
    sys.exit(main())
