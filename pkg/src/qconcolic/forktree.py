"""Exploration tree over branch decisions.

Each node is a conditional reached by one specific sequence of earlier
decisions. Per polarity it tracks whether a concrete run has gone that way
(explored), whether the solver proved it impossible (unsat), or whether the
engine gave up on it (abandoned, e.g. after a solver timeout).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .constraints import PathConstraint, atom_for
from .ir import GateOp, Program
from .symbolic import SymbolicEnv

Path = tuple[tuple[int, bool], ...]


@dataclass
class Node:
    site: int
    path: Path  # decisions leading to this node
    ops: tuple[GateOp, ...]  # gates executed before the conditional
    children: dict = field(default_factory=dict)
    explored: dict = field(default_factory=lambda: {True: False, False: False})
    unsat: dict = field(default_factory=lambda: {True: False, False: False})
    abandoned: dict = field(default_factory=lambda: {True: False, False: False})

    @property
    def depth(self) -> int:
        return len(self.path)

    @property
    def totally_explored(self) -> bool:
        return all(self.explored[b] or self.unsat[b] for b in (True, False))

    def open(self, polarity: bool) -> bool:
        return not (self.explored[polarity] or self.unsat[polarity] or self.abandoned[polarity])


@dataclass(frozen=True)
class Target:
    prefix: Path
    site: int
    polarity: bool

    @property
    def path(self) -> Path:
        return self.prefix + ((self.site, self.polarity),)


class ForkTree:
    def __init__(self, program: Program, env: SymbolicEnv):
        self.program = program
        self.env = env
        self.nodes: dict[Path, Node] = {}
        self.order: list[Path] = []
        self.last_path: Path = ()
        self._conds = program.site_conds()

    @property
    def root(self) -> Optional[Node]:
        return self.nodes.get(())

    def update(self, trace) -> "ForkTree":
        prefix: Path = ()
        for step, k in zip(trace.steps, trace.ops_prefix):
            node = self.nodes.get(prefix)
            if node is None:
                node = Node(step.site, prefix, tuple(trace.ops[:k]))
                self.nodes[prefix] = node
                self.order.append(prefix)
                if prefix:
                    parent = self.nodes[prefix[:-1]]
                    parent.children[prefix[-1][1]] = node
            elif node.site != step.site:
                raise ValueError(f"trace diverges from tree at {prefix}: site {step.site} vs {node.site}")
            node.explored[step.polarity] = True
            prefix = prefix + ((step.site, step.polarity),)
        self.last_path = prefix
        return self

    def select_target(self) -> Optional[Target]:
        """Deepest open polarity on the latest trace, else the deepest anywhere."""
        last = self.last_path
        for k in range(len(last) - 1, -1, -1):
            node = self.nodes[last[:k]]
            flipped = not last[k][1]
            if node.open(flipped):
                return Target(node.path, node.site, flipped)
        best = None
        for path in self.order:
            node = self.nodes[path]
            for pol in (True, False):
                if node.open(pol) and (best is None or node.depth > best.depth):
                    best = node
        if best is None:
            return None
        pol = next(p for p in (True, False) if best.open(p))
        return Target(best.path, best.site, pol)

    def target_constraint(self, target: Target) -> PathConstraint:
        atoms = []
        for k, (site, pol) in enumerate(target.path):
            node = self.nodes[target.prefix[:k]] if k < len(target.prefix) else self.nodes[target.prefix]
            atoms.append(atom_for(self._conds[site], site, node.ops, self.program, self.env, pol))
        return PathConstraint(tuple(atoms), origin=target.path)

    def node(self, target: Target) -> Node:
        return self.nodes[target.prefix]

    def mark_unsat(self, target: Target):
        self.node(target).unsat[target.polarity] = True

    def mark_abandoned(self, target: Target):
        self.node(target).abandoned[target.polarity] = True

    @property
    def fully_explored(self) -> bool:
        return all(n.totally_explored for n in self.nodes.values())

    def unsat_pairs(self) -> set[tuple[int, bool]]:
        return {(n.site, p) for n in self.nodes.values() for p in (True, False) if n.unsat[p]}

    def any_abandoned(self) -> bool:
        return any(any(n.abandoned.values()) for n in self.nodes.values())


def update_tree(tree: ForkTree, trace) -> ForkTree:
    return tree.update(trace)


def select_target(tree: ForkTree) -> Optional[Target]:
    return tree.select_target()


def target_constraint(tree: ForkTree, target: Target):
    return tree.target_constraint(target)
