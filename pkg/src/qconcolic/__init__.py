"""Concolic testing for hybrid quantum-classical programs."""
from .driver import Config, Report, run_concolic
from .ir import Program, ProgramError
from .parser import load_program, parse_program, unparse
from .simulator import StateVector, TestCase, execute_concrete

__version__ = "0.1.0"

__all__ = [
    "Config",
    "Program",
    "ProgramError",
    "Report",
    "StateVector",
    "TestCase",
    "execute_concrete",
    "load_program",
    "parse_program",
    "run_concolic",
    "unparse",
]
