"""Set-constraint solving by SMT translation, and a pattern-match analysis built on it."""

from .constraints import Signature, parse_constraint_file
from .smt import SolverConfig, Verdict, solve

__version__ = "0.1.0"
__all__ = ["Signature", "parse_constraint_file", "SolverConfig", "Verdict", "solve"]
