"""Front end and pattern-match analysis for a small typed functional language."""

from .analysis import (
    AnalysisReport, AnnScheme, AnnType, AArrow, AData, ATVar, DefReport,
    analyze_expr, analyze_program, bind_pattern, equate, erase, freshen,
    is_exhaustive, not_yet_covered, pattern_set, program_signature,
)
from .syntax import DataEnv, LangSyntaxError, Program, parse_program
from .types import LangTypeError, typecheck

__all__ = [
    "AnalysisReport", "AnnScheme", "AnnType", "AArrow", "AData", "ATVar",
    "DefReport", "analyze_expr", "analyze_program", "bind_pattern", "equate",
    "erase", "freshen", "is_exhaustive", "not_yet_covered", "pattern_set",
    "program_signature", "DataEnv", "LangSyntaxError", "Program",
    "parse_program", "LangTypeError", "typecheck",
]
