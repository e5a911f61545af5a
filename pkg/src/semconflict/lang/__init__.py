"""ModLang: parsing, two independent evaluators, and comparable outcomes.

See docs/modlang.md for the language contract both evaluators implement.
"""

from .ast import SourceUnit, method_signature, normalize, unit_to_source
from .outcome import ExecutionOutcome, StateSnapshot, snapshot_state
from .parser import ParseError, parse_unit
from .program import BoundClass, UnitProgram

__all__ = [
    "BoundClass",
    "ExecutionOutcome",
    "ParseError",
    "SourceUnit",
    "StateSnapshot",
    "UnitProgram",
    "method_signature",
    "normalize",
    "parse_unit",
    "snapshot_state",
    "unit_to_source",
]
