"""A gradually typed metalanguage that stages statically typed object code.

Programs of the metalanguage are type checked up to consistency, compiled
into a cast calculus whose coercions carry blame labels, and reduced until
they yield a closed, well-typed object program (or a blame pointing at the
source site whose cast failed).
"""

from .coercions import coerce, coercion_type, ground_of
from .compiler import compile_meta, compile_obj
from .evaluator import (
    BlameResult,
    CodeResult,
    StuckResult,
    TimeoutResult,
    Trace,
    meta_eval,
    step_meta,
    trace,
)
from .frontend import load_program, parse, parse_expression, parse_object_term
from .syntax import (
    EMPTY_CTX,
    alpha_eq,
    format_meta_type,
    format_obj_type,
    pretty_meta,
    pretty_obj,
    splice_free,
    subst_meta,
)
from .typecheck import (
    TypeCheckError,
    ValidationError,
    check_obj,
    consistent,
    synth_obj,
    type_cc_code,
    type_cc_meta,
    type_meta,
)

__all__ = [
    "BlameResult",
    "CodeResult",
    "EMPTY_CTX",
    "StuckResult",
    "TimeoutResult",
    "Trace",
    "TypeCheckError",
    "ValidationError",
    "alpha_eq",
    "check_obj",
    "coerce",
    "coercion_type",
    "compile_meta",
    "compile_obj",
    "consistent",
    "format_meta_type",
    "format_obj_type",
    "ground_of",
    "load_program",
    "meta_eval",
    "parse",
    "parse_expression",
    "parse_object_term",
    "pretty_meta",
    "pretty_obj",
    "splice_free",
    "step_meta",
    "subst_meta",
    "synth_obj",
    "trace",
    "type_cc_code",
    "type_cc_meta",
    "type_meta",
]

__version__ = "0.1.0"
