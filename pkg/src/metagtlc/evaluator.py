"""Small-step evaluation of cast-calculus terms.

Call-by-value, left to right.  Values are constants, lambdas, quotes whose
bodies contain no splice, and values wrapped in an inert coercion
(injection, code injection, or function coercion).  Reduction inside a
quote finds the leftmost splice and steps its payload; a payload that turns
into blame is lifted out of the surrounding code frames one at a time until
the enclosing quote collapses to that blame.

The top-level driver compiles a source program, steps it under a fuel
bound, and packages the outcome: generated object code, blame, a timeout
standing in for divergence, or (never, for well-typed input) a stuck term.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Union

from .coercions import (
    CodeIdStar,
    CodeIdT,
    CodeInj,
    CodeProj,
    Coercion,
    FunCo,
    Id,
    Inj,
    Proj,
    Seq,
)
from .compiler import compile_meta
from .syntax import (
    EMPTY_CTX,
    BlameLabel,
    BoolLit,
    BuiltinLit,
    CCApp,
    CCBlame,
    CCCast,
    CCConst,
    CCIf,
    CCLam,
    CCMetaTerm,
    CCPrimOp,
    CCQuote,
    CCVar,
    CodeAnn,
    CodeApp,
    CodeConst,
    CodeLam,
    CodePrimOp,
    CodeSplice,
    CodeT,
    CodeVar,
    IntLit,
    MetaTerm,
    MetaType,
    ObjTerm,
    ObjType,
    Span,
    StringLit,
    cc_to_obj,
    format_meta_type,
    pretty_meta,
    splice_free,
    subst_meta,
)
from .typecheck import (
    ANNOTATION_MISMATCH,
    TypeCheckError,
    ValidationError,
    type_cc_code,
    type_cc_meta,
    type_meta,
)

DEFAULT_FUEL = 100_000


class EvalRuntimeError(Exception):
    """A builtin failed (unreadable file, unparseable number).

    This is a user-facing diagnostic, distinct from blame: no cast is at
    fault.
    """

    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.message = message
        self.span = span


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class ConstValue:
    term: CCMetaTerm


@dataclass(frozen=True)
class LamValue:
    term: CCMetaTerm


@dataclass(frozen=True)
class WrappedValue:
    inner: CCMetaTerm
    coercion: Coercion


@dataclass(frozen=True)
class QuotedCode:
    body: object  # splice-free CC code term


Value = Union[ConstValue, LamValue, WrappedValue, QuotedCode]

_INERT = (Inj, CodeInj, FunCo)


def classify_value(term: CCMetaTerm) -> Optional[Value]:
    """The value classification of a term, or None if it is not a value."""
    match term:
        case CCConst(_):
            return ConstValue(term)
        case CCLam(_, _, _):
            return LamValue(term)
        case CCQuote(body):
            return QuotedCode(body) if splice_free(body) else None
        case CCCast(inner, c) if isinstance(c, _INERT):
            return WrappedValue(inner, c) if is_value(inner) else None
        case _:
            return None


def is_value(term: CCMetaTerm) -> bool:
    return classify_value(term) is not None


# ---------------------------------------------------------------------------
# Step results


@dataclass(frozen=True)
class Stepped:
    term: CCMetaTerm


@dataclass(frozen=True)
class IsValue:
    value: Value


@dataclass(frozen=True)
class IsBlame:
    label: BlameLabel
    expected: Optional[MetaType] = None
    actual: Optional[MetaType] = None


@dataclass(frozen=True)
class Stuck:
    term: object


# code-level step results


@dataclass(frozen=True)
class CodeStepped:
    term: object


@dataclass(frozen=True)
class IsSpliceFree:
    pass


@dataclass(frozen=True)
class SpliceBlame:
    """The code term is exactly a splice of blame, ready to be lifted."""

    label: BlameLabel
    blame: CCBlame


# ---------------------------------------------------------------------------
# Metalanguage reduction


def step_meta(term: CCMetaTerm):
    """One deterministic reduction step of a cast-calculus metaterm."""
    match term:
        case CCBlame(label):
            return IsBlame(label, term.expected, term.actual)
        case _:
            pass
    v = classify_value(term)
    if v is not None:
        return IsValue(v)
    match term:
        case CCApp(fn, arg):
            if isinstance(fn, CCBlame):
                return Stepped(fn)
            if not is_value(fn):
                return _under(term, fn, lambda f: CCApp(f, arg, span=term.span))
            if isinstance(arg, CCBlame):
                return Stepped(arg)
            if not is_value(arg):
                return _under(term, arg, lambda a: CCApp(fn, a, span=term.span))
            match fn:
                case CCLam(x, _, body):
                    return Stepped(subst_meta(body, x, arg))
                case CCCast(inner, FunCo(c, d)):
                    wrapped_arg = CCCast(arg, c, span=arg.span)
                    return Stepped(
                        CCCast(CCApp(inner, wrapped_arg, span=term.span), d, span=term.span)
                    )
                case CCConst(BuiltinLit() as b):
                    return Stepped(_apply_builtin(b, arg, term.span))
                case _:
                    return Stuck(term)
        case CCCast(inner, c):
            if isinstance(inner, CCBlame):
                return Stepped(inner)
            if not is_value(inner):
                return _under(term, inner, lambda m: CCCast(m, c, span=term.span))
            return _cast_step(term, inner, c)
        case CCQuote(body):
            r = step_code(body)
            match r:
                case CodeStepped(next_body):
                    return Stepped(CCQuote(next_body, span=term.span))
                case SpliceBlame(_, blame):
                    # the pair of splice and quote goes away
                    return Stepped(blame)
                case Stuck(t):
                    return Stuck(t)
                case _:
                    return Stuck(term)  # splice-free quotes are values, handled above
        case CCIf(cond, then, els):
            if isinstance(cond, CCBlame):
                return Stepped(cond)
            if not is_value(cond):
                return _under(term, cond, lambda m: CCIf(m, then, els, span=term.span))
            match cond:
                case CCConst(BoolLit(b)):
                    return Stepped(then if b else els)
                case _:
                    return Stuck(term)
        case CCPrimOp(op, args):
            done = []
            for i, a in enumerate(args):
                if is_value(a):
                    done.append(a)
                    continue
                if isinstance(a, CCBlame):
                    return Stepped(a)
                rest = args[i + 1:]
                return _under(
                    term, a,
                    lambda m: CCPrimOp(op, tuple(done) + (m,) + rest, span=term.span),
                )
            return _delta(term, op, args)
        case _:
            return Stuck(term)


def _under(term, inner, rebuild):
    r = step_meta(inner)
    match r:
        case Stepped(next_inner):
            return Stepped(rebuild(next_inner))
        case Stuck(t):
            return Stuck(t)
        case _:
            return Stuck(term)


def _cast_step(term, value, c):
    match c:
        case Id(_):
            return Stepped(value)
        case Seq(c1, c2):
            return Stepped(CCCast(CCCast(value, c1, span=term.span), c2, span=term.span))
        case CodeIdStar() | CodeIdT(_):
            return Stepped(value)
        case Proj(g, label):
            match value:
                case CCCast(inner, Inj(h)):
                    if h == g:
                        return Stepped(inner)
                    return Stepped(
                        CCBlame(label, expected=g, actual=h, span=term.span)
                    )
                case _:
                    return Stuck(term)
        case CodeProj(t, label):
            match value:
                case CCCast(inner, CodeInj(s)):
                    if s == t:
                        return Stepped(inner)
                    return Stepped(
                        CCBlame(label, expected=CodeT(t), actual=CodeT(s), span=term.span)
                    )
                case _:
                    return Stuck(term)
        case _:
            # inert coercions were classified as values before we got here
            return Stuck(term)


def _delta(term, op, args):
    values = []
    for a in args:
        match a:
            case CCConst(IntLit(v)):
                values.append(v)
            case _:
                return Stuck(term)
    x, y = values
    match op:
        case "+":
            return Stepped(CCConst(IntLit(x + y), span=term.span))
        case "-":
            return Stepped(CCConst(IntLit(x - y), span=term.span))
        case "*":
            return Stepped(CCConst(IntLit(x * y), span=term.span))
        case "<":
            return Stepped(CCConst(BoolLit(x < y), span=term.span))
        case ">":
            return Stepped(CCConst(BoolLit(x > y), span=term.span))
        case _:
            return Stuck(term)


# ---------------------------------------------------------------------------
# Code-language reduction: locate the leftmost splice and work on it


def step_code(term):
    """One reduction step of a code term, or the report that none is needed."""
    match term:
        case CodeSplice(payload):
            match payload:
                case CCBlame(label):
                    return SpliceBlame(label, payload)
                case _:
                    pass
            if is_value(payload):
                match payload:
                    case CCQuote(body) if splice_free(body):
                        return CodeStepped(body)
                    case _:
                        return Stuck(term)
            r = step_meta(payload)
            match r:
                case Stepped(next_payload):
                    return CodeStepped(CodeSplice(next_payload, span=term.span))
                case Stuck(t):
                    return Stuck(t)
                case _:
                    return Stuck(term)
        case CodeVar() | CodeConst():
            return IsSpliceFree()
        case CodeLam(x, body):
            return _code_frame(term, body, lambda b: CodeLam(x, b, span=term.span))
        case CodeApp(fn, arg):
            if not splice_free(fn):
                return _code_frame(term, fn, lambda f: CodeApp(f, arg, span=term.span))
            if not splice_free(arg):
                return _code_frame(term, arg, lambda a: CodeApp(fn, a, span=term.span))
            return IsSpliceFree()
        case CodeAnn(inner, ty):
            return _code_frame(term, inner, lambda i: CodeAnn(i, ty, span=term.span))
        case CodePrimOp(op, args):
            for i, a in enumerate(args):
                if splice_free(a):
                    continue
                pre = args[:i]
                post = args[i + 1:]
                return _code_frame(
                    term, a, lambda m: CodePrimOp(op, pre + (m,) + post, span=term.span)
                )
            return IsSpliceFree()
        case _:
            raise TypeError(f"not a CC code term: {term!r}")


def _code_frame(term, inner, rebuild):
    if splice_free(inner):
        return IsSpliceFree()
    r = step_code(inner)
    match r:
        case CodeStepped(next_inner):
            return CodeStepped(rebuild(next_inner))
        case SpliceBlame(_, blame):
            # lift the spliced blame out of this code frame
            return CodeStepped(CodeSplice(blame, span=term.span))
        case Stuck(t):
            return Stuck(t)
        case _:
            return IsSpliceFree()


# ---------------------------------------------------------------------------
# Builtins


def _read_file(path: str, base_dir: str, span: Span) -> str:
    resolved = path if os.path.isabs(path) else os.path.join(base_dir, path)
    try:
        with open(resolved, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise EvalRuntimeError(f"cannot read '{resolved}': {exc.strerror}", span) from exc


def _apply_builtin(lit: BuiltinLit, arg: CCMetaTerm, span: Span) -> CCMetaTerm:
    match arg:
        case CCConst(StringLit(path)):
            pass
        case _:
            raise ValidationError(f"builtin '{lit.name}' applied to a non-string value")
    text = _read_file(path, lit.base_dir, span)
    if lit.name == "read_and_quote":
        return CCQuote(CodeConst(StringLit(text.rstrip("\n")), span=span), span=span)
    if lit.name == "read_int":
        try:
            n = int(text.strip())
        except ValueError:
            raise EvalRuntimeError(
                f"'{path}' does not contain an integer: {text.strip()[:40]!r}", span
            ) from None
        return CCConst(IntLit(n), span=span)
    raise EvalRuntimeError(f"unknown builtin '{lit.name}'", span)


# ---------------------------------------------------------------------------
# Top-level driving


@dataclass(frozen=True)
class CodeResult:
    term: ObjTerm  # splice-free
    ty: ObjType


@dataclass(frozen=True)
class BlameResult:
    label: BlameLabel
    expected: Optional[MetaType] = None
    actual: Optional[MetaType] = None


@dataclass(frozen=True)
class TimeoutResult:
    steps: int


@dataclass(frozen=True)
class StuckResult:
    term: object


EvalResult = Union[CodeResult, BlameResult, TimeoutResult, StuckResult]


def _require_code_type(term: MetaTerm) -> tuple[MetaType, ObjType]:
    program_ty = type_meta(EMPTY_CTX, term)
    match program_ty:
        case CodeT(t):
            return program_ty, t
        case _:
            raise TypeCheckError(
                ANNOTATION_MISMATCH, term.span,
                f"a program must build code of a known type, "
                f"but this one has type {format_meta_type(program_ty)}",
                actual=program_ty,
            )


def meta_eval(term: MetaTerm, fuel: int = DEFAULT_FUEL) -> EvalResult:
    """Run a metaprogram of type ``Code T`` to completion.

    ``fuel`` bounds the number of reduction steps; 0 means unbounded.
    The returned object code is re-validated at ``T`` before being handed
    back, and a value that is not a quotation is an internal defect.
    """
    _, result_ty = _require_code_type(term)
    cc, _ = compile_meta(EMPTY_CTX, term)
    steps = 0
    while fuel <= 0 or steps < fuel:
        r = step_meta(cc)
        match r:
            case IsValue(QuotedCode(body)):
                checked = type_cc_code(EMPTY_CTX, body, expected=result_ty)
                if checked != result_ty:
                    raise ValidationError(
                        f"result code typed at {checked}, expected {result_ty}"
                    )
                return CodeResult(cc_to_obj(body), result_ty)
            case IsValue(_):
                raise ValidationError(
                    f"value of a Code type is not a quotation: {pretty_meta(cc)}"
                )
            case IsBlame(label, expected, actual):
                return BlameResult(label, expected, actual)
            case Stepped(next_term):
                cc = next_term
                steps += 1
            case Stuck(t):
                return StuckResult(t)
    return TimeoutResult(steps)


def reduce_cc(term: CCMetaTerm, fuel: int = DEFAULT_FUEL):
    """Step a cast-calculus term to an outcome; mostly useful in tests.

    Returns ``("value", term)``, ``("blame", label)``, ``("timeout", term)``
    or ``("stuck", term)``.
    """
    steps = 0
    while fuel <= 0 or steps < fuel:
        r = step_meta(term)
        match r:
            case IsValue(_):
                return ("value", term)
            case IsBlame(label, _, _):
                return ("blame", label)
            case Stepped(next_term):
                term = next_term
                steps += 1
            case Stuck(t):
                return ("stuck", t)
    return ("timeout", term)


@dataclass(frozen=True)
class Trace:
    steps: tuple  # of (CCMetaTerm, MetaType)
    result: EvalResult


def trace(term: MetaTerm, fuel: int = DEFAULT_FUEL) -> Trace:
    """Like ``meta_eval`` but records every intermediate term.

    Each snapshot is re-validated at the program's code type, so a type
    change between consecutive steps surfaces as a ``ValidationError``.
    """
    program_ty, result_ty = _require_code_type(term)
    cc, _ = compile_meta(EMPTY_CTX, term)
    snapshots = []

    def snap(t):
        validated = type_cc_meta(EMPTY_CTX, t, expected=program_ty)
        if validated != program_ty:
            raise ValidationError(
                f"snapshot typed at {format_meta_type(validated)}, "
                f"expected {format_meta_type(program_ty)}"
            )
        snapshots.append((t, validated))

    snap(cc)
    steps = 0
    while fuel <= 0 or steps < fuel:
        r = step_meta(cc)
        match r:
            case IsValue(QuotedCode(body)):
                checked = type_cc_code(EMPTY_CTX, body, expected=result_ty)
                if checked != result_ty:
                    raise ValidationError("result code type drifted from the program type")
                return Trace(tuple(snapshots), CodeResult(cc_to_obj(body), result_ty))
            case IsValue(_):
                raise ValidationError("value of a Code type is not a quotation")
            case IsBlame(label, expected, actual):
                return Trace(tuple(snapshots), BlameResult(label, expected, actual))
            case Stepped(next_term):
                cc = next_term
                snap(cc)
                steps += 1
            case Stuck(t):
                return Trace(tuple(snapshots), StuckResult(t))
    return Trace(tuple(snapshots), TimeoutResult(steps))
