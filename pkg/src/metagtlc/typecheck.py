"""Type checking.

Three judgments for source programs: bidirectional synthesis and checking
for the object language, and a single-mode judgment for the metalanguage.
The metalanguage compares types up to *consistency*; the object language
uses plain equality.

Two validators re-type cast-calculus terms.  They are oracles for the
compiler and the evaluator: a failure there is an internal defect, never a
user error, so they raise ``ValidationError`` instead of ``TypeCheckError``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .coercions import coercion_type
from .syntax import (
    BUILTIN_TYPES,
    DUMMY_SPAN,
    MTYPE,
    OTYPE,
    PRIM_RESULT,
    Base,
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
    CodeStar,
    CodeT,
    CodeVar,
    MetaApp,
    MetaBase,
    MetaConst,
    MetaFun,
    MetaIf,
    MetaLam,
    MetaPrimOp,
    MetaQuote,
    MetaTerm,
    MetaType,
    MetaVar,
    ObjAnn,
    ObjApp,
    ObjBase,
    ObjConst,
    ObjFun,
    ObjLam,
    ObjPrimOp,
    ObjSplice,
    ObjTerm,
    ObjType,
    ObjVar,
    Span,
    Star,
    TypingContext,
    format_meta_type,
    format_obj_type,
    literal_base,
)

# error kinds
INCONSISTENT_TYPES = "inconsistent-types"
NOT_A_FUNCTION = "not-a-function"
UNBOUND_VARIABLE = "unbound-variable"
WRONG_STAGE_VARIABLE = "wrong-stage-variable"
ANNOTATION_MISMATCH = "annotation-mismatch"
CANNOT_SYNTHESIZE = "cannot-synthesize"


@dataclass
class TypeCheckError(Exception):
    kind: str
    span: Span
    message: str
    expected: Optional[Union[MetaType, ObjType]] = None
    actual: Optional[Union[MetaType, ObjType]] = None

    def __str__(self) -> str:
        return f"{self.span}: {self.message}"


class ValidationError(Exception):
    """A cast-calculus term failed re-typing: a compiler or evaluator bug."""


# ---------------------------------------------------------------------------
# Consistency

def consistent(a: MetaType, b: MetaType) -> bool:
    """Whether two metalanguage types agree wherever both are known.

    Reflexive and symmetric but not transitive; code types of distinct
    object types are *not* consistent with each other, only with code of
    unknown type.
    """
    match (a, b):
        case (Star(), _) | (_, Star()):
            return True
        case (MetaBase(x), MetaBase(y)):
            return x == y
        case (MetaFun(p1, r1), MetaFun(p2, r2)):
            return consistent(p1, p2) and consistent(r1, r2)
        case (CodeT(s), CodeT(t)):
            return s == t
        case (CodeStar(), CodeStar()):
            return True
        case (CodeStar(), CodeT(_)) | (CodeT(_), CodeStar()):
            return True
        case _:
            return False


# ---------------------------------------------------------------------------
# Object language (bidirectional, equality-based)

def synth_obj(ctx: TypingContext, term: ObjTerm) -> ObjType:
    match term:
        case ObjConst(lit):
            base = literal_base(lit)
            if base is None:
                raise TypeCheckError(
                    CANNOT_SYNTHESIZE, term.span,
                    f"'{lit.name}' is a metalanguage builtin, not object-language data",
                )
            return ObjBase(base)
        case ObjVar(x):
            entry = ctx.lookup(x)
            if entry is None:
                raise TypeCheckError(UNBOUND_VARIABLE, term.span, f"unbound variable '{x}'")
            if entry.tag != OTYPE:
                raise TypeCheckError(
                    WRONG_STAGE_VARIABLE, term.span,
                    f"'{x}' is a metalanguage variable; object code cannot mention it directly",
                )
            return entry.ty
        case ObjApp(fn, arg):
            fn_ty = synth_obj(ctx, fn)
            if not isinstance(fn_ty, ObjFun):
                raise TypeCheckError(
                    NOT_A_FUNCTION, fn.span,
                    f"applied expression has type {format_obj_type(fn_ty)}, not a function type",
                    actual=fn_ty,
                )
            check_obj(ctx, arg, fn_ty.param)
            return fn_ty.result
        case ObjAnn(inner, ty):
            check_obj(ctx, inner, ty)
            return ty
        case ObjPrimOp(op, args):
            for a in args:
                check_obj(ctx, a, ObjBase(Base.INT))
            return ObjBase(PRIM_RESULT[op])
        case ObjLam():
            raise TypeCheckError(
                CANNOT_SYNTHESIZE, term.span,
                "cannot infer the type of an unannotated lambda; "
                "annotate its parameter or ascribe the whole term",
            )
        case ObjSplice():
            raise TypeCheckError(
                CANNOT_SYNTHESIZE, term.span,
                "a splice needs an expected type from its context; ascribe it",
            )
        case _:
            raise TypeError(f"not an object term: {term!r}")


def check_obj(ctx: TypingContext, term: ObjTerm, expected: ObjType) -> None:
    match term:
        case ObjLam(x, body):
            if not isinstance(expected, ObjFun):
                raise TypeCheckError(
                    ANNOTATION_MISMATCH, term.span,
                    f"a lambda cannot have type {format_obj_type(expected)}",
                    expected=expected,
                )
            check_obj(ctx.push_obj(x, expected.param), body, expected.result)
        case ObjSplice(payload, _):
            payload_ty = type_meta(ctx, payload)
            if not consistent(payload_ty, CodeT(expected)):
                raise TypeCheckError(
                    INCONSISTENT_TYPES, term.span,
                    f"spliced expression has type {format_meta_type(payload_ty)}, "
                    f"which is not consistent with Code {format_obj_type(expected)}",
                    expected=CodeT(expected), actual=payload_ty,
                )
        case _:
            actual = synth_obj(ctx, term)
            if actual != expected:
                raise TypeCheckError(
                    ANNOTATION_MISMATCH, term.span,
                    f"expected {format_obj_type(expected)} but found {format_obj_type(actual)}",
                    expected=expected, actual=actual,
                )


# ---------------------------------------------------------------------------
# Metalanguage

def lit_meta_type(lit) -> MetaType:
    if isinstance(lit, BuiltinLit):
        return BUILTIN_TYPES[lit.name]
    return MetaBase(literal_base(lit))


def type_meta(ctx: TypingContext, term: MetaTerm) -> MetaType:
    match term:
        case MetaConst(lit):
            return lit_meta_type(lit)
        case MetaVar(x):
            entry = ctx.lookup(x)
            if entry is None:
                raise TypeCheckError(UNBOUND_VARIABLE, term.span, f"unbound variable '{x}'")
            if entry.tag != MTYPE:
                raise TypeCheckError(
                    WRONG_STAGE_VARIABLE, term.span,
                    f"'{x}' is an object-language variable; it only makes sense inside a quote",
                )
            return entry.ty
        case MetaLam(x, annot, body):
            body_ty = type_meta(ctx.push_meta(x, annot), body)
            return MetaFun(annot, body_ty)
        case MetaApp(fn, arg, _):
            fn_ty = type_meta(ctx, fn)
            arg_ty = type_meta(ctx, arg)
            match fn_ty:
                case Star():
                    return Star()
                case MetaFun(param, result):
                    if not consistent(param, arg_ty):
                        raise TypeCheckError(
                            INCONSISTENT_TYPES, arg.span,
                            f"argument has type {format_meta_type(arg_ty)}, which is not "
                            f"consistent with the expected {format_meta_type(param)}",
                            expected=param, actual=arg_ty,
                        )
                    return result
                case _:
                    raise TypeCheckError(
                        NOT_A_FUNCTION, fn.span,
                        f"applied expression has type {format_meta_type(fn_ty)}, "
                        "not a function type",
                        actual=fn_ty,
                    )
        case MetaQuote(body):
            return CodeT(synth_obj(ctx, body))
        case MetaPrimOp(op, args, _):
            for a in args:
                a_ty = type_meta(ctx, a)
                if not consistent(a_ty, MetaBase(Base.INT)):
                    raise TypeCheckError(
                        INCONSISTENT_TYPES, a.span,
                        f"operand of '{op}' has type {format_meta_type(a_ty)}, "
                        "which is not consistent with Int",
                        expected=MetaBase(Base.INT), actual=a_ty,
                    )
            return MetaBase(PRIM_RESULT[op])
        case MetaIf(cond, then, els, _):
            cond_ty = type_meta(ctx, cond)
            if not consistent(cond_ty, MetaBase(Base.BOOL)):
                raise TypeCheckError(
                    INCONSISTENT_TYPES, cond.span,
                    f"condition has type {format_meta_type(cond_ty)}, "
                    "which is not consistent with Bool",
                    expected=MetaBase(Base.BOOL), actual=cond_ty,
                )
            then_ty = type_meta(ctx, then)
            els_ty = type_meta(ctx, els)
            # branches of different types are both routed through the
            # unknown type at compilation
            return then_ty if then_ty == els_ty else Star()
        case _:
            raise TypeError(f"not a metaterm: {term!r}")


# ---------------------------------------------------------------------------
# Cast-calculus validators
#
# Blame can sit at any type, so synthesis uses a wildcard that unifies with
# anything; it only ever arises from blame subterms and from unannotated
# lambdas reached while a lifted blame is in flight.


@dataclass(frozen=True)
class _Wild(MetaType, ObjType):
    pass


WILD = _Wild()


def _agree(actual, expected, what: str):
    """Merge a synthesized type with an expected one, preferring concrete."""
    if isinstance(actual, _Wild):
        return expected
    if isinstance(expected, _Wild):
        return actual
    match (actual, expected):
        case (MetaFun(p1, r1), MetaFun(p2, r2)):
            return MetaFun(_agree(p1, p2, what), _agree(r1, r2, what))
        case (ObjFun(p1, r1), ObjFun(p2, r2)):
            return ObjFun(_agree(p1, p2, what), _agree(r1, r2, what))
        case (CodeT(t1), CodeT(t2)):
            return CodeT(_agree(t1, t2, what))
        case _:
            if actual != expected:
                raise ValidationError(
                    f"{what}: expected {_fmt_any(expected)} but synthesized {_fmt_any(actual)}"
                )
            return actual


def _fmt_any(ty) -> str:
    if isinstance(ty, _Wild):
        return "<any>"
    if isinstance(ty, MetaType):
        return format_meta_type(ty)
    return format_obj_type(ty)


def _contains_wild(ty) -> bool:
    match ty:
        case _Wild():
            return True
        case MetaFun(p, r) | ObjFun(p, r):
            return _contains_wild(p) or _contains_wild(r)
        case CodeT(t):
            return _contains_wild(t)
        case _:
            return False


def type_cc_meta(ctx: TypingContext, term: CCMetaTerm,
                 expected: Optional[MetaType] = None) -> MetaType:
    """Re-type a cast-calculus metaterm; equality throughout, no consistency.

    ``expected`` anchors the type of a term that is (or contains only)
    blame; whole-program validation always supplies it.
    """
    ty = _cc_meta(ctx, term)
    if expected is not None:
        return _agree(ty, expected, "cast-calculus metaterm")
    if _contains_wild(ty):
        raise ValidationError("blame alone has no synthesized type; pass the expected type")
    return ty


def _cc_meta(ctx: TypingContext, term: CCMetaTerm):
    match term:
        case CCConst(lit):
            return lit_meta_type(lit)
        case CCVar(x):
            entry = ctx.lookup(x)
            if entry is None or entry.tag != MTYPE:
                raise ValidationError(f"unbound or wrong-stage metavariable '{x}'")
            return entry.ty
        case CCLam(x, annot, body):
            return MetaFun(annot, _cc_meta(ctx.push_meta(x, annot), body))
        case CCApp(fn, arg):
            fn_ty = _cc_meta(ctx, fn)
            arg_ty = _cc_meta(ctx, arg)
            if isinstance(fn_ty, _Wild):
                return WILD
            if not isinstance(fn_ty, MetaFun):
                raise ValidationError(
                    f"application head has non-function type {_fmt_any(fn_ty)}"
                )
            _agree(arg_ty, fn_ty.param, "cast-calculus application argument")
            return fn_ty.result
        case CCQuote(body):
            return CodeT(_cc_code(ctx, body, None))
        case CCCast(inner, c):
            src, tgt = coercion_type(c)
            inner_ty = _cc_meta(ctx, inner)
            _agree(inner_ty, src, "cast source")
            return tgt
        case CCBlame():
            return WILD
        case CCPrimOp(op, args):
            for a in args:
                _agree(_cc_meta(ctx, a), MetaBase(Base.INT), f"operand of '{op}'")
            return MetaBase(PRIM_RESULT[op])
        case CCIf(cond, then, els):
            _agree(_cc_meta(ctx, cond), MetaBase(Base.BOOL), "if condition")
            t1 = _cc_meta(ctx, then)
            t2 = _cc_meta(ctx, els)
            return _agree(t1, t2, "if branches")
        case _:
            raise TypeError(f"not a CC metaterm: {term!r}")


def type_cc_code(ctx: TypingContext, term, expected: Optional[ObjType] = None) -> ObjType:
    """Re-type cast-calculus code (or a splice-free source object term)."""
    ty = _cc_code(ctx, term, expected)
    if expected is None and _contains_wild(ty):
        raise ValidationError("code term containing only blame needs an expected type")
    return ty


def _cc_code(ctx: TypingContext, term, expected: Optional[ObjType]):
    if expected is not None:
        match term:
            case CodeLam(x, body) | ObjLam(x, body):
                if isinstance(expected, _Wild):
                    return WILD
                if not isinstance(expected, ObjFun):
                    raise ValidationError(
                        f"lambda checked against non-function type {_fmt_any(expected)}"
                    )
                _cc_code(ctx.push_obj(x, expected.param), body, expected.result)
                return expected
            case _:
                return _agree(_cc_code(ctx, term, None), expected, "code term")
    match term:
        case CodeConst(lit) | ObjConst(lit):
            base = literal_base(lit)
            if base is None:
                raise ValidationError("builtin constant inside object code")
            return ObjBase(base)
        case CodeVar(x) | ObjVar(x):
            entry = ctx.lookup(x)
            if entry is None or entry.tag != OTYPE:
                raise ValidationError(f"unbound or wrong-stage object variable '{x}'")
            return entry.ty
        case CodeApp(fn, arg) | ObjApp(fn, arg):
            fn_ty = _cc_code(ctx, fn, None)
            if isinstance(fn_ty, _Wild):
                _cc_code(ctx, arg, WILD)
                return WILD
            if not isinstance(fn_ty, ObjFun):
                raise ValidationError(
                    f"code application head has non-function type {_fmt_any(fn_ty)}"
                )
            _cc_code(ctx, arg, fn_ty.param)
            return fn_ty.result
        case CodeAnn(inner, ty) | ObjAnn(inner, ty):
            _cc_code(ctx, inner, ty)
            return ty
        case CodeSplice(payload):
            payload_ty = _cc_meta(ctx, payload)
            match payload_ty:
                case _Wild():
                    return WILD
                case CodeT(t):
                    return t
                case _:
                    raise ValidationError(
                        f"splice payload has type {_fmt_any(payload_ty)}, not a Code type"
                    )
        case CodePrimOp(op, args) | ObjPrimOp(op, args):
            for a in args:
                _cc_code(ctx, a, ObjBase(Base.INT))
            return ObjBase(PRIM_RESULT[op])
        case CodeLam() | ObjLam():
            raise ValidationError("bare lambda in synthesis position inside code")
        case ObjSplice():
            raise ValidationError("source splice leaked into cast-calculus validation")
        case _:
            raise TypeError(f"not a code term: {term!r}")
