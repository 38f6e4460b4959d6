"""Type-directed cast insertion.

Translates well-typed source terms into the cast calculus.  The translation
is structurally recursive; the only interesting work happens where the
source type system used consistency:

* an application whose head has a function type coerces its argument to the
  parameter type;
* an application whose head has the unknown type coerces the head to the
  ground function type and the argument to the unknown type;
* a splice coerces its payload to code of the type the context expects;
* primitive operands and `if` conditions are coerced to the operator's
  types, and branches of different types are both routed through the
  unknown type.

Public entry points re-validate their output at the source type; a failure
is reported as an internal defect.
"""

from __future__ import annotations

from typing import Optional

from .coercions import coerce
from .syntax import (
    STAR,
    Base,
    CCApp,
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
    ObjConst,
    ObjFun,
    ObjLam,
    ObjPrimOp,
    ObjSplice,
    ObjTerm,
    ObjType,
    ObjVar,
    Star,
    TypingContext,
)
from .typecheck import (
    INCONSISTENT_TYPES,
    NOT_A_FUNCTION,
    TypeCheckError,
    ValidationError,
    consistent,
    format_meta_type,
    lit_meta_type,
    synth_obj,
    type_cc_code,
    type_cc_meta,
    type_meta,
)


def compile_meta(ctx: TypingContext, term: MetaTerm) -> tuple[CCMetaTerm, MetaType]:
    """Compile a well-typed metaterm, re-validating the result at its type."""
    cc, ty = _meta(ctx, term)
    checked = type_cc_meta(ctx, cc, expected=ty)
    if checked != ty:
        raise ValidationError(
            f"compiled term re-typed at {format_meta_type(checked)} "
            f"instead of {format_meta_type(ty)}"
        )
    return cc, ty


def compile_obj(ctx: TypingContext, term: ObjTerm,
                expected: Optional[ObjType] = None):
    """Compile an object term, synthesizing or checking against ``expected``."""
    cc, ty = _obj(ctx, term, expected)
    type_cc_code(ctx, cc, expected=ty)
    return cc, ty


def _cast(term: CCMetaTerm, src: MetaType, tgt: MetaType, label) -> CCMetaTerm:
    # coercions are kept exactly as generated, identities included
    return CCCast(term, coerce(src, tgt, label), span=term.span)


def _meta(ctx: TypingContext, term: MetaTerm) -> tuple[CCMetaTerm, MetaType]:
    match term:
        case MetaConst(lit):
            return CCConst(lit, span=term.span), lit_meta_type(lit)
        case MetaVar(x):
            ty = type_meta(ctx, term)
            return CCVar(x, span=term.span), ty
        case MetaLam(x, annot, body):
            body_cc, body_ty = _meta(ctx.push_meta(x, annot), body)
            return CCLam(x, annot, body_cc, span=term.span), MetaFun(annot, body_ty)
        case MetaApp(fn, arg, label):
            fn_cc, fn_ty = _meta(ctx, fn)
            arg_cc, arg_ty = _meta(ctx, arg)
            match fn_ty:
                case MetaFun(param, result):
                    if not consistent(param, arg_ty):
                        raise TypeCheckError(
                            INCONSISTENT_TYPES, arg.span,
                            f"argument has type {format_meta_type(arg_ty)}, which is not "
                            f"consistent with the expected {format_meta_type(param)}",
                            expected=param, actual=arg_ty,
                        )
                    arg_cc = _cast(arg_cc, arg_ty, param, label)
                    return CCApp(fn_cc, arg_cc, span=term.span), result
                case Star():
                    fn_cc = _cast(fn_cc, STAR, MetaFun(STAR, STAR), label)
                    arg_cc = _cast(arg_cc, arg_ty, STAR, label)
                    return CCApp(fn_cc, arg_cc, span=term.span), STAR
                case _:
                    raise TypeCheckError(
                        NOT_A_FUNCTION, fn.span,
                        f"applied expression has type {format_meta_type(fn_ty)}, "
                        "not a function type",
                        actual=fn_ty,
                    )
        case MetaQuote(body):
            body_cc, body_ty = _obj(ctx, body, None)
            return CCQuote(body_cc, span=term.span), CodeT(body_ty)
        case MetaPrimOp(op, args, label):
            int_ty = MetaBase(Base.INT)
            out = []
            for a in args:
                a_cc, a_ty = _meta(ctx, a)
                if not consistent(a_ty, int_ty):
                    raise TypeCheckError(
                        INCONSISTENT_TYPES, a.span,
                        f"operand of '{op}' has type {format_meta_type(a_ty)}, "
                        "which is not consistent with Int",
                        expected=int_ty, actual=a_ty,
                    )
                out.append(_cast(a_cc, a_ty, int_ty, label))
            from .syntax import PRIM_RESULT

            return CCPrimOp(op, tuple(out), span=term.span), MetaBase(PRIM_RESULT[op])
        case MetaIf(cond, then, els, label):
            bool_ty = MetaBase(Base.BOOL)
            cond_cc, cond_ty = _meta(ctx, cond)
            if not consistent(cond_ty, bool_ty):
                raise TypeCheckError(
                    INCONSISTENT_TYPES, cond.span,
                    f"condition has type {format_meta_type(cond_ty)}, "
                    "which is not consistent with Bool",
                    expected=bool_ty, actual=cond_ty,
                )
            cond_cc = _cast(cond_cc, cond_ty, bool_ty, label)
            then_cc, then_ty = _meta(ctx, then)
            els_cc, els_ty = _meta(ctx, els)
            if then_ty == els_ty:
                return CCIf(cond_cc, then_cc, els_cc, span=term.span), then_ty
            # heterogeneous branches both go to the unknown type; these are
            # injections and can never be blamed
            then_cc = _cast(then_cc, then_ty, STAR, label)
            els_cc = _cast(els_cc, els_ty, STAR, label)
            return CCIf(cond_cc, then_cc, els_cc, span=term.span), STAR
        case _:
            raise TypeError(f"not a metaterm: {term!r}")


def _obj(ctx: TypingContext, term: ObjTerm, expected: Optional[ObjType]):
    if expected is not None:
        match term:
            case ObjLam(x, body):
                if not isinstance(expected, ObjFun):
                    raise TypeCheckError(
                        "annotation-mismatch", term.span,
                        f"a lambda cannot have type {expected}", expected=expected,
                    )
                body_cc, _ = _obj(ctx.push_obj(x, expected.param), body, expected.result)
                return CodeLam(x, body_cc, span=term.span), expected
            case ObjSplice(payload, label):
                payload_cc, payload_ty = _meta(ctx, payload)
                target = CodeT(expected)
                if not consistent(payload_ty, target):
                    raise TypeCheckError(
                        INCONSISTENT_TYPES, term.span,
                        f"spliced expression has type {format_meta_type(payload_ty)}, "
                        f"which is not consistent with {format_meta_type(target)}",
                        expected=target, actual=payload_ty,
                    )
                payload_cc = CCCast(
                    payload_cc, coerce(payload_ty, target, label), span=payload_cc.span
                )
                return CodeSplice(payload_cc, span=term.span), expected
            case _:
                cc, actual = _obj(ctx, term, None)
                if actual != expected:
                    raise TypeCheckError(
                        "annotation-mismatch", term.span,
                        f"expected {actual} to equal {expected}",
                        expected=expected, actual=actual,
                    )
                return cc, expected
    match term:
        case ObjConst(lit):
            return CodeConst(lit, span=term.span), synth_obj(ctx, term)
        case ObjVar(x):
            return CodeVar(x, span=term.span), synth_obj(ctx, term)
        case ObjApp(fn, arg):
            fn_cc, fn_ty = _obj(ctx, fn, None)
            if not isinstance(fn_ty, ObjFun):
                raise TypeCheckError(
                    NOT_A_FUNCTION, fn.span,
                    "applied expression does not have a function type", actual=fn_ty,
                )
            arg_cc, _ = _obj(ctx, arg, fn_ty.param)
            return CodeApp(fn_cc, arg_cc, span=term.span), fn_ty.result
        case ObjAnn(inner, ty):
            inner_cc, _ = _obj(ctx, inner, ty)
            return CodeAnn(inner_cc, ty, span=term.span), ty
        case ObjPrimOp(op, args):
            from .syntax import PRIM_RESULT, ObjBase

            out = tuple(_obj(ctx, a, ObjBase(Base.INT))[0] for a in args)
            return CodePrimOp(op, out, span=term.span), ObjBase(PRIM_RESULT[op])
        case ObjLam() | ObjSplice():
            # reuse the checker's error messages for synthesis failures
            synth_obj(ctx, term)
            raise AssertionError("unreachable")
        case _:
            raise TypeError(f"not an object term: {term!r}")
