"""Coercions: the combinator representation of runtime casts.

A coercion converts a value between two metalanguage types.  Identities,
injections into the unknown type, projections out of it, function and
sequence coercions are the classic set; four additional forms convert
between the two code types.  Only projections (and code projections) can
fail, so only they carry blame labels.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    CODE_STAR,
    STAR,
    BlameLabel,
    CodeStar,
    CodeT,
    MetaBase,
    MetaFun,
    MetaType,
    ObjType,
    Star,
    format_meta_type,
    format_obj_type,
    is_atomic,
    is_ground,
)


class Coercion:
    __slots__ = ()


@dataclass(frozen=True)
class Id(Coercion):
    """Identity on an atomic type (a base type or the unknown type)."""

    ty: MetaType


@dataclass(frozen=True)
class Inj(Coercion):
    """Injection of a ground type into the unknown type; never blamed."""

    ground: MetaType


@dataclass(frozen=True)
class Proj(Coercion):
    """Projection from the unknown type to a ground type; may blame."""

    ground: MetaType
    label: BlameLabel


@dataclass(frozen=True)
class FunCo(Coercion):
    """Function coercion; ``arg`` is applied contravariantly."""

    arg: Coercion
    res: Coercion


@dataclass(frozen=True)
class Seq(Coercion):
    first: Coercion
    second: Coercion


@dataclass(frozen=True)
class CodeIdStar(Coercion):
    pass


@dataclass(frozen=True)
class CodeIdT(Coercion):
    ty: ObjType


@dataclass(frozen=True)
class CodeInj(Coercion):
    """From code of a known type to code of unknown type; never blamed."""

    ty: ObjType


@dataclass(frozen=True)
class CodeProj(Coercion):
    """From code of unknown type to code of a known type; may blame."""

    ty: ObjType
    label: BlameLabel


class IllFormedCoercion(Exception):
    """An internal defect: a coercion that violates its own typing rules."""


def coercion_type(c: Coercion) -> tuple[MetaType, MetaType]:
    """Source and target type of a coercion; raises on ill-formed input."""
    match c:
        case Id(a):
            if not is_atomic(a):
                raise IllFormedCoercion(f"identity coercion on non-atomic type {format_meta_type(a)}")
            return (a, a)
        case Inj(g):
            if not is_ground(g):
                raise IllFormedCoercion(f"injection from non-ground type {format_meta_type(g)}")
            return (g, STAR)
        case Proj(g, _):
            if not is_ground(g):
                raise IllFormedCoercion(f"projection to non-ground type {format_meta_type(g)}")
            return (STAR, g)
        case FunCo(ca, cr):
            b, a = coercion_type(ca)
            a2, b2 = coercion_type(cr)
            return (MetaFun(a, a2), MetaFun(b, b2))
        case Seq(c1, c2):
            a, b = coercion_type(c1)
            b2, c3 = coercion_type(c2)
            if b != b2:
                raise IllFormedCoercion(
                    f"sequence mismatch: {format_meta_type(b)} vs {format_meta_type(b2)}"
                )
            return (a, c3)
        case CodeIdStar():
            return (CODE_STAR, CODE_STAR)
        case CodeIdT(t):
            return (CodeT(t), CodeT(t))
        case CodeInj(t):
            return (CodeT(t), CODE_STAR)
        case CodeProj(t, _):
            return (CODE_STAR, CodeT(t))
        case _:
            raise TypeError(f"not a coercion: {c!r}")


def ground_of(ty: MetaType) -> MetaType:
    """The ground type a non-unknown type routes through when cast to or
    from the unknown type."""
    match ty:
        case Star():
            raise ValueError("the unknown type has no ground type")
        case MetaBase(_):
            return ty
        case MetaFun(_, _):
            return MetaFun(STAR, STAR)
        case CodeT(_) | CodeStar():
            return CODE_STAR
        case _:
            raise TypeError(f"not a metalanguage type: {ty!r}")


def coerce(a: MetaType, b: MetaType, label: BlameLabel) -> Coercion:
    """Build the coercion from ``a`` to ``b``.

    Callers guarantee the two types are consistent; the clauses are ordered
    first-match-wins, with the ground cases ahead of the general routing
    through the unknown type.
    """
    match (a, b):
        case (MetaBase(x), MetaBase(y)) if x == y:
            return Id(a)
        case (Star(), Star()):
            return Id(STAR)
        case (Star(), g) if is_ground(g):
            return Proj(g, label)
        case (g, Star()) if is_ground(g):
            return Inj(g)
        case (Star(), _):
            g = ground_of(b)
            return Seq(Proj(g, label), coerce(g, b, label))
        case (_, Star()):
            g = ground_of(a)
            return Seq(coerce(a, g, label), Inj(g))
        case (MetaFun(pa, ra), MetaFun(pb, rb)):
            return FunCo(coerce(pb, pa, label), coerce(ra, rb, label))
        case (CodeT(s), CodeT(t)) if s == t:
            return CodeIdT(s)
        case (CodeStar(), CodeStar()):
            return CodeIdStar()
        case (CodeStar(), CodeT(t)):
            return CodeProj(t, label)
        case (CodeT(t), CodeStar()):
            return CodeInj(t)
        case _:
            raise ValueError(
                f"cannot coerce {format_meta_type(a)} to {format_meta_type(b)}: "
                "types are not consistent"
            )


def format_coercion(c: Coercion) -> str:
    match c:
        case Id(a):
            return f"id {format_meta_type(a)}"
        case Inj(g):
            return f"{_fmt_ground(g)}!"
        case Proj(g, label):
            return f"{_fmt_ground(g)}?^{label.ordinal}"
        case FunCo(ca, cr):
            return f"({format_coercion(ca)}) -> ({format_coercion(cr)})"
        case Seq(c1, c2):
            return f"{format_coercion(c1)} ; {format_coercion(c2)}"
        case CodeIdStar():
            return "code-id *"
        case CodeIdT(t):
            return f"code-id {_fmt_obj(t)}"
        case CodeInj(t):
            return f"code! {_fmt_obj(t)}"
        case CodeProj(t, label):
            return f"code?^{label.ordinal} {_fmt_obj(t)}"
        case _:
            raise TypeError(f"not a coercion: {c!r}")


def _fmt_ground(g: MetaType) -> str:
    s = format_meta_type(g)
    return f"({s})" if isinstance(g, (MetaFun, CodeStar)) else s


def _fmt_obj(t: ObjType) -> str:
    s = format_obj_type(t)
    return f"({s})" if "->" in s else s
