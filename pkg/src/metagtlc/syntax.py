"""Core syntax shared by every other module.

Two term languages live side by side:

* the *metalanguage*, gradually typed, whose programs run and build code;
* the *object language*, a statically typed lambda calculus whose terms are
  only ever constructed, never executed.

Quote embeds an object term in the metalanguage; splice embeds a metalanguage
computation in object code.  After cast insertion the same split reappears as
the ``CC*`` / ``Code*`` families, where casts are explicit and application
nodes no longer carry blame labels (the labels move into the coercions).

Everything here is immutable; sharing across threads is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union


# ---------------------------------------------------------------------------
# Source locations and blame labels


@dataclass(frozen=True)
class Span:
    file: str = "<internal>"
    start_line: int = 0
    start_col: int = 0
    end_line: int = 0
    end_col: int = 0

    def covers(self, other: "Span") -> bool:
        if self.file != other.file:
            return False
        lo = (self.start_line, self.start_col) <= (other.start_line, other.start_col)
        hi = (other.end_line, other.end_col) <= (self.end_line, self.end_col)
        return lo and hi

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


DUMMY_SPAN = Span()


@dataclass(frozen=True)
class BlameLabel:
    """Identifies the source site that introduced a runtime cast.

    The ordinal is unique within one fully loaded program, so two distinct
    cast-inserting sites never share a label even if their spans collide.
    """

    file: str
    span: Span
    ordinal: int

    def __str__(self) -> str:
        return f"{self.file}:{self.span.start_line}:{self.span.start_col}#{self.ordinal}"


# ---------------------------------------------------------------------------
# Types


class Base(Enum):
    NAT = "Nat"
    INT = "Int"
    BOOL = "Bool"
    UNIT = "Unit"
    # String is an extension beyond the classic base-type set {Nat, Int,
    # Bool, Unit}; generators and exhaustive oracles leave it out.
    STRING = "String"


class ObjType:
    """Object-language types: base types and function types, nothing else."""

    __slots__ = ()


@dataclass(frozen=True)
class ObjBase(ObjType):
    base: Base


@dataclass(frozen=True)
class ObjFun(ObjType):
    param: ObjType
    result: ObjType


class MetaType:
    """Metalanguage types: adds the unknown type and the two code types."""

    __slots__ = ()


@dataclass(frozen=True)
class MetaBase(MetaType):
    base: Base


@dataclass(frozen=True)
class Star(MetaType):
    pass


@dataclass(frozen=True)
class MetaFun(MetaType):
    param: MetaType
    result: MetaType


@dataclass(frozen=True)
class CodeT(MetaType):
    """Code of a known object type."""

    ty: ObjType


@dataclass(frozen=True)
class CodeStar(MetaType):
    """Code whose object type is unknown."""

    pass


STAR = Star()
CODE_STAR = CodeStar()

O_NAT = ObjBase(Base.NAT)
O_INT = ObjBase(Base.INT)
O_BOOL = ObjBase(Base.BOOL)
O_UNIT = ObjBase(Base.UNIT)
O_STRING = ObjBase(Base.STRING)

M_NAT = MetaBase(Base.NAT)
M_INT = MetaBase(Base.INT)
M_BOOL = MetaBase(Base.BOOL)
M_UNIT = MetaBase(Base.UNIT)
M_STRING = MetaBase(Base.STRING)


def is_atomic(ty: MetaType) -> bool:
    """Base types and the unknown type; the only legal identity-coercion payloads."""
    return isinstance(ty, (MetaBase, Star))


def is_ground(ty: MetaType) -> bool:
    """Types castable directly into or out of the unknown type."""
    match ty:
        case MetaBase(_):
            return True
        case MetaFun(Star(), Star()):
            return True
        case CodeStar():
            return True
        case _:
            return False


def format_obj_type(ty: ObjType) -> str:
    match ty:
        case ObjBase(b):
            return b.value
        case ObjFun(p, r):
            left = format_obj_type(p)
            if isinstance(p, ObjFun):
                left = f"({left})"
            return f"{left} -> {format_obj_type(r)}"
        case _:
            raise ValueError(f"not an object type: {ty!r}")


def format_meta_type(ty: MetaType) -> str:
    match ty:
        case MetaBase(b):
            return b.value
        case Star():
            return "*"
        case CodeStar():
            return "Code *"
        case CodeT(t):
            inner = format_obj_type(t)
            if isinstance(t, ObjFun):
                inner = f"({inner})"
            return f"Code {inner}"
        case MetaFun(p, r):
            left = format_meta_type(p)
            if isinstance(p, (MetaFun, CodeT, CodeStar)):
                left = f"({left})"
            return f"{left} -> {format_meta_type(r)}"
        case _:
            raise ValueError(f"not a metalanguage type: {ty!r}")


def format_type(ty) -> str:
    return format_meta_type(ty) if isinstance(ty, MetaType) else format_obj_type(ty)


# ---------------------------------------------------------------------------
# Literals

# Bare decimals are Int; Nat literals take an ``n`` suffix so that the typing
# of a literal stays a function.


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class NatLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class UnitLit:
    pass


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class BuiltinLit:
    """A primitive metalanguage function bound by the frontend.

    ``base_dir`` anchors relative paths for the file-reading builtins and is
    ignored by equality so terms compare structurally.
    """

    name: str
    base_dir: str = field(default=".", compare=False)


Literal = Union[IntLit, NatLit, BoolLit, UnitLit, StringLit, BuiltinLit]

LITERAL_BASE = {
    IntLit: Base.INT,
    NatLit: Base.NAT,
    BoolLit: Base.BOOL,
    UnitLit: Base.UNIT,
    StringLit: Base.STRING,
}

# Types of the frontend-registered builtins; their behavior lives in the
# evaluator.
BUILTIN_TYPES: dict[str, MetaType] = {
    "read_and_quote": MetaFun(M_STRING, CodeT(O_STRING)),
    "read_int": MetaFun(M_STRING, M_INT),
}


def literal_base(lit: Literal) -> Optional[Base]:
    """Base type of a literal, or None for builtin function constants."""
    return LITERAL_BASE.get(type(lit))


def format_literal(lit: Literal) -> str:
    match lit:
        case IntLit(v):
            return str(v)
        case NatLit(v):
            return f"{v}n"
        case BoolLit(v):
            return "true" if v else "false"
        case UnitLit():
            return "unit"
        case StringLit(v):
            body = v.replace("\\", "\\\\").replace('"', '\\"')
            body = body.replace("\n", "\\n").replace("\t", "\\t")
            return f'"{body}"'
        case BuiltinLit(name):
            return name
        case _:
            raise ValueError(f"not a literal: {lit!r}")


# ---------------------------------------------------------------------------
# Primitive operators (metalanguage extension; also allowed in object code)

PRIM_OPS = ("+", "-", "*", "<", ">")

# every operator takes Int operands
PRIM_RESULT = {
    "+": Base.INT,
    "-": Base.INT,
    "*": Base.INT,
    "<": Base.BOOL,
    ">": Base.BOOL,
}


# ---------------------------------------------------------------------------
# Typing contexts

OTYPE = "otype"
MTYPE = "mtype"


@dataclass(frozen=True)
class CtxEntry:
    name: str
    tag: str  # OTYPE or MTYPE
    ty: Union[ObjType, MetaType]


@dataclass(frozen=True)
class TypingContext:
    """Ordered bindings with stage tags; lookup returns the innermost entry."""

    entries: tuple = ()

    def push_obj(self, name: str, ty: ObjType) -> "TypingContext":
        return TypingContext(self.entries + (CtxEntry(name, OTYPE, ty),))

    def push_meta(self, name: str, ty: MetaType) -> "TypingContext":
        return TypingContext(self.entries + (CtxEntry(name, MTYPE, ty),))

    def lookup(self, name: str) -> Optional[CtxEntry]:
        for entry in reversed(self.entries):
            if entry.name == name:
                return entry
        return None

    @property
    def empty_m(self) -> bool:
        """True when no metalanguage variable is bound."""
        return all(entry.tag != MTYPE for entry in self.entries)


EMPTY_CTX = TypingContext()


def ctx_lookup(ctx: TypingContext, name: str) -> Optional[CtxEntry]:
    return ctx.lookup(name)


# ---------------------------------------------------------------------------
# Source terms (before cast insertion)

_SPAN = dict(default=DUMMY_SPAN, compare=False, repr=False)


class MetaTerm:
    __slots__ = ()


class ObjTerm:
    __slots__ = ()


@dataclass(frozen=True)
class MetaVar(MetaTerm):
    name: str
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class MetaConst(MetaTerm):
    lit: Literal
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class MetaLam(MetaTerm):
    name: str
    annot: MetaType
    body: MetaTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class MetaApp(MetaTerm):
    fn: MetaTerm
    arg: MetaTerm
    label: BlameLabel
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class MetaQuote(MetaTerm):
    body: ObjTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class MetaPrimOp(MetaTerm):
    op: str
    args: tuple
    label: BlameLabel
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class MetaIf(MetaTerm):
    cond: MetaTerm
    then: MetaTerm
    els: MetaTerm
    label: BlameLabel
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class ObjVar(ObjTerm):
    name: str
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class ObjConst(ObjTerm):
    lit: Literal
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class ObjLam(ObjTerm):
    # object lambdas carry no annotation: they are only ever checked
    name: str
    body: ObjTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class ObjApp(ObjTerm):
    fn: ObjTerm
    arg: ObjTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class ObjAnn(ObjTerm):
    term: ObjTerm
    ty: ObjType
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class ObjSplice(ObjTerm):
    term: MetaTerm
    label: BlameLabel
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class ObjPrimOp(ObjTerm):
    op: str
    args: tuple
    span: Span = field(**_SPAN)


# ---------------------------------------------------------------------------
# Cast-calculus terms (after cast insertion)


class CCMetaTerm:
    __slots__ = ()


class CCCodeTerm:
    __slots__ = ()


@dataclass(frozen=True)
class CCVar(CCMetaTerm):
    name: str
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CCConst(CCMetaTerm):
    lit: Literal
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CCLam(CCMetaTerm):
    name: str
    annot: MetaType
    body: CCMetaTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CCApp(CCMetaTerm):
    # no label: blame now lives inside coercions
    fn: CCMetaTerm
    arg: CCMetaTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CCQuote(CCMetaTerm):
    body: CCCodeTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CCCast(CCMetaTerm):
    term: CCMetaTerm
    coercion: "Coercion"  # noqa: F821 - defined in coercions.py
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CCBlame(CCMetaTerm):
    label: BlameLabel
    # diagnostic payload recorded when a projection fails; not part of
    # structural equality
    expected: Optional[MetaType] = field(default=None, compare=False, repr=False)
    actual: Optional[MetaType] = field(default=None, compare=False, repr=False)
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CCPrimOp(CCMetaTerm):
    op: str
    args: tuple
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CCIf(CCMetaTerm):
    cond: CCMetaTerm
    then: CCMetaTerm
    els: CCMetaTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CodeVar(CCCodeTerm):
    name: str
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CodeConst(CCCodeTerm):
    lit: Literal
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CodeLam(CCCodeTerm):
    name: str
    body: CCCodeTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CodeApp(CCCodeTerm):
    fn: CCCodeTerm
    arg: CCCodeTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CodeAnn(CCCodeTerm):
    term: CCCodeTerm
    ty: ObjType
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CodeSplice(CCCodeTerm):
    # no label: the splice's cast is explicit in the payload
    term: CCMetaTerm
    span: Span = field(**_SPAN)


@dataclass(frozen=True)
class CodePrimOp(CCCodeTerm):
    op: str
    args: tuple
    span: Span = field(**_SPAN)


# ---------------------------------------------------------------------------
# Structural queries


def splice_free(term) -> bool:
    """True iff no splice node occurs anywhere, including under binders.

    Accepts both source object terms and cast-calculus code terms.  A term
    without splices contains no metalanguage fragments at all.
    """
    match term:
        case ObjSplice() | CodeSplice():
            return False
        case ObjVar() | ObjConst() | CodeVar() | CodeConst():
            return True
        case ObjLam(_, body) | CodeLam(_, body):
            return splice_free(body)
        case ObjApp(f, a) | CodeApp(f, a):
            return splice_free(f) and splice_free(a)
        case ObjAnn(t, _) | CodeAnn(t, _):
            return splice_free(t)
        case ObjPrimOp(_, args) | CodePrimOp(_, args):
            return all(splice_free(a) for a in args)
        case _:
            raise TypeError(f"not an object/code term: {term!r}")


def free_vars(term) -> set:
    """Free names of a term in any of the four families.

    Metalanguage and object-language variables share a namespace (binding is
    disambiguated by stage tags), so one set suffices.
    """
    match term:
        case MetaVar(x) | ObjVar(x) | CCVar(x) | CodeVar(x):
            return {x}
        case MetaConst() | ObjConst() | CCConst() | CodeConst() | CCBlame():
            return set()
        case MetaLam(x, _, body) | ObjLam(x, body) | CCLam(x, _, body) | CodeLam(x, body):
            return free_vars(body) - {x}
        case MetaApp(f, a, _) | ObjApp(f, a) | CCApp(f, a) | CodeApp(f, a):
            return free_vars(f) | free_vars(a)
        case MetaQuote(body) | CCQuote(body):
            return free_vars(body)
        case ObjSplice(t, _) | CodeSplice(t):
            return free_vars(t)
        case ObjAnn(t, _) | CodeAnn(t, _):
            return free_vars(t)
        case CCCast(t, _):
            return free_vars(t)
        case MetaPrimOp(_, args, _) | ObjPrimOp(_, args) | CCPrimOp(_, args) | CodePrimOp(_, args):
            out = set()
            for a in args:
                out |= free_vars(a)
            return out
        case MetaIf(c, t, e, _) | CCIf(c, t, e):
            return free_vars(c) | free_vars(t) | free_vars(e)
        case _:
            raise TypeError(f"not a term: {term!r}")


def fresh_name(base: str, avoid: set) -> str:
    root = base.rstrip("0123456789") or "x"
    i = 1
    while True:
        candidate = f"{root}{i}"
        if candidate not in avoid:
            return candidate
        i += 1


# ---------------------------------------------------------------------------
# Substitution over cast-calculus metaterms

def subst_meta(body: CCMetaTerm, name: str, value: CCMetaTerm) -> CCMetaTerm:
    """Capture-avoiding substitution of ``value`` for metavariable ``name``.

    Descends into quote bodies and back through splices.  Binders of the same
    name at either stage shadow the substitution; binders that would capture
    a free variable of ``value`` are renamed on the fly.
    """
    return _subst_m(body, name, value, free_vars(value))


def _subst_m(term, name, value, fv):
    match term:
        case CCVar(x):
            return value if x == name else term
        case CCConst() | CCBlame():
            return term
        case CCLam(x, annot, body):
            if x == name:
                return term
            if x in fv:
                x2 = fresh_name(x, fv | free_vars(body) | {name})
                body = _subst_m(body, x, CCVar(x2), {x2})
                return CCLam(x2, annot, _subst_m(body, name, value, fv), span=term.span)
            return CCLam(x, annot, _subst_m(body, name, value, fv), span=term.span)
        case CCApp(f, a):
            return CCApp(_subst_m(f, name, value, fv), _subst_m(a, name, value, fv), span=term.span)
        case CCQuote(body):
            return CCQuote(_subst_c(body, name, value, fv), span=term.span)
        case CCCast(t, c):
            return CCCast(_subst_m(t, name, value, fv), c, span=term.span)
        case CCPrimOp(op, args):
            return CCPrimOp(op, tuple(_subst_m(a, name, value, fv) for a in args), span=term.span)
        case CCIf(c, t, e):
            return CCIf(
                _subst_m(c, name, value, fv),
                _subst_m(t, name, value, fv),
                _subst_m(e, name, value, fv),
                span=term.span,
            )
        case _:
            raise TypeError(f"not a CC metaterm: {term!r}")


def _subst_c(term, name, value, fv):
    match term:
        case CodeVar() | CodeConst():
            return term
        case CodeLam(x, body):
            # an object binder shadows a metavariable of the same name
            if x == name:
                return term
            if x in fv:
                x2 = fresh_name(x, fv | free_vars(body) | {name})
                body = _rename_code_var(body, x, x2)
                return CodeLam(x2, _subst_c(body, name, value, fv), span=term.span)
            return CodeLam(x, _subst_c(body, name, value, fv), span=term.span)
        case CodeApp(f, a):
            return CodeApp(_subst_c(f, name, value, fv), _subst_c(a, name, value, fv), span=term.span)
        case CodeAnn(t, ty):
            return CodeAnn(_subst_c(t, name, value, fv), ty, span=term.span)
        case CodeSplice(t):
            return CodeSplice(_subst_m(t, name, value, fv), span=term.span)
        case CodePrimOp(op, args):
            return CodePrimOp(op, tuple(_subst_c(a, name, value, fv) for a in args), span=term.span)
        case _:
            raise TypeError(f"not a CC code term: {term!r}")


def _rename_code_var(term, old, new):
    match term:
        case CodeVar(x):
            return CodeVar(new, span=term.span) if x == old else term
        case CodeConst():
            return term
        case CodeLam(x, body):
            if x == old:
                return term
            return CodeLam(x, _rename_code_var(body, old, new), span=term.span)
        case CodeApp(f, a):
            return CodeApp(_rename_code_var(f, old, new), _rename_code_var(a, old, new), span=term.span)
        case CodeAnn(t, ty):
            return CodeAnn(_rename_code_var(t, old, new), ty, span=term.span)
        case CodeSplice(t):
            # object variables do not occur free in metaterms except inside
            # deeper quotes, which bind and rename independently
            return CodeSplice(_rename_meta_code_var(t, old, new), span=term.span)
        case CodePrimOp(op, args):
            return CodePrimOp(op, tuple(_rename_code_var(a, old, new) for a in args), span=term.span)
        case _:
            raise TypeError(f"not a CC code term: {term!r}")


def _rename_meta_code_var(term, old, new):
    match term:
        case CCVar() | CCConst() | CCBlame():
            return term
        case CCLam(x, annot, body):
            if x == old:
                return term
            return CCLam(x, annot, _rename_meta_code_var(body, old, new), span=term.span)
        case CCApp(f, a):
            return CCApp(_rename_meta_code_var(f, old, new), _rename_meta_code_var(a, old, new), span=term.span)
        case CCQuote(body):
            return CCQuote(_rename_code_var(body, old, new), span=term.span)
        case CCCast(t, c):
            return CCCast(_rename_meta_code_var(t, old, new), c, span=term.span)
        case CCPrimOp(op, args):
            return CCPrimOp(op, tuple(_rename_meta_code_var(a, old, new) for a in args), span=term.span)
        case CCIf(c, t, e):
            return CCIf(
                _rename_meta_code_var(c, old, new),
                _rename_meta_code_var(t, old, new),
                _rename_meta_code_var(e, old, new),
                span=term.span,
            )
        case _:
            raise TypeError(f"not a CC metaterm: {term!r}")


# ---------------------------------------------------------------------------
# Alpha equivalence

def alpha_eq(t1, t2) -> bool:
    """Structural equality modulo bound names, across term families.

    A source object term and a splice-free cast-calculus code term of the
    same shape compare equal; this is what the pretty/parse round trip needs.
    """
    return _alpha(t1, t2, {}, {})


def _binder_step(env1, env2, x1, x2):
    n = len(env1) + len(env2)
    e1 = dict(env1)
    e2 = dict(env2)
    e1[x1] = n
    e2[x2] = n
    return e1, e2


def _alpha(t1, t2, env1, env2) -> bool:
    match t1, t2:
        case (MetaVar(x) | ObjVar(x) | CCVar(x) | CodeVar(x)), (
            MetaVar(y) | ObjVar(y) | CCVar(y) | CodeVar(y)
        ):
            return env1.get(x, ("free", x)) == env2.get(y, ("free", y))
        case (MetaConst(a) | ObjConst(a) | CCConst(a) | CodeConst(a)), (
            MetaConst(b) | ObjConst(b) | CCConst(b) | CodeConst(b)
        ):
            return a == b
        case (ObjLam(x, b1) | CodeLam(x, b1)), (ObjLam(y, b2) | CodeLam(y, b2)):
            e1, e2 = _binder_step(env1, env2, x, y)
            return _alpha(b1, b2, e1, e2)
        case MetaLam(x, a1, b1), MetaLam(y, a2, b2):
            if a1 != a2:
                return False
            e1, e2 = _binder_step(env1, env2, x, y)
            return _alpha(b1, b2, e1, e2)
        case CCLam(x, a1, b1), CCLam(y, a2, b2):
            if a1 != a2:
                return False
            e1, e2 = _binder_step(env1, env2, x, y)
            return _alpha(b1, b2, e1, e2)
        case MetaApp(f1, a1, _), MetaApp(f2, a2, _):
            return _alpha(f1, f2, env1, env2) and _alpha(a1, a2, env1, env2)
        case (ObjApp(f1, a1) | CodeApp(f1, a1) | CCApp(f1, a1)), (
            ObjApp(f2, a2) | CodeApp(f2, a2) | CCApp(f2, a2)
        ):
            return _alpha(f1, f2, env1, env2) and _alpha(a1, a2, env1, env2)
        case (MetaQuote(b1) | CCQuote(b1)), (MetaQuote(b2) | CCQuote(b2)):
            return _alpha(b1, b2, env1, env2)
        case ObjSplice(m1, _), ObjSplice(m2, _):
            return _alpha(m1, m2, env1, env2)
        case CodeSplice(m1), CodeSplice(m2):
            return _alpha(m1, m2, env1, env2)
        case (ObjAnn(i1, ty1) | CodeAnn(i1, ty1)), (ObjAnn(i2, ty2) | CodeAnn(i2, ty2)):
            return ty1 == ty2 and _alpha(i1, i2, env1, env2)
        case CCCast(i1, c1), CCCast(i2, c2):
            return c1 == c2 and _alpha(i1, i2, env1, env2)
        case CCBlame(l1), CCBlame(l2):
            return l1 == l2
        case (MetaPrimOp(o1, a1, _) | ObjPrimOp(o1, a1) | CCPrimOp(o1, a1) | CodePrimOp(o1, a1)), (
            MetaPrimOp(o2, a2, _) | ObjPrimOp(o2, a2) | CCPrimOp(o2, a2) | CodePrimOp(o2, a2)
        ):
            return (
                o1 == o2
                and len(a1) == len(a2)
                and all(_alpha(x, y, env1, env2) for x, y in zip(a1, a2))
            )
        case (MetaIf(c1, t1, e1, _) | CCIf(c1, t1, e1)), (MetaIf(c2, t2, e2, _) | CCIf(c2, t2, e2)):
            return (
                _alpha(c1, c2, env1, env2)
                and _alpha(t1, t2, env1, env2)
                and _alpha(e1, e2, env1, env2)
            )
        case _:
            return False


# ---------------------------------------------------------------------------
# Printing

def pretty_obj(term) -> str:
    """Deterministic, re-parseable rendering of a splice-free object term.

    The caller guarantees there is no splice; hitting one is a defect.
    """
    return _pp_obj(term, 0)


# precedence levels: 0 lambda body, 1 comparison, 2 additive, 3 multiplicative,
# 4 application, 5 atom
_OP_PREC = {"<": 1, ">": 1, "+": 2, "-": 2, "*": 3}


def _pp_obj(term, prec: int) -> str:
    match term:
        case ObjVar(x) | CodeVar(x):
            return x
        case ObjConst(lit) | CodeConst(lit):
            return format_literal(lit)
        case ObjLam(x, body) | CodeLam(x, body):
            s = f"lam {x} -> {_pp_obj(body, 0)}"
            return f"({s})" if prec > 0 else s
        case ObjApp(f, a) | CodeApp(f, a):
            s = f"{_pp_obj(f, 4)} {_pp_obj(a, 5)}"
            return f"({s})" if prec > 4 else s
        case ObjAnn(t, ty):
            return f"({_pp_obj(t, 0)} : {format_obj_type(ty)})"
        case ObjPrimOp(op, args) | CodePrimOp(op, args):
            p = _OP_PREC[op]
            lhs = _pp_obj(args[0], p)
            rhs = _pp_obj(args[1], p + 1)
            return f"({lhs} {op} {rhs})"
        case ObjSplice() | CodeSplice():
            raise ValueError("pretty_obj requires a splice-free term")
        case _:
            raise TypeError(f"not an object/code term: {term!r}")


def pretty_meta(term) -> str:
    """Rendering of source or cast-calculus metaterms, for traces and output."""
    return _pp_meta(term, 0)


def _pp_meta(term, prec: int) -> str:
    match term:
        case MetaVar(x) | CCVar(x):
            return x
        case MetaConst(lit) | CCConst(lit):
            return format_literal(lit)
        case MetaLam(x, annot, body) | CCLam(x, annot, body):
            s = f"fun ({x} : {format_meta_type(annot)}) -> {_pp_meta(body, 0)}"
            return f"({s})" if prec > 0 else s
        case MetaApp(f, a, _) | CCApp(f, a):
            s = f"{_pp_meta(f, 4)} {_pp_meta(a, 5)}"
            return f"({s})" if prec > 4 else s
        case MetaQuote(body) | CCQuote(body):
            return f"<| {_pp_code(body)} |>"
        case CCCast(t, c):
            from .coercions import format_coercion

            return f"{_pp_meta(t, 5)}⟨{format_coercion(c)}⟩"
        case CCBlame(label):
            return f"blame {label}"
        case MetaPrimOp(op, args, _) | CCPrimOp(op, args):
            p = _OP_PREC[op]
            return f"({_pp_meta(args[0], p)} {op} {_pp_meta(args[1], p + 1)})"
        case MetaIf(c, t, e, _) | CCIf(c, t, e):
            s = f"if {_pp_meta(c, 1)} then {_pp_meta(t, 1)} else {_pp_meta(e, 1)}"
            return f"({s})" if prec > 0 else s
        case _:
            raise TypeError(f"not a metaterm: {term!r}")


def _pp_code(term) -> str:
    match term:
        case ObjSplice(m, _):
            return f"~{_pp_meta(m, 5)}"
        case CodeSplice(m):
            return f"~{_pp_meta(m, 5)}"
        case ObjLam(x, body) | CodeLam(x, body):
            return f"lam {x} -> {_pp_code(body)}"
        case ObjApp(f, a) | CodeApp(f, a):
            return f"{_pp_code_at(f, 4)} {_pp_code_at(a, 5)}"
        case ObjAnn(t, ty) | CodeAnn(t, ty):
            return f"({_pp_code(t)} : {format_obj_type(ty)})"
        case ObjPrimOp(op, args) | CodePrimOp(op, args):
            p = _OP_PREC[op]
            return f"({_pp_code_at(args[0], p)} {op} {_pp_code_at(args[1], p + 1)})"
        case _:
            return _pp_obj(term, 0)


def _pp_code_at(term, prec: int) -> str:
    s = _pp_code(term)
    match term:
        case ObjLam() | CodeLam() if prec > 0:
            return f"({s})"
        case (ObjApp() | CodeApp()) if prec > 4:
            return f"({s})"
        case _:
            return s


# ---------------------------------------------------------------------------
# Converting evaluated code back to source object terms

def cc_to_obj(term: CCCodeTerm) -> ObjTerm:
    """Rebuild a source-level object term from splice-free evaluated code."""
    match term:
        case CodeVar(x):
            return ObjVar(x, span=term.span)
        case CodeConst(lit):
            return ObjConst(lit, span=term.span)
        case CodeLam(x, body):
            return ObjLam(x, cc_to_obj(body), span=term.span)
        case CodeApp(f, a):
            return ObjApp(cc_to_obj(f), cc_to_obj(a), span=term.span)
        case CodeAnn(t, ty):
            return ObjAnn(cc_to_obj(t), ty, span=term.span)
        case CodePrimOp(op, args):
            return ObjPrimOp(op, tuple(cc_to_obj(a) for a in args), span=term.span)
        case CodeSplice():
            raise ValueError("cannot convert code that still contains a splice")
        case _:
            raise TypeError(f"not a CC code term: {term!r}")
