"""Random well-typed programs and executable safety oracles.

The generator builds closed metaterms by running the typing rules in
reverse from a goal type, so every program it produces type checks by
construction.  The ``star_bias`` knob controls how often annotations and
splice payloads use the unknown type: at 0 the programs are fully static,
at 1 every stage boundary goes through a runtime cast.

``check_type_safety`` evaluates a program while asserting, at every step,
the properties the calculus promises: compilation preserves the type, each
intermediate state is a value, a blame, or steppable, the type never
changes, and a final code value is a splice-free quotation that re-checks
at the program's code type.  Violations come back as data (with a shrunk
witness), never as exceptions.

``enumerate_small_oracles`` complements the random programs with exhaustive
checks over small types and terms: coercion totality, the
projection/blame dichotomy, and determinism of the checker and compiler.

Run standalone:  python -m metagtlc.propcheck --seeds 500 --star-bias 0.5
"""

from __future__ import annotations

import argparse
import itertools
import random
from dataclasses import dataclass, field
from typing import Optional

from .coercions import (
    CodeInj,
    CodeProj,
    Coercion,
    FunCo,
    Inj,
    Proj,
    Seq,
    coerce,
    coercion_type,
)
from .compiler import compile_meta
from .evaluator import (
    IsBlame,
    IsValue,
    QuotedCode,
    Stepped,
    Stuck,
    step_meta,
)
from .syntax import (
    CODE_STAR,
    EMPTY_CTX,
    MTYPE,
    OTYPE,
    STAR,
    BlameLabel,
    BoolLit,
    CCCast,
    CCMetaTerm,
    CodeSplice,
    CodeStar,
    CodeT,
    IntLit,
    M_BOOL,
    M_INT,
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
    O_BOOL,
    O_INT,
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
    splice_free,
)
from .typecheck import (
    TypeCheckError,
    ValidationError,
    consistent,
    type_cc_code,
    type_cc_meta,
    type_meta,
)


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_size: int = 30
    type_depth: int = 3
    star_bias: float = 0.5


# ---------------------------------------------------------------------------
# Term metrics and walks


def node_count(term) -> int:
    total = 0
    stack = [term]
    while stack:
        t = stack.pop()
        total += 1
        for f in t.__dataclass_fields__:
            if f in ("span", "label", "annot", "ty", "lit", "name", "op",
                     "coercion", "expected", "actual"):
                continue
            v = getattr(t, f)
            if isinstance(v, tuple):
                stack.extend(v)
            elif hasattr(v, "__dataclass_fields__"):
                stack.append(v)
    return total


def collect_source_labels(term) -> set:
    """Every blame label minted into a source term."""
    out = set()

    def walk(t):
        label = getattr(t, "label", None)
        if isinstance(label, BlameLabel):
            out.add(label)
        for f in t.__dataclass_fields__:
            if f in ("span", "label"):
                continue
            v = getattr(t, f)
            if isinstance(v, tuple):
                for item in v:
                    if hasattr(item, "__dataclass_fields__"):
                        walk(item)
            elif isinstance(v, (MetaTerm, ObjTerm)):
                walk(v)

    walk(term)
    return out


def collect_coercion_labels(term) -> set:
    """Every label reachable inside the coercions of a cast-calculus term."""
    out = set()

    def walk_co(c: Coercion):
        match c:
            case Proj(_, label) | CodeProj(_, label):
                out.add(label)
            case FunCo(a, b) | Seq(a, b):
                walk_co(a)
                walk_co(b)
            case _:
                pass

    from .syntax import CCCodeTerm

    def walk(t):
        if isinstance(t, CCCast):
            walk_co(t.coercion)
        for f in t.__dataclass_fields__:
            if f in ("span", "label", "coercion"):
                continue
            v = getattr(t, f)
            if isinstance(v, tuple):
                for item in v:
                    if isinstance(item, (CCMetaTerm, CCCodeTerm)):
                        walk(item)
            elif isinstance(v, (CCMetaTerm, CCCodeTerm)):
                walk(v)

    walk(term)
    return out


def compiled_splice_payload_types(cc_term) -> list:
    """Source types of the casts on compiled splice payloads."""
    from .syntax import CCCodeTerm

    out = []

    def walk(t):
        if isinstance(t, CodeSplice) and isinstance(t.term, CCCast):
            out.append(coercion_type(t.term.coercion)[0])
        for f in t.__dataclass_fields__:
            if f in ("span", "coercion"):
                continue
            v = getattr(t, f)
            if isinstance(v, tuple):
                for item in v:
                    if isinstance(item, (CCMetaTerm, CCCodeTerm)):
                        walk(item)
            elif isinstance(v, (CCMetaTerm, CCCodeTerm)):
                walk(v)

    walk(cc_term)
    return out


# ---------------------------------------------------------------------------
# Goal-directed generation


class _Gen:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self._ordinal = 0
        self._names = 0

    def label(self) -> BlameLabel:
        self._ordinal += 1
        span = Span("<generated>", 1, self._ordinal, 1, self._ordinal + 1)
        return BlameLabel("<generated>", span, self._ordinal)

    def name(self) -> str:
        self._names += 1
        return f"v{self._names}"

    # types ----------------------------------------------------------------

    def obj_type(self, depth: int) -> ObjType:
        if depth <= 1 or self.rng.random() < 0.6:
            return self.rng.choice((O_INT, O_BOOL))
        return ObjFun(self.obj_type(depth - 1), self.obj_type(depth - 1))

    def meta_type(self, depth: int, allow_star: bool = True) -> MetaType:
        if allow_star and self.rng.random() < self.cfg.star_bias:
            return STAR
        if depth <= 1:
            return self.rng.choice((M_INT, M_BOOL))
        r = self.rng.random()
        if r < 0.35:
            return self.rng.choice((M_INT, M_BOOL))
        if r < 0.6:
            return CodeT(self.obj_type(depth - 1))
        if r < 0.7:
            return CODE_STAR
        return MetaFun(
            self.meta_type(depth - 1, allow_star),
            self.meta_type(depth - 1, allow_star),
        )

    def consistent_variant(self, ty: MetaType) -> MetaType:
        """A type consistent with ``ty``, biased toward introducing casts."""
        r = self.rng.random()
        if r < self.cfg.star_bias:
            return STAR
        match ty:
            case Star():
                return self.meta_type(self.cfg.type_depth, allow_star=False)
            case CodeT(t) if r < 0.5:
                return CODE_STAR
            case CodeStar() if r < 0.5:
                return CodeT(self.obj_type(self.cfg.type_depth - 1))
            case MetaFun(p, rty) if r < 0.5:
                return MetaFun(self.consistent_variant(p), self.consistent_variant(rty))
            case _:
                return ty

    # variables ------------------------------------------------------------

    def vars_of(self, ctx: TypingContext, tag: str, ty) -> list:
        seen = set()
        out = []
        for entry in reversed(ctx.entries):
            if entry.name in seen:
                continue
            seen.add(entry.name)
            if entry.tag == tag and entry.ty == ty:
                out.append(entry.name)
        return out

    # metalanguage terms ----------------------------------------------------

    def meta(self, ctx: TypingContext, goal: MetaType, size: int) -> MetaTerm:
        candidates = self.vars_of(ctx, MTYPE, goal)
        if size <= 1:
            if candidates and self.rng.random() < 0.7:
                return MetaVar(self.rng.choice(candidates))
            return self.leaf(ctx, goal)
        strategies = ["app"]
        if candidates:
            strategies.append("var")
        match goal:
            case MetaFun(_, _):
                strategies += ["lam", "lam", "lam"]
            case CodeT(_):
                strategies += ["quote", "quote", "quote"]
            case Star():
                strategies += ["dyn", "dyn", "appstar"]
            case MetaBase(_):
                strategies.append("app")
            case CodeStar():
                strategies.append("ascribe_code")
        match self.rng.choice(strategies):
            case "var":
                return MetaVar(self.rng.choice(candidates))
            case "lam":
                return self.lam(ctx, goal, size)
            case "quote":
                return MetaQuote(self.obj_synth(ctx, goal.ty, size - 1))
            case "dyn":
                inner_ty = self.meta_type(self.cfg.type_depth, allow_star=False)
                inner = self.meta(ctx, inner_ty, size - 3)
                return self.dyn_wrap(inner)
            case "appstar":
                fn = self.meta(ctx, STAR, (size - 1) // 2)
                arg_ty = self.meta_type(self.cfg.type_depth)
                arg = self.meta(ctx, arg_ty, (size - 1) // 2)
                return MetaApp(fn, arg, self.label())
            case "ascribe_code":
                inner = self.meta(ctx, CodeT(self.obj_type(self.cfg.type_depth - 1)), size - 3)
                return self.ascribe(inner, CODE_STAR)
            case _:
                return self.app(ctx, goal, size)

    def lam(self, ctx: TypingContext, goal: MetaFun, size: int) -> MetaTerm:
        x = self.name()
        body = self.meta(ctx.push_meta(x, goal.param), goal.result, size - 1)
        return MetaLam(x, goal.param, body)

    def app(self, ctx: TypingContext, goal: MetaType, size: int) -> MetaTerm:
        param = self.meta_type(self.cfg.type_depth)
        arg_ty = self.consistent_variant(param)
        left = (size - 1) // 2
        fn = self.meta(ctx, MetaFun(param, goal), left)
        arg = self.meta(ctx, arg_ty, size - 1 - left)
        return MetaApp(fn, arg, self.label())

    def dyn_wrap(self, inner: MetaTerm) -> MetaTerm:
        x = self.name()
        return MetaApp(MetaLam(x, STAR, MetaVar(x)), inner, self.label())

    def ascribe(self, inner: MetaTerm, ty: MetaType) -> MetaTerm:
        x = self.name()
        return MetaApp(MetaLam(x, ty, MetaVar(x)), inner, self.label())

    def leaf(self, ctx: TypingContext, goal: MetaType) -> MetaTerm:
        candidates = self.vars_of(ctx, MTYPE, goal)
        if candidates:
            return MetaVar(self.rng.choice(candidates))
        match goal:
            case MetaBase(_):
                return MetaConst(self.base_lit(goal))
            case CodeT(t):
                return MetaQuote(self.min_obj(t))
            case MetaFun(param, result):
                x = self.name()
                return MetaLam(x, param, self.leaf(ctx.push_meta(x, param), result))
            case Star():
                return self.dyn_wrap(MetaConst(IntLit(self.rng.randint(0, 9))))
            case CodeStar():
                t = self.obj_type(self.cfg.type_depth - 1)
                return self.ascribe(MetaQuote(self.min_obj(t)), CODE_STAR)
            case _:
                raise ValueError(f"no leaf for goal {goal!r}")

    def base_lit(self, ty: MetaBase):
        if ty == M_BOOL:
            return BoolLit(self.rng.random() < 0.5)
        return IntLit(self.rng.randint(0, 9))

    # object terms -----------------------------------------------------------

    def obj_synth(self, ctx: TypingContext, goal: ObjType, size: int) -> ObjTerm:
        candidates = self.vars_of(ctx, OTYPE, goal)
        if size <= 1:
            if candidates and self.rng.random() < 0.7:
                return ObjVar(self.rng.choice(candidates))
            return self.min_obj_synth(ctx, goal)
        roll = self.rng.random()
        if candidates and roll < 0.25:
            return ObjVar(self.rng.choice(candidates))
        if roll < 0.55:
            return ObjAnn(self.obj_check(ctx, goal, size - 1), goal)
        if roll < 0.75:
            param = self.obj_type(self.cfg.type_depth - 1)
            left = (size - 1) // 2
            fn = self.obj_synth(ctx, ObjFun(param, goal), left)
            arg = self.obj_check(ctx, param, size - 1 - left)
            return ObjApp(fn, arg)
        return self.min_obj_synth(ctx, goal)

    def obj_check(self, ctx: TypingContext, goal: ObjType, size: int) -> ObjTerm:
        # splices are the whole point: prefer them when there is room
        if size >= 2 and self.rng.random() < 0.5:
            if self.rng.random() < self.cfg.star_bias:
                payload_ty: MetaType = STAR
            else:
                payload_ty = CodeT(goal)
            payload = self.meta(ctx, payload_ty, size - 1)
            return ObjSplice(payload, self.label())
        match goal:
            case ObjFun(param, result) if size >= 2 and self.rng.random() < 0.7:
                x = self.name()
                body = self.obj_check(ctx.push_obj(x, param), result, size - 1)
                return ObjLam(x, body)
            case _:
                return self.obj_synth(ctx, goal, size)

    def min_obj(self, goal: ObjType) -> ObjTerm:
        return self.min_obj_synth(EMPTY_CTX, goal)

    def min_obj_synth(self, ctx: TypingContext, goal: ObjType) -> ObjTerm:
        match goal:
            case ObjBase(_):
                return ObjConst(self.obj_lit(goal))
            case ObjFun(_, _):
                return ObjAnn(self.min_obj_check(goal), goal)
            case _:
                raise ValueError(f"no minimal object term at {goal!r}")

    def min_obj_check(self, goal: ObjType) -> ObjTerm:
        match goal:
            case ObjBase(_):
                return ObjConst(self.obj_lit(goal))
            case ObjFun(param, result):
                return ObjLam(self.name(), self.min_obj_check(result))
            case _:
                raise ValueError(f"no minimal object term at {goal!r}")

    def obj_lit(self, ty: ObjBase):
        if ty == O_BOOL:
            return BoolLit(self.rng.random() < 0.5)
        return IntLit(self.rng.randint(0, 9))


def gen_well_typed_meta(cfg: GenConfig, goal: Optional[MetaType] = None):
    """One closed well-typed metaterm and its type; deterministic per config."""
    gen = _Gen(cfg)
    if goal is None:
        if gen.rng.random() < 0.7:
            goal = CodeT(gen.obj_type(cfg.type_depth - 1))
        else:
            goal = gen.meta_type(cfg.type_depth, allow_star=False)
    budget = cfg.max_size
    while True:
        term = gen.meta(EMPTY_CTX, goal, budget)
        if node_count(term) <= cfg.max_size:
            break
        budget = max(2, budget * 2 // 3)
    actual = type_meta(EMPTY_CTX, term)
    if actual != goal:
        raise AssertionError(
            f"generator produced a term of type {actual}, wanted {goal}"
        )
    return term, goal


def gen_code_program(cfg: GenConfig):
    """A closed well-typed program of some code type."""
    gen = _Gen(cfg)
    goal = CodeT(gen.obj_type(cfg.type_depth - 1))
    budget = cfg.max_size
    while True:
        term = gen.meta(EMPTY_CTX, goal, budget)
        if node_count(term) <= cfg.max_size:
            break
        budget = max(2, budget * 2 // 3)
    assert type_meta(EMPTY_CTX, term) == goal
    return term, goal


def gen_splice_free_obj(cfg: GenConfig, with_primops: bool = False) -> ObjTerm:
    """A closed well-typed object term with no splices, for printer tests."""
    gen = _Gen(cfg)
    rng = gen.rng

    def synth(ctx, goal, size):
        candidates = gen.vars_of(ctx, OTYPE, goal)
        if size <= 1:
            if candidates and rng.random() < 0.7:
                return ObjVar(rng.choice(candidates))
            return gen.min_obj_synth(ctx, goal)
        roll = rng.random()
        if candidates and roll < 0.2:
            return ObjVar(rng.choice(candidates))
        if with_primops and goal in (O_INT, O_BOOL) and roll < 0.45:
            op = rng.choice(("+", "-", "*")) if goal == O_INT else rng.choice(("<", ">"))
            half = (size - 1) // 2
            return ObjPrimOp(op, (check(ctx, O_INT, half), check(ctx, O_INT, half)))
        if roll < 0.7:
            return ObjAnn(check(ctx, goal, size - 1), goal)
        param = gen.obj_type(cfg.type_depth - 1)
        half = (size - 1) // 2
        return ObjApp(synth(ctx, ObjFun(param, goal), half), check(ctx, param, half))

    def check(ctx, goal, size):
        match goal:
            case ObjFun(param, result) if size >= 2 and rng.random() < 0.75:
                x = gen.name()
                return ObjLam(x, check(ctx.push_obj(x, param), result, size - 1))
            case _:
                return synth(ctx, goal, size)

    term = synth(EMPTY_CTX, gen.obj_type(cfg.type_depth), cfg.max_size)
    assert splice_free(term)
    return term


# ---------------------------------------------------------------------------
# The type-safety oracle


@dataclass
class SafetyVerdict:
    kind: str  # safe-value | safe-blame | timeout | violation
    steps: int = 0
    output: Optional[ObjTerm] = None
    output_ty: Optional[ObjType] = None
    label: Optional[BlameLabel] = None
    detail: str = ""
    witness: Optional[MetaTerm] = None


def check_type_safety(term: MetaTerm, fuel: int = 10_000,
                      shrink: bool = True) -> SafetyVerdict:
    """Evaluate with every metatheoretic property asserted along the way."""
    verdict = _run_safety(term, fuel)
    if verdict.kind == "violation" and shrink:
        verdict.witness = _shrink(term, fuel, verdict.witness or term)
    return verdict


def _run_safety(term: MetaTerm, fuel: int) -> SafetyVerdict:
    program_ty = type_meta(EMPTY_CTX, term)
    if not isinstance(program_ty, CodeT):
        raise ValueError("the safety oracle needs a program of a known code type")
    result_ty = program_ty.ty
    try:
        cc, compiled_ty = compile_meta(EMPTY_CTX, term)
    except (ValidationError, TypeCheckError) as exc:
        return SafetyVerdict("violation", detail=f"compilation: {exc}", witness=term)
    if compiled_ty != program_ty:
        return SafetyVerdict("violation", detail="compilation changed the program type",
                             witness=term)
    steps = 0
    while steps < fuel:
        r = step_meta(cc)
        match r:
            case IsValue(QuotedCode(body)):
                if not splice_free(body):
                    return SafetyVerdict("violation", steps=steps, witness=term,
                                         detail="final quotation still contains a splice")
                try:
                    checked = type_cc_code(EMPTY_CTX, body, expected=result_ty)
                except ValidationError as exc:
                    return SafetyVerdict("violation", steps=steps, witness=term,
                                         detail=f"output code: {exc}")
                if checked != result_ty:
                    return SafetyVerdict("violation", steps=steps, witness=term,
                                         detail="output code type drifted")
                from .syntax import cc_to_obj

                return SafetyVerdict("safe-value", steps=steps,
                                     output=cc_to_obj(body), output_ty=result_ty)
            case IsValue(_):
                return SafetyVerdict("violation", steps=steps, witness=term,
                                     detail="a code-typed value is not a quotation")
            case IsBlame(label, _, _):
                return SafetyVerdict("safe-blame", steps=steps, label=label)
            case Stepped(next_cc):
                try:
                    validated = type_cc_meta(EMPTY_CTX, next_cc, expected=program_ty)
                except ValidationError as exc:
                    return SafetyVerdict("violation", steps=steps, witness=term,
                                         detail=f"preservation: {exc}")
                if validated != program_ty:
                    return SafetyVerdict("violation", steps=steps, witness=term,
                                         detail="preservation: type changed")
                cc = next_cc
                steps += 1
            case Stuck(_):
                return SafetyVerdict("violation", steps=steps, witness=term,
                                     detail="progress: evaluation got stuck")
    return SafetyVerdict("timeout", steps=steps)


def _subterms(term) -> list:
    out = []
    stack = [term]
    while stack:
        t = stack.pop()
        out.append(t)
        for f in t.__dataclass_fields__:
            if f in ("span", "label", "annot", "ty", "lit", "name", "op"):
                continue
            v = getattr(t, f)
            if isinstance(v, tuple):
                stack.extend(x for x in v if hasattr(x, "__dataclass_fields__"))
            elif isinstance(v, (MetaTerm, ObjTerm)):
                stack.append(v)
    return out


def _shrink(term: MetaTerm, fuel: int, witness: MetaTerm) -> MetaTerm:
    """Greedily hoist a smaller failing subprogram, if any."""
    best = witness
    best_size = node_count(best)
    improved = True
    while improved:
        improved = False
        for sub in _subterms(best):
            if sub is best or not isinstance(sub, MetaTerm):
                continue
            if node_count(sub) >= best_size:
                continue
            try:
                ty = type_meta(EMPTY_CTX, sub)
            except TypeCheckError:
                continue
            if not isinstance(ty, CodeT):
                continue
            if _run_safety(sub, fuel).kind == "violation":
                best = sub
                best_size = node_count(sub)
                improved = True
                break
    return best


# ---------------------------------------------------------------------------
# Exhaustive small oracles


def enumerate_obj_types(max_depth: int) -> list:
    by_depth = {1: [O_INT, O_BOOL]}
    for d in range(2, max_depth + 1):
        level = []
        for dp in range(1, d):
            for dr in range(1, d):
                if max(dp, dr) != d - 1:
                    continue
                for p in by_depth[dp]:
                    for r in by_depth[dr]:
                        level.append(ObjFun(p, r))
        by_depth[d] = level
    return [t for d in range(1, max_depth + 1) for t in by_depth[d]]


def enumerate_meta_types(max_depth: int, obj_depth: int = 2) -> list:
    obj_by_depth: dict[int, list] = {}
    for t in enumerate_obj_types(obj_depth):
        d = _obj_depth(t)
        obj_by_depth.setdefault(d, []).append(t)
    by_depth = {1: [M_INT, M_BOOL, STAR, CODE_STAR]}
    for d in range(2, max_depth + 1):
        level = [CodeT(t) for t in obj_by_depth.get(d - 1, [])]
        for dp in range(1, d):
            for dr in range(1, d):
                if max(dp, dr) != d - 1:
                    continue
                for p in by_depth[dp]:
                    for r in by_depth[dr]:
                        level.append(MetaFun(p, r))
        by_depth[d] = level
    return [t for d in range(1, max_depth + 1) for t in by_depth[d]]


def _obj_depth(t: ObjType) -> int:
    match t:
        case ObjBase(_):
            return 1
        case ObjFun(p, r):
            return 1 + max(_obj_depth(p), _obj_depth(r))


@dataclass
class OracleReport:
    type_pairs: int = 0
    consistent_pairs: int = 0
    coerce_failures: list = field(default_factory=list)
    ground_pairs: int = 0
    dichotomy_failures: list = field(default_factory=list)
    small_terms: int = 0
    well_typed_small_terms: int = 0
    small_term_failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.coerce_failures or self.dichotomy_failures
                    or self.small_term_failures)


def check_coerce_totality(max_depth: int = 3, obj_depth: int = 2) -> OracleReport:
    """Every consistent pair of small types must coerce, typed exactly."""
    report = OracleReport()
    types = enumerate_meta_types(max_depth, obj_depth)
    label = BlameLabel("<oracle>", Span("<oracle>", 1, 1, 1, 2), 0)
    for a, b in itertools.product(types, repeat=2):
        report.type_pairs += 1
        if not consistent(a, b):
            continue
        report.consistent_pairs += 1
        try:
            c = coerce(a, b, label)
            src, tgt = coercion_type(c)
        except Exception as exc:  # noqa: BLE001 - collected as data
            report.coerce_failures.append((a, b, repr(exc)))
            continue
        if (src, tgt) != (a, b):
            report.coerce_failures.append((a, b, f"typed {src} => {tgt}"))
    return report


def ground_types() -> list:
    from .syntax import M_NAT, M_UNIT

    return [M_NAT, M_INT, M_BOOL, M_UNIT, MetaFun(STAR, STAR), CODE_STAR]


def value_of_ground(g: MetaType) -> CCMetaTerm:
    from .syntax import (
        CCConst,
        CCLam,
        CCQuote,
        CCVar,
        CodeConst,
        NatLit,
        UnitLit,
    )

    match g:
        case MetaBase(base):
            lit = {
                "Nat": NatLit(1), "Int": IntLit(1), "Bool": BoolLit(True),
                "Unit": UnitLit(),
            }[base.value]
            return CCConst(lit)
        case MetaFun(Star(), Star()):
            return CCLam("x", STAR, CCVar("x"))
        case CodeStar():
            return CCCast(CCQuote(CodeConst(IntLit(1))), CodeInj(O_INT))
        case _:
            raise ValueError(f"not a ground type: {g!r}")


def code_value_of(t: ObjType) -> CCMetaTerm:
    from .syntax import CCQuote, CodeAnn, CodeConst, CodeLam

    def check_shape(ty):
        match ty:
            case ObjBase(_):
                return CodeConst(IntLit(1) if ty == O_INT else BoolLit(True))
            case ObjFun(_, r):
                return CodeLam("x", check_shape(r))

    match t:
        case ObjBase(_):
            return CCQuote(check_shape(t))
        case ObjFun(_, _):
            return CCQuote(CodeAnn(check_shape(t), t))


def check_projection_dichotomy(obj_depth: int = 2) -> OracleReport:
    """An injection meets a projection: identical types succeed, others blame."""
    from .evaluator import reduce_cc

    report = OracleReport()
    label = BlameLabel("<oracle>", Span("<oracle>", 1, 1, 1, 2), 99)
    grounds = ground_types()
    for g, h in itertools.product(grounds, repeat=2):
        report.ground_pairs += 1
        v = value_of_ground(g)
        term = CCCast(CCCast(v, Inj(g)), Proj(h, label))
        outcome, payload = reduce_cc(term, fuel=1_000)
        if g == h:
            if outcome != "value" or payload != v:
                report.dichotomy_failures.append((g, h, outcome))
        else:
            if outcome != "blame" or payload != label:
                report.dichotomy_failures.append((g, h, outcome))
    objs = enumerate_obj_types(obj_depth)
    for s, t in itertools.product(objs, repeat=2):
        report.ground_pairs += 1
        v = code_value_of(s)
        term = CCCast(CCCast(v, CodeInj(s)), CodeProj(t, label))
        outcome, payload = reduce_cc(term, fuel=1_000)
        if s == t:
            if outcome != "value" or payload != v:
                report.dichotomy_failures.append((CodeT(s), CodeT(t), outcome))
        else:
            if outcome != "blame" or payload != label:
                report.dichotomy_failures.append((CodeT(s), CodeT(t), outcome))
    return report


def _enumerate_small_terms(budget: int):
    """All core metaterms up to ``budget`` nodes over a tiny fixed alphabet."""
    label = BlameLabel("<enum>", Span("<enum>", 1, 1, 1, 2), 7)
    metas: dict[int, list] = {1: [MetaVar("x"), MetaConst(IntLit(1)), MetaConst(BoolLit(True))]}
    objs: dict[int, list] = {1: [ObjVar("x"), ObjConst(IntLit(1)), ObjConst(BoolLit(True))]}
    for k in range(2, budget + 1):
        mk = []
        for b in metas[k - 1]:
            mk.append(MetaLam("x", M_INT, b))
            mk.append(MetaLam("x", STAR, b))
        for i in range(1, k - 1):
            for f in metas[i]:
                for a in metas[k - 1 - i]:
                    mk.append(MetaApp(f, a, label))
        mk.extend(MetaQuote(b) for b in objs[k - 1])
        metas[k] = mk
        ok = []
        for b in objs[k - 1]:
            ok.append(ObjLam("x", b))
            ok.append(ObjAnn(b, O_INT))
        for i in range(1, k - 1):
            for f in objs[i]:
                for a in objs[k - 1 - i]:
                    ok.append(ObjApp(f, a))
        ok.extend(ObjSplice(m, label) for m in metas[k - 1])
        objs[k] = ok
    for k in range(1, budget + 1):
        yield from metas[k]


def check_small_terms(budget: int = 7) -> OracleReport:
    """Checker determinism and compile validation over every tiny program."""
    report = OracleReport()
    for term in _enumerate_small_terms(budget):
        report.small_terms += 1
        try:
            ty1 = type_meta(EMPTY_CTX, term)
        except TypeCheckError:
            continue
        report.well_typed_small_terms += 1
        ty2 = type_meta(EMPTY_CTX, term)
        if ty1 != ty2:
            report.small_term_failures.append((term, "checker not deterministic"))
            continue
        try:
            cc, cty = compile_meta(EMPTY_CTX, term)
        except (ValidationError, TypeCheckError) as exc:
            report.small_term_failures.append((term, f"compile: {exc}"))
            continue
        if cty != ty1:
            report.small_term_failures.append((term, "compile changed the type"))
    return report


def enumerate_small_oracles(type_depth: int = 3, obj_depth: int = 2,
                            term_budget: int = 7) -> OracleReport:
    report = check_coerce_totality(type_depth, obj_depth)
    dichotomy = check_projection_dichotomy(obj_depth)
    report.ground_pairs = dichotomy.ground_pairs
    report.dichotomy_failures = dichotomy.dichotomy_failures
    small = check_small_terms(term_budget)
    report.small_terms = small.small_terms
    report.well_typed_small_terms = small.well_typed_small_terms
    report.small_term_failures = small.small_term_failures
    return report


# ---------------------------------------------------------------------------
# Standalone fuzz runner


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Fuzz the pipeline with generated well-typed programs."
    )
    parser.add_argument("--seeds", type=int, default=1000)
    parser.add_argument("--size", type=int, default=30)
    parser.add_argument("--fuel", type=int, default=10_000)
    parser.add_argument("--star-bias", type=float, default=0.5)
    args = parser.parse_args(argv)

    tallies = {"safe-value": 0, "safe-blame": 0, "timeout": 0, "violation": 0}
    witnesses = []
    for seed in range(args.seeds):
        cfg = GenConfig(seed=seed, max_size=args.size, star_bias=args.star_bias)
        term, _ = gen_code_program(cfg)
        verdict = check_type_safety(term, fuel=args.fuel)
        tallies[verdict.kind] += 1
        if verdict.kind == "violation":
            witnesses.append((seed, verdict))
    print("verdicts:", " ".join(f"{k}={v}" for k, v in tallies.items()))
    for seed, verdict in witnesses[:10]:
        from .syntax import pretty_meta

        print(f"seed {seed}: {verdict.detail}")
        if verdict.witness is not None:
            print(f"  witness: {pretty_meta(verdict.witness)}")
    return 1 if witnesses else 0


if __name__ == "__main__":
    import sys

    sys.exit(main())
