"""Surface syntax: lexer, parser, import loading, and diagnostics.

Source files use the extension ``.mgtlc``.  Quotes are written ``<| ... |>``
and a splice is ``~e`` where ``e`` is an atom (so it binds tighter than
application).  Metalanguage lambdas are ``fun x -> e`` or
``fun (x : A) -> e``; an omitted annotation means the unknown type.  Object
lambdas are ``lam x -> e`` or, when the surrounding code needs the lambda's
type inferred, ``lam (x : T) -> e``.

``let x = e`` at the top of a file introduces a named binding; inside an
expression ``let x = e in body`` is sugar for applying a lambda, as is the
ascription ``(e : A)``.  ``import "file"`` splices another file's bindings
in front of the current one's.

The file-reading builtins ``read_and_quote`` and ``read_int`` are bound
names, not syntax; relative paths resolve against the directory of the file
that mentions them.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    DUMMY_SPAN,
    EMPTY_CTX,
    MTYPE,
    OTYPE,
    STAR,
    Base,
    BlameLabel,
    BoolLit,
    BuiltinLit,
    CodeStar,
    CodeT,
    IntLit,
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
    NatLit,
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
    StringLit,
    TypingContext,
    UnitLit,
    format_meta_type,
    free_vars,
)
from .typecheck import TypeCheckError, synth_obj

BUILTINS = ("read_and_quote", "read_int")

KEYWORDS = {
    "let", "in", "if", "then", "else", "fun", "lam", "import",
    "true", "false", "unit",
}

BASE_NAMES = {
    "Nat": Base.NAT,
    "Int": Base.INT,
    "Bool": Base.BOOL,
    "Unit": Base.UNIT,
    "String": Base.STRING,
}


class ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.message = message
        self.span = span


# ---------------------------------------------------------------------------
# Lexer


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, nat, string, kw, sym, eof
    text: str
    span: Span
    value: object = None


_TWO_CHAR = ("<|", "|>", "->")
_ONE_CHAR = "~:()=+-*<>"


def tokenize(source: str, file: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(source)

    def span_from(l0, c0):
        return Span(file, l0, c0, line, col)

    def bump(ch):
        nonlocal line, col
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            bump(ch)
            i += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                bump(source[i])
                i += 1
            continue
        if source.startswith("/*", i):
            l0, c0 = line, col
            i += 2
            bump("/")
            bump("*")
            while i < n and not source.startswith("*/", i):
                bump(source[i])
                i += 1
            if i >= n:
                raise ParseError("unterminated comment", span_from(l0, c0))
            i += 2
            bump("*")
            bump("/")
            continue
        l0, c0 = line, col
        if source.startswith(_TWO_CHAR[0], i) or source.startswith(_TWO_CHAR[1], i) \
                or source.startswith(_TWO_CHAR[2], i):
            text = source[i:i + 2]
            i += 2
            bump(text[0])
            bump(text[1])
            tokens.append(Token("sym", text, span_from(l0, c0)))
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            text = source[i:j]
            if j < n and source[j] == "n":
                j += 1
                for k in range(i, j):
                    bump(source[k])
                i = j
                tokens.append(Token("nat", text + "n", span_from(l0, c0), int(text)))
            else:
                for k in range(i, j):
                    bump(source[k])
                i = j
                tokens.append(Token("int", text, span_from(l0, c0), int(text)))
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            for k in range(i, j):
                bump(source[k])
            i = j
            kind = "kw" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, span_from(l0, c0)))
            continue
        if ch == '"':
            i += 1
            bump(ch)
            parts = []
            while i < n and source[i] != '"':
                c = source[i]
                if c == "\\" and i + 1 < n:
                    esc = source[i + 1]
                    mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
                    if mapped is None:
                        raise ParseError(f"unknown escape '\\{esc}'", span_from(l0, c0))
                    parts.append(mapped)
                    bump(c)
                    bump(esc)
                    i += 2
                    continue
                if c == "\n":
                    raise ParseError("unterminated string literal", span_from(l0, c0))
                parts.append(c)
                bump(c)
                i += 1
            if i >= n:
                raise ParseError("unterminated string literal", span_from(l0, c0))
            i += 1
            bump('"')
            tokens.append(Token("string", "".join(parts), span_from(l0, c0), "".join(parts)))
            continue
        if ch in _ONE_CHAR:
            i += 1
            bump(ch)
            tokens.append(Token("sym", ch, span_from(l0, c0)))
            continue
        raise ParseError(f"unexpected character {ch!r}", span_from(l0, c0))
    tokens.append(Token("eof", "", Span(file, line, col, line, col)))
    return tokens


# ---------------------------------------------------------------------------
# Surface structures


class LabelMinter:
    """Hands out blame labels with ordinals unique across a whole program."""

    def __init__(self):
        self._next = 0

    def mint(self, span: Span) -> BlameLabel:
        label = BlameLabel(span.file, span, self._next)
        self._next += 1
        return label


@dataclass(frozen=True)
class ObjLamAnn(ObjTerm):
    """Surface-only: an object lambda with an annotated parameter.

    Elaborated away before type checking by synthesizing the body's type.
    """

    name: str
    annot: ObjType
    body: ObjTerm
    span: Span = field(default=DUMMY_SPAN, compare=False, repr=False)


@dataclass
class Binding:
    name: str
    annot: Optional[MetaType]
    expr: MetaTerm
    label: BlameLabel
    span: Span


@dataclass
class SurfaceProgram:
    file: str
    imports: list  # of (path, span)
    bindings: list  # of Binding
    final: Optional[MetaTerm]


def merge_spans(a: Span, b: Span) -> Span:
    return Span(a.file, a.start_line, a.start_col, b.end_line, b.end_col)


# ---------------------------------------------------------------------------
# Parser

_ATOM_START = {"ident", "int", "nat", "string"}
_ATOM_KW = {"true", "false", "unit"}


class Parser:
    def __init__(self, tokens: list[Token], minter: LabelMinter):
        self.tokens = tokens
        self.pos = 0
        self.minter = minter
        self._fresh = 0

    # -- token plumbing

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at_sym(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.text == text

    def at_kw(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.text == text

    def expect_sym(self, text: str) -> Token:
        if not self.at_sym(text):
            raise ParseError(f"expected '{text}', found '{self.peek().text or 'end of file'}'",
                             self.peek().span)
        return self.next()

    def expect_kw(self, text: str) -> Token:
        if not self.at_kw(text):
            raise ParseError(f"expected '{text}', found '{self.peek().text or 'end of file'}'",
                             self.peek().span)
        return self.next()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected a name, found '{tok.text or 'end of file'}'", tok.span)
        return self.next()

    def fresh(self) -> str:
        self._fresh += 1
        return f"_t{self._fresh}"

    # -- program

    def parse_program(self, file: str) -> SurfaceProgram:
        imports = []
        while self.at_kw("import"):
            kw = self.next()
            tok = self.peek()
            if tok.kind != "string":
                raise ParseError("expected a quoted file path after 'import'", tok.span)
            self.next()
            imports.append((tok.value, merge_spans(kw.span, tok.span)))
        bindings = []
        final = None
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if self.at_kw("let"):
                let_tok = self.next()
                name_tok = self.expect_ident()
                annot = None
                if self.at_sym(":"):
                    self.next()
                    annot = self.parse_meta_type()
                self.expect_sym("=")
                expr = self.parse_expr()
                bind_span = merge_spans(let_tok.span, expr.span)
                if self.at_kw("in"):
                    # this was the start of the final expression's let chain
                    self.next()
                    body = self.parse_expr()
                    final = self._mk_let(name_tok.text, annot, expr, body, bind_span)
                    break
                bindings.append(
                    Binding(name_tok.text, annot, expr, self.minter.mint(bind_span), bind_span)
                )
                continue
            final = self.parse_expr()
            break
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected '{tok.text}' after the program's final expression",
                             tok.span)
        return SurfaceProgram(file, imports, bindings, final)

    def _mk_let(self, name, annot, bound, body, bind_span) -> MetaTerm:
        span = merge_spans(bind_span, body.span)
        lam = MetaLam(name, annot if annot is not None else STAR, body, span=span)
        return MetaApp(lam, bound, self.minter.mint(bind_span), span=span)

    # -- metalanguage expressions

    def parse_expr(self) -> MetaTerm:
        if self.at_kw("fun"):
            fun_tok = self.next()
            name, annot = self.parse_meta_param()
            self.expect_sym("->")
            body = self.parse_expr()
            return MetaLam(name, annot, body, span=merge_spans(fun_tok.span, body.span))
        if self.at_kw("let"):
            let_tok = self.next()
            name_tok = self.expect_ident()
            annot = None
            if self.at_sym(":"):
                self.next()
                annot = self.parse_meta_type()
            self.expect_sym("=")
            bound = self.parse_expr()
            bind_span = merge_spans(let_tok.span, bound.span)
            self.expect_kw("in")
            body = self.parse_expr()
            return self._mk_let(name_tok.text, annot, bound, body, bind_span)
        if self.at_kw("if"):
            if_tok = self.next()
            cond = self.parse_expr()
            self.expect_kw("then")
            then = self.parse_expr()
            self.expect_kw("else")
            els = self.parse_expr()
            span = merge_spans(if_tok.span, els.span)
            return MetaIf(cond, then, els, self.minter.mint(span), span=span)
        return self.parse_cmp()

    def parse_meta_param(self) -> tuple[str, MetaType]:
        if self.at_sym("("):
            self.next()
            name_tok = self.expect_ident()
            self.expect_sym(":")
            annot = self.parse_meta_type()
            self.expect_sym(")")
            return name_tok.text, annot
        name_tok = self.expect_ident()
        return name_tok.text, STAR

    def parse_cmp(self) -> MetaTerm:
        left = self.parse_add()
        if self.at_sym("<") or self.at_sym(">"):
            op = self.next()
            right = self.parse_add()
            span = merge_spans(left.span, right.span)
            return MetaPrimOp(op.text, (left, right), self.minter.mint(span), span=span)
        return left

    def parse_add(self) -> MetaTerm:
        left = self.parse_mul()
        while self.at_sym("+") or self.at_sym("-"):
            op = self.next()
            right = self.parse_mul()
            span = merge_spans(left.span, right.span)
            left = MetaPrimOp(op.text, (left, right), self.minter.mint(span), span=span)
        return left

    def parse_mul(self) -> MetaTerm:
        left = self.parse_app()
        while self.at_sym("*"):
            self.next()
            right = self.parse_app()
            span = merge_spans(left.span, right.span)
            left = MetaPrimOp("*", (left, right), self.minter.mint(span), span=span)
        return left

    def parse_app(self) -> MetaTerm:
        head = self.parse_atom()
        while self._at_atom_start():
            arg = self.parse_atom()
            span = merge_spans(head.span, arg.span)
            head = MetaApp(head, arg, self.minter.mint(span), span=span)
        return head

    def _at_atom_start(self) -> bool:
        tok = self.peek()
        if tok.kind in _ATOM_START:
            return True
        if tok.kind == "kw" and tok.text in _ATOM_KW:
            return True
        return tok.kind == "sym" and tok.text in ("(", "<|")

    def parse_atom(self) -> MetaTerm:
        tok = self.peek()
        lit = self._literal(tok)
        if lit is not None:
            self.next()
            return MetaConst(lit, span=tok.span)
        if tok.kind == "ident":
            self.next()
            return MetaVar(tok.text, span=tok.span)
        if self.at_sym("("):
            open_tok = self.next()
            expr = self.parse_expr()
            if self.at_sym(":"):
                self.next()
                ty = self.parse_meta_type()
                close = self.expect_sym(")")
                return self._mk_ascription(expr, ty, merge_spans(open_tok.span, close.span))
            close = self.expect_sym(")")
            return _with_span(expr, merge_spans(open_tok.span, close.span))
        if self.at_sym("<|"):
            open_tok = self.next()
            body = self.parse_obj_expr()
            close = self.expect_sym("|>")
            return MetaQuote(body, span=merge_spans(open_tok.span, close.span))
        raise ParseError(f"expected an expression, found '{tok.text or 'end of file'}'", tok.span)

    def _literal(self, tok: Token):
        if tok.kind == "int":
            return IntLit(tok.value)
        if tok.kind == "nat":
            return NatLit(tok.value)
        if tok.kind == "string":
            return StringLit(tok.value)
        if tok.kind == "kw" and tok.text == "true":
            return BoolLit(True)
        if tok.kind == "kw" and tok.text == "false":
            return BoolLit(False)
        if tok.kind == "kw" and tok.text == "unit":
            return UnitLit()
        return None

    def _mk_ascription(self, expr: MetaTerm, ty: MetaType, span: Span) -> MetaTerm:
        name = self.fresh()
        lam = MetaLam(name, ty, MetaVar(name, span=span), span=span)
        return MetaApp(lam, expr, self.minter.mint(span), span=span)

    # -- object expressions (inside quotes)

    def parse_obj_expr(self) -> ObjTerm:
        if self.at_kw("lam"):
            lam_tok = self.next()
            if self.at_sym("("):
                self.next()
                name_tok = self.expect_ident()
                self.expect_sym(":")
                annot = self.parse_obj_type()
                self.expect_sym(")")
                self.expect_sym("->")
                body = self.parse_obj_expr()
                return ObjLamAnn(name_tok.text, annot, body,
                                 span=merge_spans(lam_tok.span, body.span))
            name_tok = self.expect_ident()
            self.expect_sym("->")
            body = self.parse_obj_expr()
            return ObjLam(name_tok.text, body, span=merge_spans(lam_tok.span, body.span))
        return self.parse_obj_cmp()

    def parse_obj_cmp(self) -> ObjTerm:
        left = self.parse_obj_add()
        if self.at_sym("<") or self.at_sym(">"):
            op = self.next()
            right = self.parse_obj_add()
            span = merge_spans(left.span, right.span)
            return ObjPrimOp(op.text, (left, right), span=span)
        return left

    def parse_obj_add(self) -> ObjTerm:
        left = self.parse_obj_mul()
        while self.at_sym("+") or self.at_sym("-"):
            op = self.next()
            right = self.parse_obj_mul()
            span = merge_spans(left.span, right.span)
            left = ObjPrimOp(op.text, (left, right), span=span)
        return left

    def parse_obj_mul(self) -> ObjTerm:
        left = self.parse_obj_app()
        while self.at_sym("*"):
            self.next()
            right = self.parse_obj_app()
            span = merge_spans(left.span, right.span)
            left = ObjPrimOp("*", (left, right), span=span)
        return left

    def parse_obj_app(self) -> ObjTerm:
        head = self.parse_obj_atom()
        while self._at_obj_atom_start():
            arg = self.parse_obj_atom()
            head = ObjApp(head, arg, span=merge_spans(head.span, arg.span))
        return head

    def _at_obj_atom_start(self) -> bool:
        tok = self.peek()
        if tok.kind in _ATOM_START:
            return True
        if tok.kind == "kw" and tok.text in _ATOM_KW:
            return True
        return tok.kind == "sym" and tok.text in ("(", "~")

    def parse_obj_atom(self) -> ObjTerm:
        tok = self.peek()
        lit = self._literal(tok)
        if lit is not None:
            self.next()
            return ObjConst(lit, span=tok.span)
        if tok.kind == "ident":
            self.next()
            return ObjVar(tok.text, span=tok.span)
        if self.at_sym("~"):
            tilde = self.next()
            payload = self.parse_atom()
            span = merge_spans(tilde.span, payload.span)
            return ObjSplice(payload, self.minter.mint(span), span=span)
        if self.at_sym("("):
            open_tok = self.next()
            expr = self.parse_obj_expr()
            if self.at_sym(":"):
                self.next()
                ty = self.parse_obj_type()
                close = self.expect_sym(")")
                return ObjAnn(expr, ty, span=merge_spans(open_tok.span, close.span))
            close = self.expect_sym(")")
            return _with_span(expr, merge_spans(open_tok.span, close.span))
        raise ParseError(
            f"expected object-language code, found '{tok.text or 'end of file'}'", tok.span
        )

    # -- types

    def parse_meta_type(self) -> MetaType:
        left = self.parse_meta_type_atom()
        if self.at_sym("->"):
            self.next()
            right = self.parse_meta_type()
            return MetaFun(left, right)
        return left

    def parse_meta_type_atom(self) -> MetaType:
        tok = self.peek()
        if tok.kind == "sym" and tok.text == "*":
            self.next()
            return STAR
        if tok.kind == "ident" and tok.text == "Code":
            self.next()
            inner = self.peek()
            if inner.kind == "sym" and inner.text == "*":
                self.next()
                return CodeStar()
            return CodeT(self.parse_obj_type_atom())
        if tok.kind == "ident" and tok.text in BASE_NAMES:
            self.next()
            return MetaBase(BASE_NAMES[tok.text])
        if self.at_sym("("):
            self.next()
            ty = self.parse_meta_type()
            self.expect_sym(")")
            return ty
        raise ParseError(f"expected a type, found '{tok.text or 'end of file'}'", tok.span)

    def parse_obj_type(self) -> ObjType:
        left = self.parse_obj_type_atom()
        if self.at_sym("->"):
            self.next()
            right = self.parse_obj_type()
            return ObjFun(left, right)
        return left

    def parse_obj_type_atom(self) -> ObjType:
        tok = self.peek()
        if tok.kind == "ident" and tok.text in BASE_NAMES:
            self.next()
            return ObjBase(BASE_NAMES[tok.text])
        if self.at_sym("("):
            self.next()
            ty = self.parse_obj_type()
            self.expect_sym(")")
            return ty
        raise ParseError(
            f"expected an object-language type, found '{tok.text or 'end of file'}'", tok.span
        )


def _with_span(term, span):
    # dataclasses are frozen; rebuild with the wider span
    return type(term)(**{
        f: getattr(term, f) for f in term.__dataclass_fields__ if f != "span"
    }, span=span)


def parse(source: str, file: str, minter: Optional[LabelMinter] = None) -> SurfaceProgram:
    minter = minter or LabelMinter()
    return Parser(tokenize(source, file), minter).parse_program(file)


def parse_expression(source: str, file: str = "<string>",
                     minter: Optional[LabelMinter] = None) -> MetaTerm:
    """Parse a single metalanguage expression (no imports, no bindings)."""
    minter = minter or LabelMinter()
    parser = Parser(tokenize(source, file), minter)
    expr = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected '{tok.text}' after expression", tok.span)
    return expr


def parse_object_term(source: str, file: str = "<string>") -> ObjTerm:
    """Parse a standalone object-language term; the pretty printer's inverse."""
    parser = Parser(tokenize(source, file), LabelMinter())
    term = parser.parse_obj_expr()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected '{tok.text}' after object term", tok.span)
    return term


# ---------------------------------------------------------------------------
# Loading whole programs (imports, builtins, annotated-lambda elaboration)


@dataclass
class LoadedProgram:
    term: MetaTerm
    sources: dict  # file -> text
    main_file: str


def load_program(path: str) -> LoadedProgram:
    minter = LabelMinter()
    sources: dict[str, str] = {}
    bindings: list[Binding] = []
    state: dict[str, str] = {}
    main_key = os.path.normpath(path)

    def load(key: str, at: Optional[Span]) -> SurfaceProgram:
        if state.get(key) == "loading":
            raise ParseError(f"import cycle through '{key}'", at or DUMMY_SPAN)
        state[key] = "loading"
        try:
            with open(key, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ParseError(f"cannot read '{key}': {exc.strerror}", at or DUMMY_SPAN) from exc
        sources[key] = text
        prog = parse(text, key, minter)
        for rel, span in prog.imports:
            dep = os.path.normpath(os.path.join(os.path.dirname(key), rel))
            if state.get(dep) == "done":
                continue
            load(dep, span)
        bindings.extend(prog.bindings)
        state[key] = "done"
        return prog

    main_prog = load(main_key, None)
    if main_prog.final is None:
        raise ParseError(
            "the program has no final expression to evaluate",
            Span(main_key, 1, 1, 1, 1),
        )
    term = main_prog.final
    for b in reversed(bindings):
        span = merge_spans(b.span, term.span) if b.span.file == term.span.file else b.span
        lam = MetaLam(b.name, b.annot if b.annot is not None else STAR, term, span=span)
        term = MetaApp(lam, b.expr, b.label, span=span)
    term = resolve_surface(term)
    return LoadedProgram(term, sources, main_key)


_OPAQUE = object()  # stands for the type of an unannotated object binder


def resolve_surface(term: MetaTerm, ctx: TypingContext = EMPTY_CTX) -> MetaTerm:
    """Bind builtins and elaborate annotated object lambdas.

    Tracks the typing context so the elaboration can synthesize lambda body
    types, including through splices back into the metalanguage.
    """
    return _res_meta(term, ctx)


def _res_meta(term, ctx):
    match term:
        case MetaVar(x):
            if ctx.lookup(x) is None and x in BUILTINS:
                base_dir = os.path.dirname(term.span.file) or "."
                return MetaConst(BuiltinLit(x, base_dir), span=term.span)
            return term
        case MetaConst(_):
            return term
        case MetaLam(x, annot, body):
            return MetaLam(x, annot, _res_meta(body, ctx.push_meta(x, annot)), span=term.span)
        case MetaApp(f, a, label):
            return MetaApp(_res_meta(f, ctx), _res_meta(a, ctx), label, span=term.span)
        case MetaQuote(body):
            return MetaQuote(_res_obj(body, ctx), span=term.span)
        case MetaPrimOp(op, args, label):
            return MetaPrimOp(op, tuple(_res_meta(a, ctx) for a in args), label, span=term.span)
        case MetaIf(c, t, e, label):
            return MetaIf(_res_meta(c, ctx), _res_meta(t, ctx), _res_meta(e, ctx),
                          label, span=term.span)
        case _:
            raise TypeError(f"not a metaterm: {term!r}")


def _res_obj(term, ctx):
    match term:
        case ObjLamAnn(x, annot, body):
            inner_ctx = ctx.push_obj(x, annot)
            body2 = _res_obj(body, inner_ctx)
            _reject_opaque_refs(body2, inner_ctx)
            result_ty = synth_obj(inner_ctx, body2)
            lam = ObjLam(x, body2, span=term.span)
            return ObjAnn(lam, ObjFun(annot, result_ty), span=term.span)
        case ObjLam(x, body):
            return ObjLam(x, _res_obj(body, ctx.push_obj(x, _OPAQUE)), span=term.span)
        case ObjVar(_) | ObjConst(_):
            return term
        case ObjApp(f, a):
            return ObjApp(_res_obj(f, ctx), _res_obj(a, ctx), span=term.span)
        case ObjAnn(inner, ty):
            return ObjAnn(_res_obj(inner, ctx), ty, span=term.span)
        case ObjSplice(payload, label):
            return ObjSplice(_res_meta(payload, ctx), label, span=term.span)
        case ObjPrimOp(op, args):
            return ObjPrimOp(op, tuple(_res_obj(a, ctx) for a in args), span=term.span)
        case _:
            raise TypeError(f"not an object term: {term!r}")


def _reject_opaque_refs(body, ctx):
    for name in sorted(free_vars(body)):
        entry = ctx.lookup(name)
        if entry is not None and entry.ty is _OPAQUE:
            raise TypeCheckError(
                "cannot-synthesize", body.span,
                f"the parameter '{name}' needs a type annotation before this "
                "lambda's type can be inferred",
            )


# ---------------------------------------------------------------------------
# Diagnostics


@dataclass
class Diagnostic:
    severity: str  # static-error | blame | warning
    file: str
    span: Span
    message: str
    code: str = "error"
    blame_ordinal: Optional[int] = None
    expected: Optional[str] = None
    actual: Optional[str] = None
    secondary: tuple = ()


def from_parse_error(err: ParseError) -> Diagnostic:
    return Diagnostic("static-error", err.span.file, err.span, err.message, code="syntax")


def from_type_error(err: TypeCheckError) -> Diagnostic:
    return Diagnostic(
        "static-error", err.span.file, err.span, err.message, code=err.kind,
        expected=_fmt_opt(err.expected), actual=_fmt_opt(err.actual),
    )


def from_blame(label: BlameLabel, expected=None, actual=None) -> Diagnostic:
    exp = _fmt_opt(expected)
    act = _fmt_opt(actual)
    msg = "a runtime cast introduced here failed"
    if exp and act:
        msg += f": the context expected {exp} but the value arrived as {act}"
    return Diagnostic(
        "blame", label.file, label.span, msg, code="blame",
        blame_ordinal=label.ordinal, expected=exp, actual=act,
    )


def from_runtime_error(err) -> Diagnostic:
    return Diagnostic("static-error", err.span.file, err.span, err.message, code="runtime")


def _fmt_opt(ty) -> Optional[str]:
    if ty is None:
        return None
    if isinstance(ty, str):
        return ty
    from .syntax import MetaType as _MT

    return format_meta_type(ty) if isinstance(ty, _MT) else str(ty)


def render_diagnostic(d: Diagnostic, sources: Optional[dict] = None) -> str:
    head = {"static-error": "error", "blame": "blame", "warning": "warning"}[d.severity]
    lines = [f"{d.file}:{d.span.start_line}:{d.span.start_col}: {head}: {d.message}"]
    excerpt = _excerpt(d.file, d.span, sources)
    if excerpt:
        lines.extend(excerpt)
    if d.severity == "blame" and d.expected and d.actual:
        lines.append(f"  expected: {d.expected}")
        lines.append(f"  actual:   {d.actual}")
    for file, span, note in d.secondary:
        lines.append(f"{file}:{span.start_line}:{span.start_col}: note: {note}")
        lines.extend(_excerpt(file, span, sources))
    return "\n".join(lines)


def _excerpt(file: str, span: Span, sources: Optional[dict]) -> list:
    if not sources or file not in sources or span.start_line <= 0:
        return []
    source_lines = sources[file].splitlines()
    if span.start_line > len(source_lines):
        return []
    text = source_lines[span.start_line - 1]
    start = max(span.start_col - 1, 0)
    if span.end_line == span.start_line:
        width = max(span.end_col - span.start_col, 1)
    else:
        width = max(len(text) - start, 1)
    caret = " " * start + "^" * min(width, max(len(text) - start, 1))
    return [f"  {text}", f"  {caret}"]


def diagnostic_to_json(d: Diagnostic) -> str:
    record = {
        "severity": d.severity,
        "code": d.code,
        "file": d.file,
        "line": d.span.start_line,
        "col": d.span.start_col,
        "endLine": d.span.end_line,
        "endCol": d.span.end_col,
        "message": d.message,
    }
    if d.blame_ordinal is not None:
        record["blameOrdinal"] = d.blame_ordinal
    if d.expected is not None:
        record["expectedType"] = d.expected
    if d.actual is not None:
        record["actualType"] = d.actual
    return json.dumps(record)
