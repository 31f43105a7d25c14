"""Concrete ASCII syntax: lexer, recursive-descent parser and pretty-printer.

Token map::

    |>a M    bracket            <|a M   escape          %a M   CSP
    /\\a. M   stage abstraction  M @[a b]  stage application  (M @[] is run)
    \\x:T. M  lambda             Pi x:T. S  /  T -> S          forall a. T
    |>a T    code type          *  /  Pi x:T. K  /  T -> K   kinds

Infix ``+ - * =`` desugar to the constants ``add sub mul eq``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .kernel import (
    App, Bracket, Code, Const, ConstDecl, Csp, Escape, ForallStage, KPi, Lam, Pi,
    STAR, Signature, StageApp, StageLam, Star, TApp, TConst, TypeConstDecl, Var,
    free_vars, replace_child, children, subst_term,
)

INFIX = {"=": ("eq", 1), "+": ("add", 2), "-": ("sub", 2), "*": ("mul", 3)}
INFIX_BY_CONST = {c: (op, lvl) for op, (c, lvl) in INFIX.items()}
KEYWORDS = {"Pi", "forall", "type", "const", "def", "main"}

DEFAULT_CONSTANTS = frozenset(
    {"add", "sub", "mul", "eq", "true", "false", "nil", "cons", "head", "tail"}
)


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    length: int = 1

    def __str__(self):
        return f"{self.line}:{self.col}"


class ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    span: Optional[Span]
    message: str
    trace: tuple = ()

    def render(self, path: str = "<input>") -> str:
        where = f"{path}:{self.span}" if self.span else path
        lines = [f"{where}: {self.severity}: {self.message}"]
        lines += [f"    in {frame}" for frame in self.trace]
        return "\n".join(lines)


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>\|>|<\||/\\|@\[|::|->|[\\%()\]:.*+\-=;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | "kw" | "sym" | "eof"
    text: str
    span: Span


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise ParseError(f"unknown token {text[pos]!r}", Span(line, col))
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if tok in KEYWORDS else "ident", tok, Span(line, col, len(tok))))
        elif kind in ("int", "sym"):
            tokens.append(Token(kind, tok, Span(line, col, len(tok))))
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1, 0)))
    return tokens


# ---------------------------------------------------------------- parser


@dataclass
class Decl:
    kind: str  # "type" | "const" | "def" | "main"
    name: str
    value: object  # Kind, Type, or Term
    annot: object = None  # optional type ascription for def/main
    span: Optional[Span] = None


@dataclass
class SourceFile:
    path: str
    text: str
    decls: list = field(default_factory=list)

    @property
    def main(self):
        for d in self.decls:
            if d.kind == "main":
                return d
        return None


_TERM_START = {"(", "|>", "<|", "%"}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.describe()}")
        return self.advance()

    def ident(self, what="identifier") -> str:
        if self.tok.kind != "ident":
            self.error(f"expected {what}, found {self.describe()}")
        return self.advance().text

    def describe(self) -> str:
        return "end of input" if self.tok.kind == "eof" else repr(self.tok.text)

    def error(self, msg: str):
        raise ParseError(msg, self.tok.span)

    def done(self):
        if self.tok.kind != "eof":
            if self.at(")") or self.at("]"):
                self.error(f"unbalanced {self.tok.text!r}")
            self.error(f"unexpected {self.describe()}")

    # -- terms
    def term(self):
        if self.at("\\"):
            self.advance()
            name = self.ident("variable")
            if self.at(":"):
                self.advance()
                annot = self.type_()
                self.expect(".")
                return Lam(name, annot, self.term())
            self.expect(".")
            return StageLam(name, self.term())
        if self.at("/\\"):
            self.advance()
            sv = self.ident("stage variable")
            self.expect(".")
            return StageLam(sv, self.term())
        return self.infix(1)

    def infix(self, level: int):
        if level > 3:
            return self.app()
        left = self.infix(level + 1)
        while self.tok.kind == "sym" and self.tok.text in INFIX and INFIX[self.tok.text][1] == level:
            const = INFIX[self.advance().text][0]
            right = self.infix(level + 1)
            left = App(App(Const(const), left), right)
        return left

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("ident", "int") or (t.kind == "sym" and t.text in _TERM_START)

    def app(self):
        head = self.atom()
        while True:
            if self.at("@["):
                self.advance()
                svs = []
                while not self.at("]"):
                    svs.append(self.ident("stage variable or ']'"))
                self.advance()
                head = StageApp(head, tuple(svs))
            elif self.starts_atom():
                head = App(head, self.atom())
            else:
                return head

    def atom(self):
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return Var(t.text)
        if t.kind == "int":
            self.advance()
            return Const(t.text)
        if self.at("("):
            self.advance()
            inner = self.term()
            if not self.at(")"):
                self.error(f"unbalanced '(' : expected ')', found {self.describe()}")
            self.advance()
            return inner
        for sym, ctor in (("|>", Bracket), ("<|", Escape), ("%", Csp)):
            if self.at(sym):
                self.advance()
                sv = self.ident("stage variable")
                return ctor(sv, self.atom())
        self.error(f"expected a term, found {self.describe()}")

    # -- types
    def type_(self):
        if self.at("Pi"):
            self.advance()
            x = self.ident("variable")
            self.expect(":")
            dom = self.type_()
            self.expect(".")
            return Pi(x, dom, self.type_())
        if self.at("forall"):
            self.advance()
            sv = self.ident("stage variable")
            self.expect(".")
            return ForallStage(sv, self.type_())
        left = self.type_app()
        if self.at("->"):
            self.advance()
            right = self.type_()
            return Pi(_arrow_var(right), left, right)
        return left

    def type_app(self):
        head = self.type_atom()
        while self.starts_atom():
            head = TApp(head, self.atom())
        return head

    def type_atom(self):
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return TConst(t.text)
        if self.at("("):
            self.advance()
            inner = self.type_()
            if not self.at(")"):
                self.error(f"unbalanced '(' : expected ')', found {self.describe()}")
            self.advance()
            return inner
        if self.at("|>"):
            self.advance()
            sv = self.ident("stage variable")
            return Code(sv, self.type_atom())
        self.error(f"expected a type, found {self.describe()}")

    # -- kinds
    def kind(self):
        if self.at("*"):
            self.advance()
            return STAR
        if self.at("Pi"):
            self.advance()
            x = self.ident("variable")
            self.expect(":")
            dom = self.type_()
            self.expect(".")
            return KPi(x, dom, self.kind())
        dom = self.type_app()
        self.expect("->")
        body = self.kind()
        return KPi(_arrow_var(body), dom, body)

    # -- files
    def decl(self) -> Decl:
        start = self.tok.span
        if self.at("type"):
            self.advance()
            name = self.ident("type constant")
            self.expect("::")
            d = Decl("type", name, self.kind(), span=start)
        elif self.at("const"):
            self.advance()
            name = self.ident("constant")
            self.expect(":")
            d = Decl("const", name, self.type_(), span=start)
        elif self.at("def") or self.at("main"):
            kind = self.advance().text
            name = "main" if kind == "main" else self.ident("definition name")
            annot = None
            if self.at(":"):
                self.advance()
                annot = self.type_()
            self.expect("=")
            d = Decl(kind, name, self.term(), annot, span=start)
        else:
            self.error(f"expected a declaration, found {self.describe()}")
        self.expect(";")
        return d

    def decls(self) -> list:
        out = []
        while self.tok.kind != "eof":
            out.append(self.decl())
        return out


def _arrow_var(body) -> str:
    fv = free_vars(body)
    n = 0
    while f"_{n}" in fv:
        n += 1
    return f"_{n}"


def _guard(fn):
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RecursionError:
            raise ParseError("input nested too deeply", Span(1, 1)) from None

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


def resolve(node, constants, bound=frozenset()):
    """Turn free variables that name constants into ``Const`` nodes."""
    match node:
        case Var(x):
            return Const(x) if x not in bound and x in constants else node
        case Lam(x, t, b) | Pi(x, t, b) | KPi(x, t, b):
            return type(node)(x, resolve(t, constants, bound), resolve(b, constants, bound | {x}))
    out = node
    for i, c in enumerate(children(node)):
        c2 = resolve(c, constants, bound)
        if c2 is not c:
            out = replace_child(out, i, c2)
    return out


@_guard
def parse_term(text: str, constants=DEFAULT_CONSTANTS):
    p = Parser(text)
    t = p.term()
    p.done()
    return resolve(t, constants)


@_guard
def parse_type(text: str, constants=DEFAULT_CONSTANTS):
    p = Parser(text)
    t = p.type_()
    p.done()
    return resolve(t, constants)


@_guard
def parse_kind(text: str, constants=DEFAULT_CONSTANTS):
    p = Parser(text)
    k = p.kind()
    p.done()
    return resolve(k, constants)


@_guard
def parse_decls(text: str) -> list:
    p = Parser(text)
    return p.decls()


def parse_signature(text: str) -> Signature:
    """Parse ``type X :: K;`` / ``const c : T;`` declarations into a signature."""
    decls = []
    names = set()
    for d in parse_decls(text):
        if d.kind not in ("type", "const"):
            raise ParseError(f"only type/const declarations allowed in a signature, found {d.kind!r}", d.span)
        decls.append(_to_sig_decl(d, names))
        if d.kind == "const":
            names.add(d.name)
    return Signature(tuple(decls))


def _to_sig_decl(d: Decl, const_names):
    if d.kind == "type":
        return TypeConstDecl(d.name, resolve(d.value, const_names))
    return ConstDecl(d.name, resolve(d.value, const_names))


def load_source(text: str, path: str = "<input>", base: Signature = Signature()):
    """Parse a ``.lmd`` file.

    Returns ``(signature, SourceFile)``; declarations are resolved against
    the growing signature and earlier definitions are inlined into later terms.
    """
    sf = SourceFile(path, text, parse_decls(text))
    sig = base
    consts = set(sig.const_names())
    defs = {}
    for d in sf.decls:
        if d.kind in ("type", "const"):
            sig = sig.extend(_to_sig_decl(d, consts))
            if d.kind == "const":
                consts.add(d.name)
        else:
            d.value = inline_defs(resolve(d.value, consts), defs)
            if d.annot is not None:
                d.annot = inline_defs(resolve(d.annot, consts), defs)
            if d.kind == "def":
                defs[d.name] = d.value
    return sig, sf


def inline_defs(node, defs: dict):
    for name in free_vars(node) & defs.keys():
        node = subst_term(node, name, defs[name])
    return node


# ---------------------------------------------------------------- pretty-printer

# term precedence: 0 binder, 1..3 infix levels, 4 application, 5 prefix/atom


def pretty(node) -> str:
    from .kernel import is_term, is_type

    if isinstance(node, Signature):
        return "\n".join(_pretty_decl(d) for d in node.decls)
    if is_term(node):
        return _pt(node, 0)
    if is_type(node):
        return _py(node, 0)
    return _pk(node)


def _pretty_decl(d) -> str:
    if isinstance(d, TypeConstDecl):
        return f"type {d.name} :: {_pk(d.kind)};"
    return f"const {d.name} : {_py(d.type, 0)};"


def pretty_stage(stage) -> str:
    return " ".join(stage) if stage else "ε"


def _paren(s: str, cond: bool) -> str:
    return f"({s})" if cond else s


def _infix_parts(t):
    if isinstance(t, App) and isinstance(t.fun, App) and isinstance(t.fun.fun, Const):
        name = t.fun.fun.name
        if name in INFIX_BY_CONST:
            op, lvl = INFIX_BY_CONST[name]
            return op, lvl, t.fun.arg, t.arg
    return None


def _pt(t, prec: int) -> str:
    match t:
        case Var(x) | Const(x):
            return x
        case Lam(x, annot, body):
            return _paren(f"\\{x}:{_py(annot, 0)}. {_pt(body, 0)}", prec > 0)
        case StageLam(s, body):
            return _paren(f"/\\{s}. {_pt(body, 0)}", prec > 0)
        case Bracket(s, b):
            return f"|>{s} {_pt(b, 5)}"
        case Escape(s, b):
            return f"<|{s} {_pt(b, 5)}"
        case Csp(s, b):
            return f"%{s} {_pt(b, 5)}"
        case StageApp(f, st):
            return _paren(f"{_pt(f, 4)} @[{' '.join(st)}]", prec > 4)
        case App(f, a):
            parts = _infix_parts(t)
            if parts:
                op, lvl, l, r = parts
                return _paren(f"{_pt(l, lvl)} {op} {_pt(r, lvl + 1)}", prec > lvl)
            return _paren(f"{_pt(f, 4)} {_arg(a)}", prec > 4)
    raise TypeError(f"not a term: {t!r}")


def _arg(a) -> str:
    # prefix operators bind only an atom, but reading `f |>a x` is easier with parentheses
    return _paren(_pt(a, 5), isinstance(a, (Bracket, Escape, Csp)))


# type precedence: 0 binder/arrow, 1 arrow domain, 2 application, 3 atom


def _py(t, prec: int) -> str:
    match t:
        case TConst(x):
            return x
        case Pi(x, dom, cod):
            if x not in free_vars(cod):
                return _paren(f"{_py(dom, 1)} -> {_py(cod, 0)}", prec > 0)
            return _paren(f"Pi {x}:{_py(dom, 0)}. {_py(cod, 0)}", prec > 0)
        case ForallStage(s, body):
            return _paren(f"forall {s}. {_py(body, 0)}", prec > 0)
        case TApp(h, a):
            return _paren(f"{_py(h, 2)} {_arg(a)}", prec > 2)
        case Code(s, b):
            return f"|>{s} {_py(b, 3)}"
    raise TypeError(f"not a type: {t!r}")


def _pk(k) -> str:
    match k:
        case Star():
            return "*"
        case KPi(x, dom, body):
            if x not in free_vars(body):
                return f"{_py(dom, 1)} -> {_pk(body)}"
            return f"Pi {x}:{_py(dom, 0)}. {_pk(body)}"
    raise TypeError(f"not a kind: {k!r}")
