"""Recursive-descent parser for the restricted GPU-kernel source language.

Covers exactly what the synthetic generator emits plus the common shapes of
simple hand-written kernels: preprocessor includes, ``__global__`` kernel
definitions, host functions, declarations (auto/typed, =, parenthesis and
brace initializers), indexed loads/stores, arithmetic expressions, grid-stride
``for`` loops, ``if`` statements, and triple-chevron launch statements.

``validate_restricted`` never raises: unsupported constructs become
``Diagnostic`` records with line/column. ``parse_module`` is the strict
variant used where a full parse is a precondition.

The module also derives per-kernel instruction counts (loads, stores, FLOPs,
byte traffic) via a small type-tainting walk, and computes the
identifier-independent fingerprint used for leak-free dataset splits.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..errors import KernelParseError
from . import lexer
from .lang import CPP_KEYWORDS, FLOAT_SIZEOF, RESERVED_IDENTIFIERS

# Keywords that may legitimately appear inside expressions (sizeof(float),
# boolean literals, type names as sizeof arguments).
_EXPR_OK_KEYWORDS = frozenset(
    "true false nullptr sizeof this "
    "void bool char short int long float double unsigned signed".split()
)

# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Name:
    path: tuple[str, ...]

    @property
    def last(self) -> str:
        return self.path[-1]


@dataclass(frozen=True)
class Number:
    text: str

    def int_value(self) -> int:
        return int(self.text.replace("'", ""), 0)

    def is_float(self) -> bool:
        t = self.text.lower().rstrip("ful")
        return "." in t or ("e" in t and not t.startswith("0x"))


@dataclass(frozen=True)
class Literal:  # string or char
    text: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Ternary:
    cond: object
    then: object
    other: object


@dataclass(frozen=True)
class Call:
    callee: object
    args: tuple


@dataclass(frozen=True)
class Index:
    base: object
    index: object


@dataclass(frozen=True)
class Member:
    base: object
    name: str


@dataclass(frozen=True)
class Launch:
    kernel: object
    config: tuple
    args: tuple


@dataclass(frozen=True)
class Assign:
    target: object
    op: str  # "=", "+=", ...
    value: object


@dataclass(frozen=True)
class TypeRef:
    path: tuple[str, ...]
    template_args: tuple = ()
    pointers: int = 0
    const: bool = False
    is_auto: bool = False

    @property
    def last(self) -> str:
        return self.path[-1]


@dataclass(frozen=True)
class Decl:
    type: TypeRef
    name: str
    init: object = None  # expression for "=", tuple of args for ()/{} init
    init_style: str = "none"  # none | assign | paren | brace


@dataclass(frozen=True)
class ExprStmt:
    expr: object


@dataclass(frozen=True)
class Return:
    expr: object = None


@dataclass(frozen=True)
class For:
    init: object
    cond: object
    step: object
    body: tuple


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class Param:
    type: TypeRef
    name: str | None


@dataclass(frozen=True)
class KernelDef:
    name: str
    params: tuple[Param, ...]
    body: tuple
    token_span: tuple[int, int]  # [lo, hi) indices into the token list


@dataclass(frozen=True)
class FuncDef:
    name: str
    return_type: TypeRef
    params: tuple[Param, ...]
    body: tuple


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


@dataclass
class Module:
    includes: list[str] = field(default_factory=list)
    kernels: list[KernelDef] = field(default_factory=list)
    functions: list[FuncDef] = field(default_factory=list)
    tokens: list = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}
_TYPE_KEYWORDS = {
    "auto", "void", "bool", "char", "short", "int", "long", "float", "double",
    "unsigned", "signed",
}


class _Parser:
    def __init__(self, tokens, src_len: int):
        self.tokens = tokens
        self.pos = 0
        self.src_len = src_len

    # -- token plumbing ----------------------------------------------------

    def _tok(self, offset=0):
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def _loc(self):
        tok = self._tok()
        if tok is None:
            tok = self.tokens[-1] if self.tokens else (0, "", 0, 0, 1, 1)
        return tok[4], tok[5]

    def _fail(self, message: str):
        line, col = self._loc()
        raise KernelParseError(message, line, col)

    def _at(self, kind, text=None) -> bool:
        tok = self._tok()
        return tok is not None and tok[0] == kind and (text is None or tok[1] == text)

    def _at_punct(self, text) -> bool:
        return self._at(lexer.PUNCT, text)

    def _accept(self, kind, text=None):
        if self._at(kind, text):
            tok = self._tok()
            self.pos += 1
            return tok
        return None

    def _expect(self, kind, text=None):
        tok = self._accept(kind, text)
        if tok is None:
            want = text if text is not None else {
                lexer.IDENT: "identifier", lexer.NUMBER: "number",
            }.get(kind, "token")
            got = self._tok()[1] if self._tok() else "end of input"
            self._fail(f"expected {want!r}, found {got!r}")
        return tok

    # -- top level -----------------------------------------------------------

    def parse_module(self, tolerant: bool) -> Module:
        mod = Module(tokens=self.tokens)
        while self._tok() is not None:
            tok = self._tok()
            start = self.pos
            try:
                if tok[0] == lexer.PREPROC:
                    mod.includes.append(tok[1])
                    self.pos += 1
                elif tok[0] == lexer.IDENT and tok[1] == "__global__":
                    mod.kernels.append(self._kernel_def())
                else:
                    mod.functions.append(self._func_def())
            except KernelParseError as exc:
                if not tolerant:
                    raise
                mod.diagnostics.append(Diagnostic(exc.line, exc.col, str(exc)))
                self.pos = max(self.pos, start + 1)
                self._recover_top_level()
        if not mod.kernels:
            mod.diagnostics.append(Diagnostic(1, 1, "no kernel found"))
        return mod

    def _recover_top_level(self):
        depth = 0
        while self._tok() is not None:
            tok = self._tok()
            if tok[0] == lexer.PUNCT:
                if tok[1] == "{":
                    depth += 1
                elif tok[1] == "}":
                    depth -= 1
                    if depth <= 0:
                        self.pos += 1
                        return
                elif tok[1] == ";" and depth == 0:
                    self.pos += 1
                    return
            elif tok[0] == lexer.IDENT and tok[1] == "__global__" and depth == 0:
                return
            self.pos += 1

    def _kernel_def(self) -> KernelDef:
        span_lo = self.pos
        self._expect(lexer.IDENT, "__global__")
        self._expect(lexer.IDENT, "void")
        name = self._expect(lexer.IDENT)[1]
        params = self._params()
        body = self._block()
        return KernelDef(name, params, body, (span_lo, self.pos))

    def _func_def(self) -> FuncDef:
        rtype = self._type()
        name = self._expect(lexer.IDENT)[1]
        params = self._params()
        body = self._block()
        return FuncDef(name, rtype, params, body)

    def _params(self) -> tuple[Param, ...]:
        self._expect(lexer.PUNCT, "(")
        params = []
        if not self._at_punct(")"):
            while True:
                ptype = self._type()
                pname = None
                tok = self._accept(lexer.IDENT)
                if tok is not None:
                    pname = tok[1]
                params.append(Param(ptype, pname))
                if not self._accept(lexer.PUNCT, ","):
                    break
        self._expect(lexer.PUNCT, ")")
        return tuple(params)

    # -- types ---------------------------------------------------------------

    def _type(self) -> TypeRef:
        const = bool(self._accept(lexer.IDENT, "const"))
        if self._accept(lexer.IDENT, "auto"):
            ptrs = self._stars()
            return TypeRef(("auto",), (), ptrs, const, is_auto=True)
        path = []
        # "unsigned"/"signed"/"long" may prefix a primitive or stand alone
        while self._tok() and self._tok()[0] == lexer.IDENT and self._tok()[1] in (
            "unsigned", "signed", "long", "short",
        ):
            path.append(self._tok()[1])
            self.pos += 1
        if not path or (self._tok() and self._tok()[0] == lexer.IDENT and self._tok()[1] in ("int", "char", "double", "float", "long")):
            path.extend(self._qualified_name())
        targs = []
        if self._at_punct("<"):
            self.pos += 1
            targs.append(self._type())
            while self._accept(lexer.PUNCT, ","):
                targs.append(self._type())
            self._expect(lexer.PUNCT, ">")
        if self._accept(lexer.IDENT, "const"):
            const = True
        ptrs = self._stars()
        return TypeRef(tuple(path), tuple(targs), ptrs, const)

    def _stars(self) -> int:
        count = 0
        while self._at_punct("*") or self._at_punct("&"):
            if self._tok()[1] == "*":
                count += 1
            self.pos += 1
        return count

    def _qualified_name(self) -> list[str]:
        parts = [self._expect(lexer.IDENT)[1]]
        while self._at_punct("::"):
            self.pos += 1
            parts.append(self._expect(lexer.IDENT)[1])
        return parts

    # -- statements ------------------------------------------------------------

    def _block(self) -> tuple:
        self._expect(lexer.PUNCT, "{")
        stmts = []
        while not self._at_punct("}"):
            if self._tok() is None:
                self._fail("unterminated block")
            stmts.append(self._statement())
        self._expect(lexer.PUNCT, "}")
        return tuple(stmts)

    def _body_or_stmt(self) -> tuple:
        if self._at_punct("{"):
            return self._block()
        return (self._statement(),)

    def _statement(self):
        tok = self._tok()
        if tok[0] == lexer.IDENT:
            if tok[1] == "for":
                return self._for_stmt()
            if tok[1] == "if":
                return self._if_stmt()
            if tok[1] == "return":
                self.pos += 1
                expr = None
                if not self._at_punct(";"):
                    expr = self._expr()
                self._expect(lexer.PUNCT, ";")
                return Return(expr)
        if self._at_punct("{"):
            return self._block()
        decl = self._try(self._decl_stmt)
        if decl is not None:
            return decl
        expr = self._expr()
        self._expect(lexer.PUNCT, ";")
        return ExprStmt(expr)

    def _try(self, production):
        saved = self.pos
        try:
            return production()
        except KernelParseError:
            self.pos = saved
            return None

    def _decl_stmt(self) -> Decl:
        decl = self._decl_head()
        self._expect(lexer.PUNCT, ";")
        return decl

    def _decl_head(self) -> Decl:
        dtype = self._type()
        name = self._expect(lexer.IDENT)[1]
        if self._accept(lexer.PUNCT, "="):
            return Decl(dtype, name, self._expr(), "assign")
        if self._at_punct("("):
            return Decl(dtype, name, tuple(self._args("(", ")")), "paren")
        if self._at_punct("{"):
            return Decl(dtype, name, tuple(self._args("{", "}")), "brace")
        return Decl(dtype, name)

    def _for_stmt(self) -> For:
        self._expect(lexer.IDENT, "for")
        self._expect(lexer.PUNCT, "(")
        init = None
        if not self._accept(lexer.PUNCT, ";"):
            init = self._try(self._decl_head)
            if init is None:
                init = ExprStmt(self._expr())
            self._expect(lexer.PUNCT, ";")
        cond = None
        if not self._at_punct(";"):
            cond = self._expr()
        self._expect(lexer.PUNCT, ";")
        step = None
        if not self._at_punct(")"):
            step = self._expr()
        self._expect(lexer.PUNCT, ")")
        return For(init, cond, step, self._body_or_stmt())

    def _if_stmt(self) -> If:
        self._expect(lexer.IDENT, "if")
        self._expect(lexer.PUNCT, "(")
        cond = self._expr()
        self._expect(lexer.PUNCT, ")")
        then = self._body_or_stmt()
        orelse: tuple = ()
        if self._accept(lexer.IDENT, "else"):
            orelse = self._body_or_stmt()
        return If(cond, then, orelse)

    # -- expressions -------------------------------------------------------------

    def _args(self, open_p: str, close_p: str) -> list:
        self._expect(lexer.PUNCT, open_p)
        args = []
        if not self._at_punct(close_p):
            args.append(self._expr())
            while self._accept(lexer.PUNCT, ","):
                args.append(self._expr())
        self._expect(lexer.PUNCT, close_p)
        return args

    def _expr(self):
        return self._assignment()

    def _assignment(self):
        left = self._ternary()
        tok = self._tok()
        if tok is not None and tok[0] == lexer.PUNCT and tok[1] in _ASSIGN_OPS:
            if not isinstance(left, (Name, Index, Member, Unary)):
                self._fail(f"invalid assignment target before {tok[1]!r}")
            self.pos += 1
            return Assign(left, tok[1], self._assignment())
        return left

    def _ternary(self):
        cond = self._binary(0)
        if self._accept(lexer.PUNCT, "?"):
            then = self._expr()
            self._expect(lexer.PUNCT, ":")
            other = self._ternary()
            return Ternary(cond, then, other)
        return cond

    _PRECEDENCE = [
        ("||",),
        ("&&",),
        ("|",),
        ("^",),
        ("&",),
        ("==", "!="),
        ("<", ">", "<=", ">="),
        ("<<", ">>"),
        ("+", "-"),
        ("*", "/", "%"),
    ]

    def _binary(self, level: int):
        if level >= len(self._PRECEDENCE):
            return self._unary()
        ops = self._PRECEDENCE[level]
        left = self._binary(level + 1)
        while True:
            tok = self._tok()
            if tok is None or tok[0] != lexer.PUNCT or tok[1] not in ops:
                return left
            self.pos += 1
            right = self._binary(level + 1)
            left = Binary(tok[1], left, right)

    def _unary(self):
        tok = self._tok()
        if tok is not None and tok[0] == lexer.PUNCT and tok[1] in ("+", "-", "!", "~", "*", "&", "++", "--"):
            self.pos += 1
            return Unary(tok[1], self._unary())
        return self._postfix()

    def _postfix(self):
        expr = self._primary()
        while True:
            if self._at_punct("("):
                expr = Call(expr, tuple(self._args("(", ")")))
            elif self._at_punct("["):
                self.pos += 1
                index = self._expr()
                self._expect(lexer.PUNCT, "]")
                expr = Index(expr, index)
            elif self._at_punct(".") or self._at_punct("->"):
                self.pos += 1
                expr = Member(expr, self._expect(lexer.IDENT)[1])
            elif self._at_punct("<<<"):
                self.pos += 1
                config = [self._expr()]
                while self._accept(lexer.PUNCT, ","):
                    config.append(self._expr())
                self._expect(lexer.PUNCT, ">>>")
                args = self._args("(", ")")
                expr = Launch(expr, tuple(config), tuple(args))
            elif self._at_punct("++") or self._at_punct("--"):
                op = self._tok()[1]
                self.pos += 1
                expr = Unary(op, expr)
            else:
                return expr

    def _primary(self):
        tok = self._tok()
        if tok is None:
            self._fail("unexpected end of input")
        if tok[0] == lexer.NUMBER:
            self.pos += 1
            return Number(tok[1])
        if tok[0] in (lexer.STRING, lexer.CHAR):
            self.pos += 1
            return Literal(tok[1])
        if tok[0] == lexer.IDENT:
            if tok[1] in CPP_KEYWORDS and tok[1] not in _EXPR_OK_KEYWORDS:
                self._fail(f"unexpected keyword {tok[1]!r} in expression")
            return Name(tuple(self._qualified_name()))
        if self._accept(lexer.PUNCT, "("):
            expr = self._expr()
            self._expect(lexer.PUNCT, ")")
            return expr
        self._fail(f"unexpected token {tok[1]!r}")


# --------------------------------------------------------------------------
# Entry points
# --------------------------------------------------------------------------


def validate_restricted(source: str) -> Module:
    """Parse tolerantly; problems come back as ``Module.diagnostics``."""
    try:
        tokens = lexer.tokenize(source)
    except KernelParseError as exc:
        mod = Module()
        mod.diagnostics.append(Diagnostic(exc.line, exc.col, str(exc)))
        mod.diagnostics.append(Diagnostic(1, 1, "no kernel found"))
        return mod
    return _Parser(tokens, len(source)).parse_module(tolerant=True)


def parse_module(source: str) -> Module:
    """Strict parse: raises ``KernelParseError`` with location on any problem."""
    tokens = lexer.tokenize(source)
    mod = _Parser(tokens, len(source)).parse_module(tolerant=False)
    if not mod.kernels:
        raise KernelParseError("no kernel found", 1, 1)
    return mod


# --------------------------------------------------------------------------
# Instruction counting
# --------------------------------------------------------------------------


@dataclass
class OpCounts:
    loads: int = 0
    stores: int = 0
    flops: int = 0
    loaded_bytes: int = 0
    stored_bytes: int = 0

    def __iadd__(self, other: "OpCounts"):
        self.loads += other.loads
        self.stores += other.stores
        self.flops += other.flops
        self.loaded_bytes += other.loaded_bytes
        self.stored_bytes += other.stored_bytes
        return self


@dataclass
class LoopCounts:
    """Per-iteration counts of one ``for`` body (nested loops listed separately)."""

    counts: OpCounts
    nested: list["LoopCounts"]


@dataclass
class KernelAnalysis:
    name: str
    dtype: str | None  # element type of the first float-pointer parameter
    counts: OpCounts  # straight-line body (loop bodies excluded)
    loops: list[LoopCounts]
    env: dict


# type-kind strings: "f8"/"f4" float values, "i" integral, "p:f8"/"p:f4"
# float pointers, "x" anything else


def _param_kind(t: TypeRef) -> str:
    if t.pointers >= 1 and t.last in FLOAT_SIZEOF:
        return f"p:f{FLOAT_SIZEOF[t.last]}"
    if t.last in FLOAT_SIZEOF:
        return f"f{FLOAT_SIZEOF[t.last]}"
    return "i"


def _is_float(kind: str) -> bool:
    return kind.startswith("f")


def _float_size(kind: str) -> int:
    return int(kind[1:]) if _is_float(kind) else 0


class _Counter:
    def __init__(self, env: dict):
        self.env = env

    def infer(self, expr) -> str:
        if isinstance(expr, Number):
            return "f8" if expr.is_float() else "i"
        if isinstance(expr, Literal):
            return "x"
        if isinstance(expr, Name):
            return self.env.get(expr.last, "i")
        if isinstance(expr, Member):
            return "i"  # threadIdx.x and friends
        if isinstance(expr, Index):
            base = self.infer(expr.base)
            if base.startswith("p:"):
                return base[2:]
            return "i"
        if isinstance(expr, Unary):
            inner = self.infer(expr.operand)
            if expr.op == "&" and _is_float(inner):
                return f"p:{inner}"
            if expr.op == "*" and inner.startswith("p:"):
                return inner[2:]
            return inner
        if isinstance(expr, Binary):
            lk, rk = self.infer(expr.left), self.infer(expr.right)
            if expr.op in ("==", "!=", "<", ">", "<=", ">=", "&&", "||"):
                return "i"
            if _is_float(lk) or _is_float(rk):
                return lk if _float_size(lk) >= _float_size(rk) else rk
            return "i"
        if isinstance(expr, Ternary):
            tk = self.infer(expr.then)
            return tk if _is_float(tk) else self.infer(expr.other)
        if isinstance(expr, Call):
            for arg in expr.args:
                kind = self.infer(arg)
                if _is_float(kind):
                    return kind
            return "i"
        if isinstance(expr, Assign):
            return self.infer(expr.value)
        return "x"

    def expr(self, e, out: OpCounts):
        if isinstance(e, (Number, Literal, Name)) or e is None:
            return
        if isinstance(e, Member):
            self.expr(e.base, out)
            return
        if isinstance(e, Index):
            base_kind = self.infer(e.base)
            if base_kind.startswith("p:"):
                out.loads += 1
                out.loaded_bytes += _float_size(base_kind[2:])
            self.expr(e.index, out)
            return
        if isinstance(e, Unary):
            self.expr(e.operand, out)
            return
        if isinstance(e, Binary):
            self.expr(e.left, out)
            self.expr(e.right, out)
            if e.op in ("+", "-", "*", "/") and _is_float(self.infer(e)):
                out.flops += 1
            return
        if isinstance(e, Ternary):
            self.expr(e.cond, out)
            self.expr(e.then, out)
            self.expr(e.other, out)
            return
        if isinstance(e, Call):
            for arg in e.args:
                self.expr(arg, out)
            return
        if isinstance(e, Launch):
            for arg in e.config + e.args:
                self.expr(arg, out)
            return
        if isinstance(e, Assign):
            self.store(e, out)
            return

    def store(self, assign: Assign, out: OpCounts):
        target = assign.target
        if isinstance(target, Index):
            base_kind = self.infer(target.base)
            self.expr(target.index, out)
            if base_kind.startswith("p:"):
                size = _float_size(base_kind[2:])
                out.stores += 1
                out.stored_bytes += size
                if assign.op != "=":  # read-modify-write
                    out.loads += 1
                    out.loaded_bytes += size
                    out.flops += 1 if assign.op in ("+=", "-=", "*=", "/=") else 0
            self.expr(assign.value, out)
            return
        # plain variable target
        if assign.op in ("+=", "-=", "*=", "/=") and _is_float(self.infer(target)):
            out.flops += 1
        self.expr(assign.value, out)

    def block(self, stmts) -> tuple[OpCounts, list[LoopCounts]]:
        flat = OpCounts()
        loops: list[LoopCounts] = []
        for stmt in stmts:
            if isinstance(stmt, Decl):
                if stmt.init_style == "assign":
                    self.expr(stmt.init, flat)
                    if stmt.type.is_auto:
                        self.env[stmt.name] = self.infer(stmt.init)
                    else:
                        self.env[stmt.name] = _param_kind(stmt.type)
                elif stmt.init_style in ("paren", "brace"):
                    for arg in stmt.init:
                        self.expr(arg, flat)
                    self.env[stmt.name] = _param_kind(stmt.type)
                else:
                    self.env[stmt.name] = _param_kind(stmt.type)
            elif isinstance(stmt, ExprStmt):
                self.expr(stmt.expr, flat)
            elif isinstance(stmt, Return):
                self.expr(stmt.expr, flat)
            elif isinstance(stmt, If):
                then_counts, then_loops = self.block(stmt.then)
                else_counts, else_loops = self.block(stmt.orelse)
                flat += then_counts
                flat += else_counts
                loops.extend(then_loops)
                loops.extend(else_loops)
            elif isinstance(stmt, For):
                if stmt.init is not None:
                    init_counts, _ = self.block((stmt.init,))
                    flat += init_counts  # runs once per thread, not per iteration
                body_counts, body_loops = self.block(stmt.body)
                step = OpCounts()
                if stmt.step is not None:
                    self.expr(stmt.step, step)
                body_counts += step
                loops.append(LoopCounts(body_counts, body_loops))
            elif isinstance(stmt, tuple):
                inner_counts, inner_loops = self.block(stmt)
                flat += inner_counts
                loops.extend(inner_loops)
        return flat, loops


def analyze_kernel(kernel: KernelDef) -> KernelAnalysis:
    """Count memory and float operations in one kernel definition.

    Straight-line statements land in ``counts``; each ``for`` loop body is
    reported per-iteration under ``loops``. Counting assumes every statement
    executes once per thread (the generator's language has no divergence).
    """
    env = {p.name: _param_kind(p.type) for p in kernel.params if p.name}
    dtype = None
    for p in kernel.params:
        if p.type.pointers >= 1 and p.type.last in FLOAT_SIZEOF:
            dtype = p.type.last
            break
    counter = _Counter(env)
    counts, loops = counter.block(kernel.body)
    return KernelAnalysis(kernel.name, dtype, counts, loops, env)


# --------------------------------------------------------------------------
# Fingerprint
# --------------------------------------------------------------------------


def _kernel_token_spans(tokens) -> list[tuple[int, int]]:
    """Locate ``__global__ ... { ... }`` spans without a full parse."""
    spans = []
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i][0] == lexer.IDENT and tokens[i][1] == "__global__":
            lo = i
            while i < n and not (tokens[i][0] == lexer.PUNCT and tokens[i][1] == "{"):
                i += 1
            depth = 0
            while i < n:
                if tokens[i][0] == lexer.PUNCT:
                    if tokens[i][1] == "{":
                        depth += 1
                    elif tokens[i][1] == "}":
                        depth -= 1
                        if depth == 0:
                            break
                i += 1
            spans.append((lo, min(i + 1, n)))
        i += 1
    return spans


def fingerprint_source(source: str) -> str:
    """Identifier-independent content hash of the kernel definition(s).

    User identifiers are replaced by their first-occurrence index, so
    alpha-renamed variants map to the same fingerprint; splits keyed on it
    stay leak-free under rename and flag expansion. Sources that do not lex,
    or contain no kernel, hash degenerate but still deterministic forms.
    """
    try:
        tokens = lexer.tokenize(source)
    except KernelParseError:
        digest = hashlib.sha256(b"raw\x00" + source.encode()).hexdigest()
        return f"fp-{digest[:16]}"
    spans = _kernel_token_spans(tokens) or [(0, len(tokens))]
    indices: dict[str, int] = {}
    parts: list[str] = []
    for lo, hi in spans:
        for tok in tokens[lo:hi]:
            kind, text = tok[0], tok[1]
            if kind == lexer.PREPROC:
                continue
            if kind == lexer.IDENT and text not in RESERVED_IDENTIFIERS:
                slot = indices.setdefault(text, len(indices))
                parts.append(f"@{slot}")
            else:
                parts.append(text)
    digest = hashlib.sha256("\x00".join(parts).encode()).hexdigest()
    return f"fp-{digest[:16]}"
