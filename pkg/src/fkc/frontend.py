"""Lexer and parser for the `.fk` stencil kernel language.

The grammar is line-oriented: one declaration or statement per line, with
`&` continuations and `;` separators.  Keywords and identifiers are
case-insensitive; names are normalised to lowercase in the AST while
tokens keep the original spelling.  This module only validates shape;
all semantic rules live in sema.py.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

KEYWORDS = frozenset({
    "subroutine", "end", "function", "pure", "elemental",
    "real", "integer", "intent", "in", "out", "inout",
    "dimension", "allocatable", "pointer", "contiguous", "target",
})

DIRECTIVE_PREFIX = "!$OFP"

_NUMBER = re.compile(r"\d+(\.\d*)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_DIRECTIVE = re.compile(
    r"!\$OFP\s+pure\s*,\s*kernel\s*::\s*([A-Za-z][A-Za-z0-9_]*)\s*$",
    re.IGNORECASE)


class LexError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class ParseError(ValueError):
    def __init__(self, line: int, expected: str, found: str):
        super().__init__(f"line {line}: expected {expected}, found {found}")
        self.line = line
        self.expected = expected
        self.found = found


class ParseFailure(ValueError):
    """Raised after recovery when one or more parse errors were collected."""

    def __init__(self, errors: list[ParseError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | real | int | op | punct | directive | eol
    lexeme: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    """Token stream for one source file; comments (other than directives)
    are dropped and `&` continuations suppress the end-of-line token."""
    tokens: list[Token] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        i = 0
        n = len(raw)
        continued = False
        while i < n:
            ch = raw[i]
            if ch in " \t\r":
                i += 1
                continue
            col = i + 1
            if ch == "!":
                rest = raw[i:].rstrip()
                if rest.startswith(DIRECTIVE_PREFIX):
                    tokens.append(Token("directive", rest, lineno, col))
                i = n
                break
            if ch == "&":
                tail = raw[i + 1:].strip()
                if tail and not tail.startswith("!"):
                    raise LexError(lineno, col,
                                   "continuation '&' must end the line")
                continued = True
                i = n
                break
            if ch.isdigit():
                m = _NUMBER.match(raw, i)
                kind = "real" if (m.group(1) or m.group(2)) else "int"
                tokens.append(Token(kind, m.group(0), lineno, col))
                i = m.end()
                continue
            if ch.isalpha():
                m = _IDENT.match(raw, i)
                word = m.group(0)
                kind = "keyword" if word.lower() in KEYWORDS else "ident"
                tokens.append(Token(kind, word, lineno, col))
                i = m.end()
                continue
            if raw.startswith("::", i):
                tokens.append(Token("punct", "::", lineno, col))
                i += 2
                continue
            if ch in "=+-*/":
                tokens.append(Token("op", ch, lineno, col))
                i += 1
                continue
            if ch in "()[],:":
                tokens.append(Token("punct", ch, lineno, col))
                i += 1
                continue
            if ch == ";":
                tokens.append(Token("eol", ";", lineno, col))
                i += 1
                continue
            raise LexError(lineno, col, f"unexpected character {ch!r}")
        if not continued:
            tokens.append(Token("eol", "", lineno, len(raw) + 1))
    return tokens


# --- AST ---------------------------------------------------------------

@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class RealLit:
    lexeme: str

    @property
    def value(self) -> float:
        return float(self.lexeme)


@dataclass(frozen=True)
class IntLit:
    lexeme: str

    @property
    def value(self) -> int:
        return int(self.lexeme)


@dataclass(frozen=True)
class HaloLit:
    values: tuple[int, int, int, int]


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Paren:
    inner: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Ident | RealLit | IntLit | HaloLit | BinOp | Neg | Paren | Call


@dataclass(frozen=True)
class Assign:
    lhs: str
    rhs: Expr
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class HaloAssign:
    lhs: str
    values: tuple[int, int, int, int]
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class PtrAssign:
    lhs: str
    array: str
    halo_arg: Ident | HaloLit
    line: int = field(compare=False, default=0)


Statement = Assign | HaloAssign | PtrAssign


@dataclass(frozen=True)
class ParamDecl:
    name: str
    kind: str  # scalar-real | array-2d-real
    intent: str | None  # in | out | inout | None (sema rejects non in/out)
    attrs: frozenset[str] = frozenset()  # subset of {contiguous, target}
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class LocalDecl:
    name: str
    kind: str  # alloc-array-2d | pointer-array-2d
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class HaloDecl:
    name: str
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class ElementalFn:
    name: str
    params: tuple[str, ...]
    body: Expr
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class KernelProgram:
    name: str
    params: tuple[ParamDecl, ...]
    locals: tuple[LocalDecl, ...]
    halo_consts: tuple[HaloDecl, ...]
    body: tuple[Statement, ...]
    elementals: tuple[ElementalFn, ...] = ()
    line: int = field(compare=False, default=0)


# --- parser ------------------------------------------------------------

class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def check(self, kind: str, lexeme: str | None = None) -> bool:
        if self.at_end():
            return False
        tok = self.peek()
        if tok.kind != kind:
            return False
        return lexeme is None or tok.lexeme.lower() == lexeme

    def accept(self, kind: str, lexeme: str | None = None) -> Token | None:
        if self.check(kind, lexeme):
            return self.advance()
        return None

    def expect(self, kind: str, lexeme: str | None = None,
               what: str | None = None) -> Token:
        if self.check(kind, lexeme):
            return self.advance()
        found = "end of input" if self.at_end() else repr(self.peek().lexeme or "end of line")
        line = self.tokens[-1].line if self.at_end() else self.peek().line
        raise ParseError(line, what or lexeme or kind, found)

    def skip_eols(self):
        while self.accept("eol"):
            pass


def _parse_expr(cur: _Cursor) -> Expr:
    return _parse_sum(cur)


def _parse_sum(cur: _Cursor) -> Expr:
    node = _parse_term(cur)
    while cur.check("op", "+") or cur.check("op", "-"):
        op = cur.advance().lexeme
        node = BinOp(op, node, _parse_term(cur))
    return node


def _parse_term(cur: _Cursor) -> Expr:
    node = _parse_factor(cur)
    while cur.check("op", "*") or cur.check("op", "/"):
        op = cur.advance().lexeme
        node = BinOp(op, node, _parse_factor(cur))
    return node


def _parse_factor(cur: _Cursor) -> Expr:
    if cur.accept("op", "-"):
        return Neg(_parse_factor(cur))
    if cur.accept("op", "+"):
        return _parse_factor(cur)
    return _parse_atom(cur)


def _parse_atom(cur: _Cursor) -> Expr:
    if cur.check("real"):
        return RealLit(cur.advance().lexeme)
    if cur.check("int"):
        return IntLit(cur.advance().lexeme)
    if cur.check("punct", "["):
        return HaloLit(_parse_halo_values(cur))
    if cur.accept("punct", "("):
        inner = _parse_expr(cur)
        cur.expect("punct", ")")
        return Paren(inner)
    if cur.check("ident"):
        name = cur.advance().lexeme.lower()
        if cur.accept("punct", "("):
            args: list[Expr] = []
            if not cur.check("punct", ")"):
                args.append(_parse_expr(cur))
                while cur.accept("punct", ","):
                    args.append(_parse_expr(cur))
            cur.expect("punct", ")")
            return Call(name, tuple(args))
        return Ident(name)
    found = "end of input" if cur.at_end() else repr(cur.peek().lexeme or "end of line")
    line = cur.tokens[-1].line if cur.at_end() else cur.peek().line
    raise ParseError(line, "expression", found)


def _parse_halo_values(cur: _Cursor) -> tuple[int, int, int, int]:
    cur.expect("punct", "[")
    values = []
    for k in range(4):
        tok = cur.expect("int", what="integer halo component")
        values.append(int(tok.lexeme))
        if k < 3:
            cur.expect("punct", ",")
    cur.expect("punct", "]")
    return tuple(values)  # type: ignore[return-value]


def parse_expression(text: str) -> Expr:
    """Parse a standalone expression (test and tooling convenience)."""
    cur = _Cursor(tokenize(text))
    expr = _parse_expr(cur)
    cur.skip_eols()
    if not cur.at_end():
        tok = cur.peek()
        raise ParseError(tok.line, "end of expression", repr(tok.lexeme))
    return expr


class _DeclInfo:
    __slots__ = ("base", "dims", "intent", "allocatable", "pointer",
                 "contiguous", "target", "line")

    def __init__(self, line: int):
        self.base = None        # "real" | "integer"
        self.dims = None        # ":,:" | "4"
        self.intent = None
        self.allocatable = False
        self.pointer = False
        self.contiguous = False
        self.target = False
        self.line = line


def _parse_decl_line(cur: _Cursor, decls: dict[str, _DeclInfo]):
    """One declaration line: attribute specs, `::`, then a name list."""
    line = cur.peek().line
    base = None
    attrs = dict(intent=None, allocatable=False, pointer=False,
                 contiguous=False, target=False, dims=None)
    while True:
        tok = cur.expect("keyword", what="declaration attribute")
        word = tok.lexeme.lower()
        if word in ("real", "integer"):
            base = word
        elif word == "intent":
            cur.expect("punct", "(")
            which = cur.expect("keyword", what="intent(in|out|inout)")
            if which.lexeme.lower() not in ("in", "out", "inout"):
                raise ParseError(which.line, "in, out or inout",
                                 repr(which.lexeme))
            cur.expect("punct", ")")
            attrs["intent"] = which.lexeme.lower()
        elif word == "dimension":
            cur.expect("punct", "(")
            if cur.accept("punct", ":"):
                cur.expect("punct", ",")
                cur.expect("punct", ":")
                attrs["dims"] = ":,:"
            else:
                size = cur.expect("int", what="dimension size")
                if size.lexeme != "4":
                    raise ParseError(size.line, "dimension(4) for halo vectors",
                                     repr(size.lexeme))
                attrs["dims"] = "4"
            cur.expect("punct", ")")
        elif word in ("allocatable", "pointer", "contiguous", "target"):
            attrs[word] = True
        else:
            raise ParseError(tok.line, "declaration attribute", repr(word))
        if cur.accept("punct", ","):
            continue
        break
    cur.expect("punct", "::")
    names = [cur.expect("ident", what="declared name").lexeme.lower()]
    while cur.accept("punct", ","):
        names.append(cur.expect("ident", what="declared name").lexeme.lower())
    cur.expect("eol")
    for name in names:
        info = decls.setdefault(name, _DeclInfo(line))
        if base is not None:
            info.base = base
        if attrs["dims"] is not None:
            info.dims = attrs["dims"]
        if attrs["intent"] is not None:
            info.intent = attrs["intent"]
        info.allocatable |= attrs["allocatable"]
        info.pointer |= attrs["pointer"]
        info.contiguous |= attrs["contiguous"]
        info.target |= attrs["target"]


def _parse_statement(cur: _Cursor, halo_names: set[str]) -> Statement:
    lhs_tok = cur.expect("ident", what="assignment target")
    lhs = lhs_tok.lexeme.lower()
    cur.expect("op", "=")
    if cur.check("punct", "["):
        values = _parse_halo_values(cur)
        cur.expect("eol")
        if lhs not in halo_names:
            raise ParseError(lhs_tok.line,
                             "halo assignment to a declared integer, dimension(4) name",
                             repr(lhs))
        return HaloAssign(lhs, values, line=lhs_tok.line)
    rhs = _parse_expr(cur)
    cur.expect("eol")
    if isinstance(rhs, Call) and rhs.name == "region_ptr":
        if len(rhs.args) != 2 or not isinstance(rhs.args[0], Ident) \
                or not isinstance(rhs.args[1], (Ident, HaloLit)):
            raise ParseError(lhs_tok.line, "region_ptr(array, halo)",
                             "malformed region_ptr call")
        halo_arg = rhs.args[1]
        return PtrAssign(lhs, rhs.args[0].name, halo_arg, line=lhs_tok.line)
    return Assign(lhs, rhs, line=lhs_tok.line)


def _parse_elemental(cur: _Cursor) -> ElementalFn:
    line = cur.peek().line
    cur.expect("keyword", "pure")
    cur.expect("keyword", "elemental")
    cur.expect("keyword", "real")
    cur.expect("keyword", "function")
    name = cur.expect("ident", what="function name").lexeme.lower()
    cur.expect("punct", "(")
    params = [cur.expect("ident", what="parameter name").lexeme.lower()]
    while cur.accept("punct", ","):
        params.append(cur.expect("ident", what="parameter name").lexeme.lower())
    cur.expect("punct", ")")
    cur.expect("eol")

    decls: dict[str, _DeclInfo] = {}
    body: Expr | None = None
    while True:
        cur.skip_eols()
        if cur.check("keyword", "end"):
            break
        if cur.check("keyword"):
            _parse_decl_line(cur, decls)
            continue
        stmt_tok = cur.peek()
        stmt = _parse_statement(cur, set())
        if not isinstance(stmt, Assign) or stmt.lhs != name:
            raise ParseError(stmt_tok.line,
                             f"single result assignment to {name!r}",
                             repr(getattr(stmt, "lhs", "?")))
        if body is not None:
            raise ParseError(stmt_tok.line, "a single function body statement",
                             "second assignment")
        body = stmt.rhs
    cur.expect("keyword", "end")
    cur.expect("keyword", "function")
    end_name = cur.accept("ident")
    if end_name and end_name.lexeme.lower() != name:
        raise ParseError(end_name.line, f"'end function {name}'",
                         repr(end_name.lexeme))
    cur.expect("eol")

    for pname in params:
        info = decls.get(pname)
        if info is None or info.base != "real" or info.dims is not None:
            raise ParseError(line, f"scalar real declaration for {pname!r}",
                             "missing or non-scalar declaration")
        if info.intent != "in":
            raise ParseError(info.line if info else line,
                             "intent(in) on elemental parameters",
                             info.intent or "no intent")
    for dname in decls:
        if dname not in params:
            raise ParseError(decls[dname].line, "declarations of parameters only",
                             repr(dname))
    if body is None:
        raise ParseError(line, "a function body assignment", "'end function'")
    return ElementalFn(name, tuple(params), body, line=line)


def _parse_subroutine(cur: _Cursor):
    cur.expect("keyword", "subroutine")
    name_tok = cur.expect("ident", what="subroutine name")
    name = name_tok.lexeme.lower()
    cur.expect("punct", "(")
    sig: list[str] = []
    if not cur.check("punct", ")"):
        sig.append(cur.expect("ident", what="parameter name").lexeme.lower())
        while cur.accept("punct", ","):
            sig.append(cur.expect("ident", what="parameter name").lexeme.lower())
    cur.expect("punct", ")")
    cur.expect("eol")

    decls: dict[str, _DeclInfo] = {}
    body: list[Statement] = []
    is_kernel = False
    seen_statement = False
    while True:
        cur.skip_eols()
        if cur.check("keyword", "end"):
            break
        if cur.check("directive"):
            tok = cur.advance()
            m = _DIRECTIVE.match(tok.lexeme)
            if not m:
                raise ParseError(tok.line, "'!$OFP PURE, KERNEL :: name'",
                                 repr(tok.lexeme))
            if m.group(1).lower() != name:
                raise ParseError(tok.line, f"directive naming {name!r}",
                                 repr(m.group(1)))
            is_kernel = True
            cur.expect("eol")
            continue
        if cur.check("keyword"):
            if seen_statement:
                tok = cur.peek()
                raise ParseError(tok.line, "statements after declarations",
                                 repr(tok.lexeme))
            _parse_decl_line(cur, decls)
            continue
        halo_names = {n for n, i in decls.items()
                      if i.base == "integer" and i.dims == "4"}
        body.append(_parse_statement(cur, halo_names))
        seen_statement = True
    cur.expect("keyword", "end")
    cur.expect("keyword", "subroutine")
    end_name = cur.accept("ident")
    if end_name and end_name.lexeme.lower() != name:
        raise ParseError(end_name.line, f"'end subroutine {name}'",
                         repr(end_name.lexeme))
    cur.expect("eol")

    params: list[ParamDecl] = []
    for pname in sig:
        info = decls.get(pname)
        if info is None or info.base is None:
            raise ParseError(name_tok.line, f"type declaration for {pname!r}",
                             "none")
        if info.base != "real":
            raise ParseError(info.line, "real parameters", info.base)
        if info.dims == ":,:":
            kind = "array-2d-real"
        elif info.dims is None:
            kind = "scalar-real"
            if info.intent is None:
                info.intent = "in"
        else:
            raise ParseError(info.line, "scalar or dimension(:,:) parameter",
                             f"dimension({info.dims})")
        attrs = set()
        if info.contiguous:
            attrs.add("contiguous")
        if info.target:
            attrs.add("target")
        params.append(ParamDecl(pname, kind, info.intent, frozenset(attrs),
                                line=info.line))

    locals_: list[LocalDecl] = []
    halos: list[HaloDecl] = []
    for dname, info in decls.items():
        if dname in sig:
            continue
        if info.base == "integer" and info.dims == "4":
            halos.append(HaloDecl(dname, line=info.line))
        elif info.base == "real" and info.dims == ":,:" and info.allocatable:
            locals_.append(LocalDecl(dname, "alloc-array-2d", line=info.line))
        elif info.base == "real" and info.dims == ":,:" and info.pointer:
            locals_.append(LocalDecl(dname, "pointer-array-2d", line=info.line))
        else:
            raise ParseError(info.line, "allocatable/pointer array or "
                             "integer, dimension(4) local", repr(dname))

    return name, name_tok.line, params, locals_, halos, body, is_kernel


def _recover(cur: _Cursor):
    """Skip to the next top-level unit boundary after a parse error."""
    while not cur.at_end():
        if cur.check("keyword", "subroutine") or cur.check("keyword", "pure"):
            return
        if cur.accept("keyword", "end"):
            if cur.accept("keyword", "subroutine") or cur.accept("keyword", "function"):
                cur.accept("ident")
                cur.accept("eol")
                return
            continue
        cur.advance()


def parse_module(tokens: list[Token]) -> tuple[list[KernelProgram], list[ElementalFn]]:
    """Parse a token stream into kernel programs and elemental functions.

    Only subroutines carrying the PURE, KERNEL directive become kernels;
    other syntactically valid subroutines are checked and dropped.  Parse
    errors are collected with recovery to the next unit so several can be
    reported at once.
    """
    cur = _Cursor(tokens)
    kernels_raw = []
    elementals: list[ElementalFn] = []
    errors: list[ParseError] = []
    while True:
        cur.skip_eols()
        if cur.at_end():
            break
        try:
            if cur.check("keyword", "pure"):
                elementals.append(_parse_elemental(cur))
            elif cur.check("keyword", "subroutine"):
                kernels_raw.append(_parse_subroutine(cur))
            else:
                tok = cur.peek()
                raise ParseError(tok.line, "'subroutine' or 'pure elemental'",
                                 repr(tok.lexeme or "end of line"))
        except ParseError as err:
            errors.append(err)
            _recover(cur)
    if errors:
        raise ParseFailure(errors)
    elems = tuple(elementals)
    kernels = [KernelProgram(name, tuple(params), tuple(locals_), tuple(halos),
                             tuple(body), elems, line=line)
               for name, line, params, locals_, halos, body, is_kernel in kernels_raw
               if is_kernel]
    return kernels, list(elems)


def parse_source(source: str) -> tuple[list[KernelProgram], list[ElementalFn]]:
    return parse_module(tokenize(source))


# --- pretty printer ----------------------------------------------------

def expr_to_source(expr: Expr) -> str:
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, (RealLit, IntLit)):
        return expr.lexeme
    if isinstance(expr, HaloLit):
        return "[" + ",".join(str(v) for v in expr.values) + "]"
    if isinstance(expr, BinOp):
        return f"{expr_to_source(expr.left)} {expr.op} {expr_to_source(expr.right)}"
    if isinstance(expr, Neg):
        return f"-{expr_to_source(expr.operand)}"
    if isinstance(expr, Paren):
        return f"({expr_to_source(expr.inner)})"
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(expr_to_source(a) for a in expr.args)})"
    raise TypeError(f"not an expression node: {expr!r}")


def _stmt_to_source(stmt: Statement) -> str:
    if isinstance(stmt, HaloAssign):
        return f"{stmt.lhs} = [" + ",".join(str(v) for v in stmt.values) + "]"
    if isinstance(stmt, PtrAssign):
        halo = stmt.halo_arg.name if isinstance(stmt.halo_arg, Ident) \
            else expr_to_source(stmt.halo_arg)
        return f"{stmt.lhs} = region_ptr({stmt.array}, {halo})"
    return f"{stmt.lhs} = {expr_to_source(stmt.rhs)}"


def elemental_to_source(fn: ElementalFn) -> str:
    lines = [f"pure elemental real function {fn.name}({', '.join(fn.params)})",
             f"  real, intent(in) :: {','.join(fn.params)}",
             f"  {fn.name} = {expr_to_source(fn.body)}",
             "end function"]
    return "\n".join(lines)


def kernel_to_source(kernel: KernelProgram) -> str:
    lines = [f"subroutine {kernel.name}({','.join(p.name for p in kernel.params)})",
             f"  !$OFP PURE, KERNEL :: {kernel.name}"]
    scalars = [p for p in kernel.params if p.kind == "scalar-real"]
    arrays = [p for p in kernel.params if p.kind == "array-2d-real"]
    if scalars:
        lines.append(f"  real, intent(in) :: {','.join(p.name for p in scalars)}")
    if arrays:
        lines.append(f"  real, dimension(:,:) :: {','.join(p.name for p in arrays)}")
    for attr in ("contiguous", "target"):
        tagged = [p.name for p in arrays if attr in p.attrs]
        if tagged:
            lines.append(f"  {attr} :: {','.join(tagged)}")
    for intent in ("in", "out", "inout"):
        tagged = [p.name for p in arrays if p.intent == intent]
        if tagged:
            lines.append(f"  intent({intent}) :: {','.join(tagged)}")
    allocs = [l.name for l in kernel.locals if l.kind == "alloc-array-2d"]
    ptrs = [l.name for l in kernel.locals if l.kind == "pointer-array-2d"]
    if allocs:
        lines.append(f"  real, allocatable, dimension(:,:) :: {','.join(allocs)}")
    if ptrs:
        lines.append(f"  real, pointer, dimension(:,:) :: {','.join(ptrs)}")
    if kernel.halo_consts:
        lines.append("  integer, dimension(4) :: "
                     + ",".join(h.name for h in kernel.halo_consts))
    for stmt in kernel.body:
        lines.append("  " + _stmt_to_source(stmt))
    lines.append("end subroutine")
    return "\n".join(lines)


def module_to_source(kernels, elementals) -> str:
    parts = [elemental_to_source(fn) for fn in elementals]
    parts += [kernel_to_source(k) for k in kernels]
    return "\n\n".join(parts) + "\n"
