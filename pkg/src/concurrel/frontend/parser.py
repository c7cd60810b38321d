"""Recursive-descent parser for the toy concurrent language.

Grammar sketch::

    program   := decl* threaddef+
    decl      := "global" names ";" | "mutex" names ";"
               | "protect" NAME "with" names ";"
    threaddef := "thread" NAME "{" stmt* "}"
    stmt      := "lock" "(" NAME ")" ";" | "unlock" "(" NAME ")" ";"
               | "return" expr ";" | "assert" "(" cond ")" ";"
               | "if" "(" cond ")" block ("else" block)?
               | "while" "(" cond ")" block
               | NAME "=" ("?" | "create" "(" NAME ")" | "join" "(" NAME ")"
                           | expr) ";"

Expressions are linear integer arithmetic; conditions are single comparisons.
`//` starts a line comment.
"""

from __future__ import annotations

import re

from .ast import (
    BinOp, Cmp, Expr, IntLit, Pos, Program, SAssert, SAssign, SIf, SLock,
    SReturn, SUnlock, SWhile, Stmt, Var, expr_vars,
)

KEYWORDS = {
    "thread", "global", "mutex", "protect", "with", "lock", "unlock",
    "return", "assert", "if", "else", "while", "create", "join",
}

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>//[^\n]*)
      | (?P<num>\d+)
      | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op>==|!=|<=|>=|[-+*<>=();{},?])
    """,
    re.VERBOSE,
)


class ParseError(SyntaxError):
    def __init__(self, msg: str, line: int, col: int, filename: str = "<input>"):
        super().__init__(f"{filename}:{line}:{col}: error: {msg}")
        self.line = line
        self.col = col


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind  # 'num' | 'name' | literal text | 'eof'
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text: str, filename: str) -> list[_Token]:
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, filename)
        lexeme = m.group()
        if m.lastgroup == "num":
            toks.append(_Token("num", lexeme, line, col))
        elif m.lastgroup == "name":
            kind = lexeme if lexeme in KEYWORDS else "name"
            toks.append(_Token(kind, lexeme, line, col))
        elif m.lastgroup == "op":
            toks.append(_Token(lexeme, lexeme, line, col))
        nl = lexeme.count("\n")
        if nl:
            line += nl
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    toks.append(_Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str, filename: str):
        self.toks = _tokenize(text, filename)
        self.i = 0
        self.filename = filename

    # -- token plumbing --

    @property
    def cur(self) -> _Token:
        return self.toks[self.i]

    def _error(self, msg: str) -> ParseError:
        return ParseError(msg, self.cur.line, self.cur.col, self.filename)

    def accept(self, kind: str) -> _Token | None:
        if self.cur.kind == kind:
            tok = self.cur
            self.i += 1
            return tok
        return None

    def expect(self, kind: str) -> _Token:
        tok = self.accept(kind)
        if tok is None:
            raise self._error(f"expected {kind!r}, found {self.cur.text or 'end of input'!r}")
        return tok

    def pos(self) -> Pos:
        return Pos(self.cur.line, self.cur.col)

    # -- grammar --

    def program(self) -> Program:
        globs: list[str] = []
        muts: list[str] = []
        protections: dict[str, frozenset[str]] = {}
        threads: dict[str, tuple[Stmt, ...]] = {}
        while self.cur.kind != "eof":
            if self.accept("global"):
                globs.extend(self._names())
                self.expect(";")
            elif self.accept("mutex"):
                muts.extend(self._names())
                self.expect(";")
            elif self.accept("protect"):
                g = self.expect("name").text
                self.expect("with")
                protections[g] = frozenset(self._names())
                self.expect(";")
            elif self.accept("thread"):
                name = self.expect("name").text
                if name in threads:
                    raise self._error(f"duplicate thread template {name!r}")
                self.expect("{")
                body = []
                while not self.accept("}"):
                    body.append(self.stmt())
                threads[name] = tuple(body)
            else:
                raise self._error(f"expected declaration or 'thread', found {self.cur.text!r}")
        return Program(
            globals=tuple(globs),
            mutexes=tuple(muts),
            threads=threads,
            protections=protections or None,
            filename=self.filename,
        )

    def _names(self) -> list[str]:
        names = [self.expect("name").text]
        while self.accept(","):
            names.append(self.expect("name").text)
        return names

    def block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        body = []
        while not self.accept("}"):
            body.append(self.stmt())
        return tuple(body)

    def stmt(self) -> Stmt:
        p = self.pos()
        if self.accept("lock"):
            self.expect("(")
            m = self.expect("name").text
            self.expect(")")
            self.expect(";")
            return SLock(m, p)
        if self.accept("unlock"):
            self.expect("(")
            m = self.expect("name").text
            self.expect(")")
            self.expect(";")
            return SUnlock(m, p)
        if self.accept("return"):
            e = self.expr()
            self.expect(";")
            return SReturn(e, p)
        if self.accept("assert"):
            self.expect("(")
            c = self.cond()
            self.expect(")")
            self.expect(";")
            return SAssert(c, p)
        if self.accept("if"):
            self.expect("(")
            c = self.cond()
            self.expect(")")
            then = self.block()
            orelse: tuple[Stmt, ...] = ()
            if self.accept("else"):
                orelse = self.block()
            return SIf(c, then, orelse, p)
        if self.accept("while"):
            self.expect("(")
            c = self.cond()
            self.expect(")")
            return SWhile(c, self.block(), p)
        target = self.expect("name").text
        self.expect("=")
        if self.accept("?"):
            self.expect(";")
            return SAssign(target, None, havoc=True, pos=p)
        if self.accept("create"):
            self.expect("(")
            t = self.expect("name").text
            self.expect(")")
            self.expect(";")
            return SAssign(target, None, create=t, pos=p)
        if self.accept("join"):
            self.expect("(")
            x = self.expect("name").text
            self.expect(")")
            self.expect(";")
            return SAssign(target, None, join=x, pos=p)
        e = self.expr()
        self.expect(";")
        return SAssign(target, e, pos=p)

    def cond(self) -> Cmp:
        left = self.expr()
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.accept(op):
                return Cmp(op, left, self.expr())
        raise self._error("expected comparison operator")

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.accept("+"):
                e = BinOp("+", e, self.term())
            elif self.accept("-"):
                e = BinOp("-", e, self.term())
            else:
                return e

    def term(self) -> Expr:
        if self.accept("-"):
            return BinOp("-", IntLit(0), self.term())
        if tok := self.accept("num"):
            value = IntLit(int(tok.text))
            if self.accept("*"):
                return BinOp("*", value, self.term())
            return value
        if tok := self.accept("name"):
            v: Expr = Var(tok.text)
            if self.accept("*"):
                return BinOp("*", v, self.term())
            return v
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise self._error(f"expected expression, found {self.cur.text!r}")


def parse_program(text: str, filename: str = "<input>") -> Program:
    """Parse and name-resolve a source file; raises ParseError on bad input."""
    prog = _Parser(text, filename).program()
    _resolve(prog)
    return prog


def _resolve(prog: Program) -> None:
    """Name checks that do not need the CFG (undeclared names, entry point)."""
    if prog.entry not in prog.threads:
        raise ParseError("no 'main' thread template", 1, 1, prog.filename)
    gset = set(prog.globals)
    mset = set(prog.mutexes)
    for m in prog.mutexes:
        if m.startswith("m_"):
            raise ParseError(
                f"mutex name {m!r} is reserved for implicit atomicity mutexes", 1, 1, prog.filename
            )
    if prog.protections:
        for g, ms in prog.protections.items():
            if g not in gset:
                raise ParseError(f"protect: unknown global {g!r}", 1, 1, prog.filename)
            for m in ms:
                if m not in mset:
                    raise ParseError(f"protect: unknown mutex {m!r}", 1, 1, prog.filename)

    def check_expr(e: Expr | Cmp, p: Pos, what: str, bare_global_ok: bool = False) -> None:
        # Guards and compound right-hand sides may contain only locals; a
        # bare global is fine where it denotes an atomic copy.
        if bare_global_ok and isinstance(e, Var):
            return
        bad = expr_vars(e) & gset
        if bad:
            raise ParseError(
                f"globals forbidden in {what}: {', '.join(sorted(bad))}", p.line, p.col, prog.filename
            )

    def check_block(stmts) -> None:
        for s in stmts:
            match s:
                case SLock(m, p) | SUnlock(m, p):
                    if m not in mset:
                        raise ParseError(f"undeclared mutex {m!r}", p.line, p.col, prog.filename)
                case SAssign(target, expr, _, create, _, p):
                    if create is not None and create not in prog.threads:
                        raise ParseError(
                            f"undeclared thread template {create!r}", p.line, p.col, prog.filename
                        )
                    if target in ("self", "ret"):
                        raise ParseError(f"{target!r} is reserved", p.line, p.col, prog.filename)
                    if expr is not None:
                        check_expr(expr, p, "expressions", bare_global_ok=True)
                case SReturn(expr, p):
                    check_expr(expr, p, "expressions", bare_global_ok=True)
                case SIf(cond, then, orelse, p):
                    check_expr(cond, p, "guards")
                    check_block(then)
                    check_block(orelse)
                case SWhile(cond, body, p):
                    check_expr(cond, p, "guards")
                    check_block(body)
                case SAssert():
                    pass  # assert conditions may mention globals (reads are hoisted)
                case _:
                    pass

    for body in prog.threads.values():
        check_block(body)
