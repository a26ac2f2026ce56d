"""Recursive-descent parser for ``*.cpl`` program files.

Grammar (statements end with ``;``, blocks are braced)::

    program  := decl* thread+ ("ltl" STRING ";"?)?
    decl     := "int" ID "=" INT ("range" INT ".." INT)? ";"
              | "mutex" ID ";" | "cond" ID ";"
    thread   := "thread" ID "{" stmt* "}"
    stmt     := (ID ":")? ( ID "=" expr ";" | "skip" ";"
              | "if" "(" expr ")" block ("else" block)?
              | "while" "(" expr ")" block
              | "lock" "(" ID ")" ";" | "unlock" "(" ID ")" ";"
              | "wait" "(" ID "," ID ")" ";" | "signal" "(" ID ")" ";" )
"""

from __future__ import annotations

from ..errors import DuplicateName, ParseError, RangeError, UndeclaredIdentifier
from ..lexer import TokenStream
from ..pdnet import And, BinOp, Cmp, Const, Neg, Not, Or
from .ast import Assign, Global, If, Lock, Program, Signal, Skip, Thread, Unlock, Var, Wait, While

KEYWORDS = {
    "int", "range", "mutex", "cond", "thread", "if", "else", "while", "lock", "unlock",
    "wait", "signal", "skip", "true", "false", "ltl",
}
DEFAULT_RANGE = (0, 255)


def parse_program(text: str) -> Program:
    return _ProgramParser(text).program()


parse = parse_program


class _ProgramParser:
    def __init__(self, text):
        self.ts = TokenStream(text)
        self.prog = Program()
        self.names: dict[str, str] = {}  # name -> category

    # -- helpers ------------------------------------------------------------

    def _declare(self, tok, category):
        if tok.text in KEYWORDS:
            raise ParseError(f"keyword {tok.text!r} used as a name", tok.line, tok.col)
        if tok.text in self.names:
            raise DuplicateName(f"{tok.text!r} already declared as {self.names[tok.text]} (line {tok.line})")
        self.names[tok.text] = category

    def _ident(self, what="identifier"):
        tok = self.ts.expect_kind("id", what)
        if tok.text in KEYWORDS:
            raise ParseError(f"expected {what}, found keyword {tok.text!r}", tok.line, tok.col)
        return tok

    def _use(self, tok, category):
        cat = self.names.get(tok.text)
        if cat is None:
            raise UndeclaredIdentifier(f"{tok.text!r} is not declared (line {tok.line}, column {tok.col})")
        if cat != category:
            raise UndeclaredIdentifier(f"{tok.text!r} is a {cat}, expected a {category} (line {tok.line})")

    def _int_literal(self):
        neg = False
        if self.ts.at("-"):
            self.ts.advance()
            neg = True
        tok = self.ts.expect_kind("int", "integer literal")
        return -int(tok.text) if neg else int(tok.text)

    # -- top level ------------------------------------------------------------

    def program(self) -> Program:
        ts = self.ts
        while ts.at("int", "mutex", "cond"):
            self.decl()
        while ts.at("thread"):
            self.thread()
        if not self.prog.threads:
            raise ts.error("expected 'thread'")
        if ts.at("ltl"):
            ts.advance()
            tok = ts.expect_kind("string", "quoted formula")
            self.prog.ltl = tok.text[1:-1]
            if ts.at(";"):
                ts.advance()
        if ts.cur.kind != "eof":
            raise ts.error("expected end of input")
        return self.prog

    def decl(self):
        ts = self.ts
        kw = ts.advance().text
        tok = self._ident("name")
        self._declare(tok, {"int": "global", "mutex": "mutex", "cond": "cond"}[kw])
        if kw == "int":
            ts.expect("=")
            init = self._int_literal()
            lo, hi = DEFAULT_RANGE
            if ts.at("range"):
                ts.advance()
                lo = self._int_literal()
                ts.expect("..")
                hi = self._int_literal()
            if lo > hi:
                raise RangeError(f"empty range {lo}..{hi} for {tok.text}")
            if not lo <= init <= hi:
                raise RangeError(f"initial value {init} of {tok.text} outside {lo}..{hi}")
            self.prog.globals.append(Global(tok.text, init, lo, hi))
        elif kw == "mutex":
            self.prog.mutexes.append(tok.text)
        else:
            self.prog.conds.append(tok.text)
        ts.expect(";")

    def thread(self):
        ts = self.ts
        ts.expect("thread")
        tok = self._ident("thread name")
        self._declare(tok, "thread")
        self.labels: set[str] = set()
        body = self.block()
        if not body:
            body = [Skip(line=tok.line)]
        self.prog.threads.append(Thread(len(self.prog.threads) + 1, tok.text, body))

    def block(self):
        ts = self.ts
        ts.expect("{")
        out = []
        while not ts.at("}"):
            if ts.cur.kind == "eof":
                raise ts.error("expected '}'")
            out.append(self.stmt())
        ts.advance()
        return out

    # -- statements -------------------------------------------------------------

    def stmt(self):
        ts = self.ts
        label = None
        if ts.cur.kind == "id" and ts.peek().text == ":" and ts.cur.text not in KEYWORDS:
            ltok = ts.advance()
            ts.advance()
            if ltok.text in self.labels:
                raise DuplicateName(f"label {ltok.text!r} repeated in thread (line {ltok.line})")
            self.labels.add(ltok.text)
            label = ltok.text
        line = ts.cur.line
        if ts.at("skip"):
            ts.advance()
            ts.expect(";")
            return Skip(label, line)
        if ts.at("if"):
            ts.advance()
            cond = self.condition()
            then = self.block()
            orelse = []
            if ts.at("else"):
                ts.advance()
                orelse = self.block() if ts.at("{") else [self.stmt()]
            return If(cond, then or [Skip(line=line)], orelse or [Skip(line=line)], label, line)
        if ts.at("while"):
            ts.advance()
            cond = self.condition()
            body = self.block()
            return While(cond, body or [Skip(line=line)], label, line)
        if ts.at("lock", "unlock", "signal"):
            kw = ts.advance().text
            ts.expect("(")
            tok = self._ident()
            self._use(tok, "cond" if kw == "signal" else "mutex")
            ts.expect(")")
            ts.expect(";")
            cls = {"lock": Lock, "unlock": Unlock, "signal": Signal}[kw]
            return cls(tok.text, label, line)
        if ts.at("wait"):
            ts.advance()
            ts.expect("(")
            c = self._ident("condition variable")
            self._use(c, "cond")
            ts.expect(",")
            m = self._ident("mutex")
            self._use(m, "mutex")
            ts.expect(")")
            ts.expect(";")
            return Wait(c.text, m.text, label, line)
        tok = self._ident("statement")
        self._use(tok, "global")
        ts.expect("=")
        e, ty = self.expr()
        if ty != "int":
            raise ParseError(f"assignment to {tok.text} needs an integer expression", tok.line, tok.col)
        ts.expect(";")
        return Assign(tok.text, e, label, line)

    def condition(self):
        self.ts.expect("(")
        start = self.ts.cur
        e, ty = self.expr()
        if ty != "bool":
            raise ParseError("condition must be boolean", start.line, start.col)
        self.ts.expect(")")
        return e

    # -- expressions (return (expr, type)) ----------------------------------------

    def expr(self):
        return self._or()

    def _check(self, ty, want, tok):
        if ty != want:
            raise ParseError(f"expected {want} operand", tok.line, tok.col)

    def _or(self):
        left, ty = self._and()
        while self.ts.at("||"):
            tok = self.ts.advance()
            right, rty = self._and()
            self._check(ty, "bool", tok)
            self._check(rty, "bool", tok)
            left = Or(left, right)
        return left, ty

    def _and(self):
        left, ty = self._not()
        while self.ts.at("&&"):
            tok = self.ts.advance()
            right, rty = self._not()
            self._check(ty, "bool", tok)
            self._check(rty, "bool", tok)
            left = And(left, right)
        return left, ty

    def _not(self):
        if self.ts.at("!"):
            tok = self.ts.advance()
            e, ty = self._not()
            self._check(ty, "bool", tok)
            return Not(e), "bool"
        return self._cmp()

    def _cmp(self):
        left, ty = self._arith()
        if self.ts.at("==", "=", "!=", "<", "<=", ">", ">="):
            tok = self.ts.advance()
            right, rty = self._arith()
            self._check(ty, "int", tok)
            self._check(rty, "int", tok)
            op = "=" if tok.text == "==" else tok.text
            return Cmp(op, left, right), "bool"
        return left, ty

    def _arith(self):
        left, ty = self._term()
        while self.ts.at("+", "-"):
            tok = self.ts.advance()
            right, rty = self._term()
            self._check(ty, "int", tok)
            self._check(rty, "int", tok)
            left = BinOp(tok.text, left, right)
        return left, ty

    def _term(self):
        left, ty = self._unary()
        while self.ts.at("*", "/", "%"):
            tok = self.ts.advance()
            right, rty = self._unary()
            self._check(ty, "int", tok)
            self._check(rty, "int", tok)
            left = BinOp(tok.text, left, right)
        return left, ty

    def _unary(self):
        if self.ts.at("-"):
            tok = self.ts.advance()
            e, ty = self._unary()
            self._check(ty, "int", tok)
            if isinstance(e, Const):
                return Const(-e.value), "int"
            return Neg(e), "int"
        return self._atom()

    def _atom(self):
        ts = self.ts
        tok = ts.cur
        if tok.kind == "int":
            ts.advance()
            return Const(int(tok.text)), "int"
        if ts.at("true", "false"):
            ts.advance()
            return Const(tok.text == "true"), "bool"
        if ts.at("("):
            ts.advance()
            r = self.expr()
            ts.expect(")")
            return r
        if tok.kind == "id" and tok.text not in KEYWORDS:
            ts.advance()
            self._use(tok, "global")
            return Var(tok.text), "int"
        raise ts.error("expected expression")
