"""Abstract syntax of the toy concurrent language."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional, Union

from ..errors import UnboundVariable
from ..pdnet import Expr, int_color


@dataclass(frozen=True)
class Var(Expr):
    """Reference to a global variable by name (evaluated against a name->int env)."""

    name: str

    def eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise UnboundVariable(self.name) from None

    def __str__(self):
        return self.name


def expr_vars(e: Expr) -> frozenset:
    """Names of the globals read by a program expression."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    out = frozenset()
    for f in fields(e):
        v = getattr(e, f.name)
        if isinstance(v, Expr):
            out |= expr_vars(v)
    return out


@dataclass(frozen=True)
class Global:
    name: str
    init: int
    lo: int = 0
    hi: int = 255

    @property
    def color(self):
        return int_color(self.lo, self.hi)


@dataclass
class Assign:
    var: str
    expr: Expr
    label: Optional[str] = None
    line: int = 0


@dataclass
class If:
    cond: Expr
    then: list
    orelse: list
    label: Optional[str] = None
    line: int = 0


@dataclass
class While:
    cond: Expr
    body: list
    label: Optional[str] = None
    line: int = 0


@dataclass
class Lock:
    mutex: str
    label: Optional[str] = None
    line: int = 0


@dataclass
class Unlock:
    mutex: str
    label: Optional[str] = None
    line: int = 0


@dataclass
class Wait:
    cond: str
    mutex: str
    label: Optional[str] = None
    line: int = 0


@dataclass
class Signal:
    cond: str
    label: Optional[str] = None
    line: int = 0


@dataclass
class Skip:
    label: Optional[str] = None
    line: int = 0


Stmt = Union[Assign, If, While, Lock, Unlock, Wait, Signal, Skip]


def stmt_text(s) -> str:
    """One-line rendering used in counterexamples and DOT labels."""
    if isinstance(s, Assign):
        return f"{s.var} = {s.expr}"
    if isinstance(s, If):
        return f"if ({s.cond})"
    if isinstance(s, While):
        return f"while ({s.cond})"
    if isinstance(s, Lock):
        return f"lock({s.mutex})"
    if isinstance(s, Unlock):
        return f"unlock({s.mutex})"
    if isinstance(s, Wait):
        return f"wait({s.cond}, {s.mutex})"
    if isinstance(s, Signal):
        return f"signal({s.cond})"
    return "skip"


@dataclass
class Thread:
    tid: int
    name: str
    body: list


@dataclass
class Program:
    globals: list = field(default_factory=list)
    mutexes: list = field(default_factory=list)
    conds: list = field(default_factory=list)
    threads: list = field(default_factory=list)
    ltl: Optional[str] = None

    def global_(self, name) -> Global:
        for g in self.globals:
            if g.name == name:
                return g
        raise KeyError(name)

    def thread(self, name_or_id) -> Thread:
        for t in self.threads:
            if t.name == name_or_id or t.tid == name_or_id:
                return t
        raise KeyError(name_or_id)

    @property
    def global_names(self):
        return [g.name for g in self.globals]
