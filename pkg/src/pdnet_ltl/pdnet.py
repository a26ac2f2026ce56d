"""Colored Petri net model for program dependence nets and their products.

Every place holds at most one token.  Variable places always hold a valued
token; control, execution and scheduler places hold a black token when
marked.  A condition variable is a single place whose token is a
``ThreadMultiset`` of signed thread ids (negative ids are notified waiters).
"""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass, fields, replace
from typing import Any, Iterable, Iterator, Optional

from .errors import InternalInvariantViolation, NotEnabled, RangeOverflow, UnboundVariable


# ---------------------------------------------------------------------------
# token values


class _Black:
    __slots__ = ()

    def __repr__(self):
        return "•"

    def __reduce__(self):
        return (_black, ())


def _black():
    return BLACK


BLACK = object.__new__(_Black)


class ThreadMultiset:
    """Immutable bag of signed, non-zero thread ids."""

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Iterable[int] = ()):
        items = tuple(sorted(items))
        if 0 in items:
            raise ValueError("thread multiset cannot contain 0")
        self._items = items
        self._hash = hash(("TMS", items))

    @property
    def items(self):
        return self._items

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __contains__(self, i):
        return i in self._items

    def __eq__(self, other):
        return isinstance(other, ThreadMultiset) and other._items == self._items

    def __lt__(self, other):
        return self._items < other._items

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "{" + ",".join(str(i) for i in self._items) + "}"

    def add(self, i: int) -> "ThreadMultiset":
        return ThreadMultiset(self._items + (i,))

    def remove(self, i: int) -> "ThreadMultiset":
        items = list(self._items)
        items.remove(i)
        return ThreadMultiset(items)

    def positives(self):
        return tuple(i for i in self._items if i > 0)


def value_sort_key(v):
    """Total order over heterogeneous token values (for canonical keys)."""
    if v is BLACK:
        return (0, 0)
    if isinstance(v, bool):
        return (1, int(v))
    if isinstance(v, int):
        return (2, v)
    if isinstance(v, ThreadMultiset):
        return (3, v.items)
    return (4, repr(v))


# ---------------------------------------------------------------------------
# color sets


@dataclass(frozen=True)
class ColorSet:
    kind: str  # black | bool | int | thread | tmset
    lo: int = 0
    hi: int = 0

    def contains(self, v) -> bool:
        if self.kind == "black":
            return v is BLACK
        if self.kind == "bool":
            return isinstance(v, bool)
        if self.kind == "int":
            return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi
        if self.kind == "thread":
            return isinstance(v, int) and v != 0
        if self.kind == "tmset":
            return isinstance(v, ThreadMultiset)
        return False

    def __str__(self):
        if self.kind == "int":
            return f"int[{self.lo}..{self.hi}]"
        return self.kind


BLACK_COLOR = ColorSet("black")
BOOL_COLOR = ColorSet("bool")
THREAD_COLOR = ColorSet("thread")
TMSET_COLOR = ColorSet("tmset")


def int_color(lo: int = 0, hi: int = 255) -> ColorSet:
    return ColorSet("int", lo, hi)


# ---------------------------------------------------------------------------
# expressions


class Expr:
    """Base class of guard and arc expressions.  ``env`` maps place id -> token."""

    def eval(self, env: Mapping[int, Any]):
        raise NotImplementedError

    def places(self) -> frozenset:
        return frozenset()


@dataclass(frozen=True)
class Const(Expr):
    value: Any

    def eval(self, env):
        return self.value

    def __str__(self):
        if isinstance(self.value, bool):
            return "true" if self.value else "false"
        return repr(self.value)


@dataclass(frozen=True)
class Tok(Expr):
    """Value of the token read from ``place`` through an input arc."""

    place: int
    name: str = ""

    def eval(self, env):
        try:
            return env[self.place]
        except KeyError:
            raise UnboundVariable(f"place {self.name or self.place} is not bound") from None

    def places(self):
        return frozenset((self.place,))

    def __str__(self):
        return self.name or f"p{self.place}"


def _div(a, b):
    if b == 0:
        raise RangeOverflow("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _mod(a, b):
    if b == 0:
        raise RangeOverflow("modulo by zero")
    return a - b * _div(a, b)


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "%": _mod,
}

_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}

CMP_NEGATION = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, env):
        return _ARITH[self.op](self.left.eval(env), self.right.eval(env))

    def places(self):
        return self.left.places() | self.right.places()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def eval(self, env):
        return -self.arg.eval(env)

    def places(self):
        return self.arg.places()

    def __str__(self):
        return f"-{self.arg}"


@dataclass(frozen=True)
class Cmp(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, env):
        return _CMP[self.op](self.left.eval(env), self.right.eval(env))

    def places(self):
        return self.left.places() | self.right.places()

    def __str__(self):
        return f"{self.left}{self.op}{self.right}"


@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr

    def eval(self, env):
        return bool(self.left.eval(env)) and bool(self.right.eval(env))

    def places(self):
        return self.left.places() | self.right.places()

    def __str__(self):
        return f"({self.left} && {self.right})"


@dataclass(frozen=True)
class Or(Expr):
    left: Expr
    right: Expr

    def eval(self, env):
        return bool(self.left.eval(env)) or bool(self.right.eval(env))

    def places(self):
        return self.left.places() | self.right.places()

    def __str__(self):
        return f"({self.left} || {self.right})"


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr

    def eval(self, env):
        return not self.arg.eval(env)

    def places(self):
        return self.arg.places()

    def __str__(self):
        return f"!{self.arg}"


# multiset helpers used by wait/signal transitions


@dataclass(frozen=True)
class MsAdd(Expr):
    ms: Expr
    item: int

    def eval(self, env):
        return self.ms.eval(env).add(self.item)

    def places(self):
        return self.ms.places()

    def __str__(self):
        return f"{self.ms}+{{{self.item}}}"


@dataclass(frozen=True)
class MsRemove(Expr):
    ms: Expr
    item: int

    def eval(self, env):
        return self.ms.eval(env).remove(self.item)

    def places(self):
        return self.ms.places()

    def __str__(self):
        return f"{self.ms}-{{{self.item}}}"


@dataclass(frozen=True)
class MsNotify(Expr):
    """Replace waiter ``item`` by its notified form ``-item``."""

    ms: Expr
    item: int

    def eval(self, env):
        return self.ms.eval(env).remove(self.item).add(-self.item)

    def places(self):
        return self.ms.places()

    def __str__(self):
        return f"{self.ms}[{self.item}->-{self.item}]"


@dataclass(frozen=True)
class MsContains(Expr):
    ms: Expr
    item: int

    def eval(self, env):
        return self.item in self.ms.eval(env)

    def places(self):
        return self.ms.places()

    def __str__(self):
        return f"{self.item} in {self.ms}"


@dataclass(frozen=True)
class MsNoPositive(Expr):
    ms: Expr

    def eval(self, env):
        return not self.ms.eval(env).positives()

    def places(self):
        return self.ms.places()

    def __str__(self):
        return f"nowaiter({self.ms})"


def map_expr(e: Expr, leaf) -> Expr:
    """Rebuild ``e`` bottom-up, replacing every node ``n`` for which
    ``leaf(n)`` returns something other than None."""
    r = leaf(e)
    if r is not None:
        return r
    changes = {}
    for f in fields(e):
        v = getattr(e, f.name)
        if isinstance(v, Expr):
            changes[f.name] = map_expr(v, leaf)
    return replace(e, **changes) if changes else e


def conj(*exprs: Optional[Expr]) -> Optional[Expr]:
    out = None
    for e in exprs:
        if e is None:
            continue
        out = e if out is None else And(out, e)
    return out


# ---------------------------------------------------------------------------
# net structure


class PlaceKind(enum.Enum):
    Control = "Control"
    Variable = "Variable"
    Execution = "Execution"
    Buchi = "Buchi"
    Scheduler = "Scheduler"


class TransitionKind(enum.Enum):
    Assign = "Assign"
    BranchTrue = "BranchTrue"
    BranchFalse = "BranchFalse"
    Lock = "Lock"
    Unlock = "Unlock"
    Wait1 = "Wait1"
    Wait2 = "Wait2"
    Wait3 = "Wait3"
    Signal = "Signal"
    Jump = "Jump"
    Exit = "Exit"
    Buchi = "Buchi"
    Tf = "Tf"


PROGRAM_KINDS = frozenset(k for k in TransitionKind if k not in (TransitionKind.Buchi, TransitionKind.Tf))


class ArcKind(enum.Enum):
    ControlArc = "ControlArc"
    ReadWriteArc = "ReadWriteArc"
    ExecutionArc = "ExecutionArc"
    ObservationArc = "ObservationArc"
    SchedulerArc = "SchedulerArc"


@dataclass(frozen=True)
class Place:
    id: int
    name: str
    kind: PlaceKind
    color: ColorSet = BLACK_COLOR
    init: Any = None  # constant token, or None when initially unmarked
    acceptable: bool = False


@dataclass(frozen=True)
class Transition:
    id: int
    name: str
    kind: TransitionKind
    guard: Optional[Expr] = None
    thread: Optional[int] = None
    info: tuple = ()  # free-form (key, value) pairs, e.g. source statement


@dataclass(frozen=True)
class Arc:
    """A place/transition arc; ``to_transition`` tells the direction."""

    place: int
    transition: int
    to_transition: bool
    kind: ArcKind
    expr: Expr

    @property
    def source(self):
        return ("P", self.place) if self.to_transition else ("T", self.transition)

    @property
    def target(self):
        return ("T", self.transition) if self.to_transition else ("P", self.place)


class Marking(Mapping):
    """Immutable map place id -> token; unmarked places are absent."""

    __slots__ = ("_d", "_key", "_hash")

    def __init__(self, data=()):
        self._d = dict(data)
        self._key = None
        self._hash = None

    def __getitem__(self, p):
        return self._d[p]

    def __iter__(self) -> Iterator[int]:
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def key(self):
        if self._key is None:
            self._key = tuple(sorted(self._d.items()))
        return self._key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Marking):
            return self._d == other._d
        if isinstance(other, Mapping):
            return self._d == dict(other)
        return NotImplemented

    def __repr__(self):
        return f"Marking({self._d!r})"

    def to_dict(self):
        return dict(self._d)


class PDNet:
    """Append-only builder, frozen in practice once construction finishes."""

    def __init__(self, name: str = "net"):
        self.name = name
        self.places: list[Place] = []
        self.transitions: list[Transition] = []
        self.arcs: list[Arc] = []
        self.pre: list[dict[int, Arc]] = []  # transition -> place -> input arc
        self.post: list[dict[int, Arc]] = []  # transition -> place -> output arc
        self.consumers: list[list[int]] = []  # place -> transitions with an input arc
        self.producers: list[list[int]] = []  # place -> transitions with an output arc
        self.i_transitions: set[int] = set()
        self.tf: Optional[int] = None
        self._place_by_name: dict[str, int] = {}
        self._trans_by_name: dict[str, int] = {}

    # -- construction -------------------------------------------------------

    def add_place(self, name, kind, color=BLACK_COLOR, init=None, acceptable=False) -> int:
        if name in self._place_by_name:
            raise ValueError(f"duplicate place {name}")
        if kind in (PlaceKind.Control, PlaceKind.Execution, PlaceKind.Scheduler) and color != BLACK_COLOR:
            raise ValueError(f"{kind.value} places carry black tokens")
        if acceptable and kind is not PlaceKind.Buchi:
            raise ValueError("only Büchi places can be acceptable")
        if init is not None and not color.contains(init):
            raise RangeOverflow(f"initial token {init!r} outside {color} for {name}")
        pid = len(self.places)
        self.places.append(Place(pid, name, kind, color, init, acceptable))
        self.consumers.append([])
        self.producers.append([])
        self._place_by_name[name] = pid
        return pid

    def add_transition(self, name, kind, guard=None, thread=None, info=()) -> int:
        if name in self._trans_by_name:
            raise ValueError(f"duplicate transition {name}")
        if kind in PROGRAM_KINDS and thread is None:
            raise ValueError("program transitions belong to a thread")
        if kind in (TransitionKind.Buchi, TransitionKind.Tf) and thread is not None:
            raise ValueError("Büchi transitions have no thread")
        tid = len(self.transitions)
        self.transitions.append(Transition(tid, name, kind, guard, thread, tuple(info)))
        self.pre.append({})
        self.post.append({})
        self._trans_by_name[name] = tid
        return tid

    def add_input(self, p: int, t: int, kind: ArcKind):
        if p in self.pre[t]:
            return self.pre[t][p]
        arc = Arc(p, t, True, kind, Tok(p, self.places[p].name))
        self.arcs.append(arc)
        self.pre[t][p] = arc
        self.consumers[p].append(t)
        return arc

    def add_output(self, t: int, p: int, kind: ArcKind, expr: Optional[Expr] = None):
        if p in self.post[t]:
            raise ValueError(f"duplicate output arc {self.transitions[t].name}->{self.places[p].name}")
        if expr is None:
            expr = Const(BLACK) if self.places[p].color == BLACK_COLOR else Tok(p, self.places[p].name)
        arc = Arc(p, t, False, kind, expr)
        self.arcs.append(arc)
        self.post[t][p] = arc
        self.producers[p].append(t)
        return arc

    def add_read(self, p: int, t: int, kind: ArcKind):
        """Bidirectional arc pair with E(p,t)=E(t,p)."""
        self.add_input(p, t, kind)
        self.add_output(t, p, kind, Tok(p, self.places[p].name))

    def set_guard(self, t: int, guard: Optional[Expr]):
        old = self.transitions[t]
        self.transitions[t] = Transition(old.id, old.name, old.kind, guard, old.thread, old.info)

    # -- queries --------------------------------------------------------------

    def place(self, name: str) -> int:
        return self._place_by_name[name]

    def transition(self, name: str) -> int:
        return self._trans_by_name[name]

    def has_place(self, name: str) -> bool:
        return name in self._place_by_name

    def has_transition(self, name: str) -> bool:
        return name in self._trans_by_name

    @property
    def acceptable_places(self) -> frozenset:
        return frozenset(p.id for p in self.places if p.acceptable)

    @property
    def initial_marking(self) -> Marking:
        return Marking((p.id, p.init) for p in self.places if p.init is not None)

    def preset(self, t: int):
        return self.pre[t].keys()

    def postset(self, t: int):
        return self.post[t].keys()

    def is_read_arc(self, p: int, t: int) -> bool:
        """True iff p is both input and output of t with E(p,t)=E(t,p)."""
        out = self.post[t].get(p)
        return p in self.pre[t] and out is not None and out.expr == Tok(p, self.places[p].name)

    def thread_of(self, t: int) -> Optional[int]:
        return self.transitions[t].thread

    def program_transitions(self):
        return [t.id for t in self.transitions if t.kind in PROGRAM_KINDS]

    # -- firing semantics ---------------------------------------------------

    def binding(self, t: int, M: Mapping[int, Any]):
        """Tokens read by t under M, or None if some input place is empty."""
        env = {}
        for p in self.pre[t]:
            if p not in M:
                return None
            env[p] = M[p]
        return env

    def guard_holds(self, t: int, env) -> bool:
        g = self.transitions[t].guard
        return True if g is None else bool(g.eval(env))

    def is_enabled(self, t: int, M: Mapping[int, Any]) -> bool:
        env = self.binding(t, M)
        return env is not None and self.guard_holds(t, env)

    def produce(self, t: int, env) -> dict:
        """Output tokens of t for the given binding, range-checked."""
        out = {}
        for p, arc in self.post[t].items():
            v = arc.expr.eval(env)
            place = self.places[p]
            if not place.color.contains(v):
                raise RangeOverflow(
                    f"{self.transitions[t].name} writes {v!r} to {place.name}, outside {place.color}"
                )
            out[p] = v
        return out

    def fire(self, t: int, M: Mapping[int, Any]) -> Marking:
        env = self.binding(t, M)
        if env is None or not self.guard_holds(t, env):
            raise NotEnabled(self.transitions[t].name)
        out = self.produce(t, env)
        new = dict(M)
        for p in env:
            del new[p]
        for p, v in out.items():
            if p in new:
                raise InternalInvariantViolation(f"place {self.places[p].name} would hold two tokens")
            new[p] = v
        return Marking(new)

    def enabled_set(self, M: Mapping[int, Any], candidates: Optional[Iterable[int]] = None) -> set:
        ts = range(len(self.transitions)) if candidates is None else candidates
        return {t for t in ts if self.is_enabled(t, M)}

    def affected_by(self, t: int) -> set:
        """Transitions whose enabling may change when t fires."""
        out = set()
        for p in set(self.pre[t]) | set(self.post[t]):
            out.update(self.consumers[p])
        return out

    def update_enabled(self, enabled: set, t: int, M_after: Mapping[int, Any]) -> set:
        touched = self.affected_by(t)
        new = {u for u in enabled if u not in touched}
        new.update(u for u in touched if self.is_enabled(u, M_after))
        return new

    # -- misc ---------------------------------------------------------------

    def describe(self, M: Mapping[int, Any]) -> str:
        parts = []
        for p in sorted(M):
            v = M[p]
            parts.append(self.places[p].name if v is BLACK else f"{self.places[p].name}={v!r}")
        return "{" + ", ".join(parts) + "}"

    def stats(self):
        return {"places": len(self.places), "transitions": len(self.transitions), "arcs": len(self.arcs)}


def eval_expr(e: Expr, M: Mapping[int, Any], binding: Optional[Mapping[int, Any]] = None,
              color: Optional[ColorSet] = None):
    """Evaluate ``e`` reading tokens from ``binding`` first, then ``M``.

    When ``color`` is given the result must lie in it (RangeOverflow otherwise).
    """
    env = dict(M)
    if binding:
        env.update(binding)
    v = e.eval(env)
    if color is not None and not color.contains(v):
        raise RangeOverflow(f"{e} = {v!r} outside {color}")
    return v
