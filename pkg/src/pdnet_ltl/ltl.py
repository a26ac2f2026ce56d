"""LTL without next: syntax, semantics on lassos, and translation to Büchi automata.

Atoms are stored in a canonical positive form (``=``, ``<``, ``<=``); the
parser turns ``x != c``, ``x >= c`` and ``x > c`` into negated atoms, so a
valuation only ever has to assign the canonical ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Optional

from .errors import ParseError, UnsupportedOperator
from .lexer import TokenStream
from .pdnet import BLACK, ArcKind, Expr, PDNet, PlaceKind, TransitionKind

# ---------------------------------------------------------------------------
# formulas


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class TrueF(Formula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class FalseF(Formula):
    def __str__(self):
        return "false"


TRUE = TrueF()
FALSE = FalseF()

_NEG_OP = {"!=": "=", ">=": "<", ">": "<="}
_SHOW_NEG = {"=": "!=", "<": ">=", "<=": ">"}
_FLIP = {"=": "=", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


@dataclass(frozen=True, order=True)
class Atom(Formula):
    """``var op value`` with op in {=, <, <=}."""

    var: str
    op: str
    value: int

    def holds(self, x: int) -> bool:
        if self.op == "=":
            return x == self.value
        if self.op == "<":
            return x < self.value
        return x <= self.value

    def __str__(self):
        return f"{self.var}{self.op}{self.value}"


@dataclass(frozen=True, order=True)
class Fireable(Formula):
    """True while ``thread`` sits at the location of statement ``label``."""

    thread: str
    label: str

    def __str__(self):
        return f"fireable({self.thread}.{self.label})"


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def __str__(self):
        a = self.arg
        if isinstance(a, Atom):
            return f"{a.var}{_SHOW_NEG[a.op]}{a.value}"
        return f"!{_paren(a)}"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_paren(self.left)} && {_paren(self.right)}"


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_paren(self.left)} || {_paren(self.right)}"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_paren(self.left)} -> {_paren(self.right)}"


@dataclass(frozen=True)
class Equiv(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_paren(self.left)} <-> {_paren(self.right)}"


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_paren(self.left)} U {_paren(self.right)}"


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{_paren(self.left)} R {_paren(self.right)}"


@dataclass(frozen=True)
class Globally(Formula):
    arg: Formula

    def __str__(self):
        return f"G {_paren(self.arg)}"


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula

    def __str__(self):
        return f"F {_paren(self.arg)}"


def _paren(f):
    if isinstance(f, (TrueF, FalseF, Atom, Fireable, Not, Globally, Eventually)):
        return str(f)
    return f"({f})"


LITERALS = (Atom, Fireable)


def atoms_of(f: Formula) -> frozenset:
    if isinstance(f, LITERALS):
        return frozenset((f,))
    if isinstance(f, (TrueF, FalseF)):
        return frozenset()
    if isinstance(f, (Not, Globally, Eventually)):
        return atoms_of(f.arg)
    return atoms_of(f.left) | atoms_of(f.right)


def subformulas(f: Formula) -> list:
    """Children-first list of distinct subformulas."""
    out, seen = [], set()

    def go(g):
        if g in seen:
            return
        if isinstance(g, (Not, Globally, Eventually)):
            go(g.arg)
        elif isinstance(g, (And, Or, Implies, Equiv, Until, Release)):
            go(g.left)
            go(g.right)
        seen.add(g)
        out.append(g)

    go(f)
    return out


def is_propositional(f: Formula) -> bool:
    return not any(isinstance(g, (Until, Release, Globally, Eventually)) for g in subformulas(f))


# ---------------------------------------------------------------------------
# parsing

_TEMPORAL_UNARY = {"G", "F", "X"}
_TEMPORAL_BINARY = {"U", "R", "W"}
_ROPS = ("=", "==", "!=", "<", "<=", ">", ">=")


def make_atom(var: str, op: str, value: int) -> Formula:
    if op == "==":
        op = "="
    if op in _NEG_OP:
        return Not(Atom(var, _NEG_OP[op], value))
    return Atom(var, op, value)


def parse_formula(text: str) -> Formula:
    p = _FormulaParser(text)
    f = p.equiv()
    if p.ts.cur.kind != "eof":
        raise p.ts.error("expected end of formula")
    return f


class _FormulaParser:
    def __init__(self, text):
        self.ts = TokenStream(text)

    def equiv(self):
        left = self.implies()
        if self.ts.at("<->"):
            self.ts.advance()
            return Equiv(left, self.equiv())
        return left

    def implies(self):
        left = self.disj()
        if self.ts.at("->"):
            self.ts.advance()
            return Implies(left, self.implies())
        return left

    def disj(self):
        left = self.conj()
        while self.ts.at("||", "|"):
            self.ts.advance()
            left = Or(left, self.conj())
        return left

    def conj(self):
        left = self.binary_temporal()
        while self.ts.at("&&", "&"):
            self.ts.advance()
            left = And(left, self.binary_temporal())
        return left

    def binary_temporal(self):
        left = self.unary()
        tok = self.ts.cur
        if tok.kind == "id" and tok.text in _TEMPORAL_BINARY:
            self.ts.advance()
            if tok.text == "W":
                raise UnsupportedOperator(f"weak until at line {tok.line}, column {tok.col}")
            right = self.binary_temporal()
            return Until(left, right) if tok.text == "U" else Release(left, right)
        return left

    def unary(self):
        ts = self.ts
        tok = ts.cur
        if ts.at("!", "~"):
            ts.advance()
            return Not(self.unary())
        if tok.kind == "id" and tok.text in _TEMPORAL_UNARY and ts.peek().text not in _ROPS:
            ts.advance()
            if tok.text == "X":
                raise UnsupportedOperator(
                    f"next operator X is not allowed (line {tok.line}, column {tok.col})"
                )
            arg = self.unary()
            return Globally(arg) if tok.text == "G" else Eventually(arg)
        return self.primary()

    def primary(self):
        ts = self.ts
        tok = ts.cur
        if ts.at("("):
            ts.advance()
            f = self.equiv()
            ts.expect(")")
            return f
        if ts.at("true"):
            ts.advance()
            return TRUE
        if ts.at("false"):
            ts.advance()
            return FALSE
        if tok.kind == "id" and tok.text == "fireable" and ts.peek().text == "(":
            ts.advance()
            ts.advance()
            th = ts.expect_kind("id", "thread name").text
            ts.expect(".")
            lab = ts.expect_kind("id", "statement label").text
            ts.expect(")")
            return Fireable(th, lab)
        if tok.kind == "id":
            ts.advance()
            if not ts.at(*_ROPS):
                raise ts.error("expected comparison operator")
            op = ts.advance().text
            return make_atom(tok.text, op, self._int())
        if tok.kind == "int" or ts.at("-"):
            c = self._int()
            if not ts.at(*_ROPS):
                raise ts.error("expected comparison operator")
            op = ts.advance().text
            var = ts.expect_kind("id", "variable").text
            return make_atom(var, _FLIP["=" if op == "==" else op], c)
        raise ts.error("expected atom")

    def _int(self):
        neg = False
        if self.ts.at("-"):
            self.ts.advance()
            neg = True
        v = int(self.ts.expect_kind("int", "integer").text)
        return -v if neg else v


# ---------------------------------------------------------------------------
# normal forms


def desugar(f: Formula) -> Formula:
    """Remove -> and <->."""
    if isinstance(f, Implies):
        return Or(Not(desugar(f.left)), desugar(f.right))
    if isinstance(f, Equiv):
        a, b = desugar(f.left), desugar(f.right)
        return Or(And(a, b), And(Not(a), Not(b)))
    if isinstance(f, (Not, Globally, Eventually)):
        return type(f)(desugar(f.arg))
    if isinstance(f, (And, Or, Until, Release)):
        return type(f)(desugar(f.left), desugar(f.right))
    return f


def nnf(f: Formula) -> Formula:
    """Negation normal form: negations only directly above atoms."""
    return _nnf(desugar(f), False)


def _nnf(f, neg):
    if isinstance(f, TrueF):
        return FALSE if neg else TRUE
    if isinstance(f, FalseF):
        return TRUE if neg else FALSE
    if isinstance(f, LITERALS):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.arg, not neg)
    if isinstance(f, And):
        cls = Or if neg else And
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Or):
        cls = And if neg else Or
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Until):
        cls = Release if neg else Until
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Release):
        cls = Until if neg else Release
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Globally):
        return Eventually(_nnf(f.arg, True)) if neg else Globally(_nnf(f.arg, False))
    if isinstance(f, Eventually):
        return Globally(_nnf(f.arg, True)) if neg else Eventually(_nnf(f.arg, False))
    raise TypeError(f)


def negate_nnf(f: Formula) -> Formula:
    return nnf(Not(f))


# ---------------------------------------------------------------------------
# semantics

Letter = frozenset  # the set of atoms that are true


def _val(letter, a) -> bool:
    if isinstance(letter, (frozenset, set)):
        return a in letter
    return bool(letter.get(a, False))


def eval_prop(f: Formula, letter) -> bool:
    """Truth of a propositional formula under a letter (set or atom->bool map)."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, LITERALS):
        return _val(letter, f)
    if isinstance(f, Not):
        return not eval_prop(f.arg, letter)
    if isinstance(f, And):
        return eval_prop(f.left, letter) and eval_prop(f.right, letter)
    if isinstance(f, Or):
        return eval_prop(f.left, letter) or eval_prop(f.right, letter)
    if isinstance(f, Implies):
        return (not eval_prop(f.left, letter)) or eval_prop(f.right, letter)
    if isinstance(f, Equiv):
        return eval_prop(f.left, letter) == eval_prop(f.right, letter)
    raise ValueError(f"{f} is not propositional")


def lasso_sat(f: Formula, word, loop: int) -> dict:
    """Positions of ``word`` (looping back to ``loop``) satisfying each subformula."""
    n = len(word)
    if not 0 <= loop < n:
        raise ValueError("loop start outside word")
    nxt = [i + 1 if i + 1 < n else loop for i in range(n)]
    sat: dict = {}
    allpos = frozenset(range(n))
    for g in subformulas(f):
        if isinstance(g, TrueF):
            s = allpos
        elif isinstance(g, FalseF):
            s = frozenset()
        elif isinstance(g, LITERALS):
            s = frozenset(i for i in range(n) if _val(word[i], g))
        elif isinstance(g, Not):
            s = allpos - sat[g.arg]
        elif isinstance(g, And):
            s = sat[g.left] & sat[g.right]
        elif isinstance(g, Or):
            s = sat[g.left] | sat[g.right]
        elif isinstance(g, Implies):
            s = (allpos - sat[g.left]) | sat[g.right]
        elif isinstance(g, Equiv):
            s = frozenset(i for i in range(n) if (i in sat[g.left]) == (i in sat[g.right]))
        elif isinstance(g, (Until, Eventually)):
            a = sat[g.left] if isinstance(g, Until) else allpos
            b = sat[g.right] if isinstance(g, Until) else sat[g.arg]
            cur = set(b)
            changed = True
            while changed:
                changed = False
                for i in range(n):
                    if i not in cur and i in a and nxt[i] in cur:
                        cur.add(i)
                        changed = True
            s = frozenset(cur)
        elif isinstance(g, (Release, Globally)):
            a = sat[g.left] if isinstance(g, Release) else frozenset()
            b = sat[g.right] if isinstance(g, Release) else sat[g.arg]
            cur = set(b)
            changed = True
            while changed:
                changed = False
                for i in list(cur):
                    if i not in a and nxt[i] not in cur:
                        cur.discard(i)
                        changed = True
            s = frozenset(cur)
        else:
            raise TypeError(g)
        sat[g] = s
    return sat


def holds_on_lasso(f: Formula, stem, period) -> bool:
    """Direct semantics of ``f`` on the word stem·period^ω."""
    if not period:
        raise ValueError("period must be non-empty")
    word = list(stem) + list(period)
    return 0 in lasso_sat(f, word, len(stem))[f]


def _step_vector(subs, letter, nextvec: dict) -> dict:
    """Truth values at a stem position from its letter and the next position's values."""
    v: dict = {}
    for g in subs:
        if isinstance(g, TrueF):
            r = True
        elif isinstance(g, FalseF):
            r = False
        elif isinstance(g, LITERALS):
            r = _val(letter, g)
        elif isinstance(g, Not):
            r = not v[g.arg]
        elif isinstance(g, And):
            r = v[g.left] and v[g.right]
        elif isinstance(g, Or):
            r = v[g.left] or v[g.right]
        elif isinstance(g, Implies):
            r = (not v[g.left]) or v[g.right]
        elif isinstance(g, Equiv):
            r = v[g.left] == v[g.right]
        elif isinstance(g, Until):
            r = v[g.right] or (v[g.left] and nextvec[g])
        elif isinstance(g, Release):
            r = v[g.right] and (v[g.left] or nextvec[g])
        elif isinstance(g, Globally):
            r = v[g.arg] and nextvec[g]
        elif isinstance(g, Eventually):
            r = v[g.arg] or nextvec[g]
        else:
            raise TypeError(g)
        v[g] = r
    return v


def all_letters(atoms: Iterable) -> list:
    atoms = sorted(atoms, key=str)
    return [
        frozenset(a for a, bit in zip(atoms, bits) if bit)
        for bits in itertools.product((False, True), repeat=len(atoms))
    ]


# ---------------------------------------------------------------------------
# Büchi automata


@dataclass(frozen=True)
class BuchiAutomaton:
    """State-based Büchi automaton; labels are propositional formulas read on
    the current letter when the transition is taken."""

    n_states: int
    init: int
    trans: tuple  # (q, label, q')
    accepting: frozenset

    def __post_init__(self):
        if not 0 <= self.init < self.n_states:
            raise ValueError("initial state out of range")
        for q, _l, q2 in self.trans:
            if not (0 <= q < self.n_states and 0 <= q2 < self.n_states):
                raise ValueError("transition endpoint out of range")
        if not all(0 <= q < self.n_states for q in self.accepting):
            raise ValueError("accepting state out of range")

    @property
    def states(self):
        return range(self.n_states)

    def out(self, q):
        return [(l, q2) for q1, l, q2 in self.trans if q1 == q]

    def step(self, qs, letter) -> frozenset:
        return frozenset(q2 for q1, l, q2 in self.trans if q1 in qs and eval_prop(l, letter))

    def atoms(self) -> frozenset:
        out = frozenset()
        for _q, l, _q2 in self.trans:
            out |= atoms_of(l)
        return out

    def accepts_lasso(self, stem, period) -> bool:
        qs = frozenset((self.init,))
        for a in stem:
            qs = self.step(qs, a)
        return bool(qs & self._period_acceptors(tuple(period)))

    def _period_acceptors(self, period) -> frozenset:
        """States q from which period^ω is accepted (period read from its first letter)."""
        p = len(period)
        succ = {}
        for q in self.states:
            for i in range(p):
                succ[(q, i)] = [
                    (q2, (i + 1) % p) for q1, l, q2 in self.trans if q1 == q and eval_prop(l, period[i])
                ]
        good = _nodes_reaching_accepting_cycle(succ, lambda node: node[0] in self.accepting)
        return frozenset(q for q in self.states if (q, 0) in good)

    def to_text(self) -> str:
        lines = [f"states {self.n_states}", f"init {self.init}"]
        lines.append("accept " + ",".join(str(q) for q in sorted(self.accepting)))
        for q, l, q2 in self.trans:
            lines.append(f"trans {q} -> {q2} : {l}")
        return "\n".join(lines) + "\n"


def _nodes_reaching_accepting_cycle(succ: dict, accepting) -> set:
    """Nodes of a finite graph from which some accepting node on a cycle is reachable."""
    # accepting nodes that lie on a cycle: a reaches itself in >= 1 step
    on_cycle = set()
    for a in succ:
        if not accepting(a):
            continue
        seen, stack = set(), list(succ[a])
        while stack:
            v = stack.pop()
            if v == a:
                on_cycle.add(a)
                break
            if v in seen:
                continue
            seen.add(v)
            stack.extend(succ[v])
    pred: dict = {v: [] for v in succ}
    for v, ws in succ.items():
        for w in ws:
            pred[w].append(v)
    good, stack = set(on_cycle), list(on_cycle)
    while stack:
        v = stack.pop()
        for u in pred[v]:
            if u not in good:
                good.add(u)
                stack.append(u)
    return good


def parse_automaton(text: str) -> BuchiAutomaton:
    """Read the line format ``states n / init i / accept i,j / trans q -> q' : label``."""
    n = init = None
    acc: frozenset = frozenset()
    trans = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if key == "states":
                n = int(rest)
            elif key == "init":
                init = int(rest)
            elif key == "accept":
                acc = frozenset(int(x) for x in rest.replace(" ", "").split(",") if x)
            elif key == "trans":
                head, _, label = rest.partition(":")
                src, _, dst = head.partition("->")
                lab = parse_formula(label.strip() or "true")
                if not is_propositional(lab):
                    raise ParseError("transition label must be propositional", lineno, 1)
                trans.append((int(src), nnf(lab), int(dst)))
            else:
                raise ParseError(f"unknown directive {key!r}", lineno, 1)
        except ValueError as exc:
            raise ParseError(f"malformed line: {exc}", lineno, 1) from None
    if n is None or init is None:
        raise ParseError("automaton needs 'states' and 'init' lines")
    return BuchiAutomaton(n, init, tuple(trans), acc)


def accepts_fixed_word(A: BuchiAutomaton, q: int, v) -> bool:
    """Does A, started in q, accept the constant word v^ω?"""
    succ = {s: [s2 for s1, l, s2 in A.trans if s1 == s and eval_prop(l, v)] for s in A.states}
    return q in _nodes_reaching_accepting_cycle(succ, lambda s: s in A.accepting)


# -- tableau translation ------------------------------------------------------


def _negate_literal(f):
    return f.arg if isinstance(f, Not) else Not(f)


def _expand(formulas: frozenset) -> list:
    """Covers of a set of NNF obligations: (literals, next obligations, pending eventualities)."""
    out = []

    def rec(todo, lits, nxt, pending):
        if not todo:
            out.append((lits, nxt, pending))
            return
        f, rest = todo[0], todo[1:]
        if isinstance(f, TrueF):
            rec(rest, lits, nxt, pending)
        elif isinstance(f, FalseF):
            return
        elif isinstance(f, (Atom, Fireable, Not)):
            if _negate_literal(f) in lits:
                return
            rec(rest, lits | {f}, nxt, pending)
        elif isinstance(f, And):
            rec((f.left, f.right) + rest, lits, nxt, pending)
        elif isinstance(f, Or):
            rec((f.left,) + rest, lits, nxt, pending)
            rec((f.right,) + rest, lits, nxt, pending)
        elif isinstance(f, Until):
            rec((f.right,) + rest, lits, nxt, pending)
            rec((f.left,) + rest, lits, nxt | {f}, pending | {f})
        elif isinstance(f, Eventually):
            rec((f.arg,) + rest, lits, nxt, pending)
            rec(rest, lits, nxt | {f}, pending | {f})
        elif isinstance(f, Release):
            rec((f.left, f.right) + rest, lits, nxt, pending)
            rec((f.right,) + rest, lits, nxt | {f}, pending)
        elif isinstance(f, Globally):
            rec((f.arg,) + rest, lits, nxt | {f}, pending)
        else:
            raise TypeError(f"not in NNF: {f}")

    rec(tuple(sorted(formulas, key=str)), frozenset(), frozenset(), frozenset())
    # drop duplicates and covers dominated by a weaker one
    uniq = sorted(set(out), key=lambda c: (len(c[0]), len(c[1]), len(c[2]), str(sorted(map(str, c[0])))))
    kept = []
    for c in uniq:
        if any(k[0] <= c[0] and k[1] <= c[1] and k[2] <= c[2] for k in kept):
            continue
        kept.append(c)
    return kept


def _conj(lits) -> Formula:
    lits = sorted(lits, key=str)
    if not lits:
        return TRUE
    f = lits[0]
    for g in lits[1:]:
        f = And(f, g)
    return f


def to_buchi(phi: Formula, simplify: bool = True) -> BuchiAutomaton:
    """Tableau translation of an NNF formula to a state-based Büchi automaton.

    Builds a transition-based generalized automaton whose acceptance sets are
    indexed by the eventualities (U and F subformulas), degeneralizes it with a
    level counter and finally trims and merges bisimilar states.
    """
    phi = nnf(phi)
    eventualities = [g for g in subformulas(phi) if isinstance(g, (Until, Eventually))]
    k = len(eventualities)

    init = frozenset((phi,))
    index = {init: 0}
    order = [init]
    gtrans = []  # (src, label literals, dst, acc-set membership tuple)
    i = 0
    while i < len(order):
        S = order[i]
        for lits, nxt, pending in _expand(S):
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            member = tuple(ev not in pending for ev in eventualities)
            gtrans.append((index[S], lits, index[nxt], member))
        i += 1

    # degeneralize: states (S, level); level k marks a completed round
    start = (0, 0)
    dindex = {start: 0}
    dorder = [start]
    dtrans = []
    j = 0
    out_by_src: dict = {}
    for tr in gtrans:
        out_by_src.setdefault(tr[0], []).append(tr)
    while j < len(dorder):
        s, lvl = dorder[j]
        base = 0 if lvl == k else lvl
        for _src, lits, dst, member in out_by_src.get(s, ()):
            nl = base
            while nl < k and member[nl]:
                nl += 1
            key = (dst, nl)
            if key not in dindex:
                dindex[key] = len(dorder)
                dorder.append(key)
            dtrans.append((j, _conj(lits), dindex[key]))
        j += 1
    accepting = frozenset(q for q, (_s, lvl) in enumerate(dorder) if lvl == k)
    A = BuchiAutomaton(len(dorder), 0, tuple(dtrans), accepting)
    return simplify_automaton(A) if simplify else A


def simplify_automaton(A: BuchiAutomaton) -> BuchiAutomaton:
    """Remove states that cannot reach an accepting cycle, then merge bisimilar states."""
    succ = {q: [q2 for q1, _l, q2 in A.trans if q1 == q] for q in A.states}
    live = _nodes_reaching_accepting_cycle(succ, lambda q: q in A.accepting)
    trans = [(q, l, q2) for q, l, q2 in A.trans if q in live and q2 in live]
    states = sorted(live | {A.init})

    # coarsest partition compatible with acceptance and labelled successors
    block = {q: int(q in A.accepting) for q in states}
    n_blocks = len(set(block.values()))
    while True:
        sig = {q: (block[q], frozenset((str(l), block[q2]) for q1, l, q2 in trans if q1 == q)) for q in states}
        ids: dict = {}
        block = {q: ids.setdefault(sig[q], len(ids)) for q in states}
        if len(ids) == n_blocks:
            break
        n_blocks = len(ids)

    # renumber reachable blocks in BFS order from the initial state
    ren = {block[A.init]: 0}
    reach, frontier = {A.init}, [A.init]
    while frontier:
        nxt = []
        for q in frontier:
            for q1, _l, q2 in trans:
                if q1 == q and q2 not in reach:
                    reach.add(q2)
                    nxt.append(q2)
                    ren.setdefault(block[q2], len(ren))
        frontier = nxt
    newtrans, seen = [], set()
    for q, l, q2 in trans:
        if q in reach:
            key = (ren[block[q]], str(l), ren[block[q2]])
            if key not in seen:
                seen.add(key)
                newtrans.append((key[0], l, key[2]))
    newtrans.sort(key=lambda t: (t[0], t[2], str(t[1])))
    acc = frozenset(ren[block[q]] for q in reach if q in A.accepting)
    return BuchiAutomaton(len(ren), 0, tuple(newtrans), acc)


def lasso_counterexample(phi: Formula, A: BuchiAutomaton, atoms, max_stem: int, max_period: int):
    """Exhaustively compare A with direct semantics on every word stem·period^ω
    (|stem| <= max_stem, 1 <= |period| <= max_period) over the given atoms.

    Returns the first disagreeing (stem, period) or None.  Periods are grouped
    by the pair (truth vector at the loop entry, automaton states accepting the
    period), after which every stem is folded backwards through the tableau
    step, so the check stays exhaustive without evaluating each word from
    scratch.
    """
    letters = all_letters(atoms)
    subs = subformulas(phi)
    step_cache: dict = {}

    def step(qs, a):
        key = (qs, a)
        if key not in step_cache:
            step_cache[key] = A.step(qs, a)
        return step_cache[key]

    # automaton states after every stem, built forwards
    after = {(): frozenset((A.init,))}
    layer = [()]
    for _ in range(max_stem):
        layer = [w + (a,) for w in layer for a in letters]
        for w in layer:
            after[w] = step(after[w[:-1]], w[-1])

    groups: dict = {}
    for p in range(1, max_period + 1):
        for period in itertools.product(letters, repeat=p):
            sat = lasso_sat(phi, list(period), 0)
            vec = tuple(0 in sat[g] for g in subs)
            acc = A._period_acceptors(period)
            groups.setdefault((vec, acc), period)
    for (vec, acc), period in groups.items():
        # fold stems backwards from the loop entry; stems sharing a suffix share work
        vlayer = {(): dict(zip(subs, vec))}
        for length in range(max_stem + 1):
            for stem, v in vlayer.items():
                if bool(after[stem] & acc) != v[phi]:
                    return stem, period
            if length == max_stem:
                break
            vlayer = {(a,) + stem: _step_vector(subs, a, v) for stem, v in vlayer.items() for a in letters}
    return None


# ---------------------------------------------------------------------------
# automaton as a net


@dataclass(frozen=True)
class LabelGuard(Expr):
    """Placeholder guard holding a propositional label over atoms; the
    product replaces it by an expression over observed places."""

    label: Formula

    def eval(self, env):
        return eval_prop(self.label, env)

    def __str__(self):
        return f"[{self.label}]"


def to_buchi_pdnet(A: BuchiAutomaton) -> PDNet:
    """One Büchi place per state, one Büchi transition per automaton transition."""
    net = PDNet("buchi")
    for q in A.states:
        net.add_place(
            f"q{q}", PlaceKind.Buchi, init=BLACK if q == A.init else None, acceptable=q in A.accepting
        )
    n_i = n_u = 0
    for q, label, q2 in A.trans:
        into_acc = q2 in A.accepting
        if into_acc:
            name, n_i = f"I{n_i}", n_i + 1
        else:
            name, n_u = f"u{n_u}", n_u + 1
        guard = None if isinstance(label, TrueF) else LabelGuard(label)
        t = net.add_transition(name, TransitionKind.Buchi, guard=guard, info=(("label", label), ("src", q), ("dst", q2)))
        net.add_input(q, t, ArcKind.ControlArc)
        net.add_output(t, q2, ArcKind.ControlArc)
        if into_acc:
            net.i_transitions.add(t)
    return net


@lru_cache(maxsize=256)
def formula_automaton(text_or_formula) -> BuchiAutomaton:
    """Automaton for the negation of a formula (cached by formula)."""
    f = parse_formula(text_or_formula) if isinstance(text_or_formula, str) else text_or_formula
    return to_buchi(negate_nnf(f))


def parse_formula_or_none(text: Optional[str]) -> Formula:
    return TRUE if text is None else parse_formula(text)
