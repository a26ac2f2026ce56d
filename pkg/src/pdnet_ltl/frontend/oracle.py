"""Explicit-state LTL oracle: interleaving graph × Büchi automaton, nested DFS.

Runs are maximal: a state without any successor (all threads finished or
blocked) repeats forever through a stutter self-loop; no other state stutters.
"""

from __future__ import annotations

from typing import Optional

from ..errors import StateBoundExceeded, UnknownAtomTarget
from ..ltl import Atom, BuchiAutomaton, Fireable, Formula, atoms_of, eval_prop, negate_nnf, to_buchi
from ..verdict import INFINITE_TRACE, LIVELOCK, Counterexample, Step, Verdict
from .ast import Program, stmt_text
from .interp import Interpreter, ProgramState

DEFAULT_STATE_BOUND = 200_000


class StateSpace:
    """Lazily explored interleaving graph with stutter loops."""

    def __init__(self, p: Program, bound: int = DEFAULT_STATE_BOUND):
        self.p = p
        self.it = Interpreter(p)
        self.bound = bound
        self._succ: dict = {}

    def successors(self, s: ProgramState):
        r = self._succ.get(s)
        if r is None:
            if len(self._succ) >= self.bound:
                raise StateBoundExceeded(f"more than {self.bound} program states")
            r = [(Step(i, f"{self.it.cfgs[i - 1].name}: {_edge_text(e, tag)}"), s2)
                 for i, tag, e, s2 in self.it.successors(s)]
            if not r:
                r.append((Step(None, "<stutter>"), s))
            self._succ[s] = r
        return r

    def reachable(self):
        seen = {self.it.initial()}
        stack = list(seen)
        while stack:
            s = stack.pop()
            for _st, s2 in self.successors(s):
                if s2 not in seen:
                    seen.add(s2)
                    stack.append(s2)
        return seen


def _edge_text(e, tag):
    text = stmt_text(e.stmt)
    if e.action in ("tcd", "fcd"):
        return text + (" [true]" if e.action == "tcd" else " [false]")
    if e.action in ("wa1", "wa2", "wa3"):
        return text + {"wa1": " [release]", "wa2": " [wake]", "wa3": " [reacquire]"}[e.action]
    return text


def atom_evaluator(p: Program, it: Interpreter, atoms):
    """Map each atom to a function ProgramState -> bool, checking targets exist."""
    fns = {}
    for a in atoms:
        if isinstance(a, Atom):
            if a.var not in it.gidx:
                raise UnknownAtomTarget(f"unknown variable {a.var!r} in formula")
            k = it.gidx[a.var]
            fns[a] = (lambda atom, k: lambda s: atom.holds(s.m[k]))(a, k)
        elif isinstance(a, Fireable):
            cfg = next((c for c in it.cfgs if c.name == a.thread), None)
            if cfg is None or a.label not in cfg.labels:
                raise UnknownAtomTarget(f"unknown statement label {a.thread}.{a.label}")
            idx, loc = cfg.tid - 1, cfg.labels[a.label]
            fns[a] = (lambda idx, loc: lambda s: s.h[idx] == loc)(idx, loc)
        else:  # pragma: no cover
            raise TypeError(a)
    return fns


def oracle_check(p: Program, phi: Formula, bound: int = DEFAULT_STATE_BOUND,
                 automaton: Optional[BuchiAutomaton] = None) -> Verdict:
    A = automaton if automaton is not None else to_buchi(negate_nnf(phi))
    space = StateSpace(p, bound)
    fns = atom_evaluator(p, space.it, atoms_of(phi) | A.atoms())
    letter_cache: dict = {}

    def letter(s):
        v = letter_cache.get(s)
        if v is None:
            v = frozenset(a for a, fn in fns.items() if fn(s))
            letter_cache[s] = v
        return v

    out_by_q = {q: A.out(q) for q in A.states}

    def succ(node):
        s, q = node
        L = letter(s)
        moves = [q2 for lab, q2 in out_by_q[q] if eval_prop(lab, L)]
        if not moves:
            return []
        return [(st, (s2, q2)) for st, s2 in space.successors(s) for q2 in moves]

    init = (space.it.initial(), A.init)
    lasso = _nested_dfs(init, succ, lambda n: n[1] in A.accepting)
    stats = {"states": len(space._succ)}
    if lasso is None:
        return Verdict(True, engine="oracle", stats=stats)
    stem, cycle = lasso
    kind = INFINITE_TRACE
    if cycle and all(st.thread is None for st in cycle):
        kind = LIVELOCK
    return Verdict(False, Counterexample(kind, stem, cycle), engine="oracle", stats=stats)


def _nested_dfs(init, succ, accepting):
    """Classic two-phase nested DFS; returns (stem steps, cycle steps) or None."""
    visited = {init}
    flagged = set()
    # outer stack entries: (node, iterator over successors, step that led here)
    stack = [(init, iter(succ(init)), None)]
    while stack:
        node, it, _ = stack[-1]
        advanced = False
        for st, nxt in it:
            if nxt not in visited:
                visited.add(nxt)
                stack.append((nxt, iter(succ(nxt)), st))
                advanced = True
                break
        if advanced:
            continue
        # post-order: start the inner search from accepting nodes
        if accepting(node):
            cyc = _inner(node, succ, flagged)
            if cyc is not None:
                stem = [entry[2] for entry in stack[1:]]
                return stem, cyc
        stack.pop()
    return None


def _inner(seed, succ, flagged):
    stack = [(seed, iter(succ(seed)))]
    path: list = []
    while stack:
        node, it = stack[-1]
        advanced = False
        for st, nxt in it:
            if nxt == seed:
                return path + [st]
            if nxt not in flagged:
                flagged.add(nxt)
                stack.append((nxt, iter(succ(nxt))))
                path.append(st)
                advanced = True
                break
        if not advanced:
            stack.pop()
            if path:
                path.pop()
    return None
