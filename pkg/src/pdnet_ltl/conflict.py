"""Static conflict (dependence) between program transitions.

Two transitions of different threads conflict when they race on a variable
(one defines it, the other defines or references it), operate on the same
mutex, or touch the same condition-variable queue with at least one signal.
Transitions of the same thread are always dependent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .frontend.builder import SourceMap
from .pdnet import PDNet, PlaceKind, TransitionKind as K

_ASSIGN = {K.Assign}
_BRANCH = {K.BranchTrue, K.BranchFalse}
_ACQUIRE = {K.Lock, K.Wait3}
_RELEASE = {K.Unlock, K.Wait1}
_WAIT = {K.Wait1, K.Wait2, K.Wait3}


def ref_def_sets(N: PDNet, t: int) -> tuple[frozenset, frozenset]:
    """(Ref, Def): variable places in the preset read unchanged / consumed or rewritten."""
    ref, dfn = set(), set()
    for p in N.pre[t]:
        if N.places[p].kind is not PlaceKind.Variable:
            continue
        (ref if N.is_read_arc(p, t) else dfn).add(p)
    return frozenset(ref), frozenset(dfn)


class _Shapes:
    """Per-transition place groups used by the case analysis."""

    def __init__(self, N: PDNet, sm: SourceMap):
        self.N = N
        mutex_of = {}
        for m in sm.mutex_free:
            mutex_of[sm.mutex_free[m]] = m
            mutex_of[sm.mutex_held[m]] = m
        cond_places = set(sm.cond_place.values())
        self.pre_m, self.post_m, self.conds, self.ref, self.dfn = [], [], [], [], []
        for t in range(len(N.transitions)):
            self.pre_m.append({mutex_of[p] for p in N.pre[t] if p in mutex_of})
            self.post_m.append({mutex_of[p] for p in N.post[t] if p in mutex_of})
            self.conds.append({p for p in set(N.pre[t]) | set(N.post[t]) if p in cond_places})
            r, d = ref_def_sets(N, t)
            self.ref.append(r)
            self.dfn.append(d)

    def directed(self, t1: int, t2: int) -> bool:
        k1, k2 = self.N.transitions[t1].kind, self.N.transitions[t2].kind
        # shared variable: t1 defines, t2 defines or references
        if k1 in _ASSIGN and k2 in _ASSIGN | _BRANCH:
            if self.dfn[t1] & (self.dfn[t2] | self.ref[t2]):
                return True
        # mutex patterns
        if k1 in _ACQUIRE:
            if k2 == K.Lock and self.pre_m[t1] & self.pre_m[t2]:
                return True
            if k2 == K.Unlock and self.pre_m[t1] & self.post_m[t2]:
                return True
            if k2 in _WAIT and self.pre_m[t1] & (self.pre_m[t2] | self.post_m[t2]):
                return True
        if k1 in _RELEASE:
            if k2 == K.Lock and self.post_m[t1] & self.pre_m[t2]:
                return True
            if k2 == K.Unlock and self.post_m[t1] & self.post_m[t2]:
                return True
            if k2 in _WAIT and self.post_m[t1] & (self.pre_m[t2] | self.post_m[t2]):
                return True
        # condition variables: a signal against anything on the same queue
        if k1 == K.Signal and k2 in _WAIT | {K.Signal} and self.conds[t1] & self.conds[t2]:
            return True
        return False


@dataclass
class ConflictTable:
    n: int
    conf: list  # transition -> frozenset of conflicting transitions (other threads only)
    thread: list  # transition -> thread id or None

    def conflicts(self, t1: int, t2: int) -> bool:
        return t2 in self.conf[t1]

    def independent(self, t1: int, t2: int) -> bool:
        if t1 == t2:
            return False
        a, b = self.thread[t1], self.thread[t2]
        if a is not None and a == b:
            return False
        return t2 not in self.conf[t1]

    def pairs(self):
        for t1 in range(self.n):
            for t2 in sorted(self.conf[t1]):
                if t1 < t2:
                    yield t1, t2

    def dump(self, N: PDNet) -> str:
        return "".join(f"{N.transitions[a].name} {N.transitions[b].name}\n" for a, b in self.pairs())


def conflict_table(N: PDNet, sm: SourceMap) -> ConflictTable:
    shapes = _Shapes(N, sm)
    prog = N.program_transitions()
    conf = [set() for _ in N.transitions]
    for i, t1 in enumerate(prog):
        for t2 in prog[i + 1:]:
            if N.transitions[t1].thread == N.transitions[t2].thread:
                continue
            if shapes.directed(t1, t2) or shapes.directed(t2, t1):
                conf[t1].add(t2)
                conf[t2].add(t1)
    return ConflictTable(len(N.transitions), [frozenset(s) for s in conf],
                         [t.thread for t in N.transitions])


def conflicts(N: PDNet, sm: SourceMap, t1: int, t2: int) -> bool:
    return conflict_table(N, sm).conflicts(t1, t2)


def independent(N: PDNet, sm: SourceMap, t1: int, t2: int) -> bool:
    return conflict_table(N, sm).independent(t1, t2)


class ProductIndependence:
    """Independence on product transitions.

    Program pairs follow the program table, except that two visible transitions
    are dependent (they alternate with the monitor).  Pairs involving a monitor
    transition or t_f are independent only when their presets are disjoint.
    """

    def __init__(self, P: PDNet, info, table: ConflictTable):
        self.P = P
        self.info = info
        self.table = table
        self.n_prog = info.n_program_transitions

    def independent(self, t1: int, t2: int) -> bool:
        if t1 == t2:
            return False
        if t1 < self.n_prog and t2 < self.n_prog:
            if t1 in self.info.visible and t2 in self.info.visible:
                return False
            return self.table.independent(t1, t2)
        return not (set(self.P.pre[t1]) & set(self.P.pre[t2]))
