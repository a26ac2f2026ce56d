"""Small-step interpreter over ⟨h, m, r, u⟩ states.

Independent of the net: it evaluates statements directly on program
variables, so agreement with the net is a real cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..errors import RangeOverflow
from ..pdnet import BLACK, Marking, ThreadMultiset
from . import cfg as C
from .ast import Program


@dataclass(frozen=True)
class ProgramState:
    h: tuple  # thread index -> location
    m: tuple  # global index -> value
    r: tuple  # mutex index -> holder id or 0
    u: tuple  # cond index -> ThreadMultiset

    def __str__(self):
        return f"h={self.h} m={self.m} r={self.r} u={self.u}"


class Interpreter:
    def __init__(self, p: Program, cfgs=None):
        self.p = p
        self.cfgs = cfgs if cfgs is not None else C.build_cfgs(p)
        self.gidx = {g.name: k for k, g in enumerate(p.globals)}
        self.midx = {m: k for k, m in enumerate(p.mutexes)}
        self.cidx = {c: k for k, c in enumerate(p.conds)}

    def initial(self) -> ProgramState:
        return ProgramState(
            tuple(c.init for c in self.cfgs),
            tuple(g.init for g in self.p.globals),
            tuple(0 for _ in self.p.mutexes),
            tuple(ThreadMultiset() for _ in self.p.conds),
        )

    def env(self, s: ProgramState) -> dict:
        return {g.name: s.m[k] for k, g in enumerate(self.p.globals)}

    def _step(self, s: ProgramState, i: int, e: C.Edge):
        """Successor of thread i taking edge e, or None when the rule does not apply."""
        h = list(s.h)
        h[i - 1] = e.dst
        a, st = e.action, e.stmt
        if a == C.EXIT:
            return None
        if a == C.ASSIGN:
            g = self.p.globals[self.gidx[st.var]]
            v = st.expr.eval(self.env(s))
            if not g.lo <= v <= g.hi:
                raise RangeOverflow(f"{st.var} = {v} outside {g.lo}..{g.hi} (line {st.line})")
            m = list(s.m)
            m[self.gidx[st.var]] = v
            return [("assign", ProgramState(tuple(h), tuple(m), s.r, s.u))]
        if a in (C.TCD, C.FCD):
            c = bool(st.cond.eval(self.env(s)))
            if c != (a == C.TCD):
                return None
            return [(a, ProgramState(tuple(h), s.m, s.r, s.u))]
        if a in (C.LOCK, C.WA3):
            k = self.midx[st.mutex]
            if s.r[k] != 0:
                return None
            r = list(s.r)
            r[k] = i
            return [(a, ProgramState(tuple(h), s.m, tuple(r), s.u))]
        if a == C.UNLOCK:
            k = self.midx[st.mutex]
            if s.r[k] != i:
                return None
            r = list(s.r)
            r[k] = 0
            return [(a, ProgramState(tuple(h), s.m, tuple(r), s.u))]
        if a == C.WA1:
            k, q = self.midx[st.mutex], self.cidx[st.cond]
            if s.r[k] != i or i in s.u[q]:
                return None
            r = list(s.r)
            r[k] = 0
            u = list(s.u)
            u[q] = u[q].add(i)
            return [(a, ProgramState(tuple(h), s.m, tuple(r), tuple(u)))]
        if a == C.WA2:
            k, q = self.midx[st.mutex], self.cidx[st.cond]
            if -i not in s.u[q] or s.r[k] != 0:
                return None
            u = list(s.u)
            u[q] = u[q].remove(-i)
            return [(a, ProgramState(tuple(h), s.m, s.r, tuple(u)))]
        if a == C.SIGNAL:
            q = self.cidx[st.cond]
            pos = s.u[q].positives()
            if not pos:
                return [("signal", ProgramState(tuple(h), s.m, s.r, s.u))]
            out = []
            for j in sorted(set(pos)):
                u = list(s.u)
                u[q] = u[q].remove(j).add(-j)
                out.append((f"signal->{j}", ProgramState(tuple(h), s.m, s.r, tuple(u))))
            return out
        raise ValueError(a)  # pragma: no cover

    def successors(self, s: ProgramState):
        """All (thread id, action tag, edge, successor) steps; terminated threads contribute none."""
        out = []
        for cfg in self.cfgs:
            i = cfg.tid
            for e in cfg.out[s.h[i - 1]]:
                res = self._step(s, i, e)
                if res:
                    for tag, s2 in res:
                        out.append((i, tag, e, s2))
        return out

    def terminated(self, s: ProgramState, i: int) -> bool:
        return s.h[i - 1] == self.cfgs[i - 1].end

    def stuck(self, s: ProgramState) -> bool:
        """No thread can move: every thread has finished or is blocked."""
        for cfg in self.cfgs:
            if any(self._step(s, cfg.tid, e) for e in cfg.out[s.h[cfg.tid - 1]]):
                return False
        return True


def successors(s: ProgramState, p: Program):
    """Steps licensed by the successor relation: (thread id, action tag, state)."""
    return {(i, tag, s2) for i, tag, _e, s2 in Interpreter(p).successors(s)}


def project_marking(M: Mapping, sm) -> ProgramState:
    """Map a program-net marking onto the ⟨h, m, r, u⟩ it encodes."""
    p = sm.program
    h = []
    for cfg in sm.cfgs:
        locs = [loc for loc in range(cfg.n_locs) if sm.control[(cfg.tid, loc)] in M]
        if len(locs) != 1:
            raise ValueError(f"thread {cfg.name} marks {len(locs)} control places")
        h.append(locs[0])
    m = tuple(M[sm.var_place[g.name]] for g in p.globals)
    r = tuple(M.get(sm.mutex_held[x], 0) for x in p.mutexes)
    u = tuple(M[sm.cond_place[c]] for c in p.conds)
    return ProgramState(tuple(h), m, r, u)


def state_to_marking(s: ProgramState, sm) -> Marking:
    p = sm.program
    d = {}
    for cfg in sm.cfgs:
        d[sm.exec_place[cfg.tid]] = BLACK
        d[sm.control[(cfg.tid, s.h[cfg.tid - 1])]] = BLACK
    for k, g in enumerate(p.globals):
        d[sm.var_place[g.name]] = s.m[k]
    for k, x in enumerate(p.mutexes):
        if s.r[k]:
            d[sm.mutex_held[x]] = s.r[k]
        else:
            d[sm.mutex_free[x]] = BLACK
    for k, c in enumerate(p.conds):
        d[sm.cond_place[c]] = s.u[k]
    return Marking(d)
