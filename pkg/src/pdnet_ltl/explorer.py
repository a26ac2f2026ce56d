"""On-the-fly unfolding driven by an exploration tree with delayed transitions.

A node ⟨ε, κ, η, t⟩ holds a configuration ε of the shared prefix, the set κ of
transitions delayed in favour of a conflicting choice, a guide set η steering
towards the delayed alternative, and the transition t that produced ε.  The
left child fires the chosen transition; the right child delays it and is only
created when some conflicting transition can still be reached (ALT).
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .errors import ResourceBoundExceeded
from .frontend.builder import SourceMap
from .ltl import BuchiAutomaton, Formula
from .pdnet import PDNet, TransitionKind
from .product import ProductInfo, build_product, to_counterexample
from .unfolding import CutoffKind, Prefix, bits
from .verdict import Verdict


@dataclass
class ExplorationNode:
    id: int
    parent: Optional[int]
    side: str  # "root", "left" or "right"
    size: int  # |ε|
    kappa: frozenset
    eta: frozenset
    t: Optional[int]
    status: str = "inner"  # inner, terminal, blocked, duplicate


@dataclass
class ExplorationResult:
    prefix: Prefix
    terminals: list = field(default_factory=list)  # event bitsets of terminal nodes
    n_nodes: int = 0
    n_blocked: int = 0
    n_duplicates: int = 0
    violation: Optional[int] = None  # successful cutoff event
    tree: list = field(default_factory=list)  # ExplorationNode records when requested
    seconds: float = 0.0


def structural_conflicts(net: PDNet) -> list[frozenset]:
    """Conf(t): transitions sharing an input place with t.  Thread-end loops are left out."""
    exits = {t.id for t in net.transitions if t.kind is TransitionKind.Exit}
    out = []
    for t in range(len(net.transitions)):
        s = set()
        if t not in exits:
            for p in net.pre[t]:
                s.update(net.consumers[p])
        out.append(frozenset(s - exits - {t}))
    return out


class Explorer:
    def __init__(self, net: PDNet, sm: SourceMap, info: Optional[ProductInfo] = None, *,
                 noncausal: bool = True, max_events: Optional[int] = None,
                 timeout: Optional[float] = None, record_tree: bool = False):
        self.net = net
        self.sm = sm
        self.info = info
        self.timeout = timeout
        self.deadline = None if timeout is None else time.monotonic() + timeout
        self.prefix = Prefix(net, info, noncausal=noncausal, max_events=max_events,
                             deadline=self.deadline)
        self.conf = structural_conflicts(net)
        self.record_tree = record_tree
        self._edge_trans: dict = {}  # (tid, edge index) -> transitions
        for t, e in sm.edge_of.items():
            self._edge_trans.setdefault((sm.tid_of[t], e.index), []).append(t)
        self._buchi_out: dict = {}  # Büchi place -> [(transition, target place)]
        if info is not None:
            for t in sorted(info.buchi_transitions):
                src = next(p for p in net.pre[t] if p in info.buchi_place.values())
                dst = next(p for p in net.post[t] if p in info.buchi_place.values())
                self._buchi_out.setdefault(src, []).append((t, dst))
        self.buchi = info.buchi_transitions if info is not None else frozenset()

    # -- helpers ----------------------------------------------------------------

    def _select(self, cand) -> int:
        return min(cand, key=lambda t: (t not in self.buchi, t))

    def closure(self, t2: int, M, avoid: Optional[int] = None) -> frozenset:
        """⌈t2⌉: transitions that must occur, t2 included, before t2 can from M.

        A path through ``avoid`` is not accepted; ∅ when none remains."""
        if t2 == avoid:
            return frozenset()
        tr = self.net.transitions[t2]
        if tr.kind is TransitionKind.Tf:
            return frozenset({t2})
        if tr.kind is TransitionKind.Buchi:
            return self._buchi_closure(t2, M, avoid)
        tid = tr.thread
        cfg = self.sm.cfgs[tid - 1]
        loc = next((l for l in range(cfg.n_locs) if self.sm.control[(tid, l)] in M), None)
        if loc is None:
            return frozenset()
        goal = self.sm.edge_of[t2].index
        skip = ()
        if avoid is not None and avoid in self.sm.edge_of and self.sm.tid_of[avoid] == tid:
            skip = (self.sm.edge_of[avoid].index,)
        path = _shortest_path(cfg, loc, goal, skip)
        if path is None:
            return frozenset()
        out = {t2}
        for e in path[:-1]:
            out.update(self._edge_trans[(tid, e.index)])
        return frozenset(out)

    def _buchi_closure(self, t2: int, M, avoid: Optional[int] = None) -> frozenset:
        places = set(self.info.buchi_place.values())
        start = next((p for p in M if p in places), None)
        target = next(p for p in self.net.pre[t2] if p in places)
        prev = {start: None}
        queue = deque([start])
        while queue:
            p = queue.popleft()
            if p == target:
                out = {t2}
                while prev[p] is not None:
                    t, p = prev[p]
                    out.add(t)
                return frozenset(out)
            for t, q in self._buchi_out.get(p, ()):
                if t != avoid and q not in prev:
                    prev[q] = (t, p)
                    queue.append(q)
        return frozenset()

    def alt(self, M, kappa, eta, ten) -> frozenset:
        """A guide that disables every delayed transition still enabled, or ∅.

        For each such d some t′ ∈ Conf(d) outside κ must be reachable; its
        closure ⌈t′⌉ joins the guide.  Members of the current guide are tried
        first, so an alternative already being followed is kept."""
        J: set[int] = set()
        for d in sorted(kappa & ten):
            if J & self.conf[d]:
                continue
            for t2 in sorted(self.conf[d], key=lambda x: (x not in eta, x)):
                if t2 in kappa:
                    continue
                cl = self.closure(t2, M, avoid=d)
                if cl:
                    J |= cl - kappa
                    break
            else:
                return frozenset()
        return frozenset(J)

    def enabled_events(self, cut, M) -> dict:
        """transition -> non-cutoff event enabled at the cut; adds events on demand.

        Returns None-valued marker through ``self.violation`` when a successful
        cutoff appears."""
        pre = self.prefix
        out = {}
        for t, chi in pre.extensions_at(cut, M):
            e = pre.find_event(t, chi)
            if e is None:
                e = pre.add_event(t, chi)
                r = pre.classify(e)
                if r.kind in (CutoffKind.SuccessI, CutoffKind.SuccessII):
                    self.violation = e
                    return out
            if pre.cutoff[e].kind is CutoffKind.NotCutoff:
                out[t] = e
        return out

    # -- main loop --------------------------------------------------------------

    def run(self) -> ExplorationResult:
        t0 = time.monotonic()
        pre = self.prefix
        res = ExplorationResult(pre)
        self.violation = None
        seen: dict[int, list[frozenset]] = {}  # ε -> delayed sets it was explored with
        tree = res.tree
        # task: (events, cut, kappa, eta, t_in, kind, parent, extra)
        # kind "left"/"root" runs steps 1-7; kind "right" reuses (ten map) from its parent
        stack = [(0, pre.min_bits, frozenset(), frozenset(), None, "root", None, None)]
        while stack:
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise ResourceBoundExceeded("time limit exceeded")
            eps, cut, kappa, eta, t_in, kind, parent, extra = stack.pop()
            nid = res.n_nodes
            res.n_nodes += 1
            node = None
            if self.record_tree:
                node = ExplorationNode(nid, parent, kind, bin(eps).count("1"), kappa, eta, t_in)
                tree.append(node)
            M = pre.mark_of_cut(cut)
            if kind == "right":
                en = extra
            else:
                if t_in is not None:
                    kappa = kappa - self.conf[t_in]
                earlier = seen.setdefault(eps, [])
                if any(k <= kappa for k in earlier):
                    res.n_duplicates += 1
                    if node:
                        node.status = "duplicate"
                    continue
                earlier.append(kappa)
                en = self.enabled_events(cut, M)
                if self.violation is not None:
                    res.violation = self.violation
                    break
            ten = frozenset(en)
            if not ten:
                res.terminals.append(eps)
                if node:
                    node.status = "terminal"
                continue
            cand = (ten & eta) - kappa or ten - kappa
            if not cand:
                res.n_blocked += 1
                if node:
                    node.status = "blocked"
                continue
            t = self._select(cand)
            e = en[t]
            k2 = kappa | {t}
            conj = self.alt(M, k2, eta, ten)
            if conj:
                stack.append((eps, cut, k2, conj, t, "right", nid, en))
            new_cut = (cut & ~pre.cons_bits[e]) | pre.prod_bits[e]
            stack.append((eps | (1 << e), new_cut, kappa, eta - {t}, t, "left", nid, None))
        res.seconds = time.monotonic() - t0
        return res


def _shortest_path(cfg, src, goal, avoid=()):
    from .frontend.cfg import shortest_path

    return shortest_path(cfg, src, [goal], avoid)


def explore_net(net: PDNet, sm: SourceMap, info: Optional[ProductInfo] = None, **kw) -> ExplorationResult:
    return Explorer(net, sm, info, **kw).run()


def check(p, phi: Formula, *, automaton: Optional[BuchiAutomaton] = None, noncausal: bool = True,
          max_events: Optional[int] = None, timeout: Optional[float] = None) -> Verdict:
    """Model check program p against phi with the exploration-tree unfolding."""
    t0 = time.monotonic()
    N, sm, P, info = build_product(p, phi, automaton)
    ex = Explorer(P, sm, info, noncausal=noncausal, max_events=max_events, timeout=timeout)
    res = ex.run()
    pre = res.prefix
    stats = pre.summary()
    stats.update(
        places=len(P.places), transitions=len(P.transitions), tree_nodes=res.n_nodes,
        terminals=len(res.terminals), blocked=res.n_blocked,
        millis=round((time.monotonic() - t0) * 1000, 3),
    )
    if res.violation is None:
        return Verdict(True, engine="explorer", stats=stats)
    stem, cycle = pre.lasso(res.violation)
    livelock = pre.cutoff[res.violation].kind is CutoffKind.SuccessII
    cex = to_counterexample(P, sm, stem, cycle, livelock)
    return Verdict(False, cex, engine="explorer", stats=stats)


def terminal_configurations(res: ExplorationResult, table: Optional[dict] = None) -> list:
    """Terminal configurations as sets of canonical event ids (see Prefix.canonical)."""
    return [frozenset(res.prefix.canonical(e, table) for e in bits(C)) for C in res.terminals]
