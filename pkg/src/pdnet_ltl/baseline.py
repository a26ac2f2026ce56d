"""Complete-prefix unfolding with global possible extensions, in adequate order."""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import Optional

from .errors import ResourceBoundExceeded
from .ltl import BuchiAutomaton, Formula
from .pdnet import PDNet
from .product import ProductInfo, build_product, to_counterexample
from .unfolding import BOTTOM, CutoffKind, Prefix, bits
from .verdict import Verdict


@dataclass
class BaselineResult:
    prefix: Prefix
    violation: Optional[int] = None
    seconds: float = 0.0


class PEQueue:
    """Possible extensions keyed by the adequate order of the configuration they create."""

    def __init__(self, prefix: Prefix):
        self.prefix = prefix
        self._heap: list = []
        self._seq = itertools.count()
        self._queued: set = set()

    def push(self, t, chi):
        if (t, chi) in self._queued:
            return
        self._queued.add((t, chi))
        heapq.heappush(self._heap, (self.prefix.extension_key(t, chi), next(self._seq), t, chi))

    def pop(self):
        _k, _s, t, chi = heapq.heappop(self._heap)
        return t, chi

    def __len__(self):
        return len(self._heap)


def unfold(net: PDNet, info: Optional[ProductInfo] = None, *, noncausal: bool = True,
           max_events: Optional[int] = None, timeout: Optional[float] = None) -> BaselineResult:
    t0 = time.monotonic()
    deadline = None if timeout is None else t0 + timeout
    pre = Prefix(net, info, noncausal=noncausal, max_events=max_events, deadline=deadline,
                 track_co=True)
    queue = PEQueue(pre)
    for t, chi in pre.extensions_after(BOTTOM):
        queue.push(t, chi)
    res = BaselineResult(pre)
    while queue:
        if deadline is not None and time.monotonic() > deadline:
            raise ResourceBoundExceeded("time limit exceeded")
        t, chi = queue.pop()
        if pre.find_event(t, chi) is not None:
            continue
        e = pre.add_event(t, chi)
        r = pre.classify(e)
        if r.kind in (CutoffKind.SuccessI, CutoffKind.SuccessII):
            res.violation = e
            break
        if r.kind is CutoffKind.NotCutoff:
            for t2, chi2 in pre.extensions_after(e):
                queue.push(t2, chi2)
    res.seconds = time.monotonic() - t0
    return res


def maximal_configurations(pre: Prefix, limit: int = 100_000, table: Optional[dict] = None) -> set:
    """Canonical forms of the configurations of non-cutoff events that no
    non-cutoff event extends."""
    good = [e for e in range(pre.n_events) if pre.cutoff[e].kind is CutoffKind.NotCutoff]
    by_pre_cond: dict[int, list[int]] = {}
    for e in good:
        for c in pre.ev_pre[e]:
            by_pre_cond.setdefault(c, []).append(e)
    seen = {0}
    stack = [(0, pre.min_bits)]
    out = set()
    while stack:
        C, cut = stack.pop()
        ext = set()
        for c in bits(cut):
            for e in by_pre_cond.get(c, ()):
                if all((cut >> d) & 1 for d in pre.ev_pre[e]):
                    ext.add(e)
        if not ext:
            out.add(frozenset(pre.canonical(e, table) for e in bits(C)))
            continue
        for e in ext:
            C2 = C | (1 << e)
            if C2 not in seen:
                if len(seen) >= limit:
                    raise ResourceBoundExceeded(f"more than {limit} configurations")
                seen.add(C2)
                stack.append((C2, (cut & ~pre.cons_bits[e]) | pre.prod_bits[e]))
    return out


def check_baseline(p, phi: Formula, *, automaton: Optional[BuchiAutomaton] = None,
                   noncausal: bool = True, max_events: Optional[int] = None,
                   timeout: Optional[float] = None) -> Verdict:
    t0 = time.monotonic()
    N, sm, P, info = build_product(p, phi, automaton)
    res = unfold(P, info, noncausal=noncausal, max_events=max_events, timeout=timeout)
    pre = res.prefix
    stats = pre.summary()
    stats.update(places=len(P.places), transitions=len(P.transitions),
                 millis=round((time.monotonic() - t0) * 1000, 3))
    if res.violation is None:
        return Verdict(True, engine="baseline", stats=stats)
    stem, cycle = pre.lasso(res.violation)
    livelock = pre.cutoff[res.violation].kind is CutoffKind.SuccessII
    return Verdict(False, to_counterexample(P, sm, stem, cycle, livelock), engine="baseline", stats=stats)
