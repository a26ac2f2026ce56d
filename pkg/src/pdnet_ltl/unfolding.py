"""Occurrence-net prefixes of a (product) PDNet.

Events and conditions live in append-only arrays.  Sets of events and sets of
conditions are Python ints used as bitsets, which keeps configuration and
relation queries cheap:

* ``anc[e]``  events of the local configuration [e] (e included)
* ``desc[e]`` events causally after e (e included)
* ``conf[e]`` older events in conflict with e (query with ``in_conflict``)
* ``cons[c]`` events consuming condition c

The net is safe, so at any cut each place holds at most one condition and a
possible extension at a cut is determined by its transition alone.
"""

from __future__ import annotations

import enum
import json
import time
from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    DuplicateEvent,
    InternalInvariantViolation,
    NotAConfiguration,
    ResourceBoundExceeded,
)
from .ltl import accepts_fixed_word
from .pdnet import Marking, PDNet, TransitionKind
from .product import ProductInfo

BOTTOM = -1  # the virtual event producing Min(O)


def bits(x: int) -> list[int]:
    """Indices of the set bits of x, ascending."""
    if x.bit_count() <= 24:  # sparse: peel the lowest bit
        out = []
        while x:
            low = x & -x
            out.append(low.bit_length() - 1)
            x ^= low
        return out
    s = bin(x)[:1:-1]  # little-endian digit string
    out = []
    i = s.find("1")
    while i >= 0:
        out.append(i)
        i = s.find("1", i + 1)
    return out


class CutoffKind(enum.Enum):
    NotCutoff = "NotCutoff"
    Unsuccessful = "Unsuccessful"
    SuccessI = "SuccessI"
    SuccessII = "SuccessII"


class Relation(enum.Enum):
    Before = "Causal<"
    After = "Causal>"
    Conflict = "Conflict"
    Concurrent = "Concurrent"


@dataclass
class Cutoff:
    kind: CutoffKind
    companion: Optional[int] = None  # event id, BOTTOM for the empty configuration
    witness: Optional[tuple] = None  # livelock: (invisible path, index where the loop starts or None)


@dataclass
class PrefixStats:
    local_candidates: int = 0  # (transition, co-set) pairs produced by local extension
    global_pe_calls: int = 0
    c_unf: int = 0  # co-set combination candidates examined by global extension
    divergence_states: int = 0


class Prefix:
    def __init__(self, net: PDNet, info: Optional[ProductInfo] = None, *,
                 noncausal: bool = True, max_events: Optional[int] = None,
                 deadline: Optional[float] = None, track_co: bool = False):
        self.net = net
        self.info = info
        self.noncausal = noncausal
        self.max_events = max_events
        self.deadline = deadline
        self.stats = PrefixStats()

        self.cond_place: list[int] = []
        self.cond_value: list = []
        self.cond_pre: list[int] = []
        self.cons: list[int] = []
        self.place_conds: dict[int, list[int]] = {}
        self.place_bits: dict[int, int] = {}
        self.dead_bits = 0  # conditions produced by cutoff events
        self.co_bits: Optional[list[int]] = [] if track_co else None

        self.ev_trans: list[int] = []
        self.ev_pre: list[tuple] = []
        self.ev_post: list[tuple] = []
        self.ev_depth: list[int] = []
        self.anc: list[int] = []
        self.desc: list[int] = []
        self.conf: list[int] = []
        self.prod_bits: list[int] = []
        self.cons_bits: list[int] = []
        self.cutoff: list[Cutoff] = []
        self._key_cache: dict[int, tuple] = {}
        self._events_by_ext: dict[tuple, int] = {}
        self._mark_index: dict[Marking, list[int]] = {}
        self.i_bits = 0
        self.cutoff_bits = 0
        self._div_cache: dict = {}
        self._canon: dict = {}
        self._canon_ids: dict = {}

        M0 = net.initial_marking
        self.M0 = M0
        self.min_bits = 0
        for p in sorted(M0):
            c = self._new_condition(p, M0[p], BOTTOM)
            self.min_bits |= 1 << c
        if self.co_bits is not None:
            self.co_bits.extend(self.min_bits & ~(1 << c) for c in bits(self.min_bits))
        self.tf = net.tf
        self.exits = frozenset(t.id for t in net.transitions if t.kind is TransitionKind.Exit)

    # -- construction ---------------------------------------------------------

    def _new_condition(self, p, v, pre) -> int:
        c = len(self.cond_place)
        self.cond_place.append(p)
        self.cond_value.append(v)
        self.cond_pre.append(pre)
        self.cons.append(0)
        self.place_conds.setdefault(p, []).append(c)
        self.place_bits[p] = self.place_bits.get(p, 0) | (1 << c)
        return c

    @property
    def n_events(self) -> int:
        return len(self.ev_trans)

    @property
    def n_conditions(self) -> int:
        return len(self.cond_place)

    def find_event(self, t: int, chi) -> Optional[int]:
        return self._events_by_ext.get((t, tuple(sorted(chi))))

    def add_event(self, t: int, chi) -> int:
        chi = tuple(sorted(chi))
        if (t, chi) in self._events_by_ext:
            raise DuplicateEvent(f"{self.net.transitions[t].name} on {chi}")
        if self.max_events is not None and self.n_events >= self.max_events:
            raise ResourceBoundExceeded(f"more than {self.max_events} events")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceBoundExceeded("time limit exceeded")
        env = {self.cond_place[c]: self.cond_value[c] for c in chi}
        if set(env) != set(self.net.pre[t]) or not self.net.guard_holds(t, env):
            raise InternalInvariantViolation(f"{self.net.transitions[t].name} is not enabled on {chi}")
        out = self.net.produce(t, env)

        e = self.n_events
        bit = 1 << e
        pre_events = {self.cond_pre[c] for c in chi} - {BOTTOM}
        anc = bit
        depth = 1
        for pe in pre_events:
            anc |= self.anc[pe]
            depth = max(depth, self.ev_depth[pe] + 1)
        # every existing event in conflict with e descends from a sibling of
        # some event of [e] on a shared precondition
        conf = 0
        for c in chi:
            for sib in bits(self.cons[c]):
                conf |= self.desc[sib]
        for a in bits(anc & ~bit):
            for c in self.ev_pre[a]:
                others = self.cons[c] & ~(1 << a)
                if others:
                    for sib in bits(others):
                        conf |= self.desc[sib]
        cons_bits = 0
        for c in chi:
            self.cons[c] |= bit
            cons_bits |= 1 << c
        post = tuple(self._new_condition(p, out[p], e) for p in sorted(out))
        prod_bits = 0
        for c in post:
            prod_bits |= 1 << c
        if self.co_bits is not None:
            # conditions concurrent with the whole preset are concurrent with the postset
            common = -1
            for c in chi:
                common &= self.co_bits[c]
            common &= (1 << post[0]) - 1 if post else -1
            for c in post:
                self.co_bits.append(common | (prod_bits & ~(1 << c)))
            for d in bits(common):
                self.co_bits[d] |= prod_bits

        self.ev_trans.append(t)
        self.ev_pre.append(chi)
        self.ev_post.append(post)
        self.ev_depth.append(depth)
        self.anc.append(anc)
        self.desc.append(bit)
        self.conf.append(conf)
        self.prod_bits.append(prod_bits)
        self.cons_bits.append(cons_bits)
        self.cutoff.append(Cutoff(CutoffKind.NotCutoff))
        for a in bits(anc & ~bit):
            self.desc[a] |= bit
        if t in self.net.i_transitions:
            self.i_bits |= bit
        self._events_by_ext[(t, chi)] = e
        return e

    # -- configurations -------------------------------------------------------

    def in_conflict(self, x: int, y: int) -> bool:
        """conf[e] lists only the older events in conflict with e."""
        if x == y:
            return False
        lo, hi = (x, y) if x < y else (y, x)
        return bool((self.conf[hi] >> lo) & 1)

    def conflict_set(self, e: int) -> int:
        """All events in conflict with e."""
        out = self.conf[e]
        for g in range(e + 1, self.n_events):
            if (self.conf[g] >> e) & 1:
                out |= 1 << g
        return out

    def is_configuration(self, C: int) -> bool:
        for e in bits(C):
            if self.anc[e] & ~C or self.conf[e] & C:
                return False
        return True

    def cut_of(self, C: int) -> int:
        prod = cons = 0
        for e in bits(C):
            prod |= self.prod_bits[e]
            cons |= self.cons_bits[e]
        return (self.min_bits | prod) & ~cons

    def mark_of_cut(self, cut: int) -> Marking:
        return Marking((self.cond_place[c], self.cond_value[c]) for c in bits(cut))

    def cut_and_mark(self, C: int):
        if not self.is_configuration(C):
            raise NotAConfiguration(f"event set {sorted(bits(C))} is not a configuration")
        cut = self.cut_of(C)
        return cut, self.mark_of_cut(cut)

    def local_mark(self, e: int) -> Marking:
        if e == BOTTOM:
            return self.M0
        return self.mark_of_cut(self.cut_of(self.anc[e]))

    def linearize(self, C: int) -> list[int]:
        """Events of C in a firing order (ids are assigned in causal order)."""
        return list(bits(C))

    def config_key(self, C: int) -> tuple:
        """Sort key realizing the adequate order: size, sorted labels, Foata levels."""
        labels = []
        levels: dict[int, list[int]] = {}
        for e in bits(C):
            t = self.ev_trans[e]
            labels.append(t)
            levels.setdefault(self.ev_depth[e], []).append(t)
        labels.sort()
        foata = tuple((len(levels[d]), tuple(sorted(levels[d]))) for d in sorted(levels))
        return (len(labels), tuple(labels), foata)

    def local_key(self, e: int) -> tuple:
        k = self._key_cache.get(e)
        if k is None:
            k = self.config_key(self.anc[e]) if e != BOTTOM else (0, (), ())
            self._key_cache[e] = k
        return k

    def adequate_less(self, C1: int, C2: int) -> bool:
        return self.config_key(C1) < self.config_key(C2)

    # -- relations ------------------------------------------------------------

    def relation(self, x: int, y: int) -> Relation:
        """Relation between two events."""
        if x != y and (self.anc[y] >> x) & 1:
            return Relation.Before
        if x != y and (self.anc[x] >> y) & 1:
            return Relation.After
        if self.in_conflict(x, y):
            return Relation.Conflict
        return Relation.Concurrent

    def co(self, c1: int, c2: int) -> bool:
        """Are two conditions concurrent?"""
        if self.co_bits is not None:
            return bool((self.co_bits[c1] >> c2) & 1)
        return self._co_structural(c1, c2)

    def co_mask(self, c: int) -> int:
        """Bitset of the conditions concurrent with c."""
        if self.co_bits is not None:
            return self.co_bits[c]
        m = 0
        for d in range(self.n_conditions):
            if self._co_structural(c, d):
                m |= 1 << d
        return m

    def _co_structural(self, c1: int, c2: int) -> bool:
        if c1 == c2:
            return False
        p1, p2 = self.cond_pre[c1], self.cond_pre[c2]
        a1 = self.anc[p1] if p1 != BOTTOM else 0
        a2 = self.anc[p2] if p2 != BOTTOM else 0
        if self.cons[c1] & a2 or self.cons[c2] & a1:
            return False
        if p1 != BOTTOM and p2 != BOTTOM and self.in_conflict(p1, p2):
            return False
        return True

    # -- possible extensions --------------------------------------------------

    def extensions_at(self, cut: int, M: Optional[Marking] = None):
        """(transition, preset) pairs enabled at a cut, reading only that cut."""
        if M is None:
            M = self.mark_of_cut(cut)
        by_place = {self.cond_place[c]: c for c in bits(cut)}
        out = []
        cand = set()
        for p in by_place:
            cand.update(self.net.consumers[p])
        for t in sorted(cand):
            if self.net.is_enabled(t, M):
                out.append((t, tuple(sorted(by_place[p] for p in self.net.pre[t]))))
        self.stats.local_candidates += len(out)
        return out

    def _usable(self, c: int) -> bool:
        return not (self.dead_bits >> c) & 1

    def _cosets(self, t: int, fixed: dict):
        """Co-sets matching the preset of t that extend ``fixed`` (place -> cond).

        Every condition of a place is a candidate and is counted in ``c_unf``;
        the concurrency test against the partial tuple is done bit-parallel
        with the cached co relation."""
        places = [p for p in sorted(self.net.pre[t]) if p not in fixed]
        chosen = list(fixed.values())
        allowed = -1
        for c in chosen:
            if not self._usable(c):
                return
        for i, a in enumerate(chosen):
            for b in chosen[i + 1:]:
                self.stats.c_unf += 1
                if not self.co(a, b):
                    return
        for c in chosen:
            allowed &= self.co_mask(c)
        live = ~self.dead_bits

        def rec(k, allowed):
            if k == len(places):
                yield tuple(sorted(chosen))
                return
            cands = self.place_bits.get(places[k], 0) & live
            self.stats.c_unf += cands.bit_count()
            for c in bits(cands & allowed):
                chosen.append(c)
                yield from rec(k + 1, allowed & self.co_mask(c))
                chosen.pop()

        yield from rec(0, allowed)

    def _guard_ok(self, t, chi) -> bool:
        env = {self.cond_place[c]: self.cond_value[c] for c in chi}
        return self.net.guard_holds(t, env)

    def extensions_after(self, e: int):
        """New global extensions that use at least one condition produced by e."""
        self.stats.global_pe_calls += 1
        out = []
        seen = set()
        post = self.ev_post[e] if e != BOTTOM else tuple(bits(self.min_bits))
        for c in post:
            p = self.cond_place[c]
            for t in self.net.consumers[p]:
                for chi in self._cosets(t, {p: c}):
                    if e != BOTTOM and any(self.cond_pre[d] == e and d < c for d in chi):
                        continue  # found from an earlier post-condition of e
                    if (t, chi) in seen or (t, chi) in self._events_by_ext:
                        continue
                    seen.add((t, chi))
                    if self._guard_ok(t, chi):
                        out.append((t, chi))
        return out

    def possible_extensions_global(self):
        """Every extension of the whole prefix not yet present (full enumeration)."""
        self.stats.global_pe_calls += 1
        out = []
        for t in range(len(self.net.transitions)):
            for chi in self._cosets(t, {}):
                if (t, chi) not in self._events_by_ext and self._guard_ok(t, chi):
                    out.append((t, chi))
        return out

    def extension_key(self, t: int, chi) -> tuple:
        """Adequate-order key of the local configuration an extension would create."""
        C = 0
        depth = 1
        for c in chi:
            pe = self.cond_pre[c]
            if pe != BOTTOM:
                C |= self.anc[pe]
                depth = max(depth, self.ev_depth[pe] + 1)
        labels = [self.ev_trans[e] for e in bits(C)] + [t]
        levels: dict[int, list[int]] = {depth: [t]}
        for e in bits(C):
            levels.setdefault(self.ev_depth[e], []).append(self.ev_trans[e])
        labels.sort()
        foata = tuple((len(levels[d]), tuple(sorted(levels[d]))) for d in sorted(levels))
        return (len(labels), tuple(labels), foata)

    # -- cutoffs --------------------------------------------------------------

    def classify(self, e: int) -> Cutoff:
        """Classify a freshly added event, record the result and index its marking."""
        r = self._classify(e)
        self.cutoff[e] = r
        if r.kind is CutoffKind.NotCutoff:
            self._mark_index.setdefault(self.local_mark(e), []).append(e)
        else:
            self.cutoff_bits |= 1 << e
            self.dead_bits |= self.prod_bits[e]
        return r

    def _classify(self, e: int) -> Cutoff:
        t = self.ev_trans[e]
        if t in self.exits:
            return Cutoff(CutoffKind.Unsuccessful)
        if self.info is not None and t == self.tf:
            return self._classify_frozen(e)
        M = self.local_mark(e)
        comps = list(self._mark_index.get(M, ()))
        if M == self.M0:
            comps.insert(0, BOTTOM)
        anc = self.anc[e]
        n_i = bin(anc & self.i_bits).count("1")
        causal = [c for c in comps if c == BOTTOM or (anc >> c) & 1]
        for c in causal:
            rest = anc & ~(self.anc[c] if c != BOTTOM else 0)
            if self.info is not None and rest & self.i_bits:
                return Cutoff(CutoffKind.SuccessI, c)
        if causal:
            return Cutoff(CutoffKind.Unsuccessful, causal[0])
        if self.noncausal:
            key = self.local_key(e)
            for c in comps:
                if self.local_key(c) < key and bin(self.anc[c] & self.i_bits).count("1") >= n_i:
                    return Cutoff(CutoffKind.Unsuccessful, c)
        return Cutoff(CutoffKind.NotCutoff)

    def _classify_frozen(self, e: int) -> Cutoff:
        info = self.info
        M = self.mark_of_cut(self.cut_of(self.anc[e] & ~(1 << e)))
        q = info.state_of(M)
        if q is None or not accepts_fixed_word(info.automaton, q, info.letter(M)):
            return Cutoff(CutoffKind.Unsuccessful)
        w = self.divergence(M)
        if w is None:
            return Cutoff(CutoffKind.Unsuccessful)
        return Cutoff(CutoffKind.SuccessII, witness=w)

    def divergence(self, M) -> Optional[tuple]:
        """From M, can the program run forever without visible steps?

        Returns (path, loop start) where path is a list of invisible program
        transitions; loop start is the index where the path starts repeating, or
        None when the path ends in a marking where no thread can move at all.
        Thread-end self-loops neither count as progress nor as a way out.
        """
        info = self.info
        N = info.program
        n = info.n_program_places
        start = Marking((p, v) for p, v in M.items() if p < n)
        if start in self._div_cache:
            return self._div_cache[start]
        moves = [t for t in N.program_transitions() if t not in info.exits]
        invisible = [t for t in moves if t in info.invisible]

        def stuck(m):
            return not any(N.is_enabled(t, m) for t in moves)

        # iterative DFS with an on-stack set to find a loop or a stuck marking
        seen = {start}
        on_stack = {start: 0}
        path: list[int] = []
        stack = [(start, iter([t for t in invisible if N.is_enabled(t, start)]))]
        result = None
        if stuck(start):
            result = ([], None)
        while stack and result is None:
            m, it = stack[-1]
            advanced = False
            for t in it:
                m2 = N.fire(t, m)
                self.stats.divergence_states += 1
                if m2 in on_stack:
                    result = (path + [t], on_stack[m2])
                    break
                if m2 in seen:
                    continue
                seen.add(m2)
                path.append(t)
                if stuck(m2):
                    result = (list(path), None)
                    break
                on_stack[m2] = len(path)
                stack.append((m2, iter([u for u in invisible if N.is_enabled(u, m2)])))
                advanced = True
                break
            if result is not None or advanced:
                continue
            stack.pop()
            del on_stack[m]
            if path:
                path.pop()
        self._div_cache[start] = result
        return result

    # -- counterexamples ------------------------------------------------------

    def lasso(self, e: int):
        """Product transition lasso (stem, cycle) witnessing a successful cutoff, replayed."""
        r = self.cutoff[e]
        if r.kind is CutoffKind.SuccessI:
            base = self.anc[r.companion] if r.companion != BOTTOM else 0
            stem = [self.ev_trans[x] for x in bits(base)]
            cycle = [self.ev_trans[x] for x in bits(self.anc[e] & ~base)]
        elif r.kind is CutoffKind.SuccessII:
            path, loop = r.witness
            stem = [self.ev_trans[x] for x in bits(self.anc[e])]
            if loop is None:
                stem += path
                cycle = []
            else:
                stem += path[:loop]
                cycle = path[loop:]
        else:
            raise ValueError("not a successful cutoff")
        self.replay(r.kind, stem, cycle)
        return stem, cycle

    def replay(self, kind: CutoffKind, stem, cycle):
        net, info = self.net, self.info
        M = net.initial_marking
        try:
            for t in stem:
                M = net.fire(t, M)
            entry = M
            for t in cycle:
                M = net.fire(t, M)
        except Exception as exc:  # any firing failure is a construction bug
            raise InternalInvariantViolation(f"counterexample does not replay: {exc}") from exc
        if cycle and M != entry:
            raise InternalInvariantViolation("counterexample cycle does not return to its entry")
        if kind is CutoffKind.SuccessI:
            if not any(t in net.i_transitions for t in cycle):
                raise InternalInvariantViolation("cycle without an accepting monitor step")
        else:
            if any(t in info.visible or t in info.buchi_transitions for t in cycle):
                raise InternalInvariantViolation("livelock cycle contains an observed step")
            q = info.state_of(M)
            if not accepts_fixed_word(info.automaton, q, info.letter(M)):
                raise InternalInvariantViolation("monitor rejects the frozen observation")
            if not cycle:
                N = info.program
                if any(N.is_enabled(t, M) for t in N.program_transitions() if t not in info.exits):
                    raise InternalInvariantViolation("livelock stem ends in a marking that can move")

    def canonical(self, e: int, table: Optional[dict] = None) -> int:
        """Prefix-independent identity of an event as an interned int.

        Two prefixes of the same net give equal ids to events with the same
        transition and the same history when they share ``table``."""
        if table is None:
            table = self._canon
        memo = self._canon_ids.setdefault(id(table), {})
        if e in memo:
            return memo[e]
        for x in bits(self.anc[e]):  # ancestors first
            if x not in memo:
                key = (self.ev_trans[x], tuple(sorted(
                    (self.cond_place[c], memo.get(self.cond_pre[c], -1)) for c in self.ev_pre[x]
                )))
                memo[x] = table.setdefault(key, len(table))
        return memo[e]

    # -- statistics -------------------------------------------------------------

    def cutoff_counts(self) -> dict:
        out = {k.value: 0 for k in CutoffKind if k is not CutoffKind.NotCutoff}
        for r in self.cutoff:
            if r.kind is not CutoffKind.NotCutoff:
                out[r.kind.value] += 1
        return out

    def summary(self) -> dict:
        return {
            "conditions": self.n_conditions,
            "events": self.n_events,
            "cutoffs": self.cutoff_counts(),
            "local_candidates": self.stats.local_candidates,
            "global_pe_calls": self.stats.global_pe_calls,
            "c_unf": self.stats.c_unf,
        }

    def to_dot(self) -> str:
        lines = ["digraph prefix {", "  rankdir=TB;"]
        for c in range(self.n_conditions):
            p = self.net.places[self.cond_place[c]]
            v = self.cond_value[c]
            label = p.name if v is None or repr(v) == "•" else f"{p.name}={v!r}"
            lines.append(f"  c{c} [shape=circle,label={json.dumps(label, ensure_ascii=False)}];")
        for e in range(self.n_events):
            style = ",style=dashed" if self.cutoff[e].kind is not CutoffKind.NotCutoff else ""
            label = f"e{e}: {self.net.transitions[self.ev_trans[e]].name}"
            lines.append(f"  e{e} [shape=box,label={json.dumps(label, ensure_ascii=False)}{style}];")
            for c in self.ev_pre[e]:
                lines.append(f"  c{c} -> e{e};")
            for c in self.ev_post[e]:
                lines.append(f"  e{e} -> c{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass
class Configuration:
    """An event set of a prefix with its cut and marking cached."""

    prefix: Prefix
    events: int
    cut: int = field(default=0)
    mark: Optional[Marking] = None

    def __post_init__(self):
        self.cut, self.mark = self.prefix.cut_and_mark(self.events)

    def __len__(self):
        return bin(self.events).count("1")

    def __hash__(self):
        return hash(self.events)

    def __eq__(self, other):
        return isinstance(other, Configuration) and other.events == self.events
