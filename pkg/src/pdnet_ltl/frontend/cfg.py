"""Per-thread control-flow graphs.

Both the net builder and the interpreter consume these, so a location means
the same thing on both sides.  ``skip`` produces no edge: it shares its
location with whatever follows it, which turns ``while (c) { }`` into a
branch that loops on its own location.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .ast import Assign, If, Lock, Program, Signal, Skip, Unlock, Wait, While

# edge actions
ASSIGN, TCD, FCD, LOCK, UNLOCK, WA1, WA2, WA3, SIGNAL, EXIT = (
    "assign", "tcd", "fcd", "lock", "unlock", "wa1", "wa2", "wa3", "signal", "exit",
)


@dataclass(frozen=True)
class Edge:
    action: str
    src: int
    dst: int
    stmt: Any  # the source statement (None for exit)
    index: int = 0  # position in the thread's edge list


@dataclass
class ThreadCFG:
    tid: int
    name: str
    n_locs: int
    init: int
    end: int
    edges: list
    labels: dict  # label -> location
    internal: dict = field(default_factory=dict)  # location -> "w2"/"w3" for wait phases
    out: list = field(default_factory=list)  # location -> [edge]

    def edges_at(self, loc):
        return self.out[loc]


def _build_thread(tid, name, body) -> ThreadCFG:
    locs = [0]  # counter
    edges = []
    labels = {}
    internal = {}

    def fresh():
        locs[0] += 1
        return locs[0] - 1

    def emit(action, src, dst, stmt):
        edges.append((action, src, dst, stmt))

    def seq(stmts, exit_loc):
        entry = exit_loc
        for s in reversed(stmts):
            entry = one(s, entry)
        return entry

    def one(s, exit_loc):
        if isinstance(s, Skip):
            entry = exit_loc
        elif isinstance(s, (Assign, Lock, Unlock, Signal)):
            entry = fresh()
            action = {Assign: ASSIGN, Lock: LOCK, Unlock: UNLOCK, Signal: SIGNAL}[type(s)]
            emit(action, entry, exit_loc, s)
        elif isinstance(s, Wait):
            entry, w2, w3 = fresh(), fresh(), fresh()
            internal[w2] = "w2"
            internal[w3] = "w3"
            emit(WA1, entry, w2, s)
            emit(WA2, w2, w3, s)
            emit(WA3, w3, exit_loc, s)
        elif isinstance(s, If):
            entry = fresh()
            emit(TCD, entry, seq(s.then, exit_loc), s)
            emit(FCD, entry, seq(s.orelse, exit_loc), s)
        elif isinstance(s, While):
            entry = fresh()
            emit(TCD, entry, seq(s.body, entry), s)
            emit(FCD, entry, exit_loc, s)
        else:  # pragma: no cover - parser never produces anything else
            raise TypeError(s)
        if s.label is not None:
            labels[s.label] = entry
        return entry

    end = fresh()
    init = seq(body, end)
    emit(EXIT, end, end, None)

    # renumber locations in forward DFS order so names read naturally
    succ: dict[int, list] = {}
    for a, src, dst, st in edges:
        succ.setdefault(src, []).append(dst)
    order, seen, stack = [], set(), [init]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        order.append(v)
        stack.extend(reversed(succ.get(v, [])))
    for v in range(locs[0]):  # unreachable locations (none expected) keep a slot
        if v not in seen:
            order.append(v)
    ren = {old: new for new, old in enumerate(order)}
    # edges sorted by renamed source, keeping emission order among equals
    edges.sort(key=lambda e: ren[e[1]])
    out_edges = [Edge(a, ren[s], ren[d], st, i) for i, (a, s, d, st) in enumerate(edges)]
    cfg = ThreadCFG(
        tid, name, len(order), ren[init], ren[end], out_edges,
        {k: ren[v] for k, v in labels.items()},
        {ren[k]: v for k, v in internal.items()},
    )
    cfg.out = [[] for _ in range(cfg.n_locs)]
    for e in out_edges:
        cfg.out[e.src].append(e)
    return cfg


def build_cfgs(p: Program) -> list:
    return [_build_thread(t.tid, t.name, t.body) for t in p.threads]


def shortest_path(cfg: ThreadCFG, src: int, goal_edges, avoid=()) -> Optional[list]:
    """Fewest-edge path of edges from ``src`` ending with an edge in ``goal_edges``.

    Edges whose index is in ``avoid`` are never taken.  Ties are broken by
    edge index.  Returns None when no such path exists.
    """
    goal = set(goal_edges)
    avoid = set(avoid)
    best = {src: []}
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for e in cfg.out[v]:
                if e.index in avoid:
                    continue
                if e.index in goal:
                    return best[v] + [e]
                if e.dst not in best:
                    best[e.dst] = best[v] + [e]
                    nxt.append(e.dst)
        frontier = nxt
    return None
