"""Compile a parsed program into a PDNet.

Place layout per construct:

* one control place per (thread, location), the initial one marked;
* one execution place per thread, read by every transition of the thread;
* one variable place per global holding its current integer;
* two places per mutex: ``free`` (black token when unlocked) and ``held``
  (the holder's thread id when locked), exactly one of them marked;
* one place per condition variable holding a ThreadMultiset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..pdnet import (
    BLACK,
    THREAD_COLOR,
    TMSET_COLOR,
    And,
    ArcKind,
    Cmp,
    Const,
    MsAdd,
    MsContains,
    MsNoPositive,
    MsNotify,
    MsRemove,
    Not,
    PDNet,
    PlaceKind,
    ThreadMultiset,
    Tok,
    TransitionKind,
    map_expr,
)
from . import cfg as C
from .ast import Program, Var, expr_vars, stmt_text

_KIND = {
    C.ASSIGN: TransitionKind.Assign,
    C.TCD: TransitionKind.BranchTrue,
    C.FCD: TransitionKind.BranchFalse,
    C.LOCK: TransitionKind.Lock,
    C.UNLOCK: TransitionKind.Unlock,
    C.WA1: TransitionKind.Wait1,
    C.WA2: TransitionKind.Wait2,
    C.WA3: TransitionKind.Wait3,
    C.SIGNAL: TransitionKind.Signal,
    C.EXIT: TransitionKind.Exit,
}


@dataclass
class SourceMap:
    """Links net nodes back to the program."""

    program: Program
    cfgs: list
    control: dict = field(default_factory=dict)  # (tid, loc) -> place id
    loc_of_place: dict = field(default_factory=dict)  # place id -> (tid, loc)
    exec_place: dict = field(default_factory=dict)  # tid -> place id
    var_place: dict = field(default_factory=dict)  # global -> place id
    mutex_free: dict = field(default_factory=dict)
    mutex_held: dict = field(default_factory=dict)
    cond_place: dict = field(default_factory=dict)
    edge_of: dict = field(default_factory=dict)  # transition id -> Edge
    thread_transitions: dict = field(default_factory=dict)  # tid -> [transition ids]
    signal_target: dict = field(default_factory=dict)  # transition -> waiter id (0 = empty queue)
    tid_of: dict = field(default_factory=dict)  # transition -> thread id

    def describe(self, t: int) -> str:
        e = self.edge_of.get(t)
        if e is None:
            return "?"
        cfg = self.cfgs[self.tid_of[t] - 1]
        if e.action == C.EXIT:
            return f"{cfg.name}: <end>"
        text = stmt_text(e.stmt)
        if e.action in (C.TCD, C.FCD):
            text += " [true]" if e.action == C.TCD else " [false]"
        elif e.action in (C.WA1, C.WA2, C.WA3):
            text += {C.WA1: " [release]", C.WA2: " [wake]", C.WA3: " [reacquire]"}[e.action]
        return f"{cfg.name}: {text}"

    def line_of(self, t: int) -> int:
        e = self.edge_of.get(t)
        return 0 if e is None or e.stmt is None else e.stmt.line

    def label_location(self, thread: str, label: str):
        for cfg in self.cfgs:
            if cfg.name == thread:
                if label not in cfg.labels:
                    return None
                return cfg.tid, cfg.labels[label]
        return None


def build_pdnet(p: Program, name: str = "program") -> tuple[PDNet, SourceMap]:
    net = PDNet(name)
    cfgs = C.build_cfgs(p)
    sm = SourceMap(p, cfgs)

    for g in p.globals:
        sm.var_place[g.name] = net.add_place(f"v_{g.name}", PlaceKind.Variable, g.color, g.init)
    for m in p.mutexes:
        sm.mutex_free[m] = net.add_place(f"{m}.free", PlaceKind.Variable, init=BLACK)
        sm.mutex_held[m] = net.add_place(f"{m}.held", PlaceKind.Variable, THREAD_COLOR)
    for c in p.conds:
        sm.cond_place[c] = net.add_place(f"{c}.queue", PlaceKind.Variable, TMSET_COLOR, ThreadMultiset())
    for cfg in cfgs:
        sm.exec_place[cfg.tid] = net.add_place(f"f{cfg.tid}", PlaceKind.Execution, init=BLACK)
        for loc in range(cfg.n_locs):
            pid = net.add_place(
                f"{cfg.name}.l{loc}", PlaceKind.Control, init=BLACK if loc == cfg.init else None
            )
            sm.control[(cfg.tid, loc)] = pid
            sm.loc_of_place[pid] = (cfg.tid, loc)

    waiters = _waiters_per_cond(cfgs)
    for cfg in cfgs:
        sm.thread_transitions[cfg.tid] = []
        counter = 0
        for e in cfg.edges:
            if e.action == C.EXIT:
                names = [(f"t{cfg.tid}.end", None)]
            elif e.action == C.SIGNAL:
                base = f"t{cfg.tid}.{counter}"
                counter += 1
                names = [(f"{base}.sig{j}", j) for j in waiters[e.stmt.cond] if j != cfg.tid]
                names.append((f"{base}.sig_none", 0))
            else:
                names = [(f"t{cfg.tid}.{counter}", None)]
                counter += 1
            for tname, j in names:
                t = _add_transition(net, sm, cfg, e, tname, j)
                sm.edge_of[t] = e
                sm.tid_of[t] = cfg.tid
                sm.thread_transitions[cfg.tid].append(t)
                if j is not None:
                    sm.signal_target[t] = j
    return net, sm


def _waiters_per_cond(cfgs):
    out = {}
    for cfg in cfgs:
        for e in cfg.edges:
            if e.action == C.WA1:
                out.setdefault(e.stmt.cond, set()).add(cfg.tid)
            elif e.action == C.SIGNAL:
                out.setdefault(e.stmt.cond, set())
    return {c: sorted(v) for c, v in out.items()}


def _to_net_expr(e, sm):
    return map_expr(e, lambda n: Tok(sm.var_place[n.name], f"v_{n.name}") if isinstance(n, Var) else None)


def _add_transition(net: PDNet, sm: SourceMap, cfg, e, tname: str, signal_j: Optional[int]) -> int:
    i = cfg.tid
    st = e.stmt
    guard = None
    info = (("stmt", stmt_text(st) if st is not None else "<end>"), ("line", st.line if st else 0))
    t = net.add_transition(tname, _KIND[e.action], thread=i, info=info)

    src = sm.control[(i, e.src)]
    dst = sm.control[(i, e.dst)]
    net.add_input(src, t, ArcKind.ControlArc)
    net.add_output(t, dst, ArcKind.ControlArc)
    net.add_read(sm.exec_place[i], t, ArcKind.ExecutionArc)

    a = e.action
    if a == C.ASSIGN:
        v = sm.var_place[st.var]
        for name in sorted(expr_vars(st.expr) - {st.var}):
            net.add_read(sm.var_place[name], t, ArcKind.ReadWriteArc)
        net.add_input(v, t, ArcKind.ReadWriteArc)
        net.add_output(t, v, ArcKind.ReadWriteArc, _to_net_expr(st.expr, sm))
    elif a in (C.TCD, C.FCD):
        for name in sorted(expr_vars(st.cond)):
            net.add_read(sm.var_place[name], t, ArcKind.ReadWriteArc)
        g = _to_net_expr(st.cond, sm)
        guard = g if a == C.TCD else Not(g)
    elif a in (C.LOCK, C.WA3):
        net.add_input(sm.mutex_free[st.mutex], t, ArcKind.ReadWriteArc)
        net.add_output(t, sm.mutex_held[st.mutex], ArcKind.ReadWriteArc, Const(i))
    elif a == C.UNLOCK:
        held = sm.mutex_held[st.mutex]
        net.add_input(held, t, ArcKind.ReadWriteArc)
        net.add_output(t, sm.mutex_free[st.mutex], ArcKind.ReadWriteArc)
        guard = Cmp("=", Tok(held, net.places[held].name), Const(i))
    elif a == C.WA1:
        held = sm.mutex_held[st.mutex]
        q = sm.cond_place[st.cond]
        qtok = Tok(q, net.places[q].name)
        net.add_input(held, t, ArcKind.ReadWriteArc)
        net.add_output(t, sm.mutex_free[st.mutex], ArcKind.ReadWriteArc)
        net.add_input(q, t, ArcKind.ReadWriteArc)
        net.add_output(t, q, ArcKind.ReadWriteArc, MsAdd(qtok, i))
        guard = And(Cmp("=", Tok(held, net.places[held].name), Const(i)), Not(MsContains(qtok, i)))
    elif a == C.WA2:
        q = sm.cond_place[st.cond]
        qtok = Tok(q, net.places[q].name)
        net.add_read(sm.mutex_free[st.mutex], t, ArcKind.ReadWriteArc)
        net.add_input(q, t, ArcKind.ReadWriteArc)
        net.add_output(t, q, ArcKind.ReadWriteArc, MsRemove(qtok, -i))
        guard = MsContains(qtok, -i)
    elif a == C.SIGNAL:
        q = sm.cond_place[st.cond]
        qtok = Tok(q, net.places[q].name)
        net.add_input(q, t, ArcKind.ReadWriteArc)
        if signal_j:
            net.add_output(t, q, ArcKind.ReadWriteArc, MsNotify(qtok, signal_j))
            guard = MsContains(qtok, signal_j)
        else:
            net.add_output(t, q, ArcKind.ReadWriteArc, qtok)
            guard = MsNoPositive(qtok)
    if guard is not None:
        net.set_guard(t, guard)
    return t
