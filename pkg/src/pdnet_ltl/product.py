"""Synchronize a program net with the Büchi net of a negated formula.

Only visible transitions take turns with the automaton, through two
scheduler places: ``P_B`` (automaton's turn, initially marked) and ``P_S``
(program's turn).  Invisible transitions run freely.  A closing transition
``t_f`` may fire on the program's turn; it moves the token from ``P_S`` to a
frozen place ``P_F`` so nothing synchronized can follow, which marks the
point where the observation stops changing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .errors import UnknownAtomTarget
from .frontend.builder import SourceMap
from .ltl import (
    FALSE,
    TRUE,
    And,
    Atom,
    BuchiAutomaton,
    FalseF,
    Fireable,
    Formula,
    Not,
    Or,
    TrueF,
    atoms_of,
    negate_nnf,
    to_buchi,
)
from .pdnet import (
    BLACK,
    And as EAnd,
    ArcKind,
    Cmp,
    Const,
    Not as ENot,
    Or as EOr,
    PDNet,
    PlaceKind,
    Tok,
    TransitionKind,
)


@dataclass
class ProductInfo:
    observables: frozenset
    visible: frozenset
    invisible: frozenset
    pB: int
    pS: int
    pF: int
    tf: int
    automaton: BuchiAutomaton
    buchi_place: dict  # automaton state -> place id
    buchi_transitions: frozenset
    n_program_transitions: int
    n_program_places: int
    atoms: dict  # atom -> ("var", place) or ("loc", control place)
    exits: frozenset = field(default_factory=frozenset)
    program: Optional[PDNet] = None  # the unsynchronized program net

    def state_of(self, M) -> Optional[int]:
        for q, p in self.buchi_place.items():
            if p in M:
                return q
        return None

    def letter(self, M) -> frozenset:
        """Atoms true in marking M."""
        out = set()
        for a, (kind, data) in self.atoms.items():
            if kind == "var":
                if a.holds(M[data]):
                    out.add(a)
            elif data in M:
                out.add(a)
        return frozenset(out)

    def decompose(self, M):
        """Split a product marking into (automaton state, scheduler part, observed part, rest)."""
        q = self.state_of(M)
        sched = {p: M[p] for p in (self.pB, self.pS, self.pF) if p in M}
        obs = {p: M[p] for p in self.observables if p in M}
        buchi = set(self.buchi_place.values())
        rest = {
            p: v for p, v in M.items()
            if p not in obs and p not in sched and p not in buchi
        }
        return q, sched, obs, rest


def _resolve_atoms(atoms, sm: SourceMap):
    """atom -> (kind, data) with kind 'var' (place) or 'loc' (tid, loc)."""
    out = {}
    for a in atoms:
        if isinstance(a, Atom):
            if a.var not in sm.var_place:
                raise UnknownAtomTarget(f"unknown variable {a.var!r} in formula")
            out[a] = ("var", sm.var_place[a.var])
        elif isinstance(a, Fireable):
            loc = sm.label_location(a.thread, a.label)
            if loc is None:
                raise UnknownAtomTarget(f"unknown statement label {a.thread}.{a.label}")
            out[a] = ("loc", loc)
        else:  # pragma: no cover
            raise TypeError(a)
    return out


def observable_places(N: PDNet, sm: SourceMap, phi: Formula) -> frozenset:
    """Variable places of value atoms; for a fireable atom, the control place
    of its statement plus the variable places a guarded transition leaving
    that statement reads."""
    obs = set()
    for a, (kind, data) in _resolve_atoms(atoms_of(phi), sm).items():
        if kind == "var":
            obs.add(data)
            continue
        src = sm.control[data]
        obs.add(src)
        for t in N.consumers[src]:
            g = N.transitions[t].guard
            if g is not None and g.places():
                obs.update(p for p in N.pre[t] if N.places[p].kind is PlaceKind.Variable)
    return frozenset(obs)


def visible_transitions(N: PDNet, obs) -> frozenset:
    """Program transitions that change an observable variable place or move a
    token on an observable control or execution place.  Thread-end self-loops
    change nothing and are never visible."""
    vis = set()
    for t in N.program_transitions():
        if N.transitions[t].kind is TransitionKind.Exit:
            continue
        for p in obs:
            kind = N.places[p].kind
            adjacent = p in N.pre[t] or p in N.post[t]
            if not adjacent:
                continue
            if kind is PlaceKind.Execution or not N.is_read_arc(p, t):
                # control places are never read-only, so any adjacency moves the token
                vis.add(t)
                break
    return frozenset(vis)


def _substitute(f: Formula, val: dict) -> Formula:
    """Replace atoms fixed by ``val`` with constants and simplify."""
    if isinstance(f, (TrueF, FalseF)):
        return f
    if f in val:
        return TRUE if val[f] else FALSE
    if isinstance(f, (Atom, Fireable)):
        return f
    if isinstance(f, Not):
        a = _substitute(f.arg, val)
        if isinstance(a, TrueF):
            return FALSE
        if isinstance(a, FalseF):
            return TRUE
        return Not(a)
    a, b = _substitute(f.left, val), _substitute(f.right, val)
    if isinstance(f, And):
        if isinstance(a, FalseF) or isinstance(b, FalseF):
            return FALSE
        if isinstance(a, TrueF):
            return b
        if isinstance(b, TrueF):
            return a
        return And(a, b)
    if isinstance(f, Or):
        if isinstance(a, TrueF) or isinstance(b, TrueF):
            return TRUE
        if isinstance(a, FalseF):
            return b
        if isinstance(b, FalseF):
            return a
        return Or(a, b)
    raise TypeError(f)


def _label_expr(f: Formula, resolved, names):
    if isinstance(f, TrueF):
        return Const(True)
    if isinstance(f, FalseF):
        return Const(False)
    if isinstance(f, Atom):
        p = resolved[f][1]
        return Cmp(f.op, Tok(p, names[p]), Const(f.value))
    if isinstance(f, Not):
        return ENot(_label_expr(f.arg, resolved, names))
    if isinstance(f, And):
        return EAnd(_label_expr(f.left, resolved, names), _label_expr(f.right, resolved, names))
    if isinstance(f, Or):
        return EOr(_label_expr(f.left, resolved, names), _label_expr(f.right, resolved, names))
    raise TypeError(f)


def synchronize(N: PDNet, sm: SourceMap, phi: Formula,
                automaton: Optional[BuchiAutomaton] = None) -> tuple[PDNet, ProductInfo]:
    A = automaton if automaton is not None else to_buchi(negate_nnf(phi))
    atoms = atoms_of(phi) | A.atoms()
    resolved = _resolve_atoms(atoms, sm)
    obs = observable_places(N, sm, phi)
    for a, (kind, data) in resolved.items():  # atoms only in a hand-written automaton
        obs = obs | {data if kind == "var" else sm.control[data]}
    vis = visible_transitions(N, obs)

    P = PDNet("product")
    for pl in N.places:
        P.add_place(pl.name, pl.kind, pl.color, pl.init)
    buchi_place = {
        q: P.add_place(f"q{q}", PlaceKind.Buchi, init=BLACK if q == A.init else None,
                       acceptable=q in A.accepting)
        for q in A.states
    }
    pB = P.add_place("P_B", PlaceKind.Scheduler, init=BLACK)
    pS = P.add_place("P_S", PlaceKind.Scheduler)

    for tr in N.transitions:
        t = P.add_transition(tr.name, tr.kind, tr.guard, tr.thread, tr.info)
        for p, arc in N.pre[tr.id].items():
            P.add_input(p, t, arc.kind)
        for p, arc in N.post[tr.id].items():
            P.add_output(t, p, arc.kind, arc.expr)
        if t in vis:
            P.add_input(pS, t, ArcKind.SchedulerArc)
            P.add_output(t, pB, ArcKind.SchedulerArc)

    names = {p.id: p.name for p in P.places}
    buchi_ts = []
    n_i = n_u = 0
    for q, label, q2 in A.trans:
        fire_atoms = sorted((a for a in atoms_of(label) if isinstance(a, Fireable)), key=str)
        threads = sorted({resolved[a][1][0] for a in fire_atoms})
        loc_choices = [range(sm.cfgs[tid - 1].n_locs) for tid in threads]
        for locs in itertools.product(*loc_choices):
            where = dict(zip(threads, locs))
            val = {a: where[resolved[a][1][0]] == resolved[a][1][1] for a in fire_atoms}
            lab = _substitute(label, val)
            if isinstance(lab, FalseF):
                continue
            into_acc = q2 in A.accepting
            if into_acc:
                base, n_i = f"I{n_i}", n_i + 1
            else:
                base, n_u = f"u{n_u}", n_u + 1
            suffix = "".join(f"@{sm.cfgs[tid - 1].name}.l{loc}" for tid, loc in where.items())
            guard = None if isinstance(lab, TrueF) else _label_expr(lab, resolved, names)
            t = P.add_transition(
                base + suffix, TransitionKind.Buchi, guard=guard,
                info=(("label", label), ("src", q), ("dst", q2)),
            )
            P.add_input(buchi_place[q], t, ArcKind.ControlArc)
            P.add_output(t, buchi_place[q2], ArcKind.ControlArc)
            P.add_input(pB, t, ArcKind.SchedulerArc)
            P.add_output(t, pS, ArcKind.SchedulerArc)
            for p in sorted({resolved[a][1] for a in atoms_of(lab)}):
                P.add_read(p, t, ArcKind.ObservationArc)
            for tid, loc in where.items():
                P.add_read(sm.control[(tid, loc)], t, ArcKind.ObservationArc)
            if into_acc:
                P.i_transitions.add(t)
            buchi_ts.append(t)

    idle_places = [p.id for p in P.places if not P.consumers[p.id]]
    pF = P.add_place("P_F", PlaceKind.Scheduler)
    tf = P.add_transition("t_f", TransitionKind.Tf)
    P.add_input(pS, tf, ArcKind.SchedulerArc)
    P.add_output(tf, pF, ArcKind.SchedulerArc)
    for p in idle_places:
        P.add_read(p, tf, ArcKind.SchedulerArc)
    P.tf = tf

    n_prog = len(N.transitions)
    info = ProductInfo(
        observables=obs,
        visible=vis,
        invisible=frozenset(range(n_prog)) - vis,
        pB=pB,
        pS=pS,
        pF=pF,
        tf=tf,
        automaton=A,
        buchi_place=buchi_place,
        buchi_transitions=frozenset(buchi_ts),
        n_program_transitions=n_prog,
        n_program_places=len(N.places),
        atoms={a: (k, d if k == "var" else sm.control[d]) for a, (k, d) in resolved.items()},
        exits=frozenset(t.id for t in N.transitions if t.kind is TransitionKind.Exit),
        program=N,
    )
    return P, info


def build_product(p, phi: Formula, automaton: Optional[BuchiAutomaton] = None):
    """Program -> (program net, source map, product net, product info)."""
    from .frontend.builder import build_pdnet

    N, sm = build_pdnet(p)
    P, info = synchronize(N, sm, phi, automaton)
    return N, sm, P, info


def transition_step(P: PDNet, sm: SourceMap, t: int):
    from .verdict import Step

    tr = P.transitions[t]
    if tr.kind is TransitionKind.Buchi:
        return Step(None, f"<monitor {tr.name}>", t)
    if tr.kind is TransitionKind.Tf:
        return Step(None, "<observation frozen>", t)
    return Step(tr.thread, sm.describe(t), t)


def to_counterexample(P: PDNet, sm: SourceMap, stem, cycle, livelock: bool):
    """Wrap a product lasso of transition ids as a source-mapped counterexample."""
    from .verdict import INFINITE_TRACE, LIVELOCK, Counterexample

    return Counterexample(
        LIVELOCK if livelock else INFINITE_TRACE,
        [transition_step(P, sm, t) for t in stem],
        [transition_step(P, sm, t) for t in cycle],
    )
