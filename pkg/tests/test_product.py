import random

import pytest

from pdnet_ltl.benchmarks import BUNDLED, bundled
from pdnet_ltl.frontend import build_pdnet, parse_program, project_marking
from pdnet_ltl.ltl import parse_formula
from pdnet_ltl.pdnet import ArcKind, PlaceKind, TransitionKind
from pdnet_ltl.product import build_product, observable_places, synchronize, visible_transitions

PSI = "G((x=1) -> F(z=1))"


def names(net, ids, places=False):
    items = net.places if places else net.transitions
    return {items[i].name for i in ids}


def test_motivating_observables(motivating_net):
    N, sm = motivating_net
    assert names(N, observable_places(N, sm, parse_formula(PSI)), places=True) == {"v_x", "v_z"}


def test_true_has_no_observables(motivating_net):
    N, sm = motivating_net
    assert observable_places(N, sm, parse_formula("true")) == frozenset()


def test_fireable_lock_observes_exactly_its_control_place():
    p = parse_program("mutex m;\nthread A { L: lock(m); unlock(m); }\nthread B { lock(m); unlock(m); }\n")
    N, sm = build_pdnet(p)
    obs = observable_places(N, sm, parse_formula("G(fireable(A.L) -> F(!fireable(A.L)))"))
    lock = next(t for t in N.transitions if t.kind is TransitionKind.Lock and t.thread == 1)
    ctrl = [q for q in N.pre[lock.id] if N.places[q].kind is PlaceKind.Control]
    assert obs == frozenset(ctrl)


def test_motivating_visible_transitions(motivating_net):
    N, sm = motivating_net
    obs = observable_places(N, sm, parse_formula(PSI))
    assert names(N, visible_transitions(N, obs)) == {"t1.0", "t3.0"}
    assert visible_transitions(N, frozenset()) == frozenset()


@pytest.mark.parametrize("name", BUNDLED)
def test_assignments_to_observed_variables_are_visible(name):
    inst = bundled(name)
    N, sm = build_pdnet(parse_program(inst.source))
    obs = observable_places(N, sm, parse_formula(inst.formula))
    vis = visible_transitions(N, obs)
    for t in N.program_transitions():
        writes = {p for p in N.pre[t] if p in obs and not N.is_read_arc(p, t)}
        if writes and N.transitions[t].kind is TransitionKind.Assign:
            assert t in vis
        if N.transitions[t].kind in (TransitionKind.BranchTrue, TransitionKind.BranchFalse):
            if not {p for p in obs if p in N.pre[t] or p in N.post[t]} - {
                p for p in N.pre[t] if N.places[p].kind is PlaceKind.Variable
            }:
                assert t not in vis  # a pure read of observed variables


def test_synchronization_arcs_are_exactly_the_new_ones(motivating_net):
    N, sm = motivating_net
    P, info = synchronize(N, sm, parse_formula(PSI))
    assert not [a for a in N.arcs if a.kind in (ArcKind.ObservationArc, ArcKind.SchedulerArc)]
    program_arcs = {(a.place, a.transition, a.to_transition, a.kind) for a in N.arcs}
    for a in P.arcs:
        key = (a.place, a.transition, a.to_transition, a.kind)
        is_sync = a.kind in (ArcKind.ObservationArc, ArcKind.SchedulerArc)
        monitor_flow = P.places[a.place].kind is PlaceKind.Buchi
        assert (key in program_arcs) or is_sync or monitor_flow
    obs_arcs = {(a.place, a.transition) for a in P.arcs if a.kind is ArcKind.ObservationArc}
    assert {p for p, _ in obs_arcs} == set(info.observables)
    assert {t for _, t in obs_arcs} <= info.buchi_transitions


def test_no_observables_means_scheduler_only_interaction(motivating_net):
    N, sm = motivating_net
    P, info = synchronize(N, sm, parse_formula("true"))
    monitor = info.buchi_transitions
    for t in monitor:
        touched = set(P.pre[t]) | set(P.post[t])
        assert touched <= set(info.buchi_place.values()) | {info.pB, info.pS}


def random_runs(P, steps, seed, runs):
    rng = random.Random(seed)
    for _ in range(runs):
        M = P.initial_marking
        trace = []
        for _ in range(steps):
            en = sorted(P.enabled_set(M))
            if not en:
                break
            t = rng.choice(en)
            trace.append((t, M))
            M = P.fire(t, M)
        yield trace, M


@pytest.mark.parametrize("name", BUNDLED)
def test_visible_steps_alternate_with_monitor_steps(name):
    inst = bundled(name)
    _N, _sm, P, info = build_product(parse_program(inst.source), parse_formula(inst.formula))
    for trace, _ in random_runs(P, 60, seed=7, runs=20):
        last_visible = False
        for t, _M in trace:
            if t in info.visible:
                assert not last_visible
                last_visible = True
            elif t in info.buchi_transitions:
                last_visible = False


@pytest.mark.parametrize("name", BUNDLED)
def test_freezing_never_changes_the_program_marking(name):
    inst = bundled(name)
    _N, sm, P, info = build_product(parse_program(inst.source), parse_formula(inst.formula))
    prog = range(info.n_program_places)
    for trace, _ in random_runs(P, 40, seed=3, runs=20):
        for t, M in trace:
            if t == info.tf:
                M2 = P.fire(t, M)
                assert {p: M[p] for p in prog if p in M} == {p: M2[p] for p in prog if p in M2}


@pytest.mark.parametrize("name", BUNDLED)
def test_letter_matches_interpreter_valuation(name):
    inst = bundled(name)
    p = parse_program(inst.source)
    _N, sm, P, info = build_product(p, parse_formula(inst.formula))
    for trace, _ in random_runs(P, 30, seed=11, runs=10):
        for _t, M in trace:
            s = project_marking({q: M[q] for q in range(info.n_program_places) if q in M}, sm)
            env = {g.name: s.m[k] for k, g in enumerate(p.globals)}
            for a in info.atoms:
                assert (a in info.letter(M)) == a.holds(env[a.var])


def test_exit_loops_are_invisible(motivating_net):
    N, sm = motivating_net
    P, info = synchronize(N, sm, parse_formula(PSI))
    assert info.exits and not info.exits & info.visible


def test_unknown_atom_target_is_reported(motivating_net):
    from pdnet_ltl.errors import UnknownAtomTarget

    N, sm = motivating_net
    with pytest.raises(UnknownAtomTarget):
        synchronize(N, sm, parse_formula("G(w=1)"))
