import pytest
from hypothesis import given, strategies as st

from pdnet_ltl.errors import NotEnabled, RangeOverflow
from pdnet_ltl.frontend import build_pdnet, parse_program
from pdnet_ltl.ltl import parse_formula
from pdnet_ltl.pdnet import (
    BLACK,
    And,
    ArcKind,
    BinOp,
    Cmp,
    Const,
    Marking,
    PDNet,
    PlaceKind,
    ThreadMultiset,
    Tok,
    TransitionKind,
    int_color,
)
from pdnet_ltl.product import synchronize

from helpers import reachable_markings


def tiny_counter(hi=3):
    net = PDNet("counter")
    x = net.add_place("v_x", PlaceKind.Variable, int_color(0, hi), init=0)
    c0 = net.add_place("c0", PlaceKind.Control, init=BLACK)
    c1 = net.add_place("c1", PlaceKind.Control)
    t = net.add_transition("inc", TransitionKind.Assign, thread=1)
    net.add_input(c0, t, ArcKind.ControlArc)
    net.add_input(x, t, ArcKind.ReadWriteArc)
    net.add_output(t, c1, ArcKind.ControlArc)
    net.add_output(t, x, ArcKind.ReadWriteArc, BinOp("+", Tok(x, "v_x"), Const(1)))
    return net, x, c0, c1, t


def test_constant_evaluates_to_itself():
    assert Const(1).eval({}) == 1


def test_guard_from_monitor_label():
    vx, vz = 0, 1
    g = And(Cmp("=", Tok(vx), Const(1)), Cmp("!=", Tok(vz), Const(1)))
    assert g.eval({vx: 1, vz: 0}) is True
    assert g.eval({vx: 1, vz: 1}) is False


def test_overflow_at_range_max_is_an_error():
    net, x, c0, _c1, t = tiny_counter(hi=3)
    M = Marking({x: 3, c0: BLACK})
    with pytest.raises(RangeOverflow):
        net.fire(t, M)


def test_fire_assign_updates_variable_and_control():
    net, x, c0, c1, t = tiny_counter()
    M1 = net.fire(t, net.initial_marking)
    assert M1[x] == 1 and c1 in M1 and c0 not in M1


def test_fire_disabled_transition_raises():
    net, x, _c0, c1, t = tiny_counter()
    with pytest.raises(NotEnabled):
        net.fire(t, Marking({x: 0, c1: BLACK}))


def test_empty_marking_enables_nothing():
    net, *_ = tiny_counter()
    assert net.enabled_set(Marking()) == set()


def test_lock_disabled_when_mutex_token_missing():
    N, sm = build_pdnet(parse_program("mutex m;\nthread A { lock(m); unlock(m); }\n"))
    lock = next(t.id for t in N.transitions if t.kind is TransitionKind.Lock)
    M = dict(N.initial_marking)
    del M[sm.mutex_free["m"]]
    assert not N.is_enabled(lock, Marking(M))


def test_motivating_initial_enabled_are_the_three_thread_starts(motivating_net):
    N, _sm = motivating_net
    names = {N.transitions[t].name for t in N.enabled_set(N.initial_marking)}
    assert names == {"t1.0", "t2.0", "t3.0"}


def test_motivating_product_initially_blocks_visible_transitions(motivating_net):
    N, sm = motivating_net
    P, info = synchronize(N, sm, parse_formula("G((x=1) -> F(z=1))"))
    en = P.enabled_set(P.initial_marking)
    assert info.pB in P.initial_marking and info.pS not in P.initial_marking
    assert en & info.buchi_transitions
    # visible transitions wait for the monitor; invisible ones are not synchronized
    assert not en & info.visible
    assert {P.transitions[t].name for t in en - info.buchi_transitions} == {"t2.0"}


def test_monitor_step_moves_turn_and_keeps_observed_values(motivating_net):
    N, sm = motivating_net
    P, info = synchronize(N, sm, parse_formula("G((x=1) -> F(z=1))"))
    M0 = P.initial_marking
    t = sorted(P.enabled_set(M0) & info.buchi_transitions)[0]
    M1 = P.fire(t, M0)
    assert info.pS in M1 and info.pB not in M1
    for p in info.observables:
        assert M1[p] == M0[p]


def test_read_arc_detection(motivating_net):
    N, sm = motivating_net
    t30 = N.transition("t3.0")
    assert N.is_read_arc(sm.var_place["x"], t30)
    assert not N.is_read_arc(sm.var_place["z"], t30)


def test_black_places_reject_int_colors():
    net = PDNet()
    with pytest.raises(ValueError):
        net.add_place("c", PlaceKind.Control, int_color(0, 1))


def test_only_buchi_places_are_acceptable():
    net = PDNet()
    with pytest.raises(ValueError):
        net.add_place("v", PlaceKind.Variable, int_color(0, 1), init=0, acceptable=True)


def test_straight_line_firing_is_deterministic():
    N, _ = build_pdnet(parse_program("int a = 0 range 0..3;\nthread T { a = 1; a = a + 1; }\n"))
    M = N.initial_marking
    trace = []
    while True:
        en = [t for t in N.enabled_set(M) if N.transitions[t].kind is not TransitionKind.Exit]
        if not en:
            break
        assert len(en) == 1
        M = N.fire(en[0], M)
        trace.append(M)
    assert M[N.place("v_a")] == 2


@given(st.lists(st.integers(min_value=1, max_value=5), max_size=8))
def test_thread_multiset_never_holds_zero(ids):
    ms = ThreadMultiset()
    for i in ids:
        ms = ms.add(i)
    assert 0 not in ms
    assert len(ms) == len(ids)


@given(st.integers(min_value=0, max_value=3))
def test_int_colors_contain_exactly_their_range(v):
    c = int_color(0, 3)
    assert c.contains(v)
    assert not c.contains(v + 4)


def test_every_reachable_variable_token_is_in_range():
    for name in ("dekker", "peterson", "condvar"):
        from pdnet_ltl.benchmarks import bundled_source

        N, _ = build_pdnet(parse_program(bundled_source(name)))
        for M in reachable_markings(N):
            for p, v in M.items():
                assert N.places[p].color.contains(v)
