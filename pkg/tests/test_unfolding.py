import random

import pytest

from pdnet_ltl.baseline import maximal_configurations, unfold
from pdnet_ltl.benchmarks import BUNDLED, bundled, shared
from pdnet_ltl.errors import DuplicateEvent, NotAConfiguration
from pdnet_ltl.frontend import build_pdnet, parse_program
from pdnet_ltl.ltl import parse_formula
from pdnet_ltl.product import build_product
from pdnet_ltl.unfolding import BOTTOM, CutoffKind, Prefix, Relation, bits

from helpers import (
    all_configurations,
    check_prefix_invariants,
    random_linearization,
    reachable_markings,
    sample_configuration,
)


def plain_prefix(source):
    N, sm = build_pdnet(parse_program(source))
    return unfold(N, noncausal=False).prefix


def product_prefix(inst, formula=None):
    _N, _sm, P, info = build_product(parse_program(inst.source), parse_formula(formula or inst.formula))
    return unfold(P, info, noncausal=False).prefix


def event_of(pre, name):
    return next(e for e in range(pre.n_events) if pre.net.transitions[pre.ev_trans[e]].name == name)


@pytest.mark.parametrize("x", [0, 1, 5, 63, 64, 2**70 + 3, (1 << 200) - 1])
def test_bits_lists_set_positions(x):
    assert bits(x) == [i for i in range(x.bit_length()) if (x >> i) & 1]


def test_thread_starts_are_concurrent(motivating_source):
    pre = plain_prefix(motivating_source)
    assert pre.relation(event_of(pre, "t1.0"), event_of(pre, "t2.0")) is Relation.Concurrent


def brute_relation(pre, x, y):
    """Causality and conflict by explicit graph search over the condition graph."""
    def before(a, b):
        stack, seen = [b], set()
        while stack:
            e = stack.pop()
            for c in pre.ev_pre[e]:
                p = pre.cond_pre[c]
                if p == a:
                    return True
                if p != BOTTOM and p not in seen:
                    seen.add(p)
                    stack.append(p)
        return False

    if x != y and before(x, y):
        return Relation.Before
    if x != y and before(y, x):
        return Relation.After
    hist = lambda e: {e} | {a for a in range(pre.n_events) if before(a, e)}  # noqa: E731
    for a in hist(x):
        for b in hist(y):
            if a != b and set(pre.ev_pre[a]) & set(pre.ev_pre[b]):
                return Relation.Conflict
    return Relation.Concurrent


@pytest.mark.parametrize("name", ["motivating", "peterson", "lostwakeup"])
def test_relations_match_graph_search(name):
    pre = plain_prefix(bundled(name).source)
    for x in range(pre.n_events):
        for y in range(pre.n_events):
            assert pre.relation(x, y) is brute_relation(pre, x, y)


def test_consumer_is_causally_after_producer():
    pre = product_prefix(bundled("dekker"))
    for e in range(pre.n_events):
        for c in pre.ev_pre[e]:
            if pre.cond_pre[c] != BOTTOM:
                assert pre.relation(pre.cond_pre[c], e) is Relation.Before


def test_empty_configuration_cut_and_marking(motivating_source):
    pre = plain_prefix(motivating_source)
    cut, M = pre.cut_and_mark(0)
    assert cut == pre.min_bits and M == pre.net.initial_marking


def test_non_configuration_is_rejected():
    pre = plain_prefix(bundled("peterson").source)
    e = next(e for e in range(pre.n_events) if pre.anc[e] != 1 << e)
    with pytest.raises(NotAConfiguration):
        pre.cut_and_mark(1 << e)


@pytest.mark.parametrize("name", BUNDLED)
def test_linearizations_fire_to_the_cut_marking(name):
    pre = product_prefix(bundled(name))
    rng = random.Random(1)
    for _ in range(40):
        C = sample_configuration(pre, rng)
        _cut, mark = pre.cut_and_mark(C)
        for order in (pre.linearize(C), random_linearization(pre, C, rng)):
            M = pre.net.initial_marking
            for e in order:
                M = pre.net.fire(pre.ev_trans[e], M)
            assert M == mark


def test_two_maximal_configurations_of_motivating_program(motivating_source):
    pre = plain_prefix(motivating_source)
    confs = maximal_configurations(pre)
    assert len(confs) == 2
    good = [e for e in range(pre.n_events) if pre.cutoff[e].kind is CutoffKind.NotCutoff]
    marks = set()
    for C in all_configurations(pre):
        if C & ~sum(1 << e for e in good):
            continue
        _cut, M = pre.cut_and_mark(C)
        ext = [e for e in good if not (C >> e) & 1 and pre.is_configuration(C | (1 << e))]
        if not ext:
            marks.add(M)
    assert len(marks) == 2


def test_fresh_product_extensions_match_initial_enabling(motivating_source):
    inst = bundled("motivating")
    _N, _sm, P, info = build_product(parse_program(inst.source), parse_formula(inst.formula))
    pre = Prefix(P, info)
    assert {t for t, _chi in pre.possible_extensions_global()} == P.enabled_set(P.initial_marking)
    assert sorted(pre.extensions_at(pre.min_bits)) == sorted(pre.possible_extensions_global())


@pytest.mark.parametrize("name", ["motivating", "peterson", "condvar"])
def test_complete_prefix_has_no_usable_extension(name):
    N, _ = build_pdnet(parse_program(bundled(name).source))
    pre = unfold(N, noncausal=False).prefix
    assert pre.possible_extensions_global() == []


@pytest.mark.parametrize("name", ["motivating", "dekker"])
def test_local_extensions_match_enabled_transitions(name):
    pre = product_prefix(bundled(name))
    rng = random.Random(2)
    for _ in range(30):
        C = sample_configuration(pre, rng)
        cut, M = pre.cut_and_mark(C)
        assert {t for t, _ in pre.extensions_at(cut, M)} == pre.net.enabled_set(M)


def test_adequate_order_is_total_and_refines_inclusion():
    for pre in (plain_prefix(bundled("peterson").source), product_prefix(bundled("motivating"))):
        confs = sorted(all_configurations(pre))
        keys = [pre.config_key(C) for C in confs]
        assert len(set(keys)) == len(keys)
        for C1 in confs:
            for C2 in confs:
                if C1 != C2 and C1 & C2 == C1:
                    assert pre.adequate_less(C1, C2)


def test_local_configurations_nest():
    pre = product_prefix(bundled("dekker"))
    for e in range(pre.n_events):
        for a in bits(pre.anc[e]):
            if a != e:
                assert pre.local_key(a) < pre.local_key(e)


def test_first_thread_step_writes_the_new_value(motivating_source):
    N, sm = build_pdnet(parse_program(motivating_source))
    pre = Prefix(N)
    t10 = N.transition("t1.0")
    (chi,) = [chi for t, chi in pre.extensions_at(pre.min_bits) if t == t10]
    e = pre.add_event(t10, chi)
    vx = sm.var_place["x"]
    assert [pre.cond_value[c] for c in pre.ev_post[e] if pre.cond_place[c] == vx] == [1]
    assert pre.classify(e).kind is CutoffKind.NotCutoff
    with pytest.raises(DuplicateEvent):
        pre.add_event(t10, chi)


def test_motivating_product_ends_in_successful_cutoff():
    pre = product_prefix(bundled("motivating"))
    kinds = [pre.cutoff[e].kind for e in range(pre.n_events)]
    assert CutoffKind.SuccessI in kinds or CutoffKind.SuccessII in kinds


@pytest.mark.parametrize("name", ["dekker", "peterson", "condvar"])
def test_holding_properties_give_only_unsuccessful_cutoffs(name):
    pre = product_prefix(bundled(name))
    kinds = {pre.cutoff[e].kind for e in range(pre.n_events)}
    assert kinds <= {CutoffKind.NotCutoff, CutoffKind.Unsuccessful}


@pytest.mark.parametrize("name", BUNDLED)
def test_occurrence_net_invariants(name):
    check_prefix_invariants(product_prefix(bundled(name)))
    check_prefix_invariants(plain_prefix(bundled(name).source))


def test_non_cutoff_events_bounded_by_squared_state_count():
    for inst in (bundled("peterson"), bundled("condvar"), shared(2, 3)):
        _N, _sm, P, info = build_product(parse_program(inst.source), parse_formula(inst.formula))
        S = len(reachable_markings(P))
        pre = unfold(P, info).prefix
        n = sum(1 for r in pre.cutoff if r.kind is CutoffKind.NotCutoff)
        assert n <= S * S


def test_canonical_ids_agree_across_prefixes():
    inst = bundled("peterson")
    N, _ = build_pdnet(parse_program(inst.source))
    a, b = unfold(N, noncausal=False).prefix, unfold(N, noncausal=False).prefix
    table = {}
    assert {a.canonical(e, table) for e in range(a.n_events)} == {b.canonical(e, table) for e in range(b.n_events)}


def test_prefix_dot_counts():
    from pdnet_ltl.dot import dot_counts

    pre = plain_prefix(bundled("motivating").source)
    nodes, edges = dot_counts(pre.to_dot())
    assert nodes == pre.n_events + pre.n_conditions
    assert edges == sum(len(pre.ev_pre[e]) + len(pre.ev_post[e]) for e in range(pre.n_events))
