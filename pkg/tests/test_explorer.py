import pytest

from pdnet_ltl.baseline import maximal_configurations, unfold
from pdnet_ltl.benchmarks import bundled, concur, shared
from pdnet_ltl.errors import ResourceBoundExceeded
from pdnet_ltl.explorer import Explorer, check, explore_net, structural_conflicts, terminal_configurations
from pdnet_ltl.frontend import build_pdnet, oracle_check, parse_program
from pdnet_ltl.ltl import parse_formula
from pdnet_ltl.pdnet import TransitionKind
from pdnet_ltl.product import build_product

STRAIGHT = "int a = 0 range 0..3;\nthread T { a = 1; a = 2; a = 3; }\n"


def plain(source, **kw):
    N, sm = build_pdnet(parse_program(source))
    return N, sm, Explorer(N, sm, **kw)


def test_motivating_tree_structure(motivating_source):
    N, sm, ex = plain(motivating_source, noncausal=False, record_tree=True)
    res = ex.run()
    t10, t30 = N.transition("t1.0"), N.transition("t3.0")
    root_children = [n for n in res.tree if n.parent == 0]
    left = next(n for n in root_children if n.side == "left")
    right = next(n for n in root_children if n.side == "right")
    assert left.t == t10
    assert right.kappa == frozenset({t10}) and right.eta == frozenset({t30})
    assert len(res.terminals) == 2
    assert len(set(terminal_configurations(res))) == 2


def test_firing_a_conflicting_transition_releases_the_delay(motivating_source):
    N, sm, ex = plain(motivating_source, noncausal=False, record_tree=True)
    res = ex.run()
    t10, t30 = N.transition("t1.0"), N.transition("t3.0")
    after_t30 = [n for n in res.tree if n.t == t30 and n.side == "left"]
    assert after_t30
    for n in after_t30:
        children = [c for c in res.tree if c.parent == n.id]
        assert all(t10 not in c.kappa for c in children if c.side == "left")


def test_single_thread_tree_is_a_left_spine():
    _N, _sm, ex = plain(STRAIGHT, record_tree=True)
    res = ex.run()
    assert all(n.side in ("root", "left") for n in res.tree)
    assert [n.parent for n in res.tree] == [None] + list(range(len(res.tree) - 1))
    assert len(res.terminals) == 1


def test_alt_at_motivating_root(motivating_source):
    N, sm, ex = plain(motivating_source)
    M0 = N.initial_marking
    t10, t20, t30 = (N.transition(n) for n in ("t1.0", "t2.0", "t3.0"))
    ten = frozenset({t10, t20, t30})
    assert ex.alt(M0, frozenset({t10}), frozenset(), ten) == frozenset({t30})
    assert ex.alt(M0, frozenset({99}), frozenset(), ten) == frozenset()


def test_alt_ignores_a_stale_guide():
    # every other thread already locked; t2.1 left over in the guide must not hide the alternative
    N, sm = build_pdnet(parse_program(shared(2).source))
    ex = Explorer(N, sm)
    l1, l2 = N.transition("t1.1"), N.transition("t2.1")
    M = N.initial_marking
    for name in ("t1.0", "t2.0"):
        M = N.fire(N.transition(name), M)
    assert ex.alt(M, frozenset({l1}), frozenset({l2}), frozenset({l1, l2})) == frozenset({l2})
    assert ex.alt(M, frozenset({l1, l2}), frozenset(), frozenset({l1, l2})) == frozenset()


def test_alt_skips_successors_of_the_delayed_transition():
    N, _sm, ex = plain(STRAIGHT)
    t0 = N.transition("t1.0")
    assert ex.alt(N.initial_marking, frozenset({t0}), frozenset(), frozenset({t0})) == frozenset()


def test_closure_of_enabled_transition_is_itself(motivating_source):
    N, _sm, ex = plain(motivating_source)
    t30 = N.transition("t3.0")
    assert ex.closure(t30, N.initial_marking) == frozenset({t30})


def test_closure_two_statements_ahead():
    N, _sm, ex = plain(STRAIGHT)
    t0, t1, t2 = (N.transition(f"t1.{i}") for i in range(3))
    assert ex.closure(t2, N.initial_marking) == frozenset({t0, t1, t2})


@pytest.mark.parametrize("name", ["dekker", "peterson", "lamport", "condvar"])
def test_closures_are_thread_chains(name):
    N, sm = build_pdnet(parse_program(bundled(name).source))
    ex = Explorer(N, sm)
    M0 = N.initial_marking
    for t in N.program_transitions():
        if N.transitions[t].kind is TransitionKind.Exit:
            continue
        cl = ex.closure(t, M0)
        if not cl:
            continue
        assert t in cl
        assert {N.transitions[u].thread for u in cl} == {N.transitions[t].thread}
        # the other members form a control-flow path from the thread's start to t
        cfg = sm.cfgs[N.transitions[t].thread - 1]
        reached, frontier = {cfg.init}, [cfg.init]
        while frontier:
            loc = frontier.pop()
            for u in cl - {t}:
                e = sm.edge_of[u]
                if e.src == loc and e.dst not in reached:
                    reached.add(e.dst)
                    frontier.append(e.dst)
        assert sm.edge_of[t].src in reached


def test_structural_conflicts_exclude_exits(motivating_net):
    N, _ = motivating_net
    conf = structural_conflicts(N)
    exits = {t.id for t in N.transitions if t.kind is TransitionKind.Exit}
    for t in range(len(N.transitions)):
        assert not conf[t] & exits
        assert t not in conf[t]


@pytest.mark.parametrize("inst", [bundled("motivating"), bundled("dekker"), bundled("peterson"),
                                  bundled("lamport"), bundled("condvar"), shared(3), shared(4),
                                  shared(5), concur(3, True)],
                         ids=lambda i: i.name)
def test_terminals_equal_baseline_maximal_configurations(inst):
    N, sm = build_pdnet(parse_program(inst.source))
    res = explore_net(N, sm, noncausal=False)
    base = unfold(N, noncausal=False).prefix
    table = {}
    terms = terminal_configurations(res, table)
    assert len(terms) == len(set(terms))
    assert set(terms) == maximal_configurations(base, table=table)


def test_terminals_are_duplicate_free_on_products():
    inst = bundled("dekker")
    _N, sm, P, info = build_product(parse_program(inst.source), parse_formula(inst.formula))
    res = explore_net(P, sm, info)
    terms = terminal_configurations(res)
    assert len(terms) == len(set(terms))


def test_motivating_counterexample(motivating_program):
    v = check(motivating_program, parse_formula("G((x=1) -> F(z=1))"))
    assert not v.holds
    stem, cycle = v.counterexample.program_steps()
    texts = [s.text for s in stem + cycle]
    assert texts.index("T3: z = x") < texts.index("T1: x = 1")
    assert "T2: y = 2" in texts


def test_true_holds_with_a_small_tree(motivating_program):
    v = check(motivating_program, parse_formula("true"))
    assert v.holds and v.stats["tree_nodes"] <= 10


@pytest.mark.parametrize("name", ["motivating", "lamport", "szymanski", "lostwakeup"])
def test_violations_replay_and_oracle_agrees(name):
    inst = bundled(name)
    p, phi = parse_program(inst.source), parse_formula(inst.formula)
    v = check(p, phi)  # lasso() replays the witness and raises when it fails
    assert not v.holds and v.counterexample.stem
    assert not oracle_check(p, phi).holds


def test_event_budget_is_enforced():
    inst = shared(4, 5)
    with pytest.raises(ResourceBoundExceeded):
        check(parse_program(inst.source), parse_formula(inst.formula), max_events=5)


def test_tree_dot_export_single_thread_is_a_path():
    from pdnet_ltl.dot import dot_counts, tree_to_dot

    N, _sm, ex = plain(STRAIGHT, record_tree=True)
    res = ex.run()
    nodes, edges = dot_counts(tree_to_dot(res.tree, N))
    assert edges == nodes - 1
