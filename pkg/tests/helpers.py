"""Shared fixtures-by-import: instance corpus and brute-force oracles."""

from __future__ import annotations

from collections import deque

from pdnet_ltl.benchmarks import BUNDLED, Instance, bundled, concur, shared

# extra formulas on bundled programs, each paired with its program
EXTRA_FORMULAS = (
    ("motivating", "G(x=1) -> F(z=1)"),
    ("motivating", "true"),
    ("dekker", "G(cs<=1)"),
    ("peterson", "G(cs<=1)"),
    ("condvar", "F(data=3)"),
    ("lostwakeup", "G(data=0 || data=1)"),
)


def corpus() -> list[Instance]:
    """Every instance the agreement harness runs (bundled, extras, families)."""
    out = [bundled(n) for n in BUNDLED]
    for name, f in EXTRA_FORMULAS:
        b = bundled(name)
        out.append(Instance(f"{name}[{f}]", b.source, f))
    for n in range(2, 7):
        out.append(shared(n))
        out.append(shared(n, n + 1))
    for n in range(2, 8):
        out.append(concur(n, False))
        out.append(concur(n, True))
    return out


def reachable_markings(net, limit: int = 100_000):
    """Breadth-first reachable markings of a net with the firing rule."""
    M0 = net.initial_marking
    seen = {M0}
    queue = deque([M0])
    while queue:
        M = queue.popleft()
        for t in sorted(net.enabled_set(M)):
            M2 = net.fire(t, M)
            if M2 not in seen:
                if len(seen) >= limit:
                    raise RuntimeError("reachability bound exceeded")
                seen.add(M2)
                queue.append(M2)
    return seen


# twenty formulas over at most three atoms, used for the automaton check
LTL_CORPUS = (
    "G(a=1)",
    "F(a=1)",
    "G(F(a=1))",
    "F(G(a=1))",
    "a=1 U b=1",
    "a=1 R b=1",
    "G(a=1 -> F(b=1))",
    "!(a=1 U b=1)",
    "G(a=1) -> F(b=1)",
    "F(a=1) && F(b=1)",
    "G(a=1 || b=1)",
    "(a=1 U b=1) U c=1",
    "G(F(a=1)) -> G(F(b=1))",
    "F(a=1 && G(b!=1))",
    "G(a=1 -> (b=1 U c=1))",
    "a=1 <-> F(b=1)",
    "G(F(a=1) && F(b=1))",
    "F(G(a=1)) || G(F(c=1))",
    "true U (a=1 && b=1)",
    "G(a=1 -> (b=1 R c=1)) && F(c=1)",
)


def check_prefix_invariants(pre):
    """Occurrence-net shape and homomorphism conditions of a prefix."""
    from pdnet_ltl.unfolding import BOTTOM

    net = pre.net
    producers = {}
    for e in range(pre.n_events):
        for c in pre.ev_post[e]:
            producers.setdefault(c, []).append(e)
    for c in range(pre.n_conditions):
        if pre.cond_pre[c] == BOTTOM:
            assert c not in producers and (pre.min_bits >> c) & 1
        else:
            assert producers.get(c) == [pre.cond_pre[c]]
    assert pre.mark_of_cut(pre.min_bits) == net.initial_marking
    seen = set()
    for e in range(pre.n_events):
        t = pre.ev_trans[e]
        for c in pre.ev_pre[e]:
            assert pre.cond_pre[c] == BOTTOM or pre.cond_pre[c] < e  # acyclic, causal id order
        assert sorted(pre.cond_place[c] for c in pre.ev_pre[e]) == sorted(net.pre[t])
        assert sorted(pre.cond_place[c] for c in pre.ev_post[e]) == sorted(net.post[t])
        env = {pre.cond_place[c]: pre.cond_value[c] for c in pre.ev_pre[e]}
        assert net.guard_holds(t, env)
        assert {pre.cond_place[c]: pre.cond_value[c] for c in pre.ev_post[e]} == net.produce(t, env)
        key = (t, tuple(sorted(pre.ev_pre[e])))
        assert key not in seen
        seen.add(key)
        assert pre.is_configuration(pre.anc[e])


def sample_configuration(pre, rng, max_len=None):
    """A random configuration grown event by event from the empty one."""
    by_cond = {}
    for e in range(pre.n_events):
        for c in pre.ev_pre[e]:
            by_cond.setdefault(c, []).append(e)
    C, cut = 0, pre.min_bits
    target = rng.randint(0, max_len if max_len is not None else pre.n_events)
    for _ in range(target):
        ext = sorted({e for c in _bits(cut) for e in by_cond.get(c, ())
                      if all((cut >> d) & 1 for d in pre.ev_pre[e])})
        if not ext:
            break
        e = rng.choice(ext)
        C |= 1 << e
        cut = (cut & ~pre.cons_bits[e]) | pre.prod_bits[e]
    return C


def random_linearization(pre, C, rng):
    rest = set(_bits(C))
    order = []
    while rest:
        ready = sorted(e for e in rest if not (pre.anc[e] & ~(1 << e)) & _mask(rest))
        e = rng.choice(ready)
        order.append(e)
        rest.remove(e)
    return order


def _bits(x):
    from pdnet_ltl.unfolding import bits

    return bits(x)


def _mask(events):
    m = 0
    for e in events:
        m |= 1 << e
    return m


def all_configurations(pre, limit=50_000):
    """Every configuration of a prefix, as event bitsets."""
    by_cond = {}
    for e in range(pre.n_events):
        for c in pre.ev_pre[e]:
            by_cond.setdefault(c, []).append(e)
    seen = {0}
    stack = [(0, pre.min_bits)]
    while stack:
        C, cut = stack.pop()
        for c in _bits(cut):
            for e in by_cond.get(c, ()):
                if all((cut >> d) & 1 for d in pre.ev_pre[e]):
                    C2 = C | (1 << e)
                    if C2 not in seen:
                        if len(seen) >= limit:
                            raise RuntimeError("too many configurations")
                        seen.add(C2)
                        stack.append((C2, (cut & ~pre.cons_bits[e]) | pre.prod_bits[e]))
    return seen
