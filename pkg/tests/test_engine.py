from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from silentstab.algorithms import line_network, make_nolp, make_te
from silentstab.engine import (
    BUILTIN_DAEMONS,
    SCRIPT_EXHAUSTED,
    STEP_LIMIT,
    TERMINAL,
    RandomDistributed,
    RoundCounter,
    RoundRobinCentral,
    Scripted,
    count_rounds,
    make_daemon,
    random_instance,
    read_trace_csv,
    replay,
    run,
    shaped_network,
    write_trace_csv,
)
from silentstab.errors import SchedulingError
from silentstab.model import apply_step, enabled_families, make_configuration


def brute_force_rounds(net, alg, configs, steps):
    """Rounds straight from the definition, scanning segments from scratch."""

    def enabled(c):
        return {p for p in net.nodes if enabled_families(net, alg, c, p)}

    en = [enabled(c) for c in configs]
    rounds, s = 0, 0
    while s < len(steps):
        need = set(en[s])
        t = s
        while need and t < len(steps):
            movers = {p for p, _ in steps[t].selection}
            neutralized = {p for p in en[t] if p not in en[t + 1] and p not in movers}
            need -= movers | neutralized
            t += 1
        rounds += 1
        s = t
        if need:
            break
    return rounds


@st.composite
def runs(draw):
    alg = draw(st.sampled_from([make_te(), make_nolp()]))
    seed = draw(st.integers(0, 10**6))
    n = draw(st.integers(1, 10))
    shape = draw(st.sampled_from(["line", "star", "random-tree"]))
    kind = draw(st.sampled_from(BUILTIN_DAEMONS))
    net, init = random_instance(seed, n, shape, 8, alg, const_bound=3)
    return alg, net, init, make_daemon(kind, seed)


@settings(max_examples=60, deadline=None)
@given(runs())
def test_round_counter_matches_definition(case):
    alg, net, init, daemon = case
    trace = run(net, alg, init, daemon, keep_configs=True)
    assert trace.outcome == TERMINAL
    assert trace.rounds == brute_force_rounds(net, alg, trace.configs, trace.steps)
    assert trace.rounds <= trace.total_moves
    assert count_rounds(trace, net, alg)[0] == trace.rounds


@settings(max_examples=60, deadline=None)
@given(runs())
def test_every_selection_is_legal(case):
    alg, net, init, daemon = case
    trace = run(net, alg, init, daemon, keep_configs=True)
    for before, step in zip(trace.configs, trace.steps):
        nodes = [p for p, _ in step.selection]
        assert nodes and len(nodes) == len(set(nodes))
        for p, i in step.selection:
            assert i in enabled_families(net, alg, before, p)
        if daemon.central:
            assert len(nodes) == 1
    # incremental bookkeeping agrees with a full replay
    assert [c.digest() for c in replay(net, alg, trace)] == [c.digest() for c in trace.configs]


def test_synchronous_moves_every_enabled_process():
    net = line_network(3, [{"input": 1}] * 3)
    alg = make_te()
    init = make_configuration(net, alg, {0: {"sub": 7}, 2: {"sub": 4}})
    trace = run(net, alg, init, make_daemon("synchronous"))
    first = trace.steps[0].selection
    assert {p for p, _ in first} == {p for p in net.nodes if enabled_families(net, alg, init, p)}
    # a synchronous step moves every enabled process, so each step is a round
    assert trace.rounds == len(trace.steps)


def test_synchronous_picks_lowest_family():
    net = line_network(1, [{"input": 1}])
    alg = make_te()
    init = make_configuration(net, alg, {0: {"sub": 5, "res": 9}})
    trace = run(net, alg, init, make_daemon("synchronous"))
    assert trace.steps[0].selection == ((0, 1),)


def test_random_distributed_never_empty():
    d = RandomDistributed(seed=1, rho=0.01)
    for _ in range(200):
        assert d.select({0: (1,), 3: (2,)})


def test_round_robin_cycles():
    d = RoundRobinCentral()
    enabled = {0: (1,), 2: (1,), 5: (1,)}
    assert [d.select(enabled)[0][0] for _ in range(4)] == [0, 2, 5, 0]


def test_runs_are_deterministic():
    alg = make_nolp()
    net, init = random_instance(11, 12, "random-tree", 5, alg)
    a = run(net, alg, init, make_daemon("random-distributed", 4))
    b = run(net, alg, init, make_daemon("random-distributed", 4))
    assert [s.selection for s in a.steps] == [s.selection for s in b.steps]
    assert a.summary(alg) == b.summary(alg)


def test_step_limit_outcome():
    alg = make_te()
    net, init = random_instance(2, 8, "line", 20, alg)
    trace = run(net, alg, init, make_daemon("round-robin-central"), step_limit=2)
    assert trace.outcome == STEP_LIMIT and len(trace.steps) == 2


def test_script_outcomes():
    net = line_network(2, [{"input": 1}] * 2)
    alg = make_te()
    init = make_configuration(net, alg)
    trace = run(net, alg, init, Scripted([(1, 1)]), 10)
    assert trace.outcome == SCRIPT_EXHAUSTED and trace.total_moves == 1
    trace = run(net, alg, init, Scripted([(1, 1)], then=RoundRobinCentral()), 50)
    assert trace.outcome == TERMINAL
    with pytest.raises(SchedulingError):
        run(net, alg, init, Scripted([(0, 2)]), 10)


def test_round_counter_trailing_round():
    rc = RoundCounter({0, 1})
    rc.observe(0, [0], {1})
    assert rc.finish() == 1 and rc.rounds == 0
    rc.observe(1, [1], set())
    assert rc.finish() == 1 and rc.boundaries == [2]


def test_neutralization_closes_a_round():
    rc = RoundCounter({0, 1})
    # 1 gets disabled by 0's move without moving itself
    rc.observe(0, [0], {2})
    assert rc.rounds == 1 and rc.pending == {2}


def test_trace_csv_round_trip(tmp_path):
    alg = make_nolp()
    net, init = random_instance(5, 9, "star", 6, alg)
    trace = run(net, alg, init, make_daemon("random-central", 5))
    path = tmp_path / "t.csv"
    write_trace_csv(path, trace, alg)
    lines = path.read_text().splitlines()
    assert lines[0] == "# format: 1"
    assert lines[1] == "step,node,family,move_index,round"
    counts = read_trace_csv(path, [f.label for f in alg.families])
    assert counts.moves == trace.moves
    assert counts.rounds == trace.rounds
    assert counts.steps == len(trace.steps)


def test_shapes():
    assert shaped_network("line", 4).parent == (None, 0, 1, 2)
    star = shaped_network("star", 6)
    assert star.parent == (None, 0, 0, 0, 0, 0)
    a = shaped_network("random-tree", 10, random.Random(3))
    b = shaped_network("random-tree", 10, random.Random(3))
    assert a.parent == b.parent
    with pytest.raises(ValueError):
        shaped_network("ring", 4)


def test_random_instance_reproducible():
    alg = make_te()
    a = random_instance(9, 7, "random-tree", 10, alg)
    b = random_instance(9, 7, "random-tree", 10, alg)
    assert a[0].to_json() == b[0].to_json() and a[1] == b[1]


def test_step_applies_one_move_per_activation():
    net = line_network(2, [{"input": 1}] * 2)
    alg = make_te()
    cfg = make_configuration(net, alg, {0: {"sub": 3, "res": 1}, 1: {"sub": 0}})
    after = apply_step(net, alg, cfg, [(0, 1), (1, 1)])
    # the root reads its child's pre-step value 0, not the new value 1
    assert after.get(0, "sub") == 1 and after.get(1, "sub") == 1
