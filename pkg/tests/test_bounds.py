from __future__ import annotations

import json
import random
from collections import Counter
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from silentstab.algorithms import line_network, make_nolp, make_te, star_network
from silentstab.analysis import analyze
from silentstab.bounds import (
    BoundReport,
    audit_trace,
    compute_bounds,
    default_step_limit,
    node_bound_formula,
    per_node_move_bound,
    refined_move_bound,
    round_bound,
    total_move_bound,
)
from silentstab.engine import random_tree
from silentstab.model import AlgorithmSpec, FamilySpec, VariableSchema, reads
from silentstab.transformer import transform


def _net(shape, n, seed=0):
    if shape == "line":
        return line_network(n)
    if shape == "star":
        return star_network(n)
    return random_tree(random.Random(seed), n)


def test_node_bound_arithmetic():
    assert node_bound_formula(5, 1, 0, 0, 3) == 3
    assert node_bound_formula(5, 1, 0, 1, 3) == 5 * 2 * 3
    assert node_bound_formula(4, 2, 1, 2, 1) == (4 * 5) ** 2


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["line", "star", "random"]), st.integers(1, 40), st.integers(0, 1000))
def test_te_closed_forms(shape, n, seed):
    net = _net(shape, n, seed)
    r = analyze(net, make_te())
    # h = 1, d = 1, k = 2, maxO = 0
    assert total_move_bound(r, net) == 2 * (2 + net.Delta) * n**3
    assert refined_move_bound(r, net) == n * n * (3 + 2 * net.H)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["line", "star", "random"]), st.integers(1, 40), st.integers(0, 1000))
def test_nolp_closed_forms(shape, n, seed):
    net = _net(shape, n, seed)
    r = analyze(net, make_nolp())
    H = net.H
    assert total_move_bound(r, net) == 3 * (2 + net.Delta) ** 2 * n**4
    assert refined_move_bound(r, net) == (H + 1) * n + 2 * n**3 + 4 * (H + 1) * n**3


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(0, 1000))
def test_exact_zone_never_exceeds_cap(n, seed):
    net = _net("random", n, seed)
    r = analyze(net, make_nolp())
    for i in r.labels:
        for p in net.nodes:
            assert per_node_move_bound(r, net, p, i, exact_zone=True) <= per_node_move_bound(r, net, p, i)


def test_refined_never_exceeds_total():
    for n in range(1, 30):
        for shape in ("line", "star", "random"):
            net = _net(shape, n, n)
            for alg in (make_te(), make_nolp()):
                r = analyze(net, alg)
                assert refined_move_bound(r, net) <= total_move_bound(r, net)


def test_round_bound_needs_mutual_exclusion():
    net = line_network(6)
    r = analyze(net, make_te())
    assert round_bound(r, net, False) is None
    assert round_bound(r, net, True) == 2 * 6
    b = compute_bounds(analyze(net, transform(make_te())), net, lme="construction")
    assert b.round_bound == 12 and b.round_bound_basis == "construction"


def test_bounds_refuse_cyclic_graphs():
    schema = VariableSchema((), ("a", "b"), {1: ("a",), 2: ("b",)})
    fa = FamilySpec(1, "A", reads("self.a", "self.b"), ("a",), lambda v: False, lambda v: {"a": 0})
    fb = FamilySpec(2, "B", reads("self.b", "self.a"), ("b",), lambda v: False, lambda v: {"b": 0})
    net = line_network(2)
    r = analyze(net, AlgorithmSpec("cyc", schema, (fa, fb)))
    with pytest.raises(ValueError):
        total_move_bound(r, net)


def test_default_step_limit_is_total_plus_one():
    net = star_network(5, [{"input": 1}] * 5)
    r = analyze(net, make_te())
    assert default_step_limit(net, make_te()) == total_move_bound(r, net) + 1


def test_overflow_rendered_in_json():
    schema = VariableSchema((), tuple("abcdef"), {i + 1: (c,) for i, c in enumerate("abcdef")})
    fams = []
    for i, c in enumerate("abcdef"):
        rd = [f"self.{c}"] + ([f"self.{'abcdef'[i - 1]}"] if i else [])
        fams.append(FamilySpec(i + 1, c.upper(), reads(*rd), (c,), lambda v: False, lambda v, c=c: {c: 0}))
    alg = AlgorithmSpec("deep", schema, tuple(fams))
    net = star_network(3000)
    b = compute_bounds(analyze(net, alg), net)
    doc = b.to_json()
    assert b.total_move_bound > 2**63
    assert doc["total_move_bound"] == "exceeds 2^63"
    back = BoundReport.from_json(json.loads(json.dumps(doc)))
    assert back.total_move_bound == float("inf")


def test_report_json_round_trip():
    net = star_network(6)
    b = compute_bounds(analyze(net, make_nolp()), net)
    back = BoundReport.from_json(json.loads(json.dumps(b.to_json())))
    assert back.per_node == b.per_node
    assert back.per_family == b.per_family
    assert back.total_move_bound == b.total_move_bound
    assert back.families == ["C", "S", "R"]


def test_audit_flags_each_violation():
    net = line_network(3)
    b = compute_bounds(analyze(net, make_te()), net)
    limit = b.per_node[(2, "S")]
    fake = SimpleNamespace(moves=Counter({(2, 1): limit + 1}), total_moves=limit + 1, rounds=1)
    result = audit_trace(fake, b)
    assert not result.passed
    assert any("node 2 family S" in v for v in result.violations)
    ok = SimpleNamespace(moves=Counter({(2, 1): limit}), total_moves=limit, rounds=1)
    assert audit_trace(ok, b).passed


def test_audit_checks_rounds_when_bounded():
    net = line_network(3)
    b = compute_bounds(analyze(net, transform(make_te())), net, lme="construction")
    fake = SimpleNamespace(moves=Counter({(0, 1): 1}), total_moves=1, rounds=b.round_bound + 1)
    assert any("rounds" in v for v in audit_trace(fake, b).violations)
