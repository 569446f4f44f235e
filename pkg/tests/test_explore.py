from __future__ import annotations

import pytest

from silentstab.algorithms import line_network, make_nolp, make_te, star_network
from silentstab.errors import ExplorationLimit
from silentstab.explore import daemon_choices, explore_exhaustive
from silentstab.model import AlgorithmSpec, Domain, FamilySpec, VariableSchema, reads


def flip_flop() -> AlgorithmSpec:
    """The root toggles its bit forever; other nodes are never enabled."""
    schema = VariableSchema((), ("b",), {1: ("b",)}, {"b": Domain((0, 1))})
    fam = FamilySpec(1, "F", reads("self.b"), ("b",), lambda v: v.is_root, lambda v: {"b": 1 - v.own("b")})
    return AlgorithmSpec("flip", schema, (fam,))


def test_daemon_choices_count():
    # two nodes with one and two enabled families: 1 + 2 + 1*2 selections
    assert len(list(daemon_choices({0: (1,), 1: (1, 2)}))) == 5


def test_non_terminating_algorithm_yields_cycle_witness():
    res = explore_exhaustive(line_network(2), flip_flop(), {"b": [0, 1]})
    assert not res.all_terminate
    assert res.longest_move_path is None
    assert len(res.witness_cycle) >= 2


def test_te_on_tiny_trees():
    for net in (line_network(1, [{"input": 1}]), line_network(3, [{"input": 1}] * 3),
                star_network(3, [{"input": 2}] * 3)):
        res = explore_exhaustive(net, make_te(), {"sub": [0, 1, 2, 3], "res": [0, 1, 2, 3]})
        assert res.all_terminate and res.all_terminal_satisfy_sp
        assert res.initial_count == 16**net.n
        assert res.longest_move_path <= net.n**2 * (3 + 2 * net.H)


def test_single_node_te_longest_path():
    res = explore_exhaustive(line_network(1, [{"input": 1}]), make_te(), {"sub": [0, 1, 2, 3], "res": [0, 1, 2, 3]})
    # R can fire first on a stale sub, then S, then R again
    assert res.longest_move_path == 3


def test_nolp_two_nodes():
    res = explore_exhaustive(line_network(2), make_nolp(), {"Clr": [0, 1], "Sub": [0, 1, 2], "Res": [0, 1, 2]})
    assert res.all_terminate and res.all_terminal_satisfy_sp
    assert all(s.column("Res") == (1, 1) for s in res.sinks)


def test_state_budget():
    with pytest.raises(ExplorationLimit):
        explore_exhaustive(line_network(3, [{"input": 1}] * 3), make_te(), {"sub": [0, 1, 2, 3], "res": [0, 1, 2, 3]},
                           max_states=100)
