"""Exhaustive exploration of every execution from a finite set of initial
configurations, branching over every distributed-daemon choice."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from .errors import ExplorationLimit
from .model import AlgorithmSpec, Configuration, ForestNetwork, apply_step, enabled_families
from .transformer import enumerate_configurations


@dataclass
class ExplorationResult:
    all_terminate: bool
    all_terminal_satisfy_sp: Optional[bool]
    longest_move_path: Optional[int]
    state_count: int
    initial_count: int
    sinks: list[Configuration] = field(default_factory=list)
    witness_cycle: Optional[list[Configuration]] = None
    illegitimate_sink: Optional[Configuration] = None

    def to_json(self) -> dict:
        return {
            "all_terminate": self.all_terminate,
            "all_terminal_satisfy_SP": self.all_terminal_satisfy_sp,
            "longest_move_path": self.longest_move_path,
            "state_count": self.state_count,
            "initial_count": self.initial_count,
            "sink_count": len(self.sinks),
            "witness_cycle": None if self.witness_cycle is None else [c.to_json() for c in self.witness_cycle],
            "illegitimate_sink": None if self.illegitimate_sink is None else self.illegitimate_sink.to_json(),
        }


def daemon_choices(enabled: dict[int, tuple[int, ...]]):
    """Every legal selection: a non-empty node subset, one family per node."""
    nodes = sorted(enabled)
    for r in range(1, len(nodes) + 1):
        for subset in itertools.combinations(nodes, r):
            for fams in itertools.product(*(enabled[p] for p in subset)):
                yield tuple(zip(subset, fams))


def explore_exhaustive(
    net: ForestNetwork,
    alg: AlgorithmSpec,
    init_domain: dict[str, list[int]],
    max_states: int = 200_000,
) -> ExplorationResult:
    """Build the reachable transition graph and check it is acyclic.

    Acyclicity of the finite graph means every execution from these initial
    configurations is finite.  Sinks are checked against the algorithm's
    legitimacy predicate (None when none is registered).  Edge weights are
    selection sizes, so the longest path counts moves.
    """
    initial = list(enumerate_configurations(net, alg, init_domain))
    succ: dict[Configuration, set[tuple[Configuration, int]]] = {}
    frontier = list(initial)
    seen = set(initial)
    while frontier:
        cfg = frontier.pop()
        enabled = {}
        for p in net.nodes:
            fams = enabled_families(net, alg, cfg, p)
            if fams:
                enabled[p] = fams
        out = set()
        for sel in daemon_choices(enabled):
            nxt = apply_step(net, alg, cfg, sel, check_enabled=False)
            out.add((nxt, len(sel)))
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > max_states:
                    raise ExplorationLimit(f"more than {max_states} reachable configurations")
                frontier.append(nxt)
        succ[cfg] = out

    sinks = [c for c, out in succ.items() if not out]
    sp_ok: Optional[bool] = None
    bad_sink = None
    if alg.legitimacy is not None:
        bad_sink = next((c for c in sinks if not alg.legitimacy(net, c)), None)
        sp_ok = bad_sink is None

    # predecessor map in graphlib terms: node -> its successors, so
    # static_order lists every configuration after all its successors
    graph = {c: {t for t, _ in out} for c, out in succ.items()}
    try:
        order = list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        return ExplorationResult(False, sp_ok, None, len(seen), len(initial), sinks,
                                 witness_cycle=list(exc.args[1]), illegitimate_sink=bad_sink)
    longest: dict[Configuration, int] = {}
    for c in order:
        longest[c] = max((w + longest[t] for t, w in succ[c]), default=0)
    return ExplorationResult(True, sp_ok, max(longest[c] for c in initial), len(seen), len(initial), sinks,
                             illegitimate_sink=bad_sink)
