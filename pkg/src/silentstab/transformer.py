"""Priority transformer giving local mutual exclusion.

Family i of T(A) keeps its statement and gets the guard
``not G_j and ... and G_i`` over every higher-priority family j.  Its read
declaration grows to cover the guards it now evaluates.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, replace
from graphlib import TopologicalSorter
from typing import Optional

from .analysis import CausalityGraph, build_causality_graph, random_configuration, random_tree_with_consts
from .engine import ExecutionTrace, TERMINAL
from .errors import OrderError
from .model import (
    AlgorithmSpec,
    Configuration,
    FamilySpec,
    ForestNetwork,
    apply_step,
    enabled_families,
    is_enabled,
    is_terminal,
)


@dataclass(frozen=True)
class PriorityOrder:
    """Family indices, highest priority first."""

    sequence: tuple[int, ...]

    def rank(self, i: int) -> int:
        return self.sequence.index(i)

    def higher_than(self, i: int) -> tuple[int, ...]:
        return self.sequence[: self.rank(i)]


def derive_order(gc: CausalityGraph) -> PriorityOrder:
    """Topological order of the causality graph, ties to the lowest index."""
    if not gc.acyclic:
        raise OrderError(f"causality graph has a cycle through {gc.cycle}")
    ts = TopologicalSorter({i: gc.predecessors(i) for i in range(1, gc.k + 1)})
    ts.prepare()
    ready: list[int] = []
    out = []
    while ts.is_active():
        for i in ts.get_ready():
            heapq.heappush(ready, i)
        i = heapq.heappop(ready)
        out.append(i)
        ts.done(i)
    return PriorityOrder(tuple(out))


def check_compatible(gc: CausalityGraph, order: PriorityOrder) -> None:
    if sorted(order.sequence) != list(range(1, gc.k + 1)):
        raise OrderError(f"{order.sequence} is not a permutation of the families")
    for j, i in gc.edges:
        if order.rank(j) > order.rank(i):
            raise OrderError(f"order puts family {i} before its cause {j}")


def _prioritized_guard(own: FamilySpec, higher: tuple[FamilySpec, ...]):
    def guard(view):
        for f in higher:
            if f.guard(view.restricted(f.reads, f.label)):
                return False
        return own.guard(view.restricted(own.reads, own.label))

    return guard


def _shared_statement(own: FamilySpec):
    allowed = own.statement_reads if own.statement_reads is not None else own.reads

    def statement(view):
        return own.statement(view.restricted(allowed, own.label))

    return statement


def transform(alg: AlgorithmSpec, order: Optional[PriorityOrder] = None) -> AlgorithmSpec:
    gc = build_causality_graph(alg)
    if order is None:
        order = derive_order(gc)
    check_compatible(gc, order)
    families = []
    for f in alg.families:
        higher = tuple(alg.family(j) for j in order.higher_than(f.index))
        if not higher:
            families.append(f)
            continue
        union = f.reads.union(*(h.reads for h in higher))
        families.append(
            replace(
                f,
                reads=union,
                guard=_prioritized_guard(f, higher),
                statement=_shared_statement(f),
                statement_reads=f.statement_reads if f.statement_reads is not None else f.reads,
            )
        )
    return AlgorithmSpec(f"T({alg.name})", alg.schema, tuple(families), alg.legitimacy)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


@dataclass
class LMEResult:
    passed: bool
    mode: str
    checked: int
    counterexample: Optional[dict] = None

    def to_json(self) -> dict:
        return {"passed": self.passed, "mode": self.mode, "checked": self.checked,
                "counterexample": self.counterexample}


def enumerate_configurations(net: ForestNetwork, alg: AlgorithmSpec, domain: dict[str, list[int]]):
    """Every configuration whose writable values come from ``domain``."""
    schema = alg.schema
    per_node = list(itertools.product(*(domain[name] for name in schema.var_names)))
    consts = tuple(tuple(net.const(p, c) for c in schema.const_names) for p in net.nodes)
    for rows in itertools.product(per_node, repeat=net.n):
        yield Configuration(schema.const_names, schema.var_names, consts, rows)


def configuration_space_size(net, alg, domain) -> int:
    size = 1
    for name in alg.schema.var_names:
        size *= len(domain[name])
    return size**net.n


def _lme_violation(net, alg, cfg) -> Optional[dict]:
    for p in net.nodes:
        fams = enabled_families(net, alg, cfg, p)
        if len(fams) > 1:
            return {"node": p, "families": [alg.label(i) for i in fams],
                    "network": net.to_json(), "configuration": cfg.to_json()}
    return None


def check_local_mutual_exclusion(
    net: Optional[ForestNetwork],
    alg: AlgorithmSpec,
    trials: int = 10_000,
    seed: int = 0,
    *,
    domain: Optional[dict[str, list[int]]] = None,
    bound: int = 100,
    max_n: int = 15,
    exhaustive_limit: int = 10**6,
) -> LMEResult:
    """No node may have two enabled families.

    With a finite ``domain`` and a space of at most ``exhaustive_limit``
    configurations, every configuration is checked.  Otherwise ``trials``
    random configurations are drawn (on fresh random trees of at most
    ``max_n`` nodes when ``net`` is None).
    """
    if net is not None and domain is not None and configuration_space_size(net, alg, domain) <= exhaustive_limit:
        checked = 0
        for cfg in enumerate_configurations(net, alg, domain):
            checked += 1
            bad = _lme_violation(net, alg, cfg)
            if bad:
                return LMEResult(False, "exhaustive", checked, bad)
        return LMEResult(True, "exhaustive", checked)
    rng = random.Random(seed)
    for t in range(trials):
        g = net if net is not None else random_tree_with_consts(alg, rng, max_n, bound)
        cfg = random_configuration(g, alg, rng, bound)
        bad = _lme_violation(g, alg, cfg)
        if bad:
            return LMEResult(False, "sampled", t + 1, bad)
    return LMEResult(True, "sampled", trials)


def replay_on_original(trace: ExecutionTrace, net: ForestNetwork, original: AlgorithmSpec) -> bool:
    """Is a trace of T(A) also an execution of A?

    Every selected pair must be enabled for A in the pre-step configuration
    and produce the recorded post-step configuration; the final
    configuration must be terminal for A exactly when the trace ended
    terminal.
    """
    cfg = trace.initial
    for step in trace.steps:
        if len({p for p, _ in step.selection}) != len(step.selection):
            return False
        for p, i in step.selection:
            if not is_enabled(net, original, cfg, p, i):
                return False
        cfg = apply_step(net, original, cfg, step.selection, check_enabled=False)
        if cfg.digest() != step.digest:
            return False
    return is_terminal(net, original, cfg) == (trace.outcome == TERMINAL)


@dataclass
class TransformedHeight:
    height: int
    k: int
    unsatisfied: list[str]

    @property
    def matches_k_minus_1(self) -> bool:
        return self.height == self.k - 1


def transformed_causality_height(
    alg: AlgorithmSpec,
    order: Optional[PriorityOrder] = None,
    *,
    trials: int = 2000,
    seed: int = 0,
    bound: int = 10,
    max_n: int = 6,
) -> TransformedHeight:
    """Height of T(A)'s causality graph, plus families whose guard was never
    seen true in ``trials`` random samples (the k-1 claim needs each guard
    to be satisfiable)."""
    t_alg = transform(alg, order)
    gc = build_causality_graph(t_alg)
    rng = random.Random(seed)
    unseen = {f.index for f in alg.families}
    for _ in range(trials):
        if not unseen:
            break
        g = random_tree_with_consts(alg, rng, max_n, bound)
        cfg = random_configuration(g, alg, rng, bound)
        for i in list(unseen):
            if any(is_enabled(g, alg, cfg, p, i) for p in g.nodes):
                unseen.discard(i)
    return TransformedHeight(gc.height, alg.k, sorted(alg.label(i) for i in unseen))
