"""Quasi-syntactic classification of guarded-action families.

Everything except correct-alone testing is computed from the declared reads
and the variable partition only; guard semantics never enter the picture.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from .model import (
    AlgorithmSpec,
    Configuration,
    ForestNetwork,
    Relation,
    apply_step,
    enabled_families,
    gread_cells,
    is_enabled,
)


class Label(str, enum.Enum):
    BOTTOM_UP = "bottom-up"
    TOP_DOWN = "top-down"


def classify_family(alg: AlgorithmSpec, i: int) -> frozenset[Label]:
    own = set(alg.family(i).writes)
    rels = {r.relation for r in alg.family(i).reads if r.name in own}
    labels = set()
    if rels <= {Relation.SELF, Relation.CHILDREN}:
        labels.add(Label.BOTTOM_UP)
    if rels <= {Relation.SELF, Relation.PARENT}:
        labels.add(Label.TOP_DOWN)
    return frozenset(labels)


def classify(alg: AlgorithmSpec) -> dict[int, frozenset[Label]]:
    return {f.index: classify_family(alg, f.index) for f in alg.families}


def orientation(labels: frozenset[Label]) -> Optional[Label]:
    """Top-down wins when both hold: its zone is bounded by H+1 <= n."""
    if Label.TOP_DOWN in labels:
        return Label.TOP_DOWN
    if Label.BOTTOM_UP in labels:
        return Label.BOTTOM_UP
    return None


@dataclass(frozen=True)
class CausalityGraph:
    k: int
    edges: frozenset[tuple[int, int]]
    acyclic: bool
    heights: Optional[dict[int, int]]
    cycle: Optional[tuple[int, ...]] = None

    def predecessors(self, i: int) -> set[int]:
        return {j for j, t in self.edges if t == i}

    @property
    def height(self) -> Optional[int]:
        if self.heights is None:
            return None
        return max(self.heights.values(), default=0)

    @property
    def in_degree(self) -> int:
        return max((len(self.predecessors(i)) for i in range(1, self.k + 1)), default=0)


def build_causality_graph(alg: AlgorithmSpec) -> CausalityGraph:
    written_by = {name: f.index for f in alg.families for name in f.writes}
    edges = set()
    for f in alg.families:
        for r in f.reads:
            j = written_by.get(r.name)
            if j is not None and j != f.index:
                edges.add((j, f.index))
    graph = {i: {j for j, t in edges if t == i} for i in range(1, alg.k + 1)}
    try:
        order = list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        return CausalityGraph(alg.k, frozenset(edges), False, None, tuple(exc.args[1]))
    heights: dict[int, int] = {}
    for i in order:
        heights[i] = 1 + max((heights[j] for j in graph[i]), default=-1)
    return CausalityGraph(alg.k, frozenset(edges), True, heights)


def impacting_zone(net: ForestNetwork, orient: Optional[Label], p: int) -> frozenset[int]:
    if orient is Label.TOP_DOWN:
        return net.ancestors(p)
    if orient is Label.BOTTOM_UP:
        return net.descendants(p)
    raise ValueError("impacting zone needs a bottom-up or top-down family")


def m_value(net: ForestNetwork, orient: Optional[Label], p: int) -> int:
    if orient is Label.TOP_DOWN:
        return net.level_of[p]
    if orient is Label.BOTTOM_UP:
        return net.height_of[p]
    raise ValueError("M(A_i, p) needs a bottom-up or top-down family")


def others_count(net: ForestNetwork, alg: AlgorithmSpec, i: int, p: int) -> int:
    """Neighbors q of p where some other family writes a name A_i reads from q."""
    fam = alg.family(i)
    foreign = {name for f in alg.families if f.index != i for name in f.writes}
    by_rel = {rel: {r.name for r in fam.reads if r.relation is rel and r.name in foreign} for rel in Relation}
    count = 0
    for q in net.adjacency[p]:
        if q == net.parent[p]:
            rel = Relation.PARENT
        elif net.parent[q] == p:
            rel = Relation.CHILDREN
        else:
            rel = Relation.OTHERS
        if by_rel[rel]:
            count += 1
    return count


def others_and_max_o(net: ForestNetwork, alg: AlgorithmSpec, gc: CausalityGraph):
    """Return ``(others, max_o)``: per-(node, family) |Others| and per-family maxO.

    maxO(A_i) is the largest |Others| over A_i and every family that reaches
    A_i in the causality graph; on a DAG this is the recursive definition.
    """
    others = {(p, f.index): others_count(net, alg, f.index, p) for p in net.nodes for f in alg.families}
    local = {f.index: max(others[(p, f.index)] for p in net.nodes) for f in alg.families}
    max_o = {}
    for i in local:
        seen, stack = {i}, [i]
        while stack:
            for j in gc.predecessors(stack.pop()):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        max_o[i] = max(local[j] for j in seen)
    return others, max_o


# ---------------------------------------------------------------------------
# Correct-alone (dynamic evidence)
# ---------------------------------------------------------------------------


@dataclass
class CorrectAloneResult:
    family: str
    passed: bool
    trials: int
    counterexample: Optional[dict] = None

    def to_json(self) -> dict:
        return {"family": self.family, "passed": self.passed, "trials": self.trials,
                "counterexample": self.counterexample}


def random_configuration(net: ForestNetwork, alg: AlgorithmSpec, rng: random.Random, bound: int) -> Configuration:
    schema = alg.schema
    rows = tuple(
        tuple(schema.domain_of(name).sample(rng, bound) for name in schema.var_names) for _ in net.nodes
    )
    consts = tuple(tuple(net.const(p, c) for c in schema.const_names) for p in net.nodes)
    return Configuration(schema.const_names, schema.var_names, consts, rows)


def random_tree_with_consts(alg: AlgorithmSpec, rng: random.Random, max_n: int, bound: int) -> ForestNetwork:
    from .engine import random_tree

    n = rng.randint(1, max_n)
    net = random_tree(rng, n)
    return net.with_consts([{c: rng.randint(0, bound) for c in alg.schema.const_names} for _ in net.nodes])


def test_correct_alone(
    net: Optional[ForestNetwork],
    alg: AlgorithmSpec,
    i: int,
    trials: int = 1000,
    seed: int = 0,
    *,
    bound: int = 100,
    max_n: int = 10,
    extra_probability: float = 0.5,
    max_attempts: int = 50,
) -> CorrectAloneResult:
    """Sample steps where A_i(p) executes and check it is disabled afterwards.

    Each trial draws a configuration (on ``net``, or on a fresh random tree
    of at most ``max_n`` nodes when ``net`` is None), picks a node where A_i
    is enabled, and possibly adds simultaneous activations at other nodes.
    Steps whose extra activations modify a cell in GRead(A_i(p)) \\ W(A_i(p))
    fall outside the definition, so they are replaced by A_i(p) alone.
    """
    rng = random.Random(seed)
    fam = alg.family(i)
    done = 0
    while done < trials:
        for _ in range(max_attempts):
            g = net if net is not None else random_tree_with_consts(alg, rng, max_n, bound)
            cfg = random_configuration(g, alg, rng, bound)
            candidates = [p for p in g.nodes if is_enabled(g, alg, cfg, p, i)]
            if candidates:
                break
        else:
            return CorrectAloneResult(fam.label, True, done)
        p = rng.choice(candidates)
        selection = [(p, i)]
        for q in g.nodes:
            if q != p and rng.random() < extra_probability:
                fams = enabled_families(g, alg, cfg, q)
                if fams:
                    selection.append((q, rng.choice(fams)))
        after = apply_step(g, alg, cfg, selection)
        if len(selection) > 1:
            watched = {c for c in gread_cells(g, fam, p) if c[1] in alg.schema.var_names} - {
                (p, name) for name in fam.writes
            }
            if any(cfg.get(q, name) != after.get(q, name) for q, name in watched):
                selection = [(p, i)]
                after = apply_step(g, alg, cfg, selection)
        done += 1
        if is_enabled(g, alg, after, p, i):
            return CorrectAloneResult(
                fam.label,
                False,
                done,
                {
                    "node": p,
                    "network": g.to_json(),
                    "before": cfg.to_json(),
                    "selection": [[q, alg.label(j)] for q, j in selection],
                    "after": after.to_json(),
                },
            )
    return CorrectAloneResult(fam.label, True, done)


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------


@dataclass
class AnalysisReport:
    algorithm: str
    n: int
    H: int
    Delta: int
    k: int
    labels: dict[int, frozenset[Label]]
    orientation: dict[int, Optional[Label]]
    causality: CausalityGraph
    zone_size: dict[tuple[int, int], int]
    m: dict[tuple[int, int], int]
    others: dict[tuple[int, int], int]
    max_o: dict[int, int]
    correct_alone: dict[int, CorrectAloneResult] = field(default_factory=dict)
    family_labels: dict[int, str] = field(default_factory=dict)

    @property
    def acyclic(self) -> bool:
        return self.causality.acyclic

    @property
    def all_oriented(self) -> bool:
        return all(o is not None for o in self.orientation.values())

    @property
    def verdict(self) -> bool:
        return (
            self.acyclic
            and self.all_oriented
            and bool(self.correct_alone)
            and all(r.passed for r in self.correct_alone.values())
        )

    def family_height(self, i: int) -> Optional[int]:
        return None if self.causality.heights is None else self.causality.heights[i]

    def to_json(self) -> dict:
        lab = self.family_labels
        gc = self.causality
        families = []
        for i in sorted(self.labels):
            fam = {
                "index": i,
                "label": lab[i],
                "classification": sorted(x.value for x in self.labels[i]),
                "orientation": None if self.orientation[i] is None else self.orientation[i].value,
                "height": self.family_height(i),
                "maxO": self.max_o[i],
                "max_others": max(self.others[(p, i)] for p in range(self.n)),
            }
            if i in self.correct_alone:
                fam["correct_alone"] = self.correct_alone[i].to_json()
            if self.orientation[i] is not None:
                fam["zone_size"] = [self.zone_size[(p, i)] for p in range(self.n)]
                fam["M"] = [self.m[(p, i)] for p in range(self.n)]
            families.append(fam)
        return {
            "format": 1,
            "algorithm": self.algorithm,
            "verdict": self.verdict,
            "acyclic": gc.acyclic,
            "network": {"n": self.n, "H": self.H, "Delta": self.Delta},
            "k": self.k,
            "d": gc.in_degree,
            "height": gc.height,
            "causality_edges": sorted([lab[j], lab[i]] for j, i in gc.edges),
            "cycle": None if gc.cycle is None else [lab[i] for i in gc.cycle],
            "families": families,
        }


def analyze(net: ForestNetwork, alg: AlgorithmSpec, *, correct_alone_trials: int = 0, seed: int = 0,
            bound: int = 100) -> AnalysisReport:
    """Every syntactic quantity used by the bounds; correct-alone only if trials > 0."""
    labels = classify(alg)
    orient = {i: orientation(s) for i, s in labels.items()}
    gc = build_causality_graph(alg)
    zone, m = {}, {}
    for i, o in orient.items():
        if o is None:
            continue
        for p in net.nodes:
            zone[(p, i)] = len(impacting_zone(net, o, p))
            m[(p, i)] = m_value(net, o, p)
    others, max_o = others_and_max_o(net, alg, gc)
    ca = {}
    if correct_alone_trials > 0:
        for f in alg.families:
            ca[f.index] = test_correct_alone(net, alg, f.index, correct_alone_trials, seed + f.index, bound=bound)
    return AnalysisReport(
        algorithm=alg.name, n=net.n, H=net.H, Delta=net.Delta, k=alg.k,
        labels=labels, orientation=orient, causality=gc, zone_size=zone, m=m,
        others=others, max_o=max_o, correct_alone=ca,
        family_labels={f.index: f.label for f in alg.families},
    )


def follows_acyclic_strategy(net: ForestNetwork, alg: AlgorithmSpec, *, trials: int = 1000, seed: int = 0,
                             bound: int = 100) -> tuple[bool, AnalysisReport]:
    """Well-formedness holds by construction of :class:`AlgorithmSpec`."""
    report = analyze(net, alg, correct_alone_trials=trials, seed=seed, bound=bound)
    return report.verdict, report


test_correct_alone.__test__ = False  # keep pytest from collecting it
