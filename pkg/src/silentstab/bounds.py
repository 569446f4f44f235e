"""Closed-form move/round bounds and trace audits.

All arithmetic is exact (Python ints).  Values that do not fit a signed
64-bit integer are kept exact in memory and rendered as ``"exceeds 2^63"``
in JSON output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .analysis import AnalysisReport, Label, analyze
from .model import INT64_MAX, AlgorithmSpec, ForestNetwork

FALLBACK_STEP_LIMIT = 10**6


def node_bound_formula(n: int, d: int, max_o: int, family_height: int, zone_size: int) -> int:
    """(n * (1 + d * (1 + maxO)))^h * |Z| for one node and family."""
    return (n * (1 + d * (1 + max_o))) ** family_height * zone_size


def zone_cap(report: AnalysisReport, i: int) -> int:
    """Largest possible |Z(p, A_i)|: H+1 for top-down, n for bottom-up."""
    o = report.orientation[i]
    if o is Label.TOP_DOWN:
        return report.H + 1
    if o is Label.BOTTOM_UP:
        return report.n
    raise ValueError(f"family {report.family_labels.get(i, i)} has no orientation")


def _require_acyclic(report: AnalysisReport) -> None:
    if not report.acyclic or not report.all_oriented:
        raise ValueError("bounds need an acyclic causality graph and oriented families")


def per_node_move_bound(report: AnalysisReport, net: ForestNetwork, p: int, i: int, *, exact_zone: bool = False) -> int:
    """Upper bound on how often ``p`` executes family ``i``.

    By default |Z(p, A_i)| is replaced by its cap (n or H+1), which is the
    form used for the refined totals.  ``exact_zone=True`` uses the actual
    zone of ``p``, which is tighter and equally valid.
    """
    _require_acyclic(report)
    zone = report.zone_size[(p, i)] if exact_zone else zone_cap(report, i)
    return node_bound_formula(net.n, report.causality.in_degree, report.max_o[i], report.family_height(i), zone)


def total_move_bound(report: AnalysisReport, net: ForestNetwork) -> int:
    """(1 + d(1 + Delta))^h * k * n^(h + 2) for the whole execution."""
    _require_acyclic(report)
    h = report.causality.height
    d = report.causality.in_degree
    return (1 + d * (1 + net.Delta)) ** h * report.k * net.n ** (h + 2)


def refined_move_bound(report: AnalysisReport, net: ForestNetwork) -> int:
    return sum(per_node_move_bound(report, net, p, i) for i in report.labels for p in net.nodes)


def round_bound(report: AnalysisReport, net: ForestNetwork, lme_established: bool) -> Optional[int]:
    _require_acyclic(report)
    if not lme_established:
        return None
    return (report.causality.height + 1) * (net.H + 1)


def default_step_limit(net: ForestNetwork, alg: AlgorithmSpec) -> int:
    report = analyze(net, alg)
    if not report.acyclic or not report.all_oriented:
        return FALLBACK_STEP_LIMIT
    return total_move_bound(report, net) + 1


def _render(v):
    if isinstance(v, int) and v > INT64_MAX:
        return "exceeds 2^63"
    return v


@dataclass
class BoundReport:
    algorithm: str
    families: list[str]
    n: int
    H: int
    Delta: int
    k: int
    d: int
    height: int
    family_heights: dict[str, int]
    max_o: dict[str, int]
    per_node: dict[tuple[int, str], int]
    per_family: dict[str, int]
    total_move_bound: int
    refined_total: int
    round_bound: Optional[int] = None
    round_bound_basis: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "format": 1,
            "algorithm": self.algorithm,
            "families": self.families,
            "parameters": {
                "n": self.n, "H": self.H, "Delta": self.Delta, "k": self.k, "d": self.d,
                "height": self.height, "family_heights": self.family_heights, "maxO": self.max_o,
            },
            "per_node": [
                {"node": p, "family": f, "bound": _render(b)} for (p, f), b in sorted(self.per_node.items())
            ],
            "per_family": {f: _render(b) for f, b in self.per_family.items()},
            "total_move_bound": _render(self.total_move_bound),
            "refined_total": _render(self.refined_total),
            "round_bound": self.round_bound,
            "round_bound_basis": self.round_bound_basis,
            **self.extra,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BoundReport":
        par = doc["parameters"]

        def num(v):
            return float("inf") if v == "exceeds 2^63" else v

        return cls(
            algorithm=doc["algorithm"], families=doc["families"],
            n=par["n"], H=par["H"], Delta=par["Delta"], k=par["k"], d=par["d"], height=par["height"],
            family_heights=par["family_heights"], max_o=par["maxO"],
            per_node={(e["node"], e["family"]): num(e["bound"]) for e in doc["per_node"]},
            per_family={f: num(b) for f, b in doc["per_family"].items()},
            total_move_bound=num(doc["total_move_bound"]), refined_total=num(doc["refined_total"]),
            round_bound=doc.get("round_bound"), round_bound_basis=doc.get("round_bound_basis"),
        )


def compute_bounds(report: AnalysisReport, net: ForestNetwork, *, lme: Optional[str] = None) -> BoundReport:
    """Evaluate every bound.  ``lme`` is how local mutual exclusion was
    established: ``"construction"`` (transformer), ``"empirical"`` (sampling
    check) or None (not established, no round bound)."""
    _require_acyclic(report)
    lab = report.family_labels
    per_node = {
        (p, lab[i]): per_node_move_bound(report, net, p, i, exact_zone=True) for i in report.labels for p in net.nodes
    }
    per_family = {lab[i]: sum(per_node_move_bound(report, net, p, i) for p in net.nodes) for i in report.labels}
    return BoundReport(
        algorithm=report.algorithm, families=[lab[i] for i in sorted(report.labels)],
        n=net.n, H=net.H, Delta=net.Delta, k=report.k, d=report.causality.in_degree, height=report.causality.height,
        family_heights={lab[i]: report.family_height(i) for i in report.labels},
        max_o={lab[i]: report.max_o[i] for i in report.labels},
        per_node=per_node, per_family=per_family,
        total_move_bound=total_move_bound(report, net),
        refined_total=refined_move_bound(report, net),
        round_bound=round_bound(report, net, lme is not None),
        round_bound_basis=lme,
    )


@dataclass
class AuditResult:
    passed: bool
    violations: list[str]
    total_moves: int
    rounds: int

    def to_json(self) -> dict:
        return {"format": 1, "passed": self.passed, "violations": self.violations,
                "total_moves": self.total_moves, "rounds": self.rounds}


def audit_trace(trace, bounds: BoundReport) -> AuditResult:
    """Check a trace's counters against every bound in ``bounds``.

    ``trace`` is anything with ``moves`` (Counter keyed by (node, family
    index)), ``total_moves`` and ``rounds``.  Per-node counters are checked
    against the exact-zone per-node bound.
    """
    violations = []
    per_family: dict[str, int] = {}
    for (p, i), count in trace.moves.items():
        f = bounds.families[i - 1]
        per_family[f] = per_family.get(f, 0) + count
        b = bounds.per_node.get((p, f))
        if b is None:
            violations.append(f"no bound for node {p} family {f}")
        elif count > b:
            violations.append(f"node {p} family {f}: {count} moves > per-node bound {b}")
    for f, count in per_family.items():
        if count > bounds.per_family.get(f, float("inf")):
            violations.append(f"family {f}: {count} moves > family bound {bounds.per_family[f]}")
    if trace.total_moves > bounds.total_move_bound:
        violations.append(f"{trace.total_moves} moves > total bound {bounds.total_move_bound}")
    if trace.total_moves > bounds.refined_total:
        violations.append(f"{trace.total_moves} moves > refined bound {bounds.refined_total}")
    if bounds.round_bound is not None and trace.rounds > bounds.round_bound:
        violations.append(f"{trace.rounds} rounds > round bound {bounds.round_bound}")
    return AuditResult(not violations, violations, trace.total_moves, trace.rounds)
