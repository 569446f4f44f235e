"""``silentstab`` command line: analyze, run, transform, worstcase, verify,
bounds and audit.

Exit codes: 0 success, 1 verification or audit failure, 2 usage or input
error.  Relative output paths are resolved against ``$SILENTSTAB_OUTPUT_DIR``
when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .algorithms import REGISTRY, WORST_CASES, get_algorithm, te_line_completion
from .analysis import analyze, build_causality_graph, random_configuration
from .bounds import BoundReport, audit_trace, compute_bounds, default_step_limit
from .engine import (
    BUILTIN_DAEMONS,
    SHAPES,
    TERMINAL,
    RoundRobinCentral,
    Scripted,
    make_daemon,
    read_trace_csv,
    run,
    shaped_network,
    write_json,
    write_trace_csv,
)
from .errors import SchedulingError, SilentStabError
from .explore import explore_exhaustive
from .files import load_configuration, load_network
from .suites import SUITES, run_suites
from .transformer import check_local_mutual_exclusion, derive_order, replay_on_original, transform

OK, FAILED, USAGE = 0, 1, 2
OUTPUT_DIR_ENV = "SILENTSTAB_OUTPUT_DIR"
DEFAULT_SHAPE, DEFAULT_N = "line", 8


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Fully resolved inputs of one command, embedded in every report."""

    command: str
    algorithm: Optional[str] = None
    network: dict = field(default_factory=dict)
    consts: dict = field(default_factory=dict)
    daemon: Optional[str] = None
    seed: int = 0
    rho: float = 0.5
    init: dict = field(default_factory=dict)
    step_limit: Optional[int] = None
    outputs: dict = field(default_factory=dict)
    transform: bool = False

    def __post_init__(self):
        if self.network and ("file" in self.network) == ("shape" in self.network):
            raise UsageError("exactly one network source is allowed")
        if self.init and sum(k in self.init for k in ("file", "random_bound", "worstcase", "exhaustive")) != 1:
            raise UsageError("exactly one init source is allowed")

    def to_json(self) -> dict:
        return {"format": 1, **asdict(self)}


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _out_path(p: Optional[str]) -> Optional[Path]:
    if p is None:
        return None
    path = Path(p)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(doc: dict, args, table: str) -> None:
    if getattr(args, "report_out", None):
        write_json(_out_path(args.report_out), doc)
    if getattr(args, "json", False):
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(table)


def _parse_consts(items) -> dict[str, int]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--const expects NAME=VALUE, got {item!r}")
        try:
            out[name] = int(value)
        except ValueError:
            raise UsageError(f"--const {name}: {value!r} is not an integer") from None
    return out


def _resolve_network(args, alg):
    """Network plus the config record of where it came from."""
    consts = _parse_consts(getattr(args, "const", None))
    if args.network:
        net = load_network(args.network)
        source = {"file": args.network}
        if consts:
            net = net.with_consts([{**net.consts[p], **consts} for p in net.nodes])
        return net, source, consts
    shape = args.shape or DEFAULT_SHAPE
    n = args.n if args.n is not None else DEFAULT_N
    net = shaped_network(shape, n, random.Random(args.seed))
    # constants default to 1 on generated shapes
    values = {c: consts.get(c, 1) for c in alg.schema.const_names}
    net = net.with_consts([dict(values) for _ in net.nodes])
    return net, {"shape": shape, "n": n}, values


def _add_network_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("network source (default: --shape line --n 8)")
    g.add_argument("--network", metavar="FILE", help="network JSON file")
    g.add_argument("--shape", choices=SHAPES)
    g.add_argument("--n", type=int)
    g.add_argument("--const", action="append", metavar="NAME=V", help="set a constant on every node")


def _check_network_args(args) -> None:
    if args.network and (args.shape or args.n is not None):
        raise UsageError("give either --network or --shape/--n, not both")


def _algorithm(name: str, transformed: bool):
    alg = get_algorithm(name)
    return (transform(alg) if transformed else alg), alg


def _bounds_table(b: BoundReport) -> str:
    rows = [f"algorithm {b.algorithm}: n={b.n} H={b.H} Delta={b.Delta} k={b.k} d={b.d} height={b.height}"]
    doc = b.to_json()
    rows.append(f"{'family':<8}{'height':>8}{'maxO':>6}{'moves bound':>16}")
    for f in b.families:
        rows.append(f"{f:<8}{b.family_heights[f]:>8}{b.max_o[f]:>6}{doc['per_family'][f]!s:>16}")
    rows.append(f"total move bound {doc['total_move_bound']}, refined {doc['refined_total']}")
    rows.append(f"round bound {b.round_bound if b.round_bound is not None else 'n/a (no local mutual exclusion)'}")
    return "\n".join(rows)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    _check_network_args(args)
    alg, _ = _algorithm(args.algorithm, args.transform)
    net, source, consts = _resolve_network(args, alg)
    config = ExperimentConfig("analyze", alg.name, source, consts, seed=args.seed,
                              outputs={"report": args.report_out}, transform=args.transform)
    report = analyze(net, alg, correct_alone_trials=args.trials, seed=args.seed)
    doc = {"config": config.to_json(), **report.to_json()}
    lines = [f"algorithm {alg.name}: verdict {report.verdict}, k={report.k}, "
             f"height={report.causality.height}, d={report.causality.in_degree}"]
    lines.append(f"{'family':<8}{'labels':<22}{'height':>7}{'maxO':>6}  correct-alone")
    for fam in doc["families"]:
        ca = fam.get("correct_alone", {}).get("passed", "untested")
        lines.append(f"{fam['label']:<8}{','.join(fam['classification']):<22}{fam['height']!s:>7}{fam['maxO']:>6}  {ca}")
    if report.acyclic and report.all_oriented:
        b = compute_bounds(report, net, lme="construction" if args.transform else None)
        doc["bounds"] = b.to_json()
        lines.append(_bounds_table(b))
    _emit(doc, args, "\n".join(lines))
    return OK if report.verdict else FAILED


def cmd_bounds(args) -> int:
    _check_network_args(args)
    alg, _ = _algorithm(args.algorithm, args.transform)
    net, source, consts = _resolve_network(args, alg)
    lme = args.lme
    if lme is None and args.transform:
        lme = "construction"
    if lme == "empirical" and not check_local_mutual_exclusion(net, alg, seed=args.seed).passed:
        lme = None
    config = ExperimentConfig("bounds", alg.name, source, consts, seed=args.seed,
                              outputs={"report": args.report_out}, transform=args.transform)
    b = compute_bounds(analyze(net, alg), net, lme=lme)
    _emit({"config": config.to_json(), **b.to_json()}, args, _bounds_table(b))
    return OK


def cmd_transform(args) -> int:
    _check_network_args(args)
    original = get_algorithm(args.algorithm)
    order = derive_order(build_causality_graph(original))
    t_alg = transform(original, order)
    net, source, consts = _resolve_network(args, original)
    report = analyze(net, t_alg, correct_alone_trials=args.trials, seed=args.seed)
    config = ExperimentConfig("transform", original.name, source, consts, seed=args.seed,
                              outputs={"report": args.report_out}, transform=True)
    labels = [original.label(i) for i in order.sequence]
    doc = {"config": config.to_json(), "order": labels, **report.to_json()}
    lines = [f"priority order (highest first): {' > '.join(labels)}",
             f"{t_alg.name}: verdict {report.verdict}, height={report.causality.height}, d={report.causality.in_degree}"]
    if report.acyclic and report.all_oriented:
        b = compute_bounds(report, net, lme="construction")
        doc["bounds"] = b.to_json()
        lines.append(_bounds_table(b))
    _emit(doc, args, "\n".join(lines))
    return OK if report.verdict else FAILED


def _init_source(args) -> dict:
    given = [k for k in ("init", "bound", "worstcase", "exhaustive") if getattr(args, k) is not None]
    if len(given) > 1:
        raise UsageError("give only one of --init, --bound, --worstcase, --exhaustive")
    if args.init is not None:
        return {"file": args.init}
    if args.worstcase is not None:
        return {"worstcase": args.worstcase}
    if args.exhaustive is not None:
        return {"exhaustive": args.exhaustive}
    return {"random_bound": args.bound if args.bound is not None else 10}


def cmd_run(args) -> int:
    _check_network_args(args)
    init_src = _init_source(args)
    alg, original = _algorithm(args.algorithm, args.transform)
    worst = None
    if "worstcase" in init_src:
        if args.network or args.shape:
            raise UsageError("--worstcase builds its own network; drop --network/--shape")
        if args.n is None:
            raise UsageError("--worstcase needs --n")
        if args.algorithm != "te":
            raise UsageError("the worst-case constructions are for te")
        worst = WORST_CASES[args.worstcase](args.n)
        net = worst.network
        source, consts = {"shape": f"{args.worstcase} construction", "n": args.n}, {"input": 1}
    else:
        net, source, consts = _resolve_network(args, alg)

    outputs = {"report": args.report_out, "trace": args.trace_out, "summary": args.summary_out}
    daemon_kind = args.daemon
    if worst is not None and not args.transform:
        daemon_kind = "scripted"
    config = ExperimentConfig("run", alg.name, source, consts, daemon_kind, args.seed, args.rho,
                              init_src, args.steps_limit, outputs, args.transform)

    if "exhaustive" in init_src:
        values = list(range(init_src["exhaustive"]))
        domain = {}
        for name in alg.schema.var_names:
            dom = alg.schema.domain_of(name)
            domain[name] = values if dom.values is None else [v for v in dom.values if v in values] or list(dom.values)
        result = explore_exhaustive(net, alg, domain)
        doc = {"config": config.to_json(), "format": 1, "exploration": result.to_json()}
        ok = result.all_terminate and result.all_terminal_satisfy_sp is not False
        _emit(doc, args, f"{result.state_count} reachable configurations from {result.initial_count} initial; "
                         f"all terminate: {result.all_terminate}; sinks legitimate: {result.all_terminal_satisfy_sp}; "
                         f"longest move path: {result.longest_move_path}")
        return OK if ok else FAILED

    if worst is not None:
        init = worst.initial
    elif "file" in init_src:
        init = load_configuration(init_src["file"], net, alg)
    else:
        init = random_configuration(net, alg, random.Random(args.seed), init_src["random_bound"])

    step_limit = args.steps_limit if args.steps_limit is not None else default_step_limit(net, alg)
    config.step_limit = step_limit
    if daemon_kind == "scripted":
        script = list(worst.script)
        if args.worstcase == "te-line":
            script += te_line_completion(args.n)
        daemon = Scripted(script, then=RoundRobinCentral(args.seed), seed=args.seed)
    else:
        daemon = make_daemon(daemon_kind, args.seed, rho=args.rho)
    trace = run(net, alg, init, daemon, step_limit)

    report = analyze(net, alg)
    bounds = compute_bounds(report, net, lme="construction" if args.transform else None)
    audit = audit_trace(trace, bounds)
    checks = {"terminal": trace.outcome == TERMINAL, "audit": audit.passed}
    if alg.legitimacy is not None:
        checks["legitimate"] = trace.outcome == TERMINAL and alg.legitimacy(net, trace.final)
    if args.transform:
        checks["replays_on_original"] = replay_on_original(trace, net, original)
        original_audit = audit_trace(trace, compute_bounds(analyze(net, original), net))
        checks["original_bounds"] = original_audit.passed
    summary = trace.summary(alg)
    doc = {"config": config.to_json(), "format": 1, "summary": summary, "audit": audit.to_json(),
           "bounds": bounds.to_json(), "checks": checks}
    if args.trace_out:
        write_trace_csv(_out_path(args.trace_out), trace, alg)
    if args.summary_out:
        write_json(_out_path(args.summary_out), {"config": config.to_json(), **summary})
    lines = [f"{alg.name} on n={net.n} (H={net.H}) under {daemon_kind}: {trace.outcome} after "
             f"{len(trace.steps)} steps, {trace.total_moves} moves, {trace.rounds} rounds",
             f"moves per family: {summary['moves_per_family']}",
             f"round bound: {bounds.round_bound if bounds.round_bound is not None else 'n/a'}"]
    lines += [f"{name}: {'ok' if v else 'FAILED'}" for name, v in checks.items()]
    lines += [f"  {v}" for v in audit.violations]
    _emit(doc, args, "\n".join(lines))
    return OK if all(checks.values()) else FAILED


def cmd_worstcase(args) -> int:
    alg = get_algorithm("te")
    if args.name == "te-line":
        worst = WORST_CASES["te-line"](args.n, complete=args.complete)
    else:
        worst = WORST_CASES["te-star"](args.n)
    daemon = Scripted(worst.script)
    trace = run(worst.network, alg, worst.initial, daemon, len(worst.script) + 1)
    bounds = compute_bounds(analyze(worst.network, alg), worst.network)
    audit = audit_trace(trace, bounds)
    config = ExperimentConfig("worstcase", alg.name, {"shape": f"{args.name} construction", "n": args.n},
                              {"input": 1}, "scripted", init={"worstcase": args.name},
                              step_limit=len(worst.script) + 1,
                              outputs={"report": args.report_out, "trace": args.trace_out})
    if args.trace_out:
        write_trace_csv(_out_path(args.trace_out), trace, alg)
    doc = {"config": config.to_json(), "format": 1, "description": worst.description,
           "summary": trace.summary(alg), "audit": audit.to_json(), "refined_bound": bounds.refined_total}
    _emit(doc, args, f"{worst.description}: {len(worst.script)} scripted moves, {trace.total_moves} moves, "
                     f"{trace.rounds} rounds, outcome {trace.outcome}, "
                     f"audit {'ok' if audit.passed else 'FAILED'} (refined bound {bounds.refined_total})")
    return OK if audit.passed else FAILED


def cmd_verify(args) -> int:
    names = sorted(SUITES) if "all" in args.suites else sorted(set(args.suites))
    results = run_suites(names, workers=args.workers)
    passed = all(r["passed"] for rs in results.values() for r in rs)
    doc = {"format": 1, "config": ExperimentConfig("verify", outputs={"report": args.report_out}).to_json(),
           "passed": passed, "suites": results}
    lines = [f"{'PASS' if r['passed'] else 'FAIL'} {name}: {r['check']}" for name, rs in results.items() for r in rs]
    _emit(doc, args, "\n".join(lines))
    return OK if passed else FAILED


def cmd_audit(args) -> int:
    try:
        doc = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {args.report}: {exc}") from None
    doc = doc.get("bounds", doc)
    try:
        bounds = BoundReport.from_json(doc)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{args.report} is not a bound report: missing {exc}") from None
    try:
        counts = read_trace_csv(args.trace, bounds.families)
    except OSError as exc:
        raise UsageError(f"cannot read trace {args.trace}: {exc}") from None
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{args.trace} is not a trace CSV: {exc}") from None
    result = audit_trace(counts, bounds)
    out = {"config": ExperimentConfig("audit", bounds.algorithm,
                                      outputs={"report": args.report_out}).to_json(), **result.to_json()}
    out["inputs"] = {"trace": args.trace, "report": args.report}
    _emit(out, args, f"{counts.total_moves} moves, {counts.rounds} rounds: "
                     + ("audit ok" if result.passed else "audit FAILED\n" + "\n".join(result.violations)))
    return OK if result.passed else FAILED


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="silentstab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    algs = sorted(REGISTRY)

    def common(p, *, reports=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true", help="print the JSON document instead of a table")
        if reports:
            p.add_argument("--report-out", metavar="FILE")

    p = sub.add_parser("analyze", help="static analysis and bounds")
    p.add_argument("algorithm", choices=algs)
    _add_network_args(p)
    p.add_argument("--trials", type=int, default=1000, help="correct-alone trials per family")
    p.add_argument("--transform", action="store_true", help="analyze T(algorithm) instead")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bounds", help="print the move and round bounds")
    p.add_argument("algorithm", choices=algs)
    _add_network_args(p)
    p.add_argument("--transform", action="store_true")
    p.add_argument("--lme", choices=("construction", "empirical"),
                   help="how local mutual exclusion is established (enables the round bound)")
    common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("transform", help="derive the priority order and analyze T(algorithm)")
    p.add_argument("algorithm", choices=algs)
    _add_network_args(p)
    p.add_argument("--trials", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("run", help="execute under a daemon and audit the trace")
    p.add_argument("algorithm", choices=algs)
    _add_network_args(p)
    g = p.add_argument_group("init source (default: --bound 10)")
    g.add_argument("--init", metavar="FILE", help="configuration JSON file")
    g.add_argument("--bound", type=int, help="uniform random values in [0, BOUND]")
    g.add_argument("--worstcase", choices=sorted(WORST_CASES))
    g.add_argument("--exhaustive", type=int, metavar="D", help="explore every configuration with values < D")
    p.add_argument("--daemon", choices=BUILTIN_DAEMONS, default="synchronous")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--steps-limit", type=int)
    p.add_argument("--trace-out", metavar="FILE")
    p.add_argument("--summary-out", metavar="FILE")
    p.add_argument("--transform", action="store_true")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("worstcase", help="replay a scripted worst-case execution of te")
    p.add_argument("name", choices=sorted(WORST_CASES))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--complete", action="store_true", help="te-line: continue to a terminal configuration")
    p.add_argument("--trace-out", metavar="FILE")
    common(p)
    p.set_defaults(func=cmd_worstcase)

    p = sub.add_parser("verify", help="run fixed-seed property suites")
    p.add_argument("suites", nargs="+", choices=sorted(SUITES) + ["all"])
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("audit", help="check a trace CSV against a bound report")
    p.add_argument("--trace", required=True, metavar="CSV")
    p.add_argument("--report", required=True, metavar="JSON")
    common(p)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchedulingError as exc:
        print(f"silentstab: {exc}", file=sys.stderr)
        return FAILED
    except UsageError as exc:
        print(f"silentstab: {exc}", file=sys.stderr)
        return USAGE
    except (SilentStabError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"silentstab: {type(exc).__name__}: {msg}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
