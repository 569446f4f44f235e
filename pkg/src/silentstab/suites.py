"""Fixed-seed property suites behind ``silentstab verify``."""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

from .algorithms import line_network, make_incrementer, make_nolp, make_te, star_network
from .analysis import analyze, test_correct_alone
from .bounds import refined_move_bound, total_move_bound
from .engine import shaped_network
from .explore import explore_exhaustive
from .model import validate_network
from .transformer import check_local_mutual_exclusion, transform


def _result(name: str, passed: bool, **detail) -> dict:
    return {"check": name, "passed": bool(passed), **detail}


def tiny_networks(consts=None):
    """1-node tree, 2-line, 3-line and the 3-node tree rooted at its center."""
    c = consts or {}
    yield "1-node", validate_network(1, [], [None], [dict(c)])
    yield "2-line", line_network(2, [dict(c)] * 2)
    yield "3-line", line_network(3, [dict(c)] * 3)
    yield "3-star", star_network(3, [dict(c)] * 3)


def tiny_exhaustive() -> list[dict]:
    out = []
    te = make_te()
    for name, net in tiny_networks({"input": 1}):
        dom = {"sub": [0, 1, 2, 3], "res": [0, 1, 2, 3]}
        r = explore_exhaustive(net, te, dom)
        out.append(_result(f"te/{name}", r.all_terminate and r.all_terminal_satisfy_sp,
                           states=r.state_count, longest_move_path=r.longest_move_path))
    nolp = make_nolp()
    for name, net in list(tiny_networks())[1:2]:
        dom = {"Clr": [0, 1], "Sub": [0, 1, 2], "Res": [0, 1, 2]}
        r = explore_exhaustive(net, nolp, dom)
        out.append(_result(f"nolp/{name}", r.all_terminate and r.all_terminal_satisfy_sp,
                           states=r.state_count, longest_move_path=r.longest_move_path))
    return out


def correct_alone(trials: int = 10_000) -> list[dict]:
    out = []
    for alg in (make_te(), make_nolp()):
        for f in alg.families:
            r = test_correct_alone(None, alg, f.index, trials, seed=1000 + f.index)
            out.append(_result(f"{alg.name}/{f.label}", r.passed, trials=r.trials))
    ctrl = make_incrementer()
    r = test_correct_alone(None, ctrl, 1, 100, seed=1)
    out.append(_result("control/Inc finds counterexample", not r.passed, trials=r.trials))
    return out


def lme(trials: int = 10_000) -> list[dict]:
    out = []
    domains = {"te": {"sub": [0, 1, 2], "res": [0, 1, 2]},
               "nolp": {"Clr": [0, 1], "Sub": [0, 1, 2], "Res": [0, 1, 2]}}
    for alg in (make_te(), make_nolp()):
        t_alg = transform(alg)
        net = line_network(2, [{c: 1 for c in alg.schema.const_names}] * 2)
        r = check_local_mutual_exclusion(net, t_alg, domain=domains[alg.name])
        out.append(_result(f"{t_alg.name}/2-line", r.passed, mode=r.mode, checked=r.checked))
        r = check_local_mutual_exclusion(None, t_alg, trials, seed=7, max_n=15)
        out.append(_result(f"{t_alg.name}/random-trees", r.passed, mode=r.mode, checked=r.checked))
    return out


def bounds_grid(max_n: int = 50) -> list[dict]:
    te, nolp = make_te(), make_nolp()
    bad_te, bad_nolp, cases = [], [], 0
    rng = random.Random(3)
    for n in range(1, max_n + 1):
        for shape in ("line", "star", "random-tree"):
            net = shaped_network(shape, n, rng)
            cases += 1
            r = analyze(net, te)
            H = net.H
            if refined_move_bound(r, net) != n * n * (3 + 2 * H):
                bad_te.append([shape, n])
            r = analyze(net, nolp)
            if (refined_move_bound(r, net) != (H + 1) * n + 2 * n**3 + 4 * (H + 1) * n**3
                    or total_move_bound(r, net) != 3 * (2 + net.Delta) ** 2 * n**4):
                bad_nolp.append([shape, n])
    return [
        _result("te refined = n^2(3+2H)", not bad_te, cases=cases, failures=bad_te),
        _result("nolp refined and total", not bad_nolp, cases=cases, failures=bad_nolp),
    ]


SUITES: dict[str, Callable[[], list[dict]]] = {
    "tiny-exhaustive": tiny_exhaustive,
    "correct-alone": correct_alone,
    "lme": lme,
    "bounds-grid": bounds_grid,
}


def run_suites(names, workers: int = 1) -> dict[str, list[dict]]:
    names = sorted(names)
    if workers > 1 and len(names) > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_one, names))
    else:
        results = [_run_one(n) for n in names]
    return dict(zip(names, results))


def _run_one(name: str) -> list[dict]:
    return SUITES[name]()
