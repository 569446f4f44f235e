"""Built-in algorithms: the input-sum toy algorithm (``te``) and odd-level
counting (``nolp``), plus scripted worst-case executions of ``te``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .model import (
    AlgorithmSpec,
    Configuration,
    Domain,
    FamilySpec,
    ForestNetwork,
    VariableSchema,
    make_configuration,
    reads,
    validate_network,
)

# ---------------------------------------------------------------------------
# te: every node learns the sum of all inputs
# ---------------------------------------------------------------------------


def _te_sub_target(v):
    return sum(v.children("sub")) + v.own("input")


def _te_res_target(v):
    if v.is_root:
        return v.own("sub")
    return max(v.parent("res"), v.own("sub"))


def te_legitimacy(net: ForestNetwork, cfg: Configuration) -> bool:
    total = sum(net.const(p, "input") for p in net.nodes)
    return all(cfg.get(p, "res") == total for p in net.nodes)


def make_te() -> AlgorithmSpec:
    schema = VariableSchema(
        const_names=("input",),
        var_names=("sub", "res"),
        partition={1: ("sub",), 2: ("res",)},
    )
    s = FamilySpec(
        index=1,
        label="S",
        reads=reads("self.sub", "children.sub", "self.input"),
        writes=("sub",),
        guard=lambda v: v.own("sub") != _te_sub_target(v),
        statement=lambda v: {"sub": _te_sub_target(v)},
    )
    r = FamilySpec(
        index=2,
        label="R",
        reads=reads("self.res", "self.sub", "parent.res"),
        writes=("res",),
        guard=lambda v: v.own("res") != _te_res_target(v),
        statement=lambda v: {"res": _te_res_target(v)},
    )
    return AlgorithmSpec("te", schema, (s, r), te_legitimacy)


# ---------------------------------------------------------------------------
# nolp: every node learns how many nodes sit at an odd level
# ---------------------------------------------------------------------------


def _nolp_clr_target(v):
    return 0 if v.is_root else (v.parent("Clr") + 1) % 2


def _nolp_sub_target(v):
    return sum(v.children("Sub")) + v.own("Clr")


def _nolp_res_target(v):
    return v.own("Sub") if v.is_root else v.parent("Res")


def nolp_legitimacy(net: ForestNetwork, cfg: Configuration) -> bool:
    odd = sum(1 for p in net.nodes if net.level_of[p] % 2 == 1)
    return all(cfg.get(p, "Res") == odd for p in net.nodes)


def make_nolp() -> AlgorithmSpec:
    schema = VariableSchema(
        const_names=(),
        var_names=("Clr", "Sub", "Res"),
        partition={1: ("Clr",), 2: ("Sub",), 3: ("Res",)},
        domain={"Clr": Domain((0, 1))},
    )
    c = FamilySpec(
        index=1,
        label="C",
        reads=reads("self.Clr", "parent.Clr"),
        writes=("Clr",),
        guard=lambda v: v.own("Clr") != _nolp_clr_target(v),
        statement=lambda v: {"Clr": _nolp_clr_target(v)},
    )
    s = FamilySpec(
        index=2,
        label="S",
        reads=reads("self.Sub", "children.Sub", "self.Clr"),
        writes=("Sub",),
        guard=lambda v: v.own("Sub") != _nolp_sub_target(v),
        statement=lambda v: {"Sub": _nolp_sub_target(v)},
    )
    r = FamilySpec(
        index=3,
        label="R",
        reads=reads("self.Res", "self.Sub", "parent.Res"),
        writes=("Res",),
        guard=lambda v: v.own("Res") != _nolp_res_target(v),
        statement=lambda v: {"Res": _nolp_res_target(v)},
    )
    return AlgorithmSpec("nolp", schema, (c, s, r), nolp_legitimacy)


REGISTRY: dict[str, Callable[[], AlgorithmSpec]] = {"te": make_te, "nolp": make_nolp}


def get_algorithm(name: str) -> AlgorithmSpec:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown algorithm {name!r}; known: {sorted(REGISTRY)}") from None


# ---------------------------------------------------------------------------
# Networks used by the worst-case constructions
# ---------------------------------------------------------------------------


def line_network(n: int, consts=None) -> ForestNetwork:
    """Nodes 0..n-1, node 0 is the root and ``parent(i) = i - 1``."""
    edges = [(i - 1, i) for i in range(1, n)]
    parent = [None] + list(range(n - 1))
    return validate_network(n, edges, parent, consts)


def star_network(n: int, consts=None) -> ForestNetwork:
    """Node 0 is the center and root; nodes 1..n-1 are leaves."""
    edges = [(0, i) for i in range(1, n)]
    parent = [None] + [0] * (n - 1)
    return validate_network(n, edges, parent, consts)


@dataclass(frozen=True)
class WorstCase:
    network: ForestNetwork
    initial: Configuration
    script: tuple[tuple[int, int], ...]
    description: str


# Node p_m of the constructions below is index m - 1 here.


def te_line_x(n: int, i: int) -> list[tuple[int, int]]:
    """(sub, res) per node of configuration X_{2i+1} on the n-line.

    Cells past the printed columns follow the same alternation: p_m has
    ``sub = m - 2`` for even ``m > 2i+1`` and 0 for odd ``m``; ``res`` is 0.
    """
    if not 3 <= 2 * i + 1 <= n:
        raise ValueError(f"X_{2 * i + 1} undefined for n={n}")
    out = []
    for m in range(1, n + 1):
        if m <= 2 * i:
            out.append((2 * i + 1 - m, 2 * i))
        elif m == 2 * i + 1:
            out.append((0, 0))
        else:
            out.append((m - 2 if m % 2 == 0 else 0, 0))
    return out


def te_line_y(n: int, i: int) -> list[tuple[int, int]]:
    """(sub, res) per node of configuration Y_{2i+2} on the n-line."""
    if not 4 <= 2 * i + 2 <= n:
        raise ValueError(f"Y_{2 * i + 2} undefined for n={n}")
    out = []
    for m in range(1, n + 1):
        if m <= 2 * i + 1:
            out.append((4 * i + 2 - m, 4 * i + 1))
        elif m == 2 * i + 2:
            out.append((2 * i, 0))
        else:
            out.append((m - 2 if m % 2 == 0 else 0, 0))
    return out


def _te_cfg(net, alg, cells) -> Configuration:
    return make_configuration(net, alg, [{"sub": s, "res": r} for s, r in cells])


def te_line_schedule(n: int) -> list[tuple[int, int]]:
    """Central-daemon script X_3 -> Y_4 -> X_5 -> ... up to X_n or Y_n."""
    S, R = 1, 2
    script: list[tuple[int, int]] = []
    i = 1
    while True:
        if 2 * i + 2 > n:
            break
        # X_{2i+1} -> Y_{2i+2}
        for j in range(2 * i + 1, 0, -1):
            script.append((j - 1, S))
            for k in range(j, 2 * i + 2):
                script.append((k - 1, R))
        if 2 * i + 3 > n:
            break
        # Y_{2i+2} -> X_{2i+3}
        for j in range(2 * i + 2, 0, -1):
            script.append((j - 1, S))
        for j in range(1, 2 * i + 3):
            script.append((j - 1, R))
        i += 1
    return script


def te_line_completion(n: int) -> list[tuple[int, int]]:
    """From X_n or Y_n to the terminal configuration.

    Neither X_n nor Y_n is terminal (the leaf's ``sub`` is stale), so this
    tail repeats the Y->X shape over the whole line: S from the leaf up to
    the root, then R from the root down.
    """
    return [(j, 1) for j in range(n - 1, -1, -1)] + [(j, 2) for j in range(n)]


def te_line_final(n: int) -> list[tuple[int, int]]:
    """Configuration reached by :func:`te_line_schedule` (X_n or Y_n)."""
    if n % 2:
        return te_line_x(n, (n - 1) // 2)
    return te_line_y(n, (n - 2) // 2)


def te_line_worst_case(n: int, *, complete: bool = False) -> WorstCase:
    """Line p_1..p_n, inputs 1, starting at X_3 with the back-and-forth script.

    With ``complete=True`` the script continues past X_n/Y_n to a terminal
    configuration.
    """
    if n < 4:
        raise ValueError("te line construction needs n >= 4")
    alg = make_te()
    net = line_network(n, [{"input": 1}] * n)
    script = te_line_schedule(n)
    if complete:
        script += te_line_completion(n)
    return WorstCase(net, _te_cfg(net, alg, te_line_x(n, 1)), tuple(script), f"te-line n={n}")


def te_star_c(n: int, i: int) -> list[tuple[int, int]]:
    """(sub, res) per node of configuration C_i on the n-star (root first)."""
    if not 1 <= i <= n:
        raise ValueError(f"C_{i} undefined for n={n}")
    cells = [(i, i)]
    for j in range(2, n + 1):
        cells.append((1 if j <= i else 0, i))
    return cells


def te_star_schedule(n: int) -> list[tuple[int, int]]:
    S, R = 1, 2
    script = []
    for i in range(1, n):
        script += [(i, S), (0, S), (0, R)]
        script += [(j - 1, R) for j in range(2, n + 1)]
    return script


def te_star_round_case(n: int) -> WorstCase:
    """Star with root p_1, inputs 1, from C_1 through C_2, ..., C_n."""
    if n < 2:
        raise ValueError("te star construction needs n >= 2")
    alg = make_te()
    net = star_network(n, [{"input": 1}] * n)
    return WorstCase(net, _te_cfg(net, alg, te_star_c(n, 1)), tuple(te_star_schedule(n)), f"te-star n={n}")


WORST_CASES = {"te-line": te_line_worst_case, "te-star": te_star_round_case}


def make_incrementer() -> AlgorithmSpec:
    """Deliberately broken control: ``true -> x <- x + 1`` is never correct-alone."""
    schema = VariableSchema(const_names=(), var_names=("x",), partition={1: ("x",)})
    inc = FamilySpec(
        index=1,
        label="Inc",
        reads=reads("self.x"),
        writes=("x",),
        guard=lambda v: True,
        statement=lambda v: {"x": v.own("x") + 1},
    )
    return AlgorithmSpec("incrementer", schema, (inc,))
