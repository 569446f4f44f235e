"""Executions under pluggable daemons, with move and round accounting."""

from __future__ import annotations

import csv
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .analysis import random_configuration
from .errors import SchedulingError
from .model import (
    AlgorithmSpec,
    Configuration,
    ForestNetwork,
    apply_step,
    enabled_families,
    validate_network,
)

TERMINAL = "Terminal"
STEP_LIMIT = "StepLimitExceeded"
SCRIPT_EXHAUSTED = "ScriptExhausted"

Pair = tuple[int, int]


# ---------------------------------------------------------------------------
# Daemons
# ---------------------------------------------------------------------------


class Daemon:
    """Picks the next step from ``enabled`` (node -> enabled family indices).

    Returning None means the daemon has nothing more to schedule; only
    scripted daemons do that.
    """

    kind = "abstract"
    central = False

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def select(self, enabled: Mapping[int, Sequence[int]]) -> Optional[list[Pair]]:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind, "seed": self.seed}


class Synchronous(Daemon):
    kind = "synchronous"

    def select(self, enabled):
        return [(p, fams[0]) for p, fams in sorted(enabled.items())]


class RandomDistributed(Daemon):
    kind = "random-distributed"

    def __init__(self, seed: int = 0, rho: float = 0.5):
        super().__init__(seed)
        if not 0 < rho <= 1:
            raise ValueError("activation probability must be in (0, 1]")
        self.rho = rho

    def select(self, enabled):
        nodes = sorted(enabled)
        while True:
            chosen = [p for p in nodes if self.rng.random() < self.rho]
            if chosen:
                return [(p, self.rng.choice(enabled[p])) for p in chosen]

    def describe(self):
        return {**super().describe(), "rho": self.rho}


class RandomCentral(Daemon):
    kind = "random-central"
    central = True

    def select(self, enabled):
        p = self.rng.choice(sorted(enabled))
        return [(p, self.rng.choice(enabled[p]))]


class RoundRobinCentral(Daemon):
    kind = "round-robin-central"
    central = True

    def __init__(self, seed: int = 0):
        super().__init__(seed)
        self._next = 0

    def select(self, enabled):
        nodes = sorted(enabled)
        p = next((q for q in nodes if q >= self._next), nodes[0])
        self._next = p + 1
        return [(p, enabled[p][0])]


class Scripted(Daemon):
    """Replays a list of singleton ``(node, family)`` activations.

    When the script runs out, scheduling passes to ``then`` if given;
    otherwise the execution stops with outcome ``ScriptExhausted``.
    """

    kind = "scripted"
    central = True

    def __init__(self, script: Iterable[Pair], then: Optional[Daemon] = None, seed: int = 0):
        super().__init__(seed)
        self.script = list(script)
        self.then = then
        self.position = 0

    def select(self, enabled):
        if self.position >= len(self.script):
            return self.then.select(enabled) if self.then is not None else None
        p, i = self.script[self.position]
        if i not in enabled.get(p, ()):
            raise SchedulingError(f"scripted step {self.position}: ({p}, {i}) is not enabled")
        self.position += 1
        return [(p, i)]

    def describe(self):
        d = {"kind": self.kind, "length": len(self.script)}
        if self.then is not None:
            d["then"] = self.then.describe()
        return d


BUILTIN_DAEMONS = ("synchronous", "random-distributed", "random-central", "round-robin-central")


def make_daemon(kind: str, seed: int = 0, *, rho: float = 0.5, script=None, then=None) -> Daemon:
    if kind == "synchronous":
        return Synchronous(seed)
    if kind == "random-distributed":
        return RandomDistributed(seed, rho)
    if kind == "random-central":
        return RandomCentral(seed)
    if kind == "round-robin-central":
        return RoundRobinCentral(seed)
    if kind == "scripted":
        return Scripted(script or [], then, seed)
    raise ValueError(f"unknown daemon {kind!r}")


# ---------------------------------------------------------------------------
# Rounds
# ---------------------------------------------------------------------------


class RoundCounter:
    """Neutralization-based rounds, tracked per process.

    ``pending`` holds the processes enabled when the current round started
    that have neither moved nor been neutralized yet.  A process is
    neutralized in a step when it was enabled before it, is disabled after
    it, and did not move in it.
    """

    def __init__(self, enabled_at_start: Iterable[int]):
        self.pending = set(enabled_at_start)
        self.rounds = 0
        self.boundaries: list[int] = []
        self._open = False

    def observe(self, step_index: int, movers: Iterable[int], enabled_after: Iterable[int]) -> None:
        enabled_after = set(enabled_after)
        self._open = True
        self.pending.difference_update(movers)
        self.pending.intersection_update(enabled_after)
        if not self.pending:
            self.rounds += 1
            self.boundaries.append(step_index + 1)
            self._open = False
            self.pending = enabled_after

    def finish(self) -> int:
        """Total rounds; an unfinished trailing round with steps counts as one."""
        return self.rounds + (1 if self._open else 0)


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@dataclass
class Step:
    selection: tuple[Pair, ...]
    digest: str


@dataclass
class ExecutionTrace:
    initial: Configuration
    final: Configuration
    steps: list[Step]
    moves: Counter
    total_moves: int
    rounds: int
    round_boundaries: list[int]
    outcome: str
    daemon: dict = field(default_factory=dict)
    step_limit: Optional[int] = None
    configs: Optional[list[Configuration]] = None
    algorithm: str = ""

    def moves_per_family(self, alg: AlgorithmSpec) -> dict[str, int]:
        out = {f.label: 0 for f in alg.families}
        for (_, i), c in self.moves.items():
            out[alg.label(i)] += c
        return out

    def round_of_step(self) -> list[int]:
        """1-based round number of every step."""
        out, r, b = [], 1, iter(self.round_boundaries)
        nxt = next(b, None)
        for s in range(len(self.steps)):
            if nxt is not None and s >= nxt:
                r += 1
                nxt = next(b, None)
            out.append(r)
        return out

    def summary(self, alg: AlgorithmSpec) -> dict:
        return {
            "format": 1,
            "algorithm": alg.name,
            "outcome": self.outcome,
            "steps": len(self.steps),
            "total_moves": self.total_moves,
            "moves_per_family": self.moves_per_family(alg),
            "rounds": self.rounds,
            "daemon": self.daemon,
            "step_limit": self.step_limit,
            "final_digest": self.final.digest(),
        }


def _enabled_map(net, alg, cfg, nodes=None) -> dict[int, tuple[int, ...]]:
    out = {}
    for p in net.nodes if nodes is None else nodes:
        fams = enabled_families(net, alg, cfg, p)
        if fams:
            out[p] = fams
    return out


def run(
    net: ForestNetwork,
    alg: AlgorithmSpec,
    init: Configuration,
    daemon: Daemon,
    step_limit: Optional[int] = None,
    *,
    keep_configs: bool = False,
) -> ExecutionTrace:
    """Run until terminal, until the step limit, or until a script ends.

    The default step limit is the total move bound plus one, so reaching it
    already signals a bound violation.
    """
    if step_limit is None:
        from .bounds import default_step_limit

        step_limit = default_step_limit(net, alg)
    if step_limit <= 0:
        raise ValueError("step_limit must be positive")
    cfg = init
    enabled = _enabled_map(net, alg, cfg)
    rounds = RoundCounter(enabled)
    steps: list[Step] = []
    moves: Counter = Counter()
    configs = [cfg] if keep_configs else None
    outcome = TERMINAL
    while enabled:
        if len(steps) >= step_limit:
            outcome = STEP_LIMIT
            break
        selection = daemon.select(enabled)
        if selection is None:
            outcome = SCRIPT_EXHAUSTED
            break
        cfg = apply_step(net, alg, cfg, selection, check_enabled=False)
        for pi in selection:
            moves[pi] += 1
        steps.append(Step(tuple(sorted(selection)), cfg.digest()))
        if keep_configs:
            configs.append(cfg)
        dirty = {q for p, _ in selection for q in net.closed_neighborhood[p]}
        for q in dirty:
            enabled.pop(q, None)
        enabled.update(_enabled_map(net, alg, cfg, dirty))
        rounds.observe(len(steps) - 1, (p for p, _ in selection), enabled)
    return ExecutionTrace(
        initial=init,
        final=cfg,
        steps=steps,
        moves=moves,
        total_moves=sum(moves.values()),
        rounds=rounds.finish(),
        round_boundaries=rounds.boundaries,
        outcome=outcome,
        daemon=daemon.describe(),
        step_limit=step_limit,
        configs=configs,
        algorithm=alg.name,
    )


def replay(net, alg, trace: ExecutionTrace) -> list[Configuration]:
    """Configurations of ``trace`` recomputed from its initial configuration."""
    out = [trace.initial]
    for s in trace.steps:
        out.append(apply_step(net, alg, out[-1], s.selection))
    return out


def count_rounds(trace: ExecutionTrace, net: ForestNetwork, alg: AlgorithmSpec) -> tuple[int, list[int]]:
    """Recount rounds by replaying the trace's selections."""
    configs = trace.configs or replay(net, alg, trace)
    counter = RoundCounter(_enabled_map(net, alg, configs[0]))
    for s, step in enumerate(trace.steps):
        counter.observe(s, (p for p, _ in step.selection), _enabled_map(net, alg, configs[s + 1]))
    return counter.finish(), counter.boundaries


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

TRACE_COLUMNS = ("step", "node", "family", "move_index", "round")


def write_trace_csv(path, trace: ExecutionTrace, alg: AlgorithmSpec) -> None:
    """One row per move.  The first line is a ``# format: 1`` comment."""
    rounds = trace.round_of_step()
    with open(path, "w", newline="") as fh:
        fh.write("# format: 1\n")
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        move = 0
        for s, step in enumerate(trace.steps):
            for p, i in step.selection:
                move += 1
                w.writerow([s, p, alg.label(i), move, rounds[s]])


@dataclass
class TraceCounts:
    """What an audit needs, as recovered from a trace CSV."""

    moves: Counter
    total_moves: int
    rounds: int
    steps: int


def read_trace_csv(path, families: Sequence[str]) -> TraceCounts:
    """Recover move counters; ``families`` lists labels in index order."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    moves: Counter = Counter()
    for row in rows:
        moves[(int(row["node"]), list(families).index(row["family"]) + 1)] += 1
    return TraceCounts(
        moves=moves,
        total_moves=len(rows),
        rounds=max((int(r["round"]) for r in rows), default=0),
        steps=len({r["step"] for r in rows}),
    )


def write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

SHAPES = ("line", "star", "random-tree")


def random_tree(rng: random.Random, n: int) -> ForestNetwork:
    """Random recursive tree: node i > 0 hangs below a uniform earlier node."""
    parent = [None] + [rng.randrange(i) for i in range(1, n)]
    return validate_network(n, [(parent[i], i) for i in range(1, n)], parent)


def shaped_network(shape: str, n: int, rng: Optional[random.Random] = None) -> ForestNetwork:
    if n < 1:
        raise ValueError("n must be at least 1")
    if shape == "line":
        parent = [None] + list(range(n - 1))
    elif shape == "star":
        parent = [None] + [0] * (n - 1)
    elif shape == "random-tree":
        return random_tree(rng or random.Random(0), n)
    else:
        raise ValueError(f"unknown shape {shape!r}; known: {SHAPES}")
    return validate_network(n, [(parent[i], i) for i in range(1, n)], parent)


def random_instance(
    seed: int, n: int, shape: str, bound: int, alg: AlgorithmSpec, *, const_bound: Optional[int] = None
) -> tuple[ForestNetwork, Configuration]:
    """Network of the given shape plus a uniform configuration in [0, bound].

    Constants are drawn from [0, const_bound] (``bound`` by default).
    """
    rng = random.Random(seed)
    net = shaped_network(shape, n, rng)
    cb = bound if const_bound is None else const_bound
    net = net.with_consts([{c: rng.randint(0, cb) for c in alg.schema.const_names} for _ in net.nodes])
    return net, random_configuration(net, alg, rng, bound)
