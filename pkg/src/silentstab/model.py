"""Networks with a spanning forest, guarded-action families and step semantics.

The model is the locally shared memory model with composite atomicity: in a
step every selected process reads the pre-step configuration, then all of them
write at once.  Everything here is an immutable value; ``apply_step`` returns a
fresh :class:`Configuration`.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import DomainError, NetworkError, ReadViolation, SchemaError, StepError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ForestNetwork:
    """An undirected graph whose parent pointers form a spanning forest.

    Build instances with :func:`validate_network`; the constructor does not
    check anything.  ``consts`` holds the per-node constant inputs (e.g.
    ``input`` for the sum algorithm); ``parent``/``children`` are structural
    and are not part of ``consts``.
    """

    n: int
    adjacency: tuple[frozenset[int], ...]
    parent: tuple[Optional[int], ...]
    children: tuple[tuple[int, ...], ...]
    height_of: tuple[int, ...]
    level_of: tuple[int, ...]
    H: int
    Delta: int
    consts: tuple[Mapping[str, int], ...] = ()

    @property
    def nodes(self) -> range:
        return range(self.n)

    @property
    def roots(self) -> tuple[int, ...]:
        return tuple(p for p in self.nodes if self.parent[p] is None)

    def is_root(self, p: int) -> bool:
        return self.parent[p] is None

    def is_leaf(self, p: int) -> bool:
        return not self.children[p]

    @cached_property
    def others(self) -> tuple[tuple[int, ...], ...]:
        """Neighbors that are neither the parent nor a child (non-tree edges)."""
        out = []
        for p in self.nodes:
            tree = set(self.children[p])
            if self.parent[p] is not None:
                tree.add(self.parent[p])
            out.append(tuple(sorted(self.adjacency[p] - tree)))
        return tuple(out)

    @cached_property
    def closed_neighborhood(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(self.adjacency[p] | {p})) for p in self.nodes)

    def ancestors(self, p: int) -> frozenset[int]:
        return self._ancestors[p]

    def descendants(self, p: int) -> frozenset[int]:
        return self._descendants[p]

    @cached_property
    def _ancestors(self) -> tuple[frozenset[int], ...]:
        out: list[frozenset[int]] = [frozenset()] * self.n
        for p in sorted(self.nodes, key=lambda q: self.level_of[q]):
            par = self.parent[p]
            out[p] = frozenset({p}) if par is None else out[par] | {p}
        return tuple(out)

    @cached_property
    def _descendants(self) -> tuple[frozenset[int], ...]:
        out: list[frozenset[int]] = [frozenset()] * self.n
        for p in sorted(self.nodes, key=lambda q: self.height_of[q]):
            acc = {p}
            for c in self.children[p]:
                acc |= out[c]
            out[p] = frozenset(acc)
        return tuple(out)

    def const(self, p: int, name: str) -> int:
        return self.consts[p][name]

    def with_consts(self, consts: Sequence[Mapping[str, int]]) -> "ForestNetwork":
        if len(consts) != self.n:
            raise NetworkError(f"expected {self.n} constant maps, got {len(consts)}")
        return ForestNetwork(
            self.n, self.adjacency, self.parent, self.children, self.height_of,
            self.level_of, self.H, self.Delta, tuple(dict(c) for c in consts),
        )

    def to_json(self) -> dict:
        edges = sorted({(min(p, q), max(p, q)) for p in self.nodes for q in self.adjacency[p]})
        return {
            "format": 1,
            "nodes": [
                {"id": p, "parent": self.parent[p], "consts": dict(self.consts[p]) if self.consts else {}}
                for p in self.nodes
            ],
            "edges": [list(e) for e in edges],
        }


def validate_network(
    n: int,
    edges: Iterable[Sequence[int]],
    parent: Sequence[Optional[int]],
    consts: Optional[Sequence[Mapping[str, int]]] = None,
    *,
    symmetric_input: bool = False,
) -> ForestNetwork:
    """Check the spanning-forest constraints and derive heights, levels, H, Delta.

    ``edges`` are undirected pairs.  With ``symmetric_input=True`` the edge list
    is taken as a directed adjacency listing and every ``(p, q)`` must be
    matched by a ``(q, p)``; this is how adjacency-list inputs are checked.
    """
    if n < 1:
        raise NetworkError("network needs at least one node")
    if len(parent) != n:
        raise NetworkError(f"parent list has {len(parent)} entries for {n} nodes")
    adj: list[set[int]] = [set() for _ in range(n)]
    directed = set()
    for e in edges:
        if len(e) != 2:
            raise NetworkError(f"malformed edge {e!r}")
        p, q = int(e[0]), int(e[1])
        for x in (p, q):
            if not 0 <= x < n:
                raise NetworkError(f"edge {e!r} references unknown node {x}")
        if p == q:
            raise NetworkError(f"self-loop on node {p}")
        directed.add((p, q))
        adj[p].add(q)
        if not symmetric_input:
            adj[q].add(p)
    if symmetric_input:
        for p, q in directed:
            if (q, p) not in directed:
                raise NetworkError(f"non-symmetric edge ({p}, {q})")

    children: list[list[int]] = [[] for _ in range(n)]
    for p, par in enumerate(parent):
        if par is None:
            continue
        if not 0 <= par < n:
            raise NetworkError(f"parent of {p} is unknown node {par}")
        if par not in adj[p]:
            raise NetworkError(f"parent {par} of node {p} is not a neighbor")
        children[par].append(p)

    level = [-1] * n
    for p in range(n):
        path = []
        q: Optional[int] = p
        seen = set()
        while q is not None and level[q] < 0:
            if q in seen:
                raise NetworkError(f"parent relation cyclic (through node {q})")
            seen.add(q)
            path.append(q)
            q = parent[q]
        base = -1 if q is None else level[q]
        for x in reversed(path):
            base += 1
            level[x] = base

    height = [0] * n
    for p in sorted(range(n), key=lambda x: -level[x]):
        if children[p]:
            height[p] = 1 + max(height[c] for c in children[p])

    if consts is None:
        consts = [{} for _ in range(n)]
    if len(consts) != n:
        raise NetworkError(f"constant list has {len(consts)} entries for {n} nodes")
    return ForestNetwork(
        n=n,
        adjacency=tuple(frozenset(a) for a in adj),
        parent=tuple(parent),
        children=tuple(tuple(sorted(c)) for c in children),
        height_of=tuple(height),
        level_of=tuple(level),
        H=max(height[r] for r in range(n) if parent[r] is None),
        Delta=max(len(a) for a in adj),
        consts=tuple(dict(c) for c in consts),
    )


def check_children_consistency(
    parent: Sequence[Optional[int]], children: Sequence[Iterable[int]]
) -> None:
    """Raise unless ``p in children[q]`` exactly when ``parent[p] == q``."""
    for q, kids in enumerate(children):
        for p in kids:
            if parent[p] != q:
                raise NetworkError(f"orphan inconsistency: {p} listed as child of {q} but parent is {parent[p]}")
    for p, q in enumerate(parent):
        if q is not None and p not in set(children[q]):
            raise NetworkError(f"orphan inconsistency: {p} has parent {q} but is not among its children")


# ---------------------------------------------------------------------------
# Algorithm description
# ---------------------------------------------------------------------------


class Relation(str, enum.Enum):
    SELF = "self"
    PARENT = "parent"
    CHILDREN = "children"
    OTHERS = "others"


@dataclass(frozen=True, order=True)
class ReadDeclaration:
    relation: Relation
    name: str

    def __str__(self) -> str:
        return f"{self.relation.value}.{self.name}"


def reads(*specs: str) -> frozenset[ReadDeclaration]:
    """Shorthand: ``reads("self.sub", "children.sub")``."""
    out = set()
    for s in specs:
        rel, _, name = s.partition(".")
        out.add(ReadDeclaration(Relation(rel), name))
    return frozenset(out)


@dataclass(frozen=True)
class Domain:
    """Signed 64-bit integers when ``values`` is None, else a finite enumeration."""

    values: Optional[tuple[int, ...]] = None

    def check(self, name: str, value: object) -> None:
        if isinstance(value, bool) or not isinstance(value, int):
            raise DomainError(f"{name}={value!r} is not an integer")
        if self.values is not None:
            if value not in self.values:
                raise DomainError(f"{name}={value} not in {list(self.values)}")
        elif not INT64_MIN <= value <= INT64_MAX:
            raise DomainError(f"{name}={value} overflows signed 64-bit range")

    def sample(self, rng, bound: int) -> int:
        if self.values is not None:
            return rng.choice(self.values)
        return rng.randint(0, bound)

    def to_json(self):
        return "int64" if self.values is None else list(self.values)


INT64 = Domain()


@dataclass(frozen=True)
class VariableSchema:
    const_names: tuple[str, ...]
    var_names: tuple[str, ...]
    partition: Mapping[int, tuple[str, ...]]
    domain: Mapping[str, Domain] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.const_names) & set(self.var_names):
            raise SchemaError("a name is both constant and writable")
        if len(set(self.var_names)) != len(self.var_names):
            raise SchemaError("duplicate writable name")
        seen: list[str] = []
        for i in sorted(self.partition):
            seen.extend(self.partition[i])
        if len(seen) != len(set(seen)):
            raise SchemaError("partition blocks overlap")
        if set(seen) != set(self.var_names):
            raise SchemaError("partition blocks do not cover the writable names")
        if sorted(self.partition) != list(range(1, len(self.partition) + 1)):
            raise SchemaError("partition must be indexed 1..k")

    @property
    def names(self) -> tuple[str, ...]:
        return self.const_names + self.var_names

    def domain_of(self, name: str) -> Domain:
        return self.domain.get(name, INT64)

    def family_of(self, name: str) -> Optional[int]:
        for i, block in self.partition.items():
            if name in block:
                return i
        return None


Guard = Callable[["LocalView"], bool]
Statement = Callable[["LocalView"], Mapping[str, int]]


@dataclass(frozen=True)
class FamilySpec:
    index: int
    label: str
    reads: frozenset[ReadDeclaration]
    writes: tuple[str, ...]
    guard: Guard
    statement: Statement
    # Reads used by the statement; defaults to ``reads``.
    statement_reads: Optional[frozenset[ReadDeclaration]] = None

    @property
    def all_reads(self) -> frozenset[ReadDeclaration]:
        return self.reads | (self.statement_reads or frozenset())


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    schema: VariableSchema
    families: tuple[FamilySpec, ...]
    legitimacy: Optional[Callable[[ForestNetwork, "Configuration"], bool]] = None

    def __post_init__(self):
        if [f.index for f in self.families] != list(range(1, len(self.families) + 1)):
            raise SchemaError("family indices must be 1..k in order")
        if len(self.families) != len(self.schema.partition):
            raise SchemaError("one family per partition block is required")
        known = set(self.schema.names)
        for f in self.families:
            if tuple(f.writes) != tuple(self.schema.partition[f.index]):
                raise SchemaError(f"family {f.label} must write exactly {self.schema.partition[f.index]}")
            for r in f.all_reads:
                if r.name not in known:
                    raise SchemaError(f"family {f.label} reads unknown name {r.name!r}")

    @property
    def k(self) -> int:
        return len(self.families)

    def family(self, i: int) -> FamilySpec:
        return self.families[i - 1]

    def label(self, i: int) -> str:
        return self.families[i - 1].label

    def index_of(self, label: str) -> int:
        for f in self.families:
            if f.label == label:
                return f.index
        raise KeyError(label)


# ---------------------------------------------------------------------------
# Configurations and local views
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Configuration:
    """Values of every name at every node.

    ``values[p]`` is the tuple of writable values of node ``p`` in
    ``var_names`` order; ``consts[p]`` the same for ``const_names``.
    """

    const_names: tuple[str, ...]
    var_names: tuple[str, ...]
    consts: tuple[tuple[int, ...], ...]
    values: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.values)

    def get(self, p: int, name: str) -> int:
        try:
            return self.values[p][self.var_names.index(name)]
        except ValueError:
            return self.consts[p][self.const_names.index(name)]

    def node_dict(self, p: int) -> dict[str, int]:
        d = dict(zip(self.const_names, self.consts[p]))
        d.update(zip(self.var_names, self.values[p]))
        return d

    def column(self, name: str) -> tuple[int, ...]:
        return tuple(self.get(p, name) for p in range(self.n))

    def digest(self) -> str:
        return hashlib.blake2b(repr(self.values).encode(), digest_size=8).hexdigest()

    def to_json(self) -> dict:
        return {
            "format": 1,
            "values": [{"id": p, **dict(zip(self.var_names, self.values[p]))} for p in range(self.n)],
        }


def make_configuration(
    net: ForestNetwork,
    alg: AlgorithmSpec,
    values: Optional[Mapping[int, Mapping[str, int]] | Sequence[Mapping[str, int]]] = None,
) -> Configuration:
    """Build a configuration; writable names missing from ``values`` default to 0.

    Constants come from the network and must cover every constant name.
    """
    schema = alg.schema
    if values is None:
        values = {}
    if not isinstance(values, Mapping):
        values = dict(enumerate(values))
    rows = []
    for p in net.nodes:
        given = values.get(p, {})
        unknown = set(given) - set(schema.var_names)
        if unknown - set(schema.const_names):
            raise SchemaError(f"node {p}: unknown names {sorted(unknown)}")
        if unknown:
            raise SchemaError(f"node {p}: constants {sorted(unknown)} are fixed by the network")
        row = []
        for name in schema.var_names:
            v = given.get(name, 0)
            schema.domain_of(name).check(f"{p}.{name}", v)
            row.append(v)
        rows.append(tuple(row))
    consts = []
    for p in net.nodes:
        c = net.consts[p] if net.consts else {}
        missing = [name for name in schema.const_names if name not in c]
        if missing:
            raise SchemaError(f"node {p}: network lacks constants {missing}")
        consts.append(tuple(c[name] for name in schema.const_names))
    return Configuration(schema.const_names, schema.var_names, tuple(consts), tuple(rows))


class LocalView:
    """Read access to one node's neighborhood, confined to a set of declared reads.

    Any access outside the declaration raises :class:`ReadViolation`.  When
    ``record`` is a set, every ``ReadDeclaration`` actually used is added to it.
    """

    __slots__ = ("_net", "_cfg", "_p", "_allowed", "_record", "_label")

    def __init__(self, net, cfg, p, allowed, record=None, label="?"):
        self._net = net
        self._cfg = cfg
        self._p = p
        self._allowed = allowed
        self._record = record
        self._label = label

    def restricted(self, allowed, label=None) -> "LocalView":
        return LocalView(self._net, self._cfg, self._p, allowed, self._record, label or self._label)

    def _check(self, rel: Relation, name: str):
        decl = ReadDeclaration(rel, name)
        if decl not in self._allowed:
            raise ReadViolation(f"family {self._label} at node {self._p} read undeclared {decl}")
        if self._record is not None:
            self._record.add(decl)

    def own(self, name: str) -> int:
        self._check(Relation.SELF, name)
        return self._cfg.get(self._p, name)

    def parent(self, name: str) -> int:
        self._check(Relation.PARENT, name)
        par = self._net.parent[self._p]
        if par is None:
            raise ReadViolation(f"node {self._p} is a root and has no parent to read {name!r} from")
        return self._cfg.get(par, name)

    def children(self, name: str) -> tuple[int, ...]:
        self._check(Relation.CHILDREN, name)
        return tuple(self._cfg.get(c, name) for c in self._net.children[self._p])

    def others(self, name: str) -> tuple[int, ...]:
        self._check(Relation.OTHERS, name)
        return tuple(self._cfg.get(q, name) for q in self._net.others[self._p])

    @property
    def node(self) -> int:
        return self._p

    @property
    def is_root(self) -> bool:
        return self._net.parent[self._p] is None

    @property
    def is_leaf(self) -> bool:
        return not self._net.children[self._p]

    @property
    def degree(self) -> int:
        return len(self._net.adjacency[self._p])

    @property
    def n_children(self) -> int:
        return len(self._net.children[self._p])


# ---------------------------------------------------------------------------
# Step semantics
# ---------------------------------------------------------------------------


def is_enabled(net, alg, cfg, p: int, i: int, record=None) -> bool:
    fam = alg.family(i)
    view = LocalView(net, cfg, p, fam.reads, record, fam.label)
    result = fam.guard(view)
    if not isinstance(result, bool):
        raise SchemaError(f"guard of {fam.label} returned {result!r}, not a bool")
    return result


def enabled_families(net, alg, cfg, p: int) -> tuple[int, ...]:
    return tuple(f.index for f in alg.families if is_enabled(net, alg, cfg, p, f.index))


def enabled_set(net, alg, cfg) -> frozenset[tuple[int, int]]:
    return frozenset(
        (p, i) for p in net.nodes for i in enabled_families(net, alg, cfg, p)
    )


def is_terminal(net, alg, cfg) -> bool:
    return not any(enabled_families(net, alg, cfg, p) for p in net.nodes)


def evaluate_statement(net, alg, cfg, p: int, i: int, record=None) -> tuple[tuple[str, int], ...]:
    """New values of ``Var_i`` at ``p`` computed from ``cfg``; domain-checked."""
    fam = alg.family(i)
    allowed = fam.statement_reads if fam.statement_reads is not None else fam.reads
    out = fam.statement(LocalView(net, cfg, p, allowed, record, fam.label))
    if set(out) != set(fam.writes):
        extra = set(out) - set(fam.writes)
        if extra & set(alg.schema.const_names):
            raise StepError(f"{fam.label} at {p} attempted to write constants {sorted(extra)}")
        raise StepError(f"{fam.label} at {p} must assign exactly {fam.writes}, got {sorted(out)}")
    for name, v in out.items():
        alg.schema.domain_of(name).check(f"{p}.{name}", v)
    return tuple((name, out[name]) for name in fam.writes)


def apply_step(net, alg, cfg, selection: Iterable[tuple[int, int]], *, check_enabled: bool = True) -> Configuration:
    """Execute every selected ``(node, family)`` pair against the pre-step ``cfg``."""
    selection = list(selection)
    if not selection:
        raise StepError("empty selection")
    nodes = [p for p, _ in selection]
    if len(set(nodes)) != len(nodes):
        raise StepError("two families selected at the same node")
    writes = {}
    for p, i in selection:
        if not 1 <= i <= alg.k or not 0 <= p < net.n:
            raise StepError(f"unknown pair ({p}, {i})")
        if check_enabled and not is_enabled(net, alg, cfg, p, i):
            raise StepError(f"selected pair ({p}, {alg.label(i)}) is not enabled")
        writes[p] = evaluate_statement(net, alg, cfg, p, i)
    return _write(cfg, writes)


def _write(cfg: Configuration, writes: Mapping[int, Sequence[tuple[str, int]]]) -> Configuration:
    rows = list(cfg.values)
    for p, assigns in writes.items():
        row = list(rows[p])
        for name, v in assigns:
            row[cfg.var_names.index(name)] = v
        rows[p] = tuple(row)
    return Configuration(cfg.const_names, cfg.var_names, cfg.consts, tuple(rows))


def gread_cells(net, fam: FamilySpec, p: int) -> set[tuple[int, str]]:
    """Concrete (node, name) cells G-read by ``fam`` at ``p``."""
    cells = set()
    for r in fam.reads:
        if r.relation is Relation.SELF:
            cells.add((p, r.name))
        elif r.relation is Relation.PARENT:
            if net.parent[p] is not None:
                cells.add((net.parent[p], r.name))
        elif r.relation is Relation.CHILDREN:
            cells.update((c, r.name) for c in net.children[p])
        else:
            cells.update((q, r.name) for q in net.others[p])
    return cells
