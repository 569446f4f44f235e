"""JSON readers for network and initial-configuration files.

Both formats are the ones written by ``ForestNetwork.to_json`` and
``Configuration.to_json``.  A network file lists nodes with their parent
(``null`` for roots) and constants, plus undirected edges.  When ``edges``
is omitted, the parent links are the edges.  A network file may instead give
``adjacency`` as a per-node neighbor list, which must be symmetric.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import NetworkError, SchemaError
from .model import AlgorithmSpec, Configuration, ForestNetwork, make_configuration, validate_network

FORMAT = 1


def _load(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise NetworkError(f"cannot read {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise NetworkError(f"{path}: expected a JSON object")
    if doc.get("format", FORMAT) != FORMAT:
        raise NetworkError(f"{path}: unsupported format {doc.get('format')!r}")
    return doc


def network_from_json(doc: dict) -> ForestNetwork:
    try:
        nodes = sorted(doc["nodes"], key=lambda e: e["id"])
        if [e["id"] for e in nodes] != list(range(len(nodes))):
            raise NetworkError("node ids must be 0..n-1")
        parent = [e.get("parent") for e in nodes]
        consts = [dict(e.get("consts", {})) for e in nodes]
        n = len(nodes)
        if "adjacency" in doc:
            edges = [(p, q) for p, nbrs in enumerate(doc["adjacency"]) for q in nbrs]
            return validate_network(n, edges, parent, consts, symmetric_input=True)
        edges = doc.get("edges")
        if edges is None:
            edges = [(parent[p], p) for p in range(n) if parent[p] is not None]
        return validate_network(n, edges, parent, consts)
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network document: {exc!r}") from None


def load_network(path) -> ForestNetwork:
    return network_from_json(_load(path))


def configuration_from_json(doc: dict, net: ForestNetwork, alg: AlgorithmSpec) -> Configuration:
    try:
        values = {e["id"]: {k: v for k, v in e.items() if k != "id"} for e in doc["values"]}
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed configuration document: {exc!r}") from None
    return make_configuration(net, alg, values)


def load_configuration(path, net: ForestNetwork, alg: AlgorithmSpec) -> Configuration:
    return configuration_from_json(_load(path), net, alg)
