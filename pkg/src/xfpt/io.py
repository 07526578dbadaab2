"""Reading and writing graph files.

A graph file is a JSON object::

    {"nodes": 3, "mode": "markov",
     "edges": [{"from": 0, "to": 1, "rate": 1.0}, ...],
     "rho": {"0": 1.0}, "targets": [2]}

General-mode edges carry ``prob`` and ``waiting`` instead of ``rate``; the
waiting law is ``{"kind": ..., <parameters>}`` with the parameters either
inline or nested under ``"params"``.  ``rho`` may also be a dense list.
Initial weights summing to 1 within 1e-6 are renormalized.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

from .errors import ValidationError
from .network import Mode, Network, Query

__all__ = ["load_graph", "graph_from_dict", "graph_to_dict", "save_graph", "file_sha256"]

RHO_LOAD_TOL = 1e-6


def _bad(msg, code="bad_graph_file"):
    return ValidationError(msg, code=code)


def _waiting(obj):
    if not isinstance(obj, Mapping):
        raise _bad("waiting must be an object")
    spec = {k: v for k, v in obj.items() if k != "params"}
    params = obj.get("params")
    if isinstance(params, Mapping):
        spec.update(params)
    elif params is not None:
        raise _bad("waiting params must be an object")
    return spec


def graph_from_dict(doc: Mapping[str, Any]):
    """Build ``(network, query)`` from a parsed graph document."""
    if not isinstance(doc, Mapping):
        raise _bad("graph file must hold a JSON object")
    try:
        n = int(doc["nodes"])
        mode = Mode(str(doc.get("mode", "markov")).lower())
        edges = doc["edges"]
        targets = [int(t) for t in doc["targets"]]
        rho = doc["rho"]
    except KeyError as exc:
        raise _bad(f"graph file is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        raise _bad(f"malformed graph file: {exc}") from None
    for t in targets:
        if not 0 <= t < n:
            raise _bad(f"target {t} outside 0..{n - 1}", code="node_out_of_range")
    try:
        if mode is Mode.MARKOV:
            net = Network.markov(n, [(e["from"], e["to"], e["rate"]) for e in edges])
        else:
            net = Network.general(n, [(e["from"], e["to"], e["prob"], _waiting(e["waiting"]))
                                      for e in edges])
    except KeyError as exc:
        raise _bad(f"edge is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise _bad(f"malformed edge: {exc}") from None
    if isinstance(rho, Mapping):
        weights = rho
    elif isinstance(rho, list):
        if len(rho) != n:
            raise _bad(f"dense rho has {len(rho)} entries for {n} nodes", code="rho_size")
        weights = {i: w for i, w in enumerate(rho) if w}
    else:
        raise _bad("rho must be an object or a list")
    try:
        weights = {int(k): float(w) for k, w in weights.items()}
    except (TypeError, ValueError) as exc:
        raise _bad(f"malformed rho: {exc}") from None
    if any(w < 0 for w in weights.values()):
        raise _bad("rho has negative weights", code="negative_rho")
    return net, Query.from_weights(n, weights, targets, tol=RHO_LOAD_TOL)


def load_graph(path):
    """Read a graph file; see the module docstring for the format."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise _bad(f"{path}: invalid JSON ({exc})") from None
    return graph_from_dict(doc)


def graph_to_dict(network: Network, query: Query) -> dict:
    doc = network.to_dict()
    doc["rho"] = {str(int(i)): float(query.rho[i]) for i in query.support}
    doc["targets"] = [int(t) for t in query.targets]
    return doc


def save_graph(path, network: Network, query: Query):
    """Write a graph file with sorted keys, so equal graphs give identical bytes."""
    text = json.dumps(graph_to_dict(network, query), sort_keys=True, indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
