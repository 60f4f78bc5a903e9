"""File formats: canonical network JSON and the CSV exports.

Floats are written with ``repr`` so every export round-trips exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .discord import DiscordStore
from .dynamics import SimStats
from .equilibrium import OpinionMatrix
from .errors import InputError, ParseError
from .network import Network, OpinionSpace

NETWORK_FORMAT = "voterzeal-network"
NETWORK_VERSION = 1


def _f(v) -> str:
    return repr(float(v))


# -- network ------------------------------------------------------------

def network_to_dict(net: Network) -> dict:
    labels = net.space.labels
    src, dst, w = net.coo()
    zs, zd, zw = net.zealot_in
    ids = net.ids
    return {
        "format": NETWORK_FORMAT,
        "version": NETWORK_VERSION,
        "opinions": list(labels),
        "normalized": bool(net.normalized),
        "nodes": [
            {"id": r.id, "zealot": r.is_zealot,
             "label": None if r.ground_truth is None else labels[r.ground_truth]}
            for r in net.nodes
        ],
        "in_edges": [[ids[t], ids[s], float(x)] for s, t, x in zip(src.tolist(), dst.tolist(), w.tolist())],
        "zealot_in_edges": [[ids[t], ids[s], float(x)] for s, t, x in zip(zs.tolist(), zd.tolist(), zw.tolist())],
    }


def network_from_dict(doc: dict, source="<network>") -> Network:
    if doc.get("format") != NETWORK_FORMAT:
        raise InputError(f"{source}: not a {NETWORK_FORMAT} file")
    if doc.get("version") != NETWORK_VERSION:
        raise InputError(f"{source}: unsupported version {doc.get('version')!r}")
    try:
        space = OpinionSpace(tuple(doc["opinions"]))
        nodes = doc["nodes"]
        ids = [n["id"] for n in nodes]
        index = {s: i for i, s in enumerate(ids)}
        truth = [-1 if n["label"] is None else space.index(n["label"]) for n in nodes]
        src, dst, w = [], [], []
        for key in ("in_edges", "zealot_in_edges"):
            for t, s, x in doc.get(key, []):
                if s not in index or t not in index:
                    raise InputError(f"{source}: edge references unknown node {s!r} -> {t!r}")
                src.append(index[s])
                dst.append(index[t])
                w.append(float(x))
        return Network.from_edges(space, ids, [bool(n["zealot"]) for n in nodes], truth,
                                  src, dst, w, normalized=bool(doc.get("normalized", False)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{source}: malformed network file ({exc})") from None


def write_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1) + "\n", encoding="utf-8")


def read_network(path) -> Network:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read network file {path}: {exc}") from None
    return network_from_dict(doc, path)


# -- opinion matrices ---------------------------------------------------------

def write_opinions(x: OpinionMatrix, path, meta: dict | None = None) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", *x.space.labels])
        for node, row in zip(x.ids, x.values):
            out.writerow([node, *(_f(v) for v in row)])
    side = x.meta() if meta is None else meta
    path.with_suffix(".json").write_text(json.dumps(side, indent=1, sort_keys=True) + "\n",
                                         encoding="utf-8")


def read_opinions(path, space: OpinionSpace | None = None) -> OpinionMatrix:
    path = Path(path)
    try:
        with path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows or rows[0][0] != "id":
        raise ParseError(path, 1, "expected header 'id,<labels...>'")
    labels = tuple(rows[0][1:])
    if space is not None and labels != space.labels:
        raise InputError(f"{path}: opinion columns {labels} do not match {space.labels}")
    ids, vals = [], []
    for n, row in enumerate(rows[1:], 2):
        if len(row) != len(labels) + 1:
            raise ParseError(path, n, f"expected {len(labels) + 1} columns")
        try:
            vals.append([float(v) for v in row[1:]])
        except ValueError:
            raise ParseError(path, n, "non-numeric value") from None
        ids.append(row[0])
    meta = {}
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
    return OpinionMatrix(space or OpinionSpace(labels), tuple(ids),
                         np.array(vals, dtype=float).reshape(len(ids), len(labels)),
                         int(meta.get("iterations", 0)), float(meta.get("residual", 0.0)),
                         float(meta.get("tolerance", 0.0)))


# -- discord ------------------------------------------------------------

def write_discord(rho: DiscordStore, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id_i", "id_j", "rho"])
        for (a, b), v in zip(rho.id_pairs(), rho.rho.tolist()):
            out.writerow([a, b, _f(v)])
    side = {"mode": rho.mode, "pairs": len(rho), **rho.meta}
    path.with_suffix(".json").write_text(json.dumps(side, indent=1, sort_keys=True) + "\n",
                                         encoding="utf-8")


def read_discord(path, x: OpinionMatrix) -> DiscordStore:
    path = Path(path)
    index = {s: n for n, s in enumerate(x.ids)}
    keys = {}
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    with fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header != ["id_i", "id_j", "rho"]:
            raise ParseError(path, 1, "expected header 'id_i,id_j,rho'")
        for n, row in enumerate(rows, 2):
            if len(row) != 3:
                raise ParseError(path, n, "expected 3 columns")
            a, b = row[0], row[1]
            if a not in index or b not in index:
                raise InputError(f"{path}:{n}: pair ({a}, {b}) not among the opinion matrix users")
            ia, ib = index[a], index[b]
            try:
                keys[(min(ia, ib), max(ia, ib))] = float(row[2])
            except ValueError:
                raise ParseError(path, n, "non-numeric rho") from None
    order = sorted(keys)
    side = path.with_suffix(".json")
    meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else {}
    return DiscordStore(
        x.ids,
        np.array([k[0] for k in order], dtype=np.int64),
        np.array([k[1] for k in order], dtype=np.int64),
        np.array([keys[k] for k in order], dtype=float),
        meta.pop("mode", "unknown"),
        meta,
    )


def read_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    with fh:
        for n, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(path, n, "expected 'id_i<TAB>id_j'")
            pairs.append((cols[0].strip(), cols[1].strip()))
    return pairs


# -- simulation statistics ----------------------------------------------

def write_sim(stats: SimStats, labels, nodes_path, pairs_path) -> None:
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", *labels])
        for node, row in zip(stats.ids, stats.frequencies):
            out.writerow([node, *(_f(v) for v in row)])
    with open(pairs_path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id_i", "id_j", "disagreement"])
        for (a, b), v in zip(stats.pairs, stats.disagreement.tolist()):
            out.writerow([a, b, _f(v)])


# -- evaluation outputs -------------------------------------------------

def write_histogram(path, edges, counts) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["bin_left", "bin_right", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            out.writerow([_f(lo), _f(hi), int(c)])


def write_table(rows: list[dict], path) -> None:
    if not rows:
        raise InputError("no rows to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        out.writeheader()
        for r in rows:
            out.writerow({k: ("" if v is None else (_f(v) if isinstance(v, float) else v))
                          for k, v in r.items()})
