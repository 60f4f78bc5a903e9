"""Directed weighted influence networks with zealots.

A :class:`Network` stores, for every non-zealot node ``i``, the list of its
leaders ``j`` together with the weight ``w_ij`` of the edge ``j -> i``.  The
adjacency is kept as a CSR matrix indexed by *target* row, so row ``i`` lists
the in-edges of ``i``.  Zealots never update, so their in-edges are not part
of the influence operator; they are kept in a side structure because they
still matter for weak connectivity and for symmetrization.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import DomainError, InputError, ParseError

log = logging.getLogger(__name__)

NORM_ATOL = 1e-12

TRANSFORM_MODES = ("unweighted", "undirected", "undirected_unweighted")


@dataclass(frozen=True)
class OpinionSpace:
    """Ordered, finite set of opinion labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise DomainError("opinion space needs at least two labels")
        if any(not s for s in labels):
            raise DomainError("opinion labels must be non-empty")
        if len(set(labels)) != len(labels):
            raise DomainError(f"duplicate opinion labels in {labels}")
        object.__setattr__(self, "_index", {s: k for k, s in enumerate(labels)})

    @classmethod
    def from_string(cls, text: str) -> "OpinionSpace":
        return cls(tuple(s.strip() for s in text.split(",")))

    @property
    def K(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InputError(f"unknown opinion label {label!r}") from None

    def __contains__(self, label) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class NodeRecord:
    id: str
    is_zealot: bool
    ground_truth: int | None


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable influence network.

    Use :meth:`from_edges` rather than the raw constructor; it sums
    duplicates, drops self-loops and zero weights, and routes edges that
    point into zealots to the side structure.
    """

    space: OpinionSpace
    ids: tuple[str, ...]
    is_zealot: np.ndarray
    truth: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    zealot_in: tuple[np.ndarray, np.ndarray, np.ndarray]
    normalized: bool = False
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._index is None:
            object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.ids)})

    # -- construction --------------------------------------------------

    @classmethod
    def from_edges(cls, space, ids, is_zealot, truth, src, dst, w, normalized=False):
        ids = tuple(str(s) for s in ids)
        n = len(ids)
        if len(set(ids)) != n:
            raise InputError("duplicate node ids")
        is_zealot = np.asarray(is_zealot, dtype=bool)
        truth = np.asarray(truth, dtype=np.int64)
        if is_zealot.shape != (n,) or truth.shape != (n,):
            raise InputError("node attribute arrays must match the id list")
        bad = np.flatnonzero(is_zealot & (truth < 0))
        if bad.size:
            raise InputError(f"zealot {ids[bad[0]]!r} has no ground-truth opinion")
        if np.any(truth >= space.K):
            raise InputError("ground-truth index outside the opinion space")

        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("edge weights must be finite and non-negative")
        keep = (w > 0) & (src != dst)
        src, dst, w = src[keep], dst[keep], w[keep]

        into_z = is_zealot[dst]
        m = sp.coo_matrix((w[~into_z], (dst[~into_z], src[~into_z])), shape=(n, n)).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        zi = sp.coo_matrix((w[into_z], (dst[into_z], src[into_z])), shape=(n, n)).tocsr()
        zi.sum_duplicates()
        zi = zi.tocoo()
        return cls(
            space=space,
            ids=ids,
            is_zealot=_readonly(is_zealot),
            truth=_readonly(truth),
            indptr=_readonly(m.indptr.astype(np.int64)),
            indices=_readonly(m.indices.astype(np.int64)),
            weights=_readonly(m.data.astype(np.float64)),
            zealot_in=(
                _readonly(zi.col.astype(np.int64)),
                _readonly(zi.row.astype(np.int64)),
                _readonly(zi.data.astype(np.float64)),
            ),
            normalized=normalized,
        )

    # -- accessors -----------------------------------------------------

    @property
    def K(self) -> int:
        return self.space.K

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def users(self) -> np.ndarray:
        """Node indices of non-zealots, in node order."""
        return np.flatnonzero(~self.is_zealot)

    @property
    def zealots(self) -> np.ndarray:
        return np.flatnonzero(self.is_zealot)

    @property
    def n_edges(self) -> int:
        return int(self.weights.size)

    @property
    def nodes(self) -> list[NodeRecord]:
        return [
            NodeRecord(i, bool(z), None if t < 0 else int(t))
            for i, z, t in zip(self.ids, self.is_zealot, self.truth)
        ]

    def index_of(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise InputError(f"unknown node id {node_id!r}") from None

    def in_edges(self, node) -> list[tuple[str, float]]:
        """Leaders of ``node`` as ``(source id, weight)`` pairs."""
        i = node if isinstance(node, (int, np.integer)) else self.index_of(node)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return [(self.ids[j], float(w)) for j, w in zip(self.indices[lo:hi], self.weights[lo:hi])]

    def adjacency(self) -> sp.csr_matrix:
        """Full ``n x n`` in-adjacency, row = target, column = source."""
        n = self.n_nodes
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(n, n))

    def coo(self):
        """User in-edges as ``(src, dst, w)`` arrays."""
        dst = np.repeat(np.arange(self.n_nodes), np.diff(self.indptr))
        return self.indices.copy(), dst, self.weights.copy()

    def in_weight(self) -> np.ndarray:
        """Total stored in-weight per node."""
        rows = np.repeat(np.arange(self.n_nodes), np.diff(self.indptr))
        return np.bincount(rows, weights=self.weights, minlength=self.n_nodes)

    def operators(self):
        """Split the influence operator by source type.

        Returns ``(users, W, Z)`` where ``users`` are node indices of the
        non-zealots, ``W`` is the user-to-user block (CSR, rows and columns
        in ``users`` order) and ``Z`` is the ``len(users) x K`` zealot
        exposure matrix.
        """
        users = self.users
        pos = np.full(self.n_nodes, -1, dtype=np.int64)
        pos[users] = np.arange(users.size)
        src, dst, w = self.coo()
        from_user = ~self.is_zealot[src]
        W = sp.csr_matrix(
            (w[from_user], (pos[dst[from_user]], pos[src[from_user]])),
            shape=(users.size, users.size),
        )
        W.sum_duplicates()
        W.sort_indices()
        Z = np.zeros((users.size, self.K))
        zs = ~from_user
        np.add.at(Z, (pos[dst[zs]], self.truth[src[zs]]), w[zs])
        return users, W, Z

    def with_changes(self, **kw) -> "Network":
        state = dict(
            space=self.space, ids=self.ids, is_zealot=self.is_zealot, truth=self.truth,
            indptr=self.indptr, indices=self.indices, weights=self.weights,
            zealot_in=self.zealot_in, normalized=self.normalized,
        )
        state.update(kw)
        return Network(**state)

    def all_edges(self):
        """User in-edges followed by edges into zealots, as ``(src, dst, w)``."""
        src, dst, w = self.coo()
        zs, zd, zw = self.zealot_in
        return np.concatenate([src, zs]), np.concatenate([dst, zd]), np.concatenate([w, zw])

    def subnetwork(self, keep: np.ndarray) -> "Network":
        keep = np.asarray(keep, dtype=bool)
        new = np.full(self.n_nodes, -1, dtype=np.int64)
        new[keep] = np.arange(int(keep.sum()))
        src, dst, w = self.all_edges()
        ok = keep[src] & keep[dst]
        return Network.from_edges(
            self.space,
            [s for s, k in zip(self.ids, keep) if k],
            self.is_zealot[keep],
            self.truth[keep],
            new[src[ok]], new[dst[ok]], w[ok],
            normalized=False,
        )


# -- loading ------------------------------------------------------------

def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line.split("\t")


_UNLABELLED = {"", "-", "na", "none"}


def read_labels(path, space: OpinionSpace | None = None):
    """Parse a labels TSV into ``{id: (label, zealot)}``.

    Accounts that are unlabelled, carry several labels in one row
    (``A,B`` or ``A|B``), or appear in several rows with different labels
    are returned in the ``excluded`` set instead.
    """
    seen: dict[str, tuple[str, bool]] = {}
    excluded: set[str] = set()
    for lineno, cols in _data_lines(path):
        if len(cols) not in (2, 3):
            raise ParseError(path, lineno, f"expected 3 tab-separated columns, got {len(cols)}")
        node = cols[0].strip()
        label = cols[1].strip()
        flag = cols[2].strip() if len(cols) == 3 else "0"
        if not node:
            raise ParseError(path, lineno, "empty node id")
        if flag not in ("0", "1"):
            raise ParseError(path, lineno, f"zealot flag must be 0 or 1, got {flag!r}")
        if label.lower() in _UNLABELLED or "," in label or "|" in label:
            excluded.add(node)
            continue
        if space is not None and label not in space:
            raise InputError(f"{path}:{lineno}: unknown label {label!r}")
        prev = seen.get(node)
        if prev is not None and prev[0] != label:
            excluded.add(node)
        seen[node] = (label, flag == "1" or (prev is not None and prev[1]))
    for node in excluded:
        seen.pop(node, None)
    return seen, excluded


def read_edges(path):
    rows = []
    for lineno, cols in _data_lines(path):
        if len(cols) not in (2, 3):
            raise ParseError(path, lineno, f"expected 3 tab-separated columns, got {len(cols)}")
        src, dst = cols[0].strip(), cols[1].strip()
        if not src or not dst:
            raise ParseError(path, lineno, "empty node id")
        w = 1.0
        if len(cols) == 3 and cols[2].strip():
            try:
                w = float(cols[2])
            except ValueError:
                raise ParseError(path, lineno, f"non-numeric weight {cols[2]!r}") from None
            if not math.isfinite(w):
                raise ParseError(path, lineno, f"non-finite weight {cols[2]!r}")
            if w < 0:
                raise ParseError(path, lineno, f"negative weight {cols[2]!r}")
        rows.append((src, dst, w))
    return rows


def load_network(edges_path, labels_path, space: OpinionSpace | None = None) -> Network:
    """Load an unnormalized network from the edge and label TSV files.

    If ``space`` is omitted it is inferred from the labels in order of first
    appearance.
    """
    labels, excluded = read_labels(labels_path, space)
    if space is None:
        order = list(dict.fromkeys(lab for lab, _ in labels.values()))
        space = OpinionSpace(tuple(order))
    rows = read_edges(edges_path)

    ids = list(labels)
    index = {s: i for i, s in enumerate(ids)}
    src, dst, w = [], [], []
    for s, t, weight in rows:
        for node in (s, t):
            if node not in index and node not in excluded:
                raise InputError(f"edge endpoint {node!r} missing from labels file {labels_path}")
        if s in excluded or t in excluded:
            continue
        src.append(index[s])
        dst.append(index[t])
        w.append(weight)
    if excluded:
        log.info("excluded %d unlabelled or multi-labelled accounts", len(excluded))
    return Network.from_edges(
        space,
        ids,
        [labels[i][1] for i in ids],
        [space.index(labels[i][0]) for i in ids],
        src, dst, w,
    )


# -- structural operations ----------------------------------------------

def normalize(net: Network) -> Network:
    """Scale every in-row to total weight one.

    Rows already within ``NORM_ATOL`` of one, and rows without in-edges,
    are left untouched, which makes the operation idempotent.
    """
    counts = np.diff(net.indptr)
    sums = net.in_weight()
    scale = np.where((counts == 0) | (np.abs(sums - 1.0) <= NORM_ATOL), 1.0, sums)
    w = net.weights / np.repeat(scale, counts)
    return net.with_changes(weights=_readonly(w), normalized=True)


def transform(net: Network, mode: str) -> Network:
    """Unweighted and/or undirected counterpart of a raw network.

    Symmetrization gives both directions of every unordered pair the sum of
    the two raw directional weights.  Edges into zealots stay in the side
    structure.  The result is unnormalized.
    """
    if mode not in TRANSFORM_MODES:
        raise DomainError(f"unknown transform mode {mode!r}; expected one of {TRANSFORM_MODES}")
    src, dst, w = net.all_edges()
    if mode in ("undirected", "undirected_unweighted"):
        n = net.n_nodes
        a = sp.coo_matrix((w, (src, dst)), shape=(n, n)).tocsr()
        a = (a + a.T).tocoo()
        src, dst, w = a.row, a.col, a.data
    if mode in ("unweighted", "undirected_unweighted"):
        w = np.ones_like(w)
    return Network.from_edges(net.space, net.ids, net.is_zealot, net.truth, src, dst, w)


def _zealot_reachable(net: Network, keep: np.ndarray) -> np.ndarray:
    n = net.n_nodes
    src, dst, _ = net.coo()
    ok = keep[src] & keep[dst]
    roots = np.flatnonzero(net.is_zealot & keep)
    # virtual root n feeds every zealot; influence flows source -> target
    rows = np.concatenate([src[ok], np.full(roots.size, n)])
    cols = np.concatenate([dst[ok], roots])
    g = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n + 1, n + 1))
    order = csgraph.breadth_first_order(g, n, directed=True, return_predecessors=False)
    reached = np.zeros(n + 1, dtype=bool)
    reached[order] = True
    return reached[:n] & keep


def _giant_component(net: Network, keep: np.ndarray) -> np.ndarray:
    n = net.n_nodes
    src, dst, _ = net.all_edges()
    ok = keep[src] & keep[dst]
    g = sp.csr_matrix((np.ones(int(ok.sum())), (src[ok], dst[ok])), shape=(n, n))
    _, comp = csgraph.connected_components(g, directed=True, connection="weak")
    comp = np.where(keep, comp, -1)
    best, best_key = None, None
    for c in np.unique(comp[keep]):
        members = np.flatnonzero(comp == c)
        key = (-members.size, min(net.ids[m] for m in members))
        if best_key is None or key < best_key:
            best, best_key = c, key
    return comp == best


def filter_network(net: Network) -> Network:
    """Restrict to the zealot-reachable giant component and re-normalize.

    Alternates removal of users with no leader chain from a zealot and
    restriction to the largest weakly connected component until neither
    step removes anything.
    """
    keep = np.ones(net.n_nodes, dtype=bool)
    while True:
        before = int(keep.sum())
        keep = _zealot_reachable(net, keep)
        if not np.any(keep & ~net.is_zealot):
            raise InputError("no zealot-reachable core")
        keep = _giant_component(net, keep)
        if not np.any(keep & ~net.is_zealot):
            raise InputError("no zealot-reachable core")
        if int(keep.sum()) == before:
            break
    out = net if keep.all() else net.subnetwork(keep)
    log.info("filter kept %d of %d nodes", int(keep.sum()), net.n_nodes)
    return normalize(out)


def stats(net: Network) -> dict:
    users = net.users
    _, _, Z = net.operators()
    counts = np.diff(net.indptr)[users]
    hist_users = Counter(net.space.labels[t] for t in net.truth[users] if t >= 0)
    hist_zealots = Counter(net.space.labels[t] for t in net.truth[net.zealots])
    no_zealot = float(np.mean(Z.sum(axis=1) == 0)) if users.size else 0.0
    return {
        "users": int(users.size),
        "zealots": int(net.zealots.size),
        "edges": net.n_edges,
        "zealot_in_edges": int(net.zealot_in[0].size),
        "zero_in_degree_users": int(np.sum(counts == 0)),
        "labels_users": {s: hist_users.get(s, 0) for s in net.space.labels},
        "labels_zealots": {s: hist_zealots.get(s, 0) for s in net.space.labels},
        "share_no_zealot_exposure": no_zealot,
        "normalized": net.normalized,
    }


def check_normalized(net: Network, atol: float = NORM_ATOL) -> bool:
    counts = np.diff(net.indptr)[net.users]
    sums = net.in_weight()[net.users]
    return bool(np.all(np.abs(sums[counts > 0] - 1.0) <= atol))


# -- synthetic generators -----------------------------------------------

def generate_planted(K: int, n_users: int, n_zealots: int, p_in: float, seed: int = 0,
                     degree: int | None = None) -> Network:
    """Planted-partition network with ``K`` parties.

    Each user sends fraction ``p_in`` of its in-weight to its own party and
    ``1 - p_in`` to the other parties.  Inside a party, the zealots always
    get the share ``n_zealots / (n_users + n_zealots)`` of that party's mass
    (the users share the rest), so the walk is absorbed at the same rate
    whatever party it currently visits and ``p_in = 1/K`` gives exactly
    uniform opinions.

    With ``degree=None`` every user listens to every node.  With an integer
    ``degree``, each user draws ``degree`` leaders from its own party and
    ``degree`` from the rest, uniformly without replacement, and splits the
    two shares evenly among them.
    """
    if K < 2 or n_users < 1 or n_zealots < 1:
        raise DomainError("need K >= 2, n_users >= 1, n_zealots >= 1")
    if not 0.0 <= p_in <= 1.0:
        raise DomainError(f"p_in must lie in [0, 1], got {p_in}")
    rng = np.random.default_rng(seed)
    space = OpinionSpace(tuple(f"P{a}" for a in range(K)))
    size = n_users + n_zealots
    ids, zeal, truth = [], [], []
    for a in range(K):
        for m in range(n_zealots):
            ids.append(f"Z{a}_{m}")
            zeal.append(True)
            truth.append(a)
        for m in range(n_users):
            ids.append(f"U{a}_{m}")
            zeal.append(False)
            truth.append(a)
    zeal = np.array(zeal)
    truth = np.array(truth)
    party_nodes = [np.arange(a * size, (a + 1) * size) for a in range(K)]
    party_zealots = [p[:n_zealots] for p in party_nodes]
    party_users = [p[n_zealots:] for p in party_nodes]

    src, dst, w = [], [], []
    zshare = n_zealots / size
    for a in range(K):
        others = np.concatenate([party_nodes[b] for b in range(K) if b != a])
        for i in party_users[a]:
            own_users = party_users[a][party_users[a] != i]
            if degree is None:
                if own_users.size:
                    s_own = np.concatenate([party_zealots[a], own_users])
                    w_own = np.concatenate([
                        np.full(n_zealots, p_in * zshare / n_zealots),
                        np.full(own_users.size, p_in * (1 - zshare) / own_users.size),
                    ])
                else:
                    s_own = party_zealots[a]
                    w_own = np.full(n_zealots, p_in / n_zealots)
                s_oth = others
                w_oth = np.full(others.size, (1 - p_in) / others.size)
            else:
                pool = np.concatenate([party_zealots[a], own_users])
                s_own = rng.choice(pool, size=min(degree, pool.size), replace=False)
                w_own = np.full(s_own.size, p_in / s_own.size)
                s_oth = rng.choice(others, size=min(degree, others.size), replace=False)
                w_oth = np.full(s_oth.size, (1 - p_in) / s_oth.size)
            src.append(s_own)
            src.append(s_oth)
            w.append(w_own)
            w.append(w_oth)
            dst.append(np.full(s_own.size + s_oth.size, i))
    net = Network.from_edges(space, ids, zeal, truth, np.concatenate(src),
                             np.concatenate(dst), np.concatenate(w))
    return normalize(net)


def generate_random(n_users: int, K: int, zealots_per_opinion: int = 1, p_edge: float = 0.5,
                    seed: int = 0, zealot_only: bool = False) -> Network:
    """Small random network where every user has at least one zealot leader.

    Weights are drawn uniformly from ``[0.1, 1]`` and normalized.  With
    ``zealot_only=True`` users listen to zealots exclusively, which makes
    opinions of distinct users independent.
    """
    rng = np.random.default_rng(seed)
    space = OpinionSpace(tuple("ABCDEFGHIJ"[:K]) if K <= 10 else tuple(f"S{k}" for k in range(K)))
    nz = K * zealots_per_opinion
    ids = [f"Z{k}" for k in range(nz)] + [f"u{i}" for i in range(n_users)]
    zeal = np.array([True] * nz + [False] * n_users)
    truth = np.concatenate([np.arange(nz) % K, rng.integers(0, K, n_users)])
    src, dst, w = [], [], []
    for i in range(nz, nz + n_users):
        src.append(int(rng.integers(0, nz)))
        dst.append(i)
        w.append(float(rng.uniform(0.1, 1.0)))
        for j in range(nz + n_users):
            if j == i or (zealot_only and j >= nz):
                continue
            if rng.random() < p_edge:
                src.append(j)
                dst.append(i)
                w.append(float(rng.uniform(0.1, 1.0)))
    net = Network.from_edges(space, ids, zeal, truth, src, dst, w)
    return normalize(net)
