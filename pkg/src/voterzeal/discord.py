"""Pairwise discord probabilities.

``rho_ij`` is the stationary probability that users ``i`` and ``j`` hold
different opinions.  It solves the pair recursion

    rho_ij = 1/2 [ sum_k w_ik rho_jk + sum_k w_jk rho_ik
                   + sum_s z_i^s (1 - x_j^s) + sum_s z_j^s (1 - x_i^s) ]

with user leaders ``k`` and the boundary value ``rho_ii = 0``.  When the
opinions of ``i`` and ``j`` are independent, ``rho_ij`` reduces to
``sum_s x_i^s (1 - x_j^s)``.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .equilibrium import OpinionMatrix, SolverConfig
from .errors import ConvergenceError, DomainError
from .network import Network

log = logging.getLogger(__name__)


@dataclass(eq=False)
class DiscordStore:
    """Discord values for unordered user pairs.

    ``i`` and ``j`` index rows of ``ids`` with ``i < j``; each unordered pair
    appears once.
    """

    ids: tuple[str, ...]
    i: np.ndarray
    j: np.ndarray
    rho: np.ndarray
    mode: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {s: n for n, s in enumerate(self.ids)}
        self._pos = None

    def __len__(self) -> int:
        return int(self.rho.size)

    def keys(self) -> list[tuple[int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist()))

    def get(self, a: str, b: str) -> float:
        if a == b:
            return 0.0
        if self._pos is None:
            self._pos = {k: n for n, k in enumerate(self.keys())}
        ia, ib = self._index[a], self._index[b]
        return float(self.rho[self._pos[(min(ia, ib), max(ia, ib))]])

    def id_pairs(self):
        return [(self.ids[a], self.ids[b]) for a, b in self.keys()]


def resolve_pairs(x: OpinionMatrix, pairs, net: Network | None = None):
    """Canonical ``(i, j)`` row arrays for ``pairs``.

    ``pairs`` is ``"all"`` or an iterable of ``(id, id)`` tuples.  Duplicates
    and ordering are normalized away.
    """
    n = len(x)
    if isinstance(pairs, str):
        if pairs != "all":
            raise DomainError(f"unknown pair set {pairs!r}")
        i, j = np.triu_indices(n, k=1)
        return i.astype(np.int64), j.astype(np.int64)
    seen = set()
    for a, b in pairs:
        for node in (a, b):
            if node not in x._index:
                if net is not None and node in net._index and net.is_zealot[net._index[node]]:
                    raise DomainError(f"pair ({a}, {b}) involves zealot {node!r}; "
                                      "use 1 - x_j^s for zealot pairs")
                raise DomainError(f"unknown user {node!r} in pair ({a}, {b})")
        if a == b:
            raise DomainError(f"self pair ({a}, {b}) requested; self-discord is 0")
        ia, ib = x._index[a], x._index[b]
        seen.add((min(ia, ib), max(ia, ib)))
    keys = sorted(seen)
    i = np.array([k[0] for k in keys], dtype=np.int64)
    j = np.array([k[1] for k in keys], dtype=np.int64)
    return i, j


def sample_pairs(x: OpinionMatrix, k: int, seed: int = 0):
    """Seeded uniform sample of ``k`` distinct unordered user pairs (all if fewer)."""
    n = len(x)
    total = n * (n - 1) // 2
    if k >= total:
        i, j = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        flat = np.sort(rng.choice(total, size=k, replace=False))
        i, j = _unrank_pairs(flat, n)
    return [(x.ids[a], x.ids[b]) for a, b in zip(i.tolist(), j.tolist())]


def _unrank_pairs(r: np.ndarray, n: int):
    # row-major rank over the strict upper triangle
    rows = np.arange(n - 1, dtype=np.int64)
    starts = rows * (2 * n - rows - 1) // 2
    i = np.searchsorted(starts, r, side="right") - 1
    j = r - starts[i] + i + 1
    return i.astype(np.int64), j.astype(np.int64)


def zealot_discord(x: OpinionMatrix, user: str, opinion: int) -> float:
    """Discord between a user and a zealot fixed at ``opinion``."""
    return float(1.0 - x[user][opinion])


def _aligned(net: Network, x: OpinionMatrix):
    users, W, Z = net.operators()
    ids = tuple(net.ids[u] for u in users)
    if ids != x.ids:
        if set(ids) != set(x.ids):
            raise DomainError("opinion matrix does not match the network's users")
        pos = {s: n for n, s in enumerate(ids)}
        perm = np.array([pos[s] for s in x.ids], dtype=np.int64)
        W = W[perm][:, perm]
        Z = Z[perm]
    return W.tocsr(), Z


def discord_approx(x: OpinionMatrix, pairs="all") -> DiscordStore:
    """Independence approximation ``sum_s x_i^s (1 - x_j^s)``."""
    i, j = resolve_pairs(x, pairs)
    X = x.values
    rho = np.einsum("pk,pk->p", X[i], 1.0 - X[j])
    return DiscordStore(x.ids, i, j, rho, "approx")


def discord_exact(net: Network, x: OpinionMatrix, pairs="all",
                  cfg: SolverConfig = SolverConfig()) -> DiscordStore:
    """Exact discord by Jacobi sweeps of the pair recursion.

    With ``pairs="all"`` the full symmetric user-by-user matrix is iterated.
    Otherwise only the closure of the requested pairs under leader
    substitution is materialized.  Both start from the approximation.
    """
    W, Z = _aligned(net, x)
    i, j = resolve_pairs(x, pairs, net)
    if isinstance(pairs, str):
        R, it, res = _solve_full(W, Z, x.values, cfg)
        rho = R[i, j]
        meta = {"system": "full", "system_pairs": len(x) * (len(x) - 1) // 2}
    else:
        rho, it, res, size = _solve_closure(W, Z, x.values, i, j, cfg)
        meta = {"system": "closure", "system_pairs": size}
    meta.update(iterations=it, residual=res, tolerance=cfg.tolerance)
    return DiscordStore(x.ids, i, j, np.clip(rho, 0.0, 1.0), "exact", meta)


def _fail(cfg, res, it):
    raise ConvergenceError(
        f"discord did not converge in {cfg.max_iterations} sweeps "
        f"(residual {res:.3e} > {cfg.tolerance:.1e})", residual=res, iterations=it)


def _solve_full(W, Z, X, cfg):
    n = X.shape[0]
    C = Z @ (1.0 - X).T
    C = C + C.T
    R = X @ (1.0 - X).T
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 0.0)
    res, it = np.inf, 0
    for it in range(1, cfg.max_iterations + 1):
        WR = W @ R
        Rn = 0.5 * (WR + WR.T + C)
        np.fill_diagonal(Rn, 0.0)
        res = float(np.max(np.abs(Rn - R))) if n else 0.0
        R = Rn
        if res <= cfg.tolerance:
            return R, it, res
    _fail(cfg, res, it)


def _solve_closure(W, Z, X, i, j, cfg):
    leaders = [
        (W.indices[W.indptr[a]:W.indptr[a + 1]].tolist(), W.data[W.indptr[a]:W.indptr[a + 1]].tolist())
        for a in range(W.shape[0])
    ]
    index: dict[tuple[int, int], int] = {}
    queue = deque()
    for a, b in zip(i.tolist(), j.tolist()):
        if (a, b) not in index:
            index[(a, b)] = len(index)
            queue.append((a, b))
    rows, cols, vals = [], [], []
    order = []
    while queue:
        a, b = queue.popleft()
        p = index[(a, b)]
        order.append((a, b))
        for u, v in ((a, b), (b, a)):
            ks, ws = leaders[u]
            for k, w in zip(ks, ws):
                if k == v:
                    continue
                key = (k, v) if k < v else (v, k)
                q = index.get(key)
                if q is None:
                    q = index[key] = len(index)
                    queue.append(key)
                rows.append(p)
                cols.append(q)
                vals.append(0.5 * w)
    P = len(index)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(P, P))
    pa = np.array([k[0] for k in order], dtype=np.int64)
    pb = np.array([k[1] for k in order], dtype=np.int64)
    b = 0.5 * (np.einsum("pk,pk->p", Z[pa], 1.0 - X[pb]) + np.einsum("pk,pk->p", Z[pb], 1.0 - X[pa]))
    rho = np.einsum("pk,pk->p", X[pa], 1.0 - X[pb])
    res, it = (0.0, 0)
    for it in range(1, cfg.max_iterations + 1):
        new = M @ rho + b
        res = float(np.max(np.abs(new - rho))) if P else 0.0
        rho = new
        if res <= cfg.tolerance:
            break
    else:
        _fail(cfg, res, it)
    # requested pairs were enqueued first, in order
    return rho[: i.size], it, res, P


def approximation_report(exact: DiscordStore, approx: DiscordStore, bins: int = 40) -> dict:
    """Error of the approximation relative to the exact values."""
    if exact.ids != approx.ids or exact.keys() != approx.keys():
        raise DomainError("discord stores cover different pair sets")
    err = approx.rho - exact.rho
    counts, edges = np.histogram(err, bins=bins, range=(-1.0, 1.0))
    return {
        "pairs": int(err.size),
        "mean_error": float(err.mean()) if err.size else 0.0,
        "mean_abs_error": float(np.abs(err).mean()) if err.size else 0.0,
        "max_error": float(np.abs(err).max()) if err.size else 0.0,
        "share_not_under": float(np.mean(approx.rho >= exact.rho - 1e-12)) if err.size else 1.0,
        "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
    }
