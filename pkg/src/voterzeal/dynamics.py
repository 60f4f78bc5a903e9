"""Stochastic voter dynamics and exact enumeration of its stationary law.

Both routines are oracles for the fixed points computed in
:mod:`voterzeal.equilibrium` and :mod:`voterzeal.discord`: the simulation
samples the process directly, and :func:`brute_force_stationary` builds the
full ``K**n`` state chain for tiny networks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .equilibrium import OpinionMatrix
from .errors import ConvergenceError, DomainError, SizeError
from .network import Network

log = logging.getLogger(__name__)

MAX_UNITS = 8
MAX_STATES = 100_000


@dataclass(frozen=True)
class SimConfig:
    """Sampling schedule; ``burn_in=None`` means ``100 * N * K`` steps."""

    burn_in: int | None = None
    samples: int = 10_000
    thinning: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1 or self.thinning < 1:
            raise DomainError("samples and thinning must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise DomainError("burn_in must be >= 0")

    def resolved_burn_in(self, net: Network) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return 100 * net.n_nodes * net.K


@dataclass(eq=False)
class SimStats:
    """Opinion frequencies for every node and disagreement rates for pairs."""

    ids: tuple[str, ...]
    is_zealot: np.ndarray
    frequencies: np.ndarray
    pairs: list[tuple[str, str]]
    disagreement: np.ndarray
    samples: int
    exact: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {s: n for n, s in enumerate(self.ids)}

    def __getitem__(self, node_id: str) -> np.ndarray:
        return self.frequencies[self._index[node_id]]

    def pair(self, a: str, b: str) -> float:
        for n, (p, q) in enumerate(self.pairs):
            if (p, q) == (a, b) or (p, q) == (b, a):
                return float(self.disagreement[n])
        raise KeyError((a, b))

    def user_matrix(self, space) -> OpinionMatrix:
        rows = np.flatnonzero(~self.is_zealot)
        return OpinionMatrix(space, tuple(self.ids[r] for r in rows), self.frequencies[rows])


def _pair_indices(net: Network, pairs):
    if isinstance(pairs, str):
        if pairs != "all":
            raise DomainError(f"unknown pair set {pairs!r}")
        users = net.users
        a, b = np.triu_indices(users.size, k=1)
        pi, pj = users[a], users[b]
    else:
        pairs = list(pairs)
        pi = np.array([net.index_of(a) for a, _ in pairs], dtype=np.int64)
        pj = np.array([net.index_of(b) for _, b in pairs], dtype=np.int64)
    names = [(net.ids[a], net.ids[b]) for a, b in zip(pi.tolist(), pj.tolist())]
    return pi.astype(np.int64), pj.astype(np.int64), names


def _require_ready(net: Network):
    if not net.normalized:
        raise DomainError("network must be normalized")
    users = net.users
    if users.size == 0:
        raise DomainError("network has no users")
    if np.any(np.diff(net.indptr)[users] == 0):
        raise DomainError("every user needs at least one leader; run the filter first")


def simulate(net: Network, cfg: SimConfig = SimConfig(), pairs=()) -> SimStats:
    """Sample the asynchronous voter process.

    Users start from independent uniform opinions and zealots from their
    ground truth.  Each step picks a user uniformly and copies the current
    opinion of one leader drawn by weight.  After the burn-in, the state is
    recorded every ``thinning`` steps, ``samples`` times.
    """
    _require_ready(net)
    init_seq, dyn_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    users = net.users.astype(np.int64)
    state = np.where(net.is_zealot, net.truth, 0).astype(np.int64)
    state[users] = np.random.default_rng(init_seq).integers(0, net.K, users.size)
    pi, pj, names = _pair_indices(net, pairs)
    cum = _backend.row_cumsum(net.indptr, net.weights)
    burn_in = cfg.resolved_burn_in(net)
    node_counts, pair_counts = _backend.kernels().run_voter(
        net.indptr, net.indices, cum, state, users, burn_in, cfg.samples, cfg.thinning,
        pi, pj, net.K, np.random.PCG64(dyn_seq),
    )
    return SimStats(
        ids=net.ids,
        is_zealot=net.is_zealot.copy(),
        frequencies=node_counts / cfg.samples,
        pairs=names,
        disagreement=pair_counts / cfg.samples,
        samples=cfg.samples,
        meta={"burn_in": burn_in, "thinning": cfg.thinning, "seed": cfg.seed,
              "backend": _backend.name()},
    )


def _chain(net: Network):
    """Transition structure of the ``K**n`` state chain.

    Returns ``(digits, targets, probs)``: ``digits[a]`` is user ``a``'s
    opinion in every state, and from state ``x`` the chain moves to
    ``targets[a, x, s]`` with probability ``probs[a, x, s]`` (user ``a``
    chosen and adopting ``s``).
    """
    users, W, Z = net.operators()
    n, K = users.size, net.K
    S = K ** n
    states = np.arange(S, dtype=np.int64)
    powers = K ** np.arange(n, dtype=np.int64)
    digits = (states[None, :] // powers[:, None]) % K
    probs = np.empty((n, S, K))
    targets = np.empty((n, S, K), dtype=np.int64)
    rows = np.arange(S)
    for a in range(n):
        p = np.tile(Z[a], (S, 1))
        for k, w in zip(W.indices[W.indptr[a]:W.indptr[a + 1]], W.data[W.indptr[a]:W.indptr[a + 1]]):
            p[rows, digits[k]] += w
        probs[a] = p / n
        base = states - digits[a] * powers[a]
        targets[a] = base[:, None] + np.arange(K)[None, :] * powers[a]
    return users, digits, targets, probs


def stationary_distribution(net: Network, tol: float = 1e-13, max_iter: int = 1_000_000):
    """Stationary law of the enumerated chain by lazy power iteration.

    The transition operator is applied through index arrays without
    forming the matrix; the lazy step ``(P + I) / 2`` has the same
    stationary vector and rules out periodicity.
    """
    _require_ready(net)
    n = net.users.size
    if n > MAX_UNITS or net.K ** n > MAX_STATES:
        raise SizeError(f"{net.K}^{n} states exceed the enumeration bound "
                        f"(n <= {MAX_UNITS}, K^n <= {MAX_STATES})")
    users, digits, targets, probs = _chain(net)
    S = digits.shape[1]
    flat_t = targets.ravel()
    pi = np.full(S, 1.0 / S)
    res = np.inf
    for it in range(1, max_iter + 1):
        moved = np.bincount(flat_t, weights=(probs * pi[None, :, None]).ravel(), minlength=S)
        new = 0.5 * (pi + moved)
        res = float(np.abs(new - pi).sum())
        pi = new
        if res <= tol:
            break
    else:
        raise ConvergenceError(f"power iteration did not reach {tol:.1e} (residual {res:.3e})",
                               residual=res, iterations=max_iter)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return users, digits, pi, {"iterations": it, "residual": res, "states": S}


def brute_force_stationary(net: Network, pairs="all") -> SimStats:
    """Exact marginals and pair disagreement from the enumerated chain."""
    users, digits, pi, meta = stationary_distribution(net)
    K = net.K
    freq = np.zeros((net.n_nodes, K))
    for a, u in enumerate(users):
        freq[u] = np.bincount(digits[a], weights=pi, minlength=K)
    z = net.zealots
    freq[z, net.truth[z]] = 1.0
    pi_idx, pj_idx, names = _pair_indices(net, pairs)
    pos = np.full(net.n_nodes, -1, dtype=np.int64)
    pos[users] = np.arange(users.size)
    op_of = {}

    def opinions(node):
        if node not in op_of:
            op_of[node] = digits[pos[node]] if pos[node] >= 0 else np.full(pi.size, net.truth[node])
        return op_of[node]

    dis = np.array([float(pi[opinions(a) != opinions(b)].sum())
                    for a, b in zip(pi_idx.tolist(), pj_idx.tolist())])
    return SimStats(net.ids, net.is_zealot.copy(), freq, names, dis, samples=0, exact=True,
                    meta=meta)
