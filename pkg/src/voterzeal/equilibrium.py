"""Equilibrium opinion distributions of the voter model with zealots.

At equilibrium every user ``i`` satisfies

    x_i^s = sum_j w_ij x_j^s + z_i^s

where the sum runs over non-zealot leaders and ``z_i^s`` is the in-weight
``i`` receives from zealots holding opinion ``s``.  The system is solved by
synchronous (Jacobi) sweeps over one shared sparse operator, all opinions
at once.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ConvergenceError, DomainError, VoterError
from .network import Network, OpinionSpace

log = logging.getLogger(__name__)

WALK_BLOCK = 8192


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 100_000
    initialization: str = "uniform"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if self.initialization not in ("uniform", "zeros"):
            raise DomainError(f"unknown initialization {self.initialization!r}")


@dataclass(eq=False)
class OpinionMatrix:
    """Per-user opinion distributions, rows aligned with ``ids``."""

    space: OpinionSpace
    ids: tuple[str, ...]
    values: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    tolerance: float = 0.0
    history: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self._index = {s: i for i, s in enumerate(self.ids)}

    def __getitem__(self, node_id: str) -> np.ndarray:
        return self.values[self._index[node_id]]

    def __len__(self) -> int:
        return len(self.ids)

    def row_of(self, node_id: str) -> int:
        return self._index[node_id]

    def meta(self) -> dict:
        return {"iterations": self.iterations, "residual": self.residual,
                "tolerance": self.tolerance}


def _user_ids(net: Network, users: np.ndarray) -> tuple[str, ...]:
    return tuple(net.ids[i] for i in users)


def zealot_exposure(net: Network) -> OpinionMatrix:
    """Aggregated in-weight from zealots of each opinion, per user."""
    users, _, Z = net.operators()
    return OpinionMatrix(net.space, _user_ids(net, users), Z)


def _check_solvable(net: Network, users: np.ndarray):
    if not net.normalized:
        raise DomainError("network must be normalized before solving")
    empty = users[np.diff(net.indptr)[users] == 0]
    if empty.size:
        raise DomainError(f"user {net.ids[empty[0]]!r} has no leaders; run the filter first")


def solve_equilibrium(net: Network, cfg: SolverConfig = SolverConfig()) -> OpinionMatrix:
    """Jacobi iteration ``x <- W x + z`` until the sup-norm residual is small.

    Raises
    ------
    ConvergenceError
        If ``cfg.max_iterations`` sweeps do not reach ``cfg.tolerance``.
    """
    users, W, Z = net.operators()
    _check_solvable(net, users)
    n, K = Z.shape
    x = np.full((n, K), 1.0 / K) if cfg.initialization == "uniform" else np.zeros((n, K))
    history = []
    res = np.inf
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        y = W @ x + Z
        res = float(np.max(np.abs(y - x))) if n else 0.0
        x = y
        history.append(res)
        if cfg.initialization == "uniform" and it % 100 == 0:
            drift = float(np.max(np.abs(x.sum(axis=1) - 1.0))) if n else 0.0
            if drift > 1e-9:
                raise VoterError(f"simplex invariant broken at sweep {it} (drift {drift:.3e})")
        if res <= cfg.tolerance:
            break
    else:
        raise ConvergenceError(
            f"equilibrium did not converge in {cfg.max_iterations} sweeps "
            f"(residual {res:.3e} > {cfg.tolerance:.1e})",
            residual=res, iterations=it,
        )
    log.debug("equilibrium converged in %d sweeps, residual %.3e", it, res)
    return OpinionMatrix(net.space, _user_ids(net, users), x, it, res, cfg.tolerance,
                         np.array(history))


def solve_dense(net: Network) -> OpinionMatrix:
    """Direct dense solve of ``(I - W) x = z``; for small networks only."""
    users, W, Z = net.operators()
    _check_solvable(net, users)
    A = np.eye(users.size) - W.toarray()
    x = np.linalg.solve(A, Z)
    return OpinionMatrix(net.space, _user_ids(net, users), x)


def _walk_inputs(net: Network):
    opinion = np.where(net.is_zealot, net.truth, -1).astype(np.int64)
    cum = _backend.row_cumsum(net.indptr, net.weights)
    return opinion, cum


def random_walk_counts(net: Network, node: str, walks: int, seed: int = 0,
                       max_steps: int = 1_000_000, threads: int = 1, _inputs=None):
    """Absorption counts of backward walks started at ``node``.

    Walks run in fixed blocks of ``WALK_BLOCK``, each block with its own
    stream seeded from ``(seed, node index, block index)``, so the result
    does not depend on ``threads``.  Returns ``(counts, capped)``.
    """
    if walks < 1:
        raise DomainError("walks must be >= 1")
    start = net.index_of(node)
    opinion, cum = _inputs if _inputs is not None else _walk_inputs(net)
    kern = _backend.kernels()
    blocks = [(b, min(WALK_BLOCK, walks - b * WALK_BLOCK))
              for b in range(-(-walks // WALK_BLOCK))]

    def run(block):
        b, size = block
        bg = np.random.PCG64(np.random.SeedSequence([seed, start, b]))
        return kern.absorb_walks(net.indptr, net.indices, cum, opinion, start, size,
                                 net.K, bg, max_steps)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    total = np.sum(parts, axis=0)
    return total[:-1], int(total[-1])


def random_walk_estimate(net: Network, node: str, walks: int, seed: int = 0,
                         max_steps: int = 1_000_000, threads: int = 1,
                         _inputs=None) -> np.ndarray:
    """Monte Carlo estimate of ``x_node`` from absorbing backward walks.

    Each step moves to a leader drawn with probability equal to its edge
    weight; a walk ends at the first zealot and votes for its opinion.
    """
    counts, capped = random_walk_counts(net, node, walks, seed, max_steps, threads, _inputs)
    if capped:
        log.warning("%d of %d walks from %s hit the step cap", capped, walks, node)
    if capped > 0.01 * walks:
        raise ConvergenceError(f"{capped} of {walks} walks from {node!r} were not absorbed")
    return counts / counts.sum()


def random_walk_all(net: Network, walks: int, seed: int = 0, max_steps: int = 1_000_000,
                    threads: int = 1) -> OpinionMatrix:
    """:func:`random_walk_estimate` for every user."""
    users = net.users
    inputs = _walk_inputs(net)
    vals = np.array([
        random_walk_estimate(net, net.ids[i], walks, seed, max_steps, threads, inputs)
        for i in users
    ]).reshape(users.size, net.K)
    return OpinionMatrix(net.space, _user_ids(net, users), vals)
