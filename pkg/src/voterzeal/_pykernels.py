"""Pure-Python fallback for the compiled kernels in ``_ckernels``.

Same algorithms, same draw order; results match the compiled versions
exactly for a given bit generator state.
"""

from bisect import bisect_right

import numpy as np

_CHUNK = 1 << 16


class _Uniforms:
    """Buffered doubles from a bit generator, consumed in stream order."""

    def __init__(self, bit_generator):
        self._gen = np.random.Generator(bit_generator)
        self._buf = []
        self._pos = 0

    def next(self):
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_CHUNK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def _pick(cum, lo, hi, r):
    k = bisect_right(cum, r, lo, hi)
    return hi - 1 if k >= hi else k


def absorb_walks(indptr, indices, cum, opinion, start, n_walks, K, bit_generator, max_steps):
    indptr = indptr.tolist()
    indices = indices.tolist()
    cum = cum.tolist()
    opinion = opinion.tolist()
    rng = _Uniforms(bit_generator)
    counts = [0] * (K + 1)
    for _ in range(n_walks):
        node = start
        steps = 0
        while True:
            op = opinion[node]
            if op >= 0:
                counts[op] += 1
                break
            lo, hi = indptr[node], indptr[node + 1]
            if steps >= max_steps or hi == lo:
                counts[K] += 1
                break
            node = indices[_pick(cum, lo, hi, rng.next() * cum[hi - 1])]
            steps += 1
    return np.array(counts, dtype=np.int64)


def run_voter(indptr, indices, cum, state, users, burn_in, samples, thinning,
              pair_i, pair_j, K, bit_generator):
    n = state.shape[0]
    cur = state.tolist()
    indptr_l = indptr.tolist()
    indices_l = indices.tolist()
    cum_l = cum.tolist()
    users_l = users.tolist()
    n_users = len(users_l)
    pi = pair_i.tolist()
    pj = pair_j.tolist()
    rng = _Uniforms(bit_generator)
    node_counts = np.zeros((n, K), dtype=np.int64)
    pair_counts = np.zeros(len(pi), dtype=np.int64)
    rows = np.arange(n)
    for s in range(-1, samples):
        for _ in range(burn_in if s < 0 else thinning):
            idx = int(rng.next() * n_users)
            if idx >= n_users:
                idx = n_users - 1
            node = users_l[idx]
            u = rng.next()
            lo, hi = indptr_l[node], indptr_l[node + 1]
            if hi > lo:
                cur[node] = cur[indices_l[_pick(cum_l, lo, hi, u * cum_l[hi - 1])]]
        if s < 0:
            continue
        arr = np.array(cur)
        node_counts[rows, arr] += 1
        if pi:
            pair_counts += arr[pi] != arr[pj]
    state[:] = cur
    return node_counts, pair_counts
