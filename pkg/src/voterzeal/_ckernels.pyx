# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the random-walk and voter-dynamics oracles.

Both kernels draw doubles straight from a numpy ``BitGenerator`` so that the
stream matches ``Generator.random`` draw for draw; the pure-Python twin in
``_pykernels`` therefore reproduces these results bit for bit.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

cnp.import_array()


cdef inline Py_ssize_t _pick(const double[::1] cum, Py_ssize_t lo, Py_ssize_t hi,
                             double r) noexcept nogil:
    # first k in [lo, hi) with cum[k] > r, clamped to the last leader
    cdef Py_ssize_t a = lo
    cdef Py_ssize_t b = hi
    cdef Py_ssize_t m
    while a < b:
        m = (a + b) >> 1
        if cum[m] > r:
            b = m
        else:
            a = m + 1
    if a >= hi:
        a = hi - 1
    return a


cdef bitgen_t* _bitgen(object bit_generator) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


def absorb_walks(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                 const double[::1] cum, const cnp.int64_t[::1] opinion,
                 Py_ssize_t start, Py_ssize_t n_walks, Py_ssize_t K,
                 object bit_generator, Py_ssize_t max_steps):
    """Run ``n_walks`` backward walks from ``start``.

    Returns int64 counts of length ``K + 1``; the last slot counts walks that
    hit ``max_steps`` or a node without leaders.
    """
    cdef cnp.int64_t[::1] counts = np.zeros(K + 1, dtype=np.int64)
    cdef bitgen_t* rng = _bitgen(bit_generator)
    cdef Py_ssize_t w, steps, node, lo, hi, k
    cdef double r
    with bit_generator.lock, nogil:
        for w in range(n_walks):
            node = start
            steps = 0
            while True:
                if opinion[node] >= 0:
                    counts[opinion[node]] += 1
                    break
                lo = indptr[node]
                hi = indptr[node + 1]
                if steps >= max_steps or hi == lo:
                    counts[K] += 1
                    break
                r = rng.next_double(rng.state) * cum[hi - 1]
                k = _pick(cum, lo, hi, r)
                node = indices[k]
                steps += 1
    return np.asarray(counts)


def run_voter(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
              const double[::1] cum, cnp.int64_t[::1] state,
              const cnp.int64_t[::1] users, Py_ssize_t burn_in,
              Py_ssize_t samples, Py_ssize_t thinning,
              const cnp.int64_t[::1] pair_i, const cnp.int64_t[::1] pair_j,
              Py_ssize_t K, object bit_generator):
    """Asynchronous voter dynamics; ``state`` is updated in place.

    Returns ``(node_counts, pair_counts)``: per node and opinion the number of
    recorded samples holding it, and per pair the number of samples in
    disagreement.
    """
    cdef Py_ssize_t n = state.shape[0]
    cdef Py_ssize_t n_users = users.shape[0]
    cdef Py_ssize_t n_pairs = pair_i.shape[0]
    cdef cnp.int64_t[:, ::1] node_counts = np.zeros((n, K), dtype=np.int64)
    cdef cnp.int64_t[::1] pair_counts = np.zeros(n_pairs, dtype=np.int64)
    cdef bitgen_t* rng = _bitgen(bit_generator)
    cdef Py_ssize_t t, s, v, p, node, lo, hi, idx
    cdef double u
    with bit_generator.lock, nogil:
        for s in range(-1, samples):
            for t in range(burn_in if s < 0 else thinning):
                u = rng.next_double(rng.state)
                idx = <Py_ssize_t>(u * n_users)
                if idx >= n_users:
                    idx = n_users - 1
                node = users[idx]
                u = rng.next_double(rng.state)
                lo = indptr[node]
                hi = indptr[node + 1]
                if hi > lo:
                    state[node] = state[indices[_pick(cum, lo, hi, u * cum[hi - 1])]]
            if s < 0:
                continue
            for v in range(n):
                node_counts[v, state[v]] += 1
            for p in range(n_pairs):
                if state[pair_i[p]] != state[pair_j[p]]:
                    pair_counts[p] += 1
    return np.asarray(node_counts), np.asarray(pair_counts)
