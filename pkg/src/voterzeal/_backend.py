"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it was built; otherwise the
pure-Python ``_pykernels`` twin is used.  :func:`use` switches explicitly.
"""

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_active = _ckernels if _ckernels is not None else _pykernels


def name() -> str:
    return "compiled" if _active is _ckernels else "python"


def available() -> list[str]:
    return ["python"] + (["compiled"] if _ckernels is not None else [])


def use(backend: str) -> None:
    global _active
    if backend == "compiled":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built")
        _active = _ckernels
    elif backend == "python":
        _active = _pykernels
    else:
        raise ValueError(f"unknown backend {backend!r}")


def kernels():
    return _active


def row_cumsum(indptr: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Cumulative weights restarted at every CSR row."""
    cum = np.empty_like(weights, dtype=np.float64)
    for lo, hi in zip(indptr[:-1], indptr[1:]):
        if hi > lo:
            cum[lo:hi] = np.cumsum(weights[lo:hi])
    return cum
