"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``SEQIDENT_PURE_PYTHON=1`` to force the numpy path.
"""

from __future__ import annotations

import itertools
import math
import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("SEQIDENT_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def materialized_index_map(cards) -> np.ndarray:
    """``mat[m, x]``: flat materialized cell of full cell ``x`` under pattern ``m``."""
    cards = tuple(cards)
    mshape = tuple(c + 1 for c in cards)
    grids = np.indices(cards).reshape(len(cards), -1)
    rows = []
    for bits in itertools.product((0, 1), repeat=len(cards)):
        coords = [np.full(grids.shape[1], c) if b else grids[j] for j, (c, b) in enumerate(zip(cards, bits))]
        rows.append(np.ravel_multi_index(coords, mshape))
    return np.ascontiguousarray(np.array(rows, dtype=np.intp).reshape(2 ** len(cards), math.prod(cards)))


def mar_em(g, mat, q, tol=1e-14, max_iter=100_000, backend=None):
    backend = backend or BACKEND
    g = np.ascontiguousarray(g, dtype=float)
    mat = np.ascontiguousarray(mat, dtype=np.intp)
    if not (q.flags.c_contiguous and q.dtype == np.float64):
        raise ValueError("q must be a C-contiguous float64 array (updated in place)")
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled.mar_em(g, mat, q, float(tol), int(max_iter))
    if backend != "python":
        raise ValueError(f"unknown backend {backend!r}")
    return _kernels_py.mar_em(g, mat, q, tol, max_iter)
