"""Reference (numpy) implementation of the compiled kernels."""

from __future__ import annotations

import numpy as np


def mar_em(g, mat, q, tol, max_iter):
    """Iterate the MAR self-consistency map in place.

    ``g`` is ``(n_ctx, n_mat)``: the observed-data conditional of every
    context in flat materialized layout. ``mat[m, x]`` is the materialized
    cell that full cell ``x`` falls into under within-block pattern ``m``.
    ``q`` is ``(n_ctx, n_full)`` and is overwritten with the fixed point of
    ``q(x) <- sum_m g(x*(m, x)) q(x) / q(x*(m, x))``.

    Each context stops on its own once its sup-norm step is ``<= tol``.
    Returns ``(most iterations used, largest final step)``.
    """
    n_ctx, n_mat = g.shape
    flat = mat.ravel()
    active = np.arange(n_ctx)
    iters = np.zeros(n_ctx, dtype=int)
    last = np.zeros(n_ctx)
    it = 0
    while active.size and it < max_iter:
        it += 1
        qa = q[active]
        # every (pattern, cell) pair adds q(cell) to its materialized cell
        keys = (np.arange(active.size)[:, None] * n_mat + flat).ravel()
        qobs = np.bincount(keys, weights=np.tile(qa, (1, mat.shape[0])).ravel(),
                           minlength=active.size * n_mat).reshape(active.size, n_mat)
        ratio = np.divide(g[active], qobs, out=np.zeros_like(qobs), where=qobs > 0)
        new = qa * ratio[:, mat].sum(axis=1)
        step = np.abs(new - qa).max(axis=1)
        q[active] = new
        iters[active] = it
        last[active] = step
        active = active[step > tol]
    return int(iters.max(initial=0)), float(last.max(initial=0.0))
