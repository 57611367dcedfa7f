"""Engine-independent reference computations used by several test modules."""

from __future__ import annotations

import itertools

import numpy as np


def partially_ignorable_oracle(P: np.ndarray):
    """Three variables: MAR for X1 given (X2*, X3*), then ICIN for (X2, X3) given X1.

    ``P`` is the observed table in materialized layout (index c_j = missing).
    Returns ``(fA1, joint)`` with ``fA1[x1, m1, x2*, x3*]`` and
    ``joint[x1, x2, x3, m2, m3]``, built from pattern densities f_m and
    pattern probabilities pi_m one formula at a time.
    """
    c1, c2, c3 = (s - 1 for s in P.shape)
    star = {1: c1, 2: c2, 3: c3}

    # step 1: f_A1(x1, m1, x2*, x3*) = f(x1 | M1=0, ctx) f(m1 | ctx) f(ctx)
    fA1 = np.zeros((c1, 2, c2 + 1, c3 + 1))
    for a2, a3 in itertools.product(range(c2 + 1), range(c3 + 1)):
        observed_mass = sum(P[x1, a2, a3] for x1 in range(c1))  # f_{0 m2 m3}(ctx) pi_{0 m2 m3}
        missing_mass = P[star[1], a2, a3]  # f_{1 m2 m3}(ctx) pi_{1 m2 m3}
        f_ctx = observed_mass + missing_mass
        for x1 in range(c1):
            f_x1 = P[x1, a2, a3] / observed_mass
            fA1[x1, 0, a2, a3] = f_x1 * (observed_mass / f_ctx) * f_ctx
            fA1[x1, 1, a2, a3] = f_x1 * (missing_mass / f_ctx) * f_ctx

    # step 2: g(x1, x2*, x3*) with M1 summed out, then the pair formulas given x1
    g = fA1.sum(axis=1)
    joint = np.zeros((c1, c2, c3, 2, 2))
    for x1 in range(c1):
        gx = g[x1]
        pi = {(m2, m3): (gx[:c2, :c3].sum() if (m2, m3) == (0, 0) else
                         gx[:c2, c3].sum() if (m2, m3) == (0, 1) else
                         gx[c2, :c3].sum() if (m2, m3) == (1, 0) else gx[c2, c3])
              for m2, m3 in itertools.product((0, 1), repeat=2)}
        g00 = gx[:c2, :c3] / pi[0, 0]
        g01 = gx[:c2, c3] / pi[0, 1]
        g10 = gx[c2, :c3] / pi[1, 0]
        g00_2 = g00.sum(axis=1)
        g00_3 = g00.sum(axis=0)
        u = np.array([[g00[i, j] * g01[i] * g10[j] / (g00_2[i] * g00_3[j]) for j in range(c3)]
                      for i in range(c2)])
        for i, j in itertools.product(range(c2), range(c3)):
            joint[x1, i, j, 0, 0] = g00[i, j] * pi[0, 0]
            joint[x1, i, j, 0, 1] = g00[i, j] * g01[i] / g00_2[i] * pi[0, 1]
            joint[x1, i, j, 1, 0] = g00[i, j] * g10[j] / g00_3[j] * pi[1, 0]
            joint[x1, i, j, 1, 1] = u[i, j] / u.sum() * pi[1, 1]
    return fA1, joint


def group_permutation_violation(full: np.ndarray, blocks) -> float:
    """Largest departure from f(M_k | X, M_{>k}) = f(M_k | X_{<k}, X*_{>=k}).

    For every block k and every value of M_{>k}, the conditional
    probability of each within-block pattern m_k given (X, M_{>k}) may not
    vary with any coordinate of X that (m_k, m_{>k}) marks as missing in
    blocks k and later. Blocks are lists of 0-based variables in
    identification order.
    """
    p = full.ndim // 2
    worst = 0.0
    for k, block in enumerate(blocks):
        later = [j for b in blocks[k + 1:] for j in b]
        earlier = [j for b in blocks[:k] for j in b]
        # marginalize earlier indicators
        f = full.sum(axis=tuple(p + j for j in earlier)) if earlier else full
        rest = [j for j in range(p) if j not in earlier]  # indicator axes left, in order
        for m_later in itertools.product((0, 1), repeat=len(later)):
            idx = [slice(None)] * f.ndim
            for j, b in zip(later, m_later):
                idx[p + rest.index(j)] = b
            sl = f[tuple(idx)]  # axes: x (p), then block indicators in variable order
            blk = sorted(block)
            denom = sl.sum(axis=tuple(range(p, sl.ndim)), keepdims=True)
            cond = sl / denom
            for m_k in itertools.product((0, 1), repeat=len(blk)):
                c = cond[(Ellipsis,) + m_k]
                missing = [j for j, b in zip(blk, m_k) if b] + [j for j, b in zip(later, m_later) if b]
                for j in missing:
                    worst = max(worst, float(np.max(np.abs(c - c.take([0], axis=j)))))
    return worst


def odds_ratio_deviation(h: np.ndarray, x_axis: int, m_axis: int) -> float:
    """Largest |OR - 1| over all 2x2 minors linking axis x_axis and binary axis m_axis.

    Every other axis is held fixed, so this is the conditional odds ratio
    given the complement. Cells must be positive.
    """
    h = np.moveaxis(h, (x_axis, m_axis), (-2, -1))
    h = h.reshape(-1, h.shape[-2], 2)
    worst = 0.0
    for i, j in itertools.combinations(range(h.shape[1]), 2):
        ratio = (h[:, i, 0] * h[:, j, 1]) / (h[:, i, 1] * h[:, j, 0])
        worst = max(worst, float(np.max(np.abs(ratio - 1))))
    return worst
