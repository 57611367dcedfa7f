"""Closed-form two-variable constructions.

Both functions work directly on the observed cell probabilities
``pi_ij00``, ``pi_i+01``, ``pi_+j10``, ``pi_++11`` and never call the
engine, so they serve as independent checks of it.

* ``closed_form_example1``: carry M_1 forward, with ``X1 _||_ M1 | X2*`` and
  ``X2 _||_ M2 | M1, X1``.
* ``closed_form_example2``: drop M_1 after the first step, with
  ``X1 _||_ M1 | X2*`` and ``X2 _||_ M2 | X1`` (permutation missingness).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroDenominator
from .tables import FullTable, ObservedTable


@dataclass
class _Pi:
    p00: np.ndarray  # pi_ij00, (I, J)
    p01: np.ndarray  # pi_i+01, (I,)
    p10: np.ndarray  # pi_+j10, (J,)
    p11: float  # pi_++11


def _unpack(observed: ObservedTable) -> _Pi:
    if observed.space.p != 2:
        raise ValueError("closed forms are defined for two variables")
    I, J = observed.space.cardinalities
    P = observed.probs
    return _Pi(P[:I, :J], P[:I, J], P[I, :J], float(P[I, J]))


def _check(values, symbol: str):
    values = np.atleast_1d(values)
    if np.any(values <= 0):
        k = int(np.flatnonzero(values <= 0)[0]) + 1
        raise ZeroDenominator(symbol.format(k=k))


@dataclass
class Example1Result:
    full: FullTable
    study: np.ndarray


@dataclass
class Example2Result:
    joint: np.ndarray  # P(X1=i, X2=j, M2=m2), shape (I, J, 2)
    study: np.ndarray
    m1_given_m2_missing: np.ndarray  # P(M1=m1 | M2=1), shape (2,)
    m1_given_x2_m2_observed: np.ndarray  # P(M1=m1 | X2=j, M2=0), shape (J, 2)
    m2_given_x1: np.ndarray  # P_B1(M2=m2 | X1=i), shape (I, 2)
    full: FullTable


def closed_form_example1(observed: ObservedTable) -> Example1Result:
    pi = _unpack(observed)
    I, J = pi.p00.shape
    col00 = pi.p00.sum(axis=0)  # pi_+j00
    row00 = pi.p00.sum(axis=1)  # pi_i+00
    pi_pp01 = pi.p01.sum()
    _check(col00, "pi_{{+{k},00}}")
    _check(pi_pp01, "pi_{{++01}}")
    c = pi.p00 / col00  # P(X1=i | X2=j, M1=0, M2=0)
    # pi_{+j m1 0}
    b = np.stack([col00, pi.p10], axis=1)  # (J, 2)
    pi_ppm1 = np.array([pi_pp01, pi.p11])  # pi_{++m1 1}
    denom = c @ b  # sum_l c_il pi_{+l m1 0}, (I, 2)
    _check(denom[:, 0], "pi_{{{k}+00}}")
    _check(denom[:, 1], "sum_l (pi_{{{k}l00}}/pi_{{+l00}}) pi_{{+l10}}")
    e = (pi.p01 / pi_pp01)[:, None] * pi_ppm1[None, :]  # (I, 2)

    full = np.zeros((I, J, 2, 2))
    for m1 in (0, 1):
        base = c * b[:, m1][None, :]
        full[:, :, m1, 0] = base
        full[:, :, m1, 1] = base / denom[:, m1][:, None] * e[:, m1][:, None]

    # marginal of X written out term by term
    study = (
        pi.p00
        + pi.p01[:, None] * pi.p00 / row00[:, None]
        + pi.p10[None, :] * pi.p00 / col00[None, :]
        + pi.p11 * (pi.p01 / pi_pp01)[:, None] * (c * pi.p10[None, :]) / denom[:, 1][:, None]
    )
    return Example1Result(FullTable(observed.space, full), study)


def closed_form_example2(observed: ObservedTable) -> Example2Result:
    pi = _unpack(observed)
    I, J = pi.p00.shape
    col00 = pi.p00.sum(axis=0)
    pi_pp01 = pi.p01.sum()
    _check(col00, "pi_{{+{k},00}}")
    _check(pi_pp01, "pi_{{++01}}")
    c = pi.p00 / col00
    col_p0 = col00 + pi.p10  # pi_+j+0
    pi_ppp1 = pi_pp01 + pi.p11  # pi_+++1
    _check(col_p0, "pi_{{+{k}+0}}")
    E = c @ col_p0  # sum_l c_il pi_{+l+0}
    _check(E, "sum_l (pi_{{{k}l00}}/pi_{{+l00}}) pi_{{+l+0}}")
    a = pi.p01 / pi_pp01 * pi_ppp1  # P_B1(X1=i, M2=1)

    joint = np.zeros((I, J, 2))
    joint[:, :, 0] = c * col_p0[None, :]
    joint[:, :, 1] = c * col_p0[None, :] / E[:, None] * a[:, None]
    study = col_p0[None, :] * c + pi_ppp1 * (pi.p01 / pi_pp01)[:, None] * (c * col_p0[None, :]) / E[:, None]

    m1_mis = np.array([pi_pp01, pi.p11]) / pi_ppp1
    m1_obs = np.stack([col00, pi.p10], axis=1) / col_p0[:, None]
    m2_x1 = np.stack([E, a], axis=1) / (E + a)[:, None]

    full = np.zeros((I, J, 2, 2))
    for m1 in (0, 1):
        full[:, :, m1, 0] = joint[:, :, 0] * m1_obs[None, :, m1]
        full[:, :, m1, 1] = joint[:, :, 1] * m1_mis[m1]
    return Example2Result(joint, study, m1_mis, m1_obs, m2_x1, FullTable(observed.space, full))
