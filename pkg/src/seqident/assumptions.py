"""Per-block identifying assumptions.

Every step maps an observed-data conditional ``g`` of one block given its
context to a full-data conditional ``h`` of the block's values and
indicators given the same context, without changing what ``g`` says about
the observed data.

Array conventions: ``cond`` has arbitrary leading context axes followed by
one materialized axis per block variable (size ``c + 1``, last index is the
placeholder); each context slice should sum to 1. The result has the same
leading axes, then the block values (size ``c``), then the block indicators
(size 2, 1 = missing).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

import numpy as np

from . import kernels
from .errors import CCMVUndefined, ICINUnidentifiable, MARUnidentifiable
from .tables import ZeroCellPolicy

EM_TOL = 1e-14
EM_MAX_ITER = 100_000


class StepKind(str, Enum):
    CONDITIONAL_MAR = "ConditionalMAR"
    ICIN_PAIR = "ICINPair"
    CCMV = "CCMV"


@dataclass(frozen=True)
class AssumptionStep:
    kind: StepKind
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", StepKind(self.kind))
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def mar(cls, **params) -> "AssumptionStep":
        return cls(StepKind.CONDITIONAL_MAR, params)

    @classmethod
    def ccmv(cls) -> "AssumptionStep":
        return cls(StepKind.CCMV)

    @classmethod
    def icin(cls) -> "AssumptionStep":
        return cls(StepKind.ICIN_PAIR)


@dataclass
class StepStats:
    """Diagnostics collected while running steps (mutated by the step functions)."""

    em_iterations: int = 0
    em_residual: float = 0.0
    filled_cells: int = 0


def _block_cards(cond: np.ndarray, n: int) -> tuple[int, ...]:
    if n < 1 or cond.ndim < n:
        raise ValueError(f"conditional with {cond.ndim} axes cannot hold a block of {n}")
    cards = tuple(s - 1 for s in cond.shape[cond.ndim - n:])
    if any(c < 1 for c in cards):
        raise ValueError("block axes must be materialized (size c + 1)")
    return cards


def _where(idx, n_lead: int, cards, bits=None) -> str:
    ctx = ",".join(str(i + 1) for i in idx[:n_lead]) or "-"
    vals = list(idx[n_lead:])
    if bits is not None:
        it = iter(vals)
        vals = ["*" if b else next(it) + 1 for b in bits]
    else:
        vals = [v + 1 for v in vals]
    return f"context ({ctx}), block values ({','.join(map(str, vals))})"


def _borrow(cond, q, n, policy, exc, what, stats=None):
    """Pattern-mixture completion: missing-given-observed taken from ``q``.

    ``h(x, m) = g(x_obs, m) * q(x) / q(x_obs)``, where ``q`` is any
    nonnegative array over the block values (leading axes = contexts).
    """
    cards = _block_cards(cond, n)
    lead = cond.shape[: cond.ndim - n]
    nl = len(lead)
    out = np.zeros(lead + cards + (2,) * n)
    for bits in itertools.product((0, 1), repeat=n):
        sel = tuple(c if b else slice(0, c) for c, b in zip(cards, bits))
        g_m = cond[(Ellipsis,) + sel]
        mis = tuple(nl + j for j, b in enumerate(bits) if b)
        if not mis:
            h = g_m
        else:
            q_obs = q.sum(axis=mis, keepdims=True)
            zero = q_obs <= 0
            ratio = np.divide(q, q_obs, out=np.zeros(q.shape), where=~zero)
            g_exp = np.expand_dims(g_m, mis)
            bad = zero & (g_exp > 0)
            if bad.any():
                if policy is ZeroCellPolicy.ERROR:
                    first = tuple(np.argwhere(bad)[0])
                    obs_idx = tuple(i for j, i in enumerate(first[nl:]) if not bits[j])
                    raise exc(
                        f"zero denominator {what} at " + _where(first[:nl] + obs_idx, nl, cards, bits)
                        + f", where pattern {''.join(map(str, bits))} has mass"
                    )
                if stats is not None:
                    stats.filled_cells += int(bad.sum())
            n_mis = math.prod(cards[j] for j, b in enumerate(bits) if b)
            ratio = np.where(zero, 1.0 / n_mis, ratio)
            h = g_exp * ratio
        out[(Ellipsis,) + (slice(None),) * n + bits] = h
    return out


def complete_case(cond: np.ndarray, n: int) -> np.ndarray:
    """Joint of the all-observed within-block pattern (unnormalized)."""
    cards = _block_cards(cond, n)
    return cond[(Ellipsis,) + tuple(slice(0, c) for c in cards)]


def step_ccmv(cond, n_block=None, policy=ZeroCellPolicy.ERROR, stats=None) -> np.ndarray:
    """Complete-case missing-variable restriction within the block."""
    cond = np.asarray(cond, dtype=float)
    n = cond.ndim if n_block is None else n_block
    return _borrow(cond, complete_case(cond, n), n, ZeroCellPolicy(policy), CCMVUndefined,
                   "complete-case mass of the observed coordinates", stats)


def mar_fixed_point(cond, n, *, tol=EM_TOL, max_iter=EM_MAX_ITER, backend=None, stats=None):
    """Distribution q of the block values with q(x_mis | x_obs) consistent with MAR.

    Solves ``q(x) = sum_m g(x_obs(m), m) q(x) / q(x_obs(m))`` per context by
    EM. The start mixes the complete-case joint with the uniform
    distribution so no cell is pinned at zero.
    """
    cards = _block_cards(cond, n)
    lead = cond.shape[: cond.ndim - n]
    n_ctx = math.prod(lead)
    n_full = math.prod(cards)
    g = cond.reshape(n_ctx, -1)
    cc = complete_case(cond, n).reshape(n_ctx, n_full)
    cc_mass = cc.sum(axis=1, keepdims=True)
    q = np.full((n_ctx, n_full), 1.0 / n_full)
    pos = cc_mass[:, 0] > 0
    q[pos] = 0.5 * q[pos] + 0.5 * cc[pos] / cc_mass[pos]
    q = np.ascontiguousarray(q)
    mat = kernels.materialized_index_map(cards)
    iters, resid = kernels.mar_em(g, mat, q, tol, max_iter, backend=backend)
    if stats is not None:
        stats.em_iterations = max(stats.em_iterations, iters)
        stats.em_residual = max(stats.em_residual, resid)
    return q.reshape(lead + cards)


def step_conditional_mar(cond, n_block=None, policy=ZeroCellPolicy.ERROR, *, tol=EM_TOL,
                         max_iter=EM_MAX_ITER, backend=None, stats=None) -> np.ndarray:
    """Conditional MAR: the block's indicators depend only on what is observed.

    For a single variable the missing value is allocated in proportion to
    the observed values of the same context. For larger blocks the
    distribution of the block values is the MAR fixed point (see
    ``mar_fixed_point``); it is the only choice that keeps the indicator
    distribution free of the missing values under nonmonotone patterns.
    """
    cond = np.asarray(cond, dtype=float)
    policy = ZeroCellPolicy(policy)
    n = cond.ndim if n_block is None else n_block
    cc = complete_case(cond, n)
    if n == 1:
        return _borrow(cond, cc, 1, policy, MARUnidentifiable, "P(block observed | context)", stats)
    _block_cards(cond, n)
    nl = cond.ndim - n
    block_axes = tuple(range(nl, cond.ndim))
    cc_mass = cc.sum(axis=block_axes)
    partial = cond.sum(axis=block_axes) - cc_mass
    bad = (cc_mass <= 0) & (partial > 0)
    if bad.any() and policy is ZeroCellPolicy.ERROR:
        first = np.argwhere(bad)[0]
        raise MARUnidentifiable(
            "complete-case mass of the block is zero while partial patterns have mass, at context ("
            + (",".join(str(i + 1) for i in first) or "-") + ")"
        )
    q = mar_fixed_point(cond, n, tol=tol, max_iter=max_iter, backend=backend, stats=stats)
    return _borrow(cond, q, n, policy, MARUnidentifiable, "q(observed part) of the MAR fixed point q", stats)


def step_icin_pair(cond, policy=ZeroCellPolicy.ERROR, stats=None) -> np.ndarray:
    """Itemwise conditionally independent nonresponse for a pair (a, b).

    Closed form for two variables: the one-missing patterns borrow the
    complete-case conditional of the missing item given the observed one;
    the both-missing pattern is proportional to
    ``g00(a,b) g01(a) g10(b) / (g00(a) g00(b))``, normalized by summation.
    Pattern labels are ``(M_a, M_b)``.
    """
    cond = np.asarray(cond, dtype=float)
    policy = ZeroCellPolicy(policy)
    ca, cb = _block_cards(cond, 2)
    nl = cond.ndim - 2
    g00 = cond[..., :ca, :cb]
    g01 = cond[..., :ca, cb]
    g10 = cond[..., ca, :cb]
    g11 = cond[..., ca, cb]
    ga = g00.sum(axis=-1)
    gb = g00.sum(axis=-2)

    def _ratio(num, den, label, axis_name):
        zero = den <= 0
        bad = zero & (num > 0)
        if bad.any():
            if policy is ZeroCellPolicy.ERROR:
                first = tuple(np.argwhere(bad)[0])
                raise ICINUnidentifiable(
                    f"complete-case margin {label} is zero where {axis_name} is observed alone, at "
                    f"context ({','.join(str(i + 1) for i in first[:nl]) or '-'}), value {first[nl] + 1}"
                )
            if stats is not None:
                stats.filled_cells += int(bad.sum())
        return np.divide(num, den, out=np.zeros(num.shape), where=~zero), zero

    ra, za = _ratio(g01, ga, "g00(x_a)", "x_a")
    rb, zb = _ratio(g10, gb, "g00(x_b)", "x_b")
    out = np.zeros(cond.shape[:nl] + (ca, cb, 2, 2))
    out[..., 0, 0] = g00
    # x_b | x_a taken from the complete cases; uniform where that is undefined
    cond_b = np.where(za[..., None], 1.0 / cb, np.divide(g00, ga[..., None], out=np.zeros(g00.shape),
                                                          where=~za[..., None]))
    cond_a = np.where(zb[..., None, :], 1.0 / ca, np.divide(g00, gb[..., None, :], out=np.zeros(g00.shape),
                                                             where=~zb[..., None, :]))
    out[..., 0, 1] = g01[..., None] * cond_b
    out[..., 1, 0] = g10[..., None, :] * cond_a
    u = g00 * ra[..., None] * rb[..., None, :]
    total = u.sum(axis=(-2, -1))
    zero = total <= 0
    bad = zero & (g11 > 0)
    if bad.any():
        if policy is ZeroCellPolicy.ERROR:
            first = tuple(np.argwhere(bad)[0])
            raise ICINUnidentifiable(
                "normalizer of the both-missing pattern is zero at context ("
                + (",".join(str(i + 1) for i in first) or "-") + ")"
            )
        if stats is not None:
            stats.filled_cells += int(bad.sum())
    shape11 = np.where(zero[..., None, None], 1.0 / (ca * cb),
                       np.divide(u, total[..., None, None], out=np.zeros(u.shape), where=~zero[..., None, None]))
    out[..., 1, 1] = g11[..., None, None] * shape11
    return out


def apply_step(step: AssumptionStep, cond, n_block, policy, stats=None, backend=None) -> np.ndarray:
    kind = step.kind
    if kind is StepKind.CONDITIONAL_MAR:
        return step_conditional_mar(
            cond, n_block, policy, stats=stats, backend=backend,
            tol=step.params.get("tol", EM_TOL), max_iter=step.params.get("max_iter", EM_MAX_ITER),
        )
    if kind is StepKind.CCMV:
        return step_ccmv(cond, n_block, policy, stats=stats)
    if kind is StepKind.ICIN_PAIR:
        if n_block != 2:
            raise ValueError("ICINPair needs a block of exactly two variables")
        return step_icin_pair(cond, policy, stats=stats)
    raise ValueError(f"unknown step kind {kind!r}")
