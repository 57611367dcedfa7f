"""Checks that a full-data distribution reproduces its observed-data distribution.

The re-marginalization here deliberately does not reuse
``tables.observed_from_full``: every full cell ``(x, m)`` is mapped to the
flat index of its materialized cell and scatter-added.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import SignatureMismatch, SpaceMismatch
from .tables import FullTable, ObservedTable

DEFAULT_TOLERANCE = 1e-10


@dataclass
class NpsReport:
    max_abs_error: float
    worst_cell: tuple[str, tuple] | None
    tolerance: float
    per_pattern: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_abs_error <= self.tolerance

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "max_abs_error": self.max_abs_error,
            "tolerance": self.tolerance,
            "worst_cell": None if self.worst_cell is None else {
                "pattern": self.worst_cell[0], "values": list(self.worst_cell[1])},
            "per_pattern": self.per_pattern,
        }


@functools.lru_cache(maxsize=32)
def _materialized_keys(cards: tuple[int, ...]) -> np.ndarray:
    """Flat materialized index of every full cell, in full-layout C order."""
    p = len(cards)
    grid = np.indices(tuple(cards) + (2,) * p)
    star = [np.where(grid[p + j] == 1, c, grid[j]) for j, c in enumerate(cards)]
    keys = np.ravel_multi_index(star, tuple(c + 1 for c in cards)).ravel()
    keys.flags.writeable = False
    return keys


def _describe(flat: int, cards) -> tuple[str, tuple]:
    idx = np.unravel_index(flat, tuple(c + 1 for c in cards))
    bits = "".join("1" if i == c else "0" for i, c in zip(idx, cards))
    values = tuple("*" if i == c else int(i) + 1 for i, c in zip(idx, cards))
    return bits, values


def _pattern_of(n_mat: int, cards) -> np.ndarray:
    idx = np.unravel_index(np.arange(n_mat), tuple(c + 1 for c in cards))
    labels = np.full(n_mat, "", dtype=object)
    for i, c in zip(idx, cards):
        labels = labels + np.where(i == c, "1", "0")
    return labels


def check_nps(full: FullTable, observed: ObservedTable, tolerance: float = DEFAULT_TOLERANCE) -> NpsReport:
    if not full.space.same_shape(observed.space):
        raise SpaceMismatch(
            f"full table over {full.space.cardinalities} vs observed table over {observed.space.cardinalities}"
        )
    cards = full.space.cardinalities
    target = observed.probs.ravel()
    implied = np.bincount(_materialized_keys(cards), weights=full.probs.ravel(), minlength=target.size)
    err = np.abs(implied - target)
    worst = int(np.argmax(err))
    labels = _pattern_of(target.size, cards)
    per_pattern = {str(pat): float(err[labels == pat].max()) for pat in sorted(set(labels))}
    return NpsReport(float(err[worst]), _describe(worst, cards), tolerance, per_pattern)


def check_stepwise_nps(step_output, step_input, tolerance: float = 1e-12) -> NpsReport:
    """Compare a step's re-marginalized output to its input, context by context.

    ``step_input`` has leading context axes and ``n`` materialized block
    axes; ``step_output`` has the same context axes, ``n`` value axes and
    ``n`` indicator axes. Contexts whose input has no mass are skipped.
    """
    g = np.asarray(step_input, dtype=float)
    h = np.asarray(step_output, dtype=float)
    n = h.ndim - g.ndim
    if n < 1 or g.ndim < n:
        raise SignatureMismatch(f"cannot pair output of shape {h.shape} with input of shape {g.shape}")
    nl = g.ndim - n
    cards = tuple(s - 1 for s in g.shape[nl:])
    if h.shape[:nl] != g.shape[:nl] or h.shape[nl:] != cards + (2,) * n:
        raise SignatureMismatch(f"output shape {h.shape} does not match input shape {g.shape}")
    n_ctx = int(np.prod(g.shape[:nl], dtype=int))
    n_mat = int(np.prod(g.shape[nl:], dtype=int))
    keys = _materialized_keys(tuple(cards))
    gi = g.reshape(n_ctx, n_mat)
    ho = h.reshape(n_ctx, keys.size)
    remarg = np.zeros((n_mat, n_ctx))
    np.add.at(remarg, keys, ho.T)
    err = np.abs(remarg.T - gi)
    err[gi.sum(axis=1) <= 0] = 0.0
    if not err.size:
        return NpsReport(0.0, None, tolerance)
    flat = int(np.argmax(err))
    ctx, cell = divmod(flat, n_mat)
    pat, values = _describe(cell, cards)
    ctx_idx = tuple(int(i) + 1 for i in np.unravel_index(ctx, g.shape[:nl])) if nl else ()
    labels = _pattern_of(n_mat, cards)
    per_pattern = {str(p): float(err[:, labels == p].max()) for p in sorted(set(labels))}
    return NpsReport(float(err.flat[flat]), (pat, ctx_idx + values), tolerance, per_pattern)
