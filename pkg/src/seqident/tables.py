"""Dense categorical probability tables indexed by missingness pattern.

Two layouts are used throughout the package:

* materialized layout, shape ``(c_1 + 1, ..., c_p + 1)``: axis ``j`` holds the
  observed value of variable ``j`` (0-based) or, at index ``c_j``, the
  placeholder ``*``. One array entry per observed-data cell; the pattern of a
  cell is read off which coordinates sit on the placeholder.
* full layout, shape ``(c_1, ..., c_p, 2, ..., 2)``: values first, then the
  missingness indicators ``M_1..M_p`` (1 = missing).

Category values are 1-based in files and reports and 0-based in arrays.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import AllZeroMass, SpaceMismatch, TableFormatError, ZeroConditioningEvent

log = logging.getLogger(__name__)

TAU_NORM = 1e-12
MAX_FULL_CELLS = 1 << 28
MISSING = "*"


class ZeroCellPolicy(str, Enum):
    """What an assumption step does when a quantity it divides by is zero."""

    ERROR = "error"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class CategorySpace:
    cardinalities: tuple[int, ...]
    names: tuple[str, ...] | None = None
    labels: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self):
        cards = tuple(int(c) for c in self.cardinalities)
        object.__setattr__(self, "cardinalities", cards)
        if not cards:
            raise ValueError("a category space needs at least one variable")
        if any(c < 1 for c in cards):
            raise ValueError(f"cardinalities must be positive, got {cards}")
        n_full = math.prod(cards) * 2 ** len(cards)
        if n_full > MAX_FULL_CELLS:
            raise ValueError(f"full table would have {n_full} cells (limit {MAX_FULL_CELLS})")
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))
            if len(self.names) != len(cards):
                raise ValueError("one name per variable")
        if self.labels is not None:
            labels = tuple(tuple(lab) for lab in self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != len(cards) or any(len(l) != c for l, c in zip(labels, cards)):
                raise ValueError("labels must give one name per category of every variable")
        if self.degenerate:
            log.warning("variables %s have a single category", [j + 1 for j in self.degenerate])

    @property
    def p(self) -> int:
        return len(self.cardinalities)

    @property
    def degenerate(self) -> tuple[int, ...]:
        return tuple(j for j, c in enumerate(self.cardinalities) if c == 1)

    @property
    def materialized_shape(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cardinalities)

    @property
    def full_shape(self) -> tuple[int, ...]:
        return self.cardinalities + (2,) * self.p

    def variable_name(self, j: int) -> str:
        return self.names[j] if self.names else f"X{j + 1}"

    def patterns(self) -> Iterator["MissPattern"]:
        for bits in itertools.product((0, 1), repeat=self.p):
            yield MissPattern(bits)

    def permuted(self, order: Sequence[int]) -> "CategorySpace":
        return CategorySpace(
            tuple(self.cardinalities[j] for j in order),
            None if self.names is None else tuple(self.names[j] for j in order),
            None if self.labels is None else tuple(self.labels[j] for j in order),
        )

    def same_shape(self, other: "CategorySpace") -> bool:
        return self.cardinalities == other.cardinalities


@dataclass(frozen=True)
class MissPattern:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"pattern bits must be 0/1, got {bits}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, s: str) -> "MissPattern":
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"pattern must be a string over {{0,1}}, got {s!r}")
        return cls(tuple(int(ch) for ch in s))

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def complement(self) -> tuple[int, ...]:
        return tuple(1 - b for b in self.bits)

    @property
    def missing(self) -> tuple[int, ...]:
        return tuple(j for j, b in enumerate(self.bits) if b)

    @property
    def observed(self) -> tuple[int, ...]:
        return tuple(j for j, b in enumerate(self.bits) if not b)

    def materialized_index(self, space: CategorySpace) -> tuple:
        """Index selecting this pattern's block out of a materialized array."""
        return tuple(c if b else slice(0, c) for c, b in zip(space.cardinalities, self.bits))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _normalized(a: np.ndarray) -> np.ndarray:
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("probabilities must be finite and nonnegative")
    total = a.sum()
    if total <= 0:
        raise AllZeroMass("table has no positive mass")
    # already normalized: keep the cells bit-for-bit
    if abs(total - 1.0) <= TAU_NORM:
        return a
    return a / total


@dataclass(frozen=True)
class ObservedTable:
    """Observed-data distribution f(X*) in materialized layout.

    Raw nonnegative weights are accepted and normalized on construction.
    """

    space: CategorySpace
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.probs, dtype=float)
        if a.shape != self.space.materialized_shape:
            raise TableFormatError(
                f"observed table shape {a.shape} does not match {self.space.materialized_shape}"
            )
        object.__setattr__(self, "probs", _frozen(_normalized(a)))

    @classmethod
    def from_blocks(cls, space: CategorySpace, blocks: Mapping) -> "ObservedTable":
        """Build from ``{pattern: array over observed variables}``; absent patterns are zero."""
        a = np.zeros(space.materialized_shape)
        for pat, block in blocks.items():
            pat = pat if isinstance(pat, MissPattern) else MissPattern(tuple(pat))
            a[pat.materialized_index(space)] = block
        return cls(space, a)

    def block(self, pattern) -> np.ndarray:
        pattern = pattern if isinstance(pattern, MissPattern) else MissPattern(tuple(pattern))
        return self.probs[pattern.materialized_index(self.space)]

    def pattern_mass(self, pattern) -> float:
        return float(self.block(pattern).sum())

    def cells(self) -> Iterator[tuple[MissPattern, tuple, float]]:
        """Yield ``(pattern, 1-based values with '*', probability)`` for every cell."""
        for idx in np.ndindex(*self.probs.shape):
            bits = tuple(int(i == c) for i, c in zip(idx, self.space.cardinalities))
            values = tuple(MISSING if b else i + 1 for i, b in zip(idx, bits))
            yield MissPattern(bits), values, float(self.probs[idx])


@dataclass(frozen=True)
class FullTable:
    """Full-data distribution f(X, M) in full layout."""

    space: CategorySpace
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.probs, dtype=float)
        if a.shape != self.space.full_shape:
            raise TableFormatError(f"full table shape {a.shape} does not match {self.space.full_shape}")
        object.__setattr__(self, "probs", _frozen(_normalized(a)))

    def slice(self, pattern) -> np.ndarray:
        pattern = pattern if isinstance(pattern, MissPattern) else MissPattern(tuple(pattern))
        return self.probs[(Ellipsis,) + pattern.bits]

    def cells(self) -> Iterator[tuple[MissPattern, tuple, float]]:
        p = self.space.p
        for idx in np.ndindex(*self.probs.shape):
            yield MissPattern(idx[p:]), tuple(i + 1 for i in idx[:p]), float(self.probs[idx])


@dataclass(frozen=True)
class StageDistribution:
    """Intermediate density f_{A<=k}(X_{<=k}, M_carried, X*_{>k}).

    Axis ``j < p`` is variable ``j``: size ``c_j`` once the variable has been
    identified, ``c_j + 1`` (materialized) before. The remaining axes are the
    indicators listed in ``indicators`` (sorted variable ids), size 2 each.
    """

    space: CategorySpace
    stage: int
    identified: tuple[int, ...]
    indicators: tuple[int, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.probs, dtype=float)
        if a.shape != self.expected_shape():
            raise TableFormatError(f"stage array shape {a.shape} does not match {self.expected_shape()}")
        object.__setattr__(self, "probs", _frozen(_normalized(a)))

    def expected_shape(self) -> tuple[int, ...]:
        ident = set(self.identified)
        xs = tuple(c if j in ident else c + 1 for j, c in enumerate(self.space.cardinalities))
        return xs + (2,) * len(self.indicators)


Table = ObservedTable | FullTable | StageDistribution


def normalize(table):
    """Rescale a table (or raw array) so its entries sum to 1."""
    if isinstance(table, (ObservedTable, FullTable, StageDistribution)):
        return replace(table, probs=_normalized(np.asarray(table.probs)))
    return _normalized(np.asarray(table, dtype=float))


def observed_from_full(full: FullTable) -> ObservedTable:
    """Sum each pattern slice over its missing coordinates."""
    space = full.space
    out = np.zeros(space.materialized_shape)
    for pat in space.patterns():
        sl = full.slice(pat)
        if pat.missing:
            sl = sl.sum(axis=pat.missing)
        out[pat.materialized_index(space)] = sl
    return ObservedTable(space, out)


def embed_complete_cases(observed: ObservedTable) -> FullTable:
    """Inverse of ``observed_from_full`` for tables with no missing data."""
    space = observed.space
    complete = MissPattern((0,) * space.p)
    if observed.pattern_mass(complete) < 1.0 - TAU_NORM:
        raise ValueError("table has mass outside the all-observed pattern")
    full = np.zeros(space.full_shape)
    full[(Ellipsis,) + complete.bits] = observed.block(complete)
    return FullTable(space, full)


def study_marginal(full: FullTable) -> np.ndarray:
    """Distribution of X implied by a full table (indicators summed out)."""
    p = full.space.p
    return full.probs.sum(axis=tuple(range(p, 2 * p)))


def condition(table, given: Mapping[int, int], *, tol: float = 0.0) -> np.ndarray:
    """Slice ``table`` at ``{axis: index}`` (0-based) and renormalize.

    Raises ZeroConditioningEvent when the event has mass ``<= tol``.
    """
    a = np.asarray(getattr(table, "probs", table), dtype=float)
    idx = [slice(None)] * a.ndim
    for axis, value in given.items():
        if not 0 <= axis < a.ndim or not 0 <= value < a.shape[axis]:
            raise IndexError(f"cannot condition on axis {axis} = {value} for shape {a.shape}")
        idx[axis] = value
    sl = a[tuple(idx)]
    mass = sl.sum()
    if mass <= tol:
        event = ", ".join(f"axis {k} = {v + 1}" for k, v in sorted(given.items()))
        raise ZeroConditioningEvent(f"conditioning event ({event}) has zero mass")
    return sl / mass


def linf(a, b) -> float:
    a = np.asarray(getattr(a, "probs", a))
    b = np.asarray(getattr(b, "probs", b))
    if a.shape != b.shape:
        raise SpaceMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def probability(study: np.ndarray, assignment: Mapping[int, int]) -> float:
    """Sum of study-marginal cells matching ``{variable: category}`` (0-based)."""
    idx = [slice(None)] * study.ndim
    for j, v in assignment.items():
        idx[j] = v
    return float(np.sum(study[tuple(idx)]))
