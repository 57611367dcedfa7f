from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from seqident.assumptions import AssumptionStep
from seqident.plan import IdentPlan
from seqident.tables import CategorySpace, ObservedTable

DATA = Path(__file__).resolve().parent.parent / "data"

MCAR_CELLS = {
    "00": np.array([[0.168, 0.072], [0.112, 0.048]]),
    "01": np.array([0.24, 0.16]),
    "10": np.array([0.07, 0.03]),
    "11": 0.10,
}


def mcar_table() -> ObservedTable:
    return ObservedTable.from_blocks(CategorySpace((2, 2)), MCAR_CELLS)


def random_observed(rng: np.random.Generator, cards, *, floor: float = 0.02) -> ObservedTable:
    """Strictly positive observed table with cells bounded away from zero."""
    space = CategorySpace(tuple(cards))
    w = rng.random(space.materialized_shape) + floor
    return ObservedTable(space, w)


def random_plan(rng: np.random.Generator, p: int, *, allow=("mar", "ccmv", "icin")) -> IdentPlan:
    """Random order, partition, carry sets that satisfy the nesting rule and legal steps."""
    order = [int(j) for j in rng.permutation(p)]
    cuts = sorted(int(t) for t in rng.choice(np.arange(1, p), size=rng.integers(0, p), replace=False)) if p > 1 else []
    bounds = [0] + cuts + [p]
    blocks = [order[bounds[k]:bounds[k + 1]] for k in range(len(bounds) - 1)]
    carry, prev = [], set()
    for b in blocks[:-1]:
        pool = sorted(prev | set(b))
        r = {j for j in pool if rng.random() < 0.5}
        carry.append(sorted(r))
        prev = r
    steps = []
    for b in blocks:
        kinds = [k for k in allow if k != "icin" or len(b) == 2]
        kind = kinds[rng.integers(len(kinds))]
        steps.append({"mar": AssumptionStep.mar, "ccmv": AssumptionStep.ccmv, "icin": AssumptionStep.icin}[kind]())
    return IdentPlan.from_blocks(blocks, carry=carry, steps=steps, name="random")


@pytest.fixture
def mcar():
    return mcar_table()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
