"""Ready-made identification plans."""

from __future__ import annotations

from typing import Sequence

from .assumptions import AssumptionStep
from .errors import MechanismUnavailable
from .plan import BlockPartition, IdentPlan


def _blocks_of(partition: BlockPartition, order: Sequence[int] | None) -> list[list[int]]:
    order = list(range(partition.p)) if order is None else list(order)
    return [[order[i] for i in partition.positions(k)] for k in range(partition.K)]


def group_permutation_plan(partition: BlockPartition, order: Sequence[int] | None = None) -> IdentPlan:
    """Conditional MAR per block, nothing carried: group permutation missingness.

    Block k's indicators depend on the earlier blocks' values and on what is
    observed in block k and later.
    """
    return IdentPlan.from_blocks(_blocks_of(partition, order), name="group-permutation")


def maximal_carry_plan(partition: BlockPartition, steps=None, order=None) -> IdentPlan:
    """Every indicator carried forward (all ``S_k`` empty)."""
    blocks = _blocks_of(partition, order)
    carry, acc = [], set()
    for b in blocks[:-1]:
        acc |= set(b)
        carry.append(sorted(acc))
    return IdentPlan.from_blocks(blocks, carry=carry, steps=steps, name="maximal-carry")


def empty_carry_plan(partition: BlockPartition, steps=None, order=None) -> IdentPlan:
    """No indicator carried forward (``S_k`` = current block)."""
    return IdentPlan.from_blocks(_blocks_of(partition, order), steps=steps, name="empty-carry")


def example1_plan(first: int = 0) -> IdentPlan:
    """Two unit blocks, the first block's indicator carried forward."""
    second = 1 - first
    return IdentPlan.from_blocks([[first], [second]], carry=[[first]], name="example-1")


def example2_plan(first: int = 0) -> IdentPlan:
    """Two unit blocks, nothing carried (permutation missingness)."""
    second = 1 - first
    return IdentPlan.from_blocks([[first], [second]], name="example-2")


def ignorable_plan(p: int) -> IdentPlan:
    return IdentPlan.from_blocks([list(range(p))], name="ignorable")


def pmm_plan(p: int) -> IdentPlan:
    return IdentPlan.from_blocks([list(range(p))], steps=[AssumptionStep.ccmv()], name="pmm-ccmv")


def icin_plan(p: int) -> IdentPlan:
    if p != 2:
        raise MechanismUnavailable(
            f"ICIN over all {p} variables needs the general ICIN solution, which is only available "
            "here for two variables; use a partially ignorable plan instead"
        )
    return IdentPlan.from_blocks([[0, 1]], steps=[AssumptionStep.icin()], name="icin")


def pim_plan(ignorable: int, p: int = 3) -> IdentPlan:
    """Partially ignorable: MAR for ``ignorable`` (0-based), then ICIN for the other pair."""
    if p != 3:
        raise MechanismUnavailable("the partially ignorable preset is defined for three variables")
    rest = [j for j in range(3) if j != ignorable]
    return IdentPlan.from_blocks(
        [[ignorable], rest], steps=[AssumptionStep.mar(), AssumptionStep.icin()], name=f"pim-{ignorable + 1}"
    )
