"""Identification plans: block order, carried indicator sets and step kinds.

Variables are identified by 0-based ids internally. A plan lists its blocks
in identification order; carry set ``R_k`` (k = 1..K-1) names the
indicators kept as conditioning information for later steps, and
``S_k = (block_k | R_{k-1}) - R_k`` the indicators factored out at step k.
Config files use 1-based ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .assumptions import AssumptionStep, StepKind
from .errors import ConfigError, InvalidPermutation
from .tables import CategorySpace, ZeroCellPolicy


@dataclass(frozen=True)
class BlockPartition:
    """Boundaries ``0 = t_0 < t_1 < ... < t_K = p`` over the identification order."""

    boundaries: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(int(t) for t in self.boundaries))

    @property
    def K(self) -> int:
        return len(self.boundaries) - 1

    @property
    def p(self) -> int:
        return self.boundaries[-1]

    def problems(self) -> list[str]:
        t = self.boundaries
        out = []
        if len(t) < 2:
            out.append("a partition needs at least one block (K >= 1)")
            return out
        if t[0] != 0:
            out.append(f"first boundary must be 0, got {t[0]}")
        if any(b <= a for a, b in zip(t, t[1:])):
            out.append(f"boundaries must be strictly increasing, got {list(t)}")
        return out

    def positions(self, k: int) -> range:
        """Positions (in identification order) of block ``k`` (0-based)."""
        return range(self.boundaries[k], self.boundaries[k + 1])

    @classmethod
    def unit(cls, p: int) -> "BlockPartition":
        return cls(tuple(range(p + 1)))

    @classmethod
    def single(cls, p: int) -> "BlockPartition":
        return cls((0, p))


@dataclass(frozen=True)
class CarrySets:
    sets: tuple[frozenset[int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(int(j) for j in r) for r in self.sets))

    def factored(self, blocks: Sequence[Sequence[int]]) -> list[frozenset[int]]:
        """``S_1..S_{K-1}``."""
        out, prev = [], frozenset()
        for block, r in zip(blocks, self.sets):
            out.append((frozenset(block) | prev) - r)
            prev = r
        return out


@dataclass(frozen=True)
class IdentPlan:
    order: tuple[int, ...]
    partition: BlockPartition
    carry: CarrySets
    steps: tuple[AssumptionStep, ...]
    zero_cell_policy: ZeroCellPolicy = ZeroCellPolicy.ERROR
    snapshots: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(j) for j in self.order))
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "zero_cell_policy", ZeroCellPolicy(self.zero_cell_policy))

    @classmethod
    def from_blocks(cls, blocks, carry=None, steps=None, **kw) -> "IdentPlan":
        """Plan from explicit blocks of 0-based variable ids, e.g. ``[[2], [0, 1]]``.

        ``steps`` defaults to conditional MAR everywhere, ``carry`` to all-empty.
        """
        blocks = [tuple(b) for b in blocks]
        order = tuple(j for b in blocks for j in b)
        bounds = [0]
        for b in blocks:
            bounds.append(bounds[-1] + len(b))
        if carry is None:
            carry = [()] * max(len(blocks) - 1, 0)
        if steps is None:
            steps = [AssumptionStep.mar() for _ in blocks]
        return cls(order, BlockPartition(tuple(bounds)), CarrySets(tuple(carry)), tuple(steps), **kw)

    @property
    def p(self) -> int:
        return len(self.order)

    @property
    def K(self) -> int:
        return self.partition.K

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.order[i] for i in self.partition.positions(k)) for k in range(self.K))

    @property
    def factored(self) -> list[frozenset[int]]:
        return self.carry.factored(self.blocks)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(self.violations)


def _fmt(ids) -> str:
    return "{" + ",".join(str(j + 1) for j in sorted(ids)) + "}"


def validate_plan(plan: IdentPlan, space: CategorySpace | None = None) -> ValidationReport:
    v: list[str] = []
    p = plan.p
    if space is not None and space.p != p:
        v.append(f"plan covers {p} variables but the table has {space.p}")
    if sorted(plan.order) != list(range(p)):
        v.append(f"variable order {[j + 1 for j in plan.order]} is not a permutation of 1..{p}")
    v += plan.partition.problems()
    if plan.partition.boundaries and plan.partition.boundaries[-1] != p:
        v.append(f"last boundary must equal p = {p}, got {plan.partition.boundaries[-1]}")
    if v:
        return ValidationReport(v)

    blocks = plan.blocks
    K = len(blocks)
    if len(plan.carry.sets) != K - 1:
        v.append(f"expected {K - 1} carry sets R_1..R_{K - 1}, got {len(plan.carry.sets)}")
    prev: frozenset[int] = frozenset()
    for k, r in enumerate(plan.carry.sets[: K - 1]):
        allowed = frozenset(blocks[k]) | prev
        if not r <= allowed:
            v.append(
                f"R_{k + 1} = {_fmt(r)} is not a subset of block {k + 1} {_fmt(blocks[k])} united with "
                f"R_{k} = {_fmt(prev)}: indicators {_fmt(r - allowed)} were dropped earlier or are not yet identified"
            )
        prev = r
    if len(plan.steps) != K:
        v.append(f"expected one assumption step per block ({K}), got {len(plan.steps)}")
    for k, (block, step) in enumerate(zip(blocks, plan.steps)):
        if step.kind is StepKind.ICIN_PAIR:
            if len(block) != 2:
                v.append(f"step {k + 1}: ICINPair needs a block of exactly 2 variables, block {_fmt(block)} has {len(block)}")
            pair = step.params.get("pair")
            if pair is not None and sorted(pair) != sorted(block):
                v.append(f"step {k + 1}: ICIN pair {_fmt(pair)} does not match block {_fmt(block)}")
    return ValidationReport(v)


# -- config files -----------------------------------------------------------


def plan_from_dict(d: dict[str, Any]) -> IdentPlan:
    """Parse a plan config (1-based variable ids).

    Either ``blocks`` (list of lists, in identification order) or
    ``order`` + ``boundaries`` must be given.
    """
    try:
        if "blocks" in d:
            blocks = [[int(j) - 1 for j in b] for b in d["blocks"]]
            order = [j for b in blocks for j in b]
            bounds = [0]
            for b in blocks:
                bounds.append(bounds[-1] + len(b))
        else:
            order = [int(j) - 1 for j in d["order"]]
            bounds = [int(t) for t in d["boundaries"]]
        K = len(bounds) - 1
        carry = [[int(j) - 1 for j in r] for r in d.get("carry", [[]] * max(K - 1, 0))]
        raw_steps = d.get("steps", [{"kind": "ConditionalMAR"}] * K)
        steps = []
        for s in raw_steps:
            s = {"kind": s} if isinstance(s, str) else dict(s)
            kind = s.pop("kind")
            if "pair" in s:
                s["pair"] = [int(j) - 1 for j in s["pair"]]
            steps.append(AssumptionStep(StepKind(kind), s))
        return IdentPlan(
            tuple(order), BlockPartition(tuple(bounds)), CarrySets(tuple(carry)), tuple(steps),
            zero_cell_policy=ZeroCellPolicy(d.get("zero_cell_policy", "error")),
            snapshots=bool(d.get("snapshots", False)),
            name=str(d.get("name", "")),
        )
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed plan config: {exc}") from exc


def plan_to_dict(plan: IdentPlan) -> dict[str, Any]:
    steps = []
    for s in plan.steps:
        entry: dict[str, Any] = {"kind": s.kind.value}
        for key, val in s.params.items():
            entry[key] = [j + 1 for j in val] if key == "pair" else val
        steps.append(entry)
    return {
        "name": plan.name,
        "blocks": [[j + 1 for j in b] for b in plan.blocks],
        "carry": [sorted(j + 1 for j in r) for r in plan.carry.sets],
        "steps": steps,
        "zero_cell_policy": plan.zero_cell_policy.value,
        "snapshots": plan.snapshots,
    }


def load_plan(path) -> IdentPlan:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return plan_from_dict(d)


def check_permutation(perm: Sequence[int], p: int) -> tuple[int, ...]:
    perm = tuple(int(j) for j in perm)
    if sorted(perm) != list(range(p)):
        raise InvalidPermutation(f"{[j + 1 for j in perm]} is not a permutation of 1..{p}")
    return perm
