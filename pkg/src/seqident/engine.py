"""Sequential block-wise identification of a full-data distribution.

Step k turns ``f(X*_k | ctx)`` into ``f(X_k, M_k | ctx)`` with the block's
assumption, where ``ctx`` is every identified value, the carried indicators
and the still-materialized later variables. After each step but the last,
the indicators not carried forward are factored out and stored; the final
table multiplies them back in, evaluating each stored factor at the
materialized tail implied by ``(x, m)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assumptions import StepStats, apply_step
from .errors import IdentificationError, PlanInvalid, SignatureMismatch
from .plan import IdentPlan, check_permutation, validate_plan
from .tables import (
    FullTable,
    ObservedTable,
    StageDistribution,
    ZeroCellPolicy,
    study_marginal,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StageFactor:
    """Stored conditional f(M_S | X_{<=k}, M_R, X*_{>k}) from step ``stage``.

    Layout as a StageDistribution whose indicator axes are ``S | R`` (sorted);
    the array sums to 1 over the ``factored`` indicator axes.
    """

    stage: int
    factored: tuple[int, ...]
    carried: tuple[int, ...]
    identified: tuple[int, ...]
    indicators: tuple[int, ...]
    probs: np.ndarray = field(repr=False)


@dataclass
class IdentResult:
    final: FullTable
    study: np.ndarray
    stage_factors: list[StageFactor]
    final_stage: StageDistribution
    stage_trace: list[StageDistribution] = field(default_factory=list)
    # per step: contexts with zero observed mass (uniform fill, zero weight)
    zero_contexts: list[int] = field(default_factory=list)
    # per step: cells filled under ZeroCellPolicy.UNIFORM
    filled_cells: list[int] = field(default_factory=list)
    em_iterations: list[int] = field(default_factory=list)
    em_residual: list[float] = field(default_factory=list)
    plan: IdentPlan | None = None


def _label(space, kind, j):
    name = space.variable_name(j)
    return {"x": name, "x*": f"{name}*", "m": f"M[{name}]"}[kind]


def run_sequential(observed: ObservedTable, plan: IdentPlan, *, policy=None, backend=None) -> IdentResult:
    report = validate_plan(plan, observed.space)
    if not report.ok:
        raise PlanInvalid(report.violations)
    space = observed.space
    p = space.p
    policy = ZeroCellPolicy(policy or plan.zero_cell_policy)
    blocks = plan.blocks
    K = len(blocks)

    stage = np.array(observed.probs)
    identified: list[int] = []
    indicators: list[int] = []
    factors: list[StageFactor] = []
    trace: list[StageDistribution] = []
    diag: dict[str, list] = {"zero_contexts": [], "filled_cells": [], "em_iterations": [], "em_residual": []}

    for k, (block, step) in enumerate(zip(blocks, plan.steps)):
        nb = len(block)
        ctx_axes = [a for a in range(stage.ndim) if a not in block]
        arr = np.transpose(stage, ctx_axes + list(block))
        ctx_mass = arr.sum(axis=tuple(range(len(ctx_axes), arr.ndim)))
        empty = ctx_mass <= 0
        sel = (Ellipsis,) + (None,) * nb
        cond = np.divide(arr, ctx_mass[sel], out=np.zeros(arr.shape), where=~empty[sel])
        n_block_cells = int(np.prod(arr.shape[len(ctx_axes):]))
        # undefined conditionals: uniform, multiplied by zero mass below
        cond[empty] = 1.0 / n_block_cells

        stats = StepStats()
        try:
            h = apply_step(step, cond, nb, policy, stats=stats, backend=backend)
        except IdentificationError as exc:
            ident = set(identified)
            ctx_names = [
                _label(space, "x" if a in ident else "x*", a) if a < p else _label(space, "m", indicators[a - p])
                for a in ctx_axes
            ]
            names = ",".join(space.variable_name(j) for j in block)
            raise exc.with_context(
                f"step {k + 1} ({step.kind.value} on block {{{names}}}, context axes ({', '.join(ctx_names)}))"
            ) from None
        diag["zero_contexts"].append(int(empty.sum()))
        diag["filled_cells"].append(stats.filled_cells)
        diag["em_iterations"].append(stats.em_iterations)
        diag["em_residual"].append(stats.em_residual)

        joint = h * ctx_mass[(Ellipsis,) + (None,) * (2 * nb)]
        labels = [("x", a) if a < p else ("m", indicators[a - p]) for a in ctx_axes]
        labels += [("x", j) for j in block] + [("m", j) for j in block]
        new_ind = sorted(set(indicators) | set(block))
        target = [("x", j) for j in range(p)] + [("m", j) for j in new_ind]
        joint = joint.transpose([labels.index(t) for t in target])
        identified += block

        if plan.snapshots:
            trace.append(StageDistribution(space, k + 1, tuple(identified), tuple(new_ind), joint))

        if k < K - 1:
            carried = sorted(plan.carry.sets[k])
            factored = [j for j in new_ind if j not in plan.carry.sets[k]]
            s_axes = tuple(p + new_ind.index(j) for j in factored)
            denom = joint.sum(axis=s_axes, keepdims=True)
            f = np.divide(joint, denom, out=np.zeros(joint.shape), where=denom > 0)
            f = np.where(denom > 0, f, 0.5 ** len(factored))
            factors.append(StageFactor(k + 1, tuple(factored), tuple(carried), tuple(identified), tuple(new_ind), f))
            stage = joint.sum(axis=s_axes) if s_axes else joint
            indicators = carried
        else:
            stage = joint
            indicators = new_ind

    final_stage = StageDistribution(space, K, tuple(identified), tuple(indicators), stage)
    final = assemble_full(final_stage, factors)
    if any(diag["zero_contexts"]):
        log.info("contexts with zero observed mass per step: %s", diag["zero_contexts"])
    return IdentResult(final, study_marginal(final), factors, final_stage, trace, plan=plan, **diag)


def _open_grids(space):
    p = space.p
    nd = 2 * p
    xg, mg = [], []
    for j, c in enumerate(space.cardinalities):
        shape = [1] * nd
        shape[j] = c
        xg.append(np.arange(c).reshape(shape))
        shape = [1] * nd
        shape[p + j] = 2
        mg.append(np.arange(2).reshape(shape))
    return xg, mg


def assemble_full(final_stage: StageDistribution, stage_factors: Sequence[StageFactor]) -> FullTable:
    """Multiply the last stage by every stored indicator factor."""
    space = final_stage.space
    p = space.p
    if sorted(final_stage.identified) != list(range(p)):
        raise SignatureMismatch("final stage must have every variable identified")
    seen = list(final_stage.indicators)
    for f in stage_factors:
        if sorted(set(f.factored) | set(f.carried)) != list(f.indicators):
            raise SignatureMismatch(f"factor of stage {f.stage}: indicators do not split into S and R")
        seen += f.factored
    if sorted(seen) != list(range(p)):
        raise SignatureMismatch(
            "final indicators and factored sets must partition all indicators, got "
            + str(sorted(j + 1 for j in seen))
        )

    xg, mg = _open_grids(space)
    out = final_stage.probs[tuple(xg) + tuple(mg[j] for j in final_stage.indicators)]
    for f in stage_factors:
        ident = set(f.identified)
        idx = []
        for j, c in enumerate(space.cardinalities):
            # materialized tail: x_j when observed, the placeholder when missing
            idx.append(xg[j] if j in ident else np.where(mg[j] == 1, c, xg[j]))
        idx += [mg[j] for j in f.indicators]
        out = out * f.probs[tuple(idx)]
    return FullTable(space, np.broadcast_to(out, space.full_shape))


def reorder_variables(observed: ObservedTable, permutation: Sequence[int]) -> ObservedTable:
    """Relabel variables: new variable ``i`` is old variable ``permutation[i]`` (0-based)."""
    perm = check_permutation(permutation, observed.space.p)
    return ObservedTable(observed.space.permuted(perm), np.transpose(observed.probs, perm))
