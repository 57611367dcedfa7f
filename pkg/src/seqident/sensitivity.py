"""Posterior sensitivity analysis across missingness mechanisms.

Observed-data tables are drawn from the Dirichlet posterior of a
multinomial count table; every draw is pushed through each mechanism of a
suite, and estimands are read off the identified study marginals. Draw ``i``
of every mechanism comes from the same observed table.
"""

from __future__ import annotations

import csv
import io as _io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import presets
from .engine import run_sequential
from .errors import ConfigError, MechanismUnavailable, SeqIdentError
from .io import CountTable
from .plan import IdentPlan, plan_from_dict, validate_plan
from .tables import CategorySpace, ObservedTable, ZeroCellPolicy, probability
from .verify import check_nps

log = logging.getLogger(__name__)

DEFAULT_DRAWS = 5000
DEFAULT_SPOT_CHECKS = 20
SPOT_CHECK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class DirichletPrior:
    """Concentration per observed cell, in the materialized layout."""

    space: CategorySpace
    concentration: np.ndarray

    def __post_init__(self):
        a = np.broadcast_to(np.asarray(self.concentration, dtype=float), self.space.materialized_shape).copy()
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ConfigError("Dirichlet concentrations must be finite and positive")
        a.flags.writeable = False
        object.__setattr__(self, "concentration", a)

    @classmethod
    def symmetric(cls, space: CategorySpace, alpha: float | None = None) -> "DirichletPrior":
        """Same concentration in every cell; defaults to one over the number of cells."""
        n = int(np.prod(space.materialized_shape))
        return cls(space, np.full(space.materialized_shape, 1.0 / n if alpha is None else float(alpha)))


def sample_posterior(counts: CountTable | None, prior: DirichletPrior, n_draws: int = DEFAULT_DRAWS,
                     seed: int = 0) -> list[ObservedTable]:
    """Draws from Dirichlet(prior + counts) over all observed cells jointly.

    Draw ``i`` uses its own PCG64 stream spawned from ``seed``, so results
    do not depend on how the draws are scheduled. ``counts=None`` samples
    the prior.
    """
    if n_draws < 1:
        raise ConfigError("n_draws must be at least 1")
    space = prior.space
    alpha = prior.concentration
    if counts is not None:
        if not counts.space.same_shape(space):
            raise ConfigError(f"prior over {space.cardinalities} does not match counts over {counts.space.cardinalities}")
        alpha = alpha + counts.counts
        space = counts.space
    flat = alpha.ravel()
    out = []
    for child in np.random.SeedSequence(seed).spawn(n_draws):
        g = np.random.Generator(np.random.PCG64(child)).standard_gamma(flat)
        if g.sum() <= 0:
            # tiny concentrations can underflow every gamma variate
            g = np.zeros_like(flat)
            g[np.argmax(flat)] = 1.0
        out.append(ObservedTable(space, (g / g.sum()).reshape(alpha.shape)))
    return out


@dataclass(frozen=True)
class Estimand:
    """P(X_j = v for all (j, v) in ``assignment``), 0-based indices."""

    name: str
    assignment: tuple[tuple[int, int], ...]

    def __call__(self, study: np.ndarray) -> float:
        return probability(study, dict(self.assignment))


@dataclass
class MechanismSuite:
    """Named mechanisms sharing one category space.

    ``unavailable`` maps names of requested mechanisms that cannot be built
    for this space to the reason.
    """

    space: CategorySpace
    mechanisms: dict[str, IdentPlan] = field(default_factory=dict)
    unavailable: dict[str, str] = field(default_factory=dict)

    def add(self, name: str, plan: IdentPlan) -> None:
        if name in self.mechanisms or name in self.unavailable:
            raise ConfigError(f"duplicate mechanism name {name!r}")
        report = validate_plan(plan, self.space)
        if not report.ok:
            raise ConfigError(f"mechanism {name!r}: " + "; ".join(report.violations))
        self.mechanisms[name] = plan

    def add_preset(self, name: str, preset: str, **kw) -> None:
        try:
            plan = build_preset(preset, self.space.p, **kw)
        except MechanismUnavailable as exc:
            if name in self.mechanisms or name in self.unavailable:
                raise ConfigError(f"duplicate mechanism name {name!r}") from None
            self.unavailable[name] = str(exc)
            log.warning("mechanism %s unavailable: %s", name, exc)
            return
        self.add(name, plan)

    @classmethod
    def six_mechanisms(cls, space: CategorySpace) -> "MechanismSuite":
        """Ignorable, pattern mixture (CCMV), ICIN and one partially ignorable entry per variable."""
        suite = cls(space)
        suite.add_preset("Ignorable", "ignorable")
        suite.add_preset("PMM", "pmm")
        suite.add_preset("ICIN", "icin")
        for j in range(space.p):
            suite.add_preset(f"PIM-{space.variable_name(j)}", "pim", ignorable=j)
        return suite


def build_preset(preset: str, p: int, **kw) -> IdentPlan:
    preset = preset.lower()
    if preset == "ignorable":
        return presets.ignorable_plan(p)
    if preset == "pmm":
        return presets.pmm_plan(p)
    if preset == "icin":
        return presets.icin_plan(p)
    if preset == "pim":
        if "ignorable" not in kw:
            raise ConfigError("the 'pim' preset needs 'ignorable' (the variable with ignorable missingness)")
        return presets.pim_plan(int(kw["ignorable"]), p)
    if preset in ("example1", "example2"):
        if p != 2:
            raise MechanismUnavailable(f"preset {preset!r} is defined for two variables")
        make = presets.example1_plan if preset == "example1" else presets.example2_plan
        return make(int(kw.get("first", 0)))
    raise ConfigError(f"unknown preset {preset!r}")


@dataclass
class SensitivityDraws:
    """values[mechanism][estimand] has one entry per draw; NaN marks a failed draw."""

    mechanisms: list[str]
    estimands: list[str]
    values: dict[str, dict[str, np.ndarray]]
    failures: dict[str, dict[int, str]]
    unavailable: dict[str, str]
    spot_checks: dict[str, list[dict[str, Any]]]
    n_draws: int
    seed: int | None = None
    provenance: dict[str, Any] = field(default_factory=dict)

    def failure_count(self, mechanism: str) -> int:
        return len(self.failures[mechanism])


def _spot_indices(n_draws: int, k: int) -> list[int]:
    if k <= 0:
        return []
    return sorted(set(np.linspace(0, n_draws - 1, min(k, n_draws)).round().astype(int).tolist()))


def run_suite(draws: Sequence[ObservedTable], suite: MechanismSuite, estimands: Sequence[Estimand], *,
              spot_checks: int = DEFAULT_SPOT_CHECKS, policy: ZeroCellPolicy | str | None = None,
              seed: int | None = None, provenance: Mapping[str, Any] | None = None,
              progress: Callable[[int], None] | None = None) -> SensitivityDraws:
    """Run every mechanism on every draw.

    Identification failures are recorded per (mechanism, draw) and the
    estimands set to NaN. On ``spot_checks`` evenly spaced draws the full
    table is checked for NPS against its input draw.
    """
    if not draws:
        raise ConfigError("run_suite needs at least one draw")
    names = list(suite.mechanisms)
    est_names = [e.name for e in estimands]
    if len(set(est_names)) != len(est_names):
        raise ConfigError("estimand names must be unique")
    n = len(draws)
    values = {m: {e: np.full(n, np.nan) for e in est_names} for m in names}
    failures: dict[str, dict[int, str]] = {m: {} for m in names}
    checks: dict[str, list[dict[str, Any]]] = {m: [] for m in names}
    spot = set(_spot_indices(n, spot_checks))

    for i, obs in enumerate(draws):
        if not obs.space.same_shape(suite.space):
            raise ConfigError(f"draw {i} is over {obs.space.cardinalities}, suite over {suite.space.cardinalities}")
        for m in names:
            try:
                res = run_sequential(obs, suite.mechanisms[m], policy=policy)
            except SeqIdentError as exc:
                failures[m][i] = str(exc)
                continue
            for e in estimands:
                values[m][e.name][i] = e(res.study)
            if i in spot:
                rep = check_nps(res.final, obs, SPOT_CHECK_TOLERANCE)
                checks[m].append({"draw": i, "max_abs_error": rep.max_abs_error, "passed": rep.passed})
        if progress is not None:
            progress(i)

    for m in names:
        if failures[m]:
            log.warning("mechanism %s failed on %d of %d draws", m, len(failures[m]), n)
    return SensitivityDraws(names, est_names, values, failures, dict(suite.unavailable), checks, n, seed,
                            dict(provenance or {}))


def summarize(sd: SensitivityDraws) -> dict[str, Any]:
    """Per mechanism and estimand: mean, sd and 2.5/50/97.5 percentiles over valid draws."""
    out: dict[str, Any] = {"n_draws": sd.n_draws, "seed": sd.seed, "mechanisms": {}, "unavailable": sd.unavailable}
    for m in sd.mechanisms:
        stats = {}
        for e in sd.estimands:
            v = sd.values[m][e]
            ok = v[~np.isnan(v)]
            if ok.size:
                q = np.percentile(ok, [2.5, 50, 97.5])
                sd_ = float(ok.std(ddof=1)) if ok.size > 1 else 0.0
                stats[e] = {"mean": float(ok.mean()), "sd": sd_, "q2.5": float(q[0]), "q50": float(q[1]),
                            "q97.5": float(q[2]), "n_valid": int(ok.size)}
            else:
                stats[e] = {"mean": None, "sd": None, "q2.5": None, "q50": None, "q97.5": None, "n_valid": 0}
        checks = sd.spot_checks[m]
        out["mechanisms"][m] = {
            "estimands": stats,
            "n_failed": sd.failure_count(m),
            "failures": {str(i): msg for i, msg in sorted(sd.failures[m].items())[:10]},
            "nps_spot_checks": {
                "n": len(checks),
                "all_passed": all(c["passed"] for c in checks),
                "max_abs_error": max((c["max_abs_error"] for c in checks), default=0.0),
            },
        }
    return out


def pooled_sd_separation(sd: SensitivityDraws, estimand: str, a: str, b: str) -> float:
    """|mean_a - mean_b| in units of the pooled standard deviation."""
    va = sd.values[a][estimand]
    vb = sd.values[b][estimand]
    va, vb = va[~np.isnan(va)], vb[~np.isnan(vb)]
    pooled = np.sqrt((va.var(ddof=1) + vb.var(ddof=1)) / 2)
    diff = abs(va.mean() - vb.mean())
    if pooled == 0:
        return 0.0 if diff == 0 else float("inf")
    return float(diff / pooled)


def plot_records(sd: SensitivityDraws) -> str:
    """Flat CSV of (mechanism, draw, estimand, value); failed draws are written as 'nan'."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mechanism", "draw", "estimand", "value"])
    for m in sd.mechanisms:
        for e in sd.estimands:
            for i, v in enumerate(sd.values[m][e]):
                w.writerow([m, i, e, format(float(v), ".17g")])
    return buf.getvalue()


# -- suite files ------------------------------------------------------------

def _resolve_variable(space: CategorySpace, ref) -> int:
    if isinstance(ref, str) and not ref.isdigit():
        if space.names and ref in space.names:
            return space.names.index(ref)
        raise ConfigError(f"unknown variable {ref!r}")
    j = int(ref) - 1
    if not 0 <= j < space.p:
        raise ConfigError(f"variable {ref} out of range 1..{space.p}")
    return j


def _resolve_category(space: CategorySpace, j: int, ref) -> int:
    c = space.cardinalities[j]
    if isinstance(ref, str) and not ref.isdigit():
        labels = space.labels[j] if space.labels else ()
        if ref in labels:
            return labels.index(ref)
        raise ConfigError(f"unknown category {ref!r} for variable {space.variable_name(j)}")
    v = int(ref) - 1
    if not 0 <= v < c:
        raise ConfigError(f"category {ref} out of range 1..{c} for variable {space.variable_name(j)}")
    return v


def estimand_from_dict(space: CategorySpace, d: Mapping[str, Any]) -> Estimand:
    """``{"name": ..., "cells": {variable: category}}`` with 1-based numbers or names/labels."""
    try:
        name = str(d["name"])
        cells = d["cells"]
    except (KeyError, TypeError):
        raise ConfigError("estimand needs 'name' and 'cells'") from None
    assignment = []
    for var, cat in dict(cells).items():
        j = _resolve_variable(space, var)
        assignment.append((j, _resolve_category(space, j, cat)))
    if not assignment:
        raise ConfigError(f"estimand {name!r} has no cells")
    return Estimand(name, tuple(sorted(assignment)))


@dataclass
class SuiteConfig:
    suite: MechanismSuite
    estimands: list[Estimand]
    prior_alpha: float | None = None


def suite_from_dict(space: CategorySpace, d: Mapping[str, Any]) -> SuiteConfig:
    """Suite file layout::

        {"mechanisms": [{"name": "Ignorable", "preset": "ignorable"},
                        {"name": "PIM-A", "preset": "pim", "ignorable": 3},
                        {"name": "mine", "plan": {...plan config...}}],
         "estimands": [{"name": "P(A=no)", "cells": {"3": 2}}],
         "prior": 0.037}

    Variable numbers are 1-based here as in plan files. ``"mechanisms":
    "six"`` expands to the standard six-mechanism suite.
    """
    if not isinstance(d, Mapping):
        raise ConfigError("suite config must be a JSON object")
    mechs = d.get("mechanisms")
    if mechs == "six":
        suite = MechanismSuite.six_mechanisms(space)
    elif isinstance(mechs, list) and mechs:
        suite = MechanismSuite(space)
        for entry in mechs:
            if not isinstance(entry, Mapping) or "name" not in entry:
                raise ConfigError("each mechanism needs a 'name'")
            name = str(entry["name"])
            if "plan" in entry:
                suite.add(name, plan_from_dict(entry["plan"]))
            elif "preset" in entry:
                kw = {k: v for k, v in entry.items() if k not in ("name", "preset")}
                for key in ("ignorable", "first"):
                    if key in kw:
                        kw[key] = _resolve_variable(space, kw[key])
                suite.add_preset(name, str(entry["preset"]), **kw)
            else:
                raise ConfigError(f"mechanism {name!r} needs 'plan' or 'preset'")
    else:
        raise ConfigError("suite config needs a nonempty 'mechanisms' list or \"six\"")
    ests = d.get("estimands")
    if not isinstance(ests, list) or not ests:
        raise ConfigError("suite config needs a nonempty 'estimands' list")
    prior = d.get("prior")
    if prior is not None:
        try:
            prior = float(prior)
        except (TypeError, ValueError):
            raise ConfigError("'prior' must be a number") from None
    return SuiteConfig(suite, [estimand_from_dict(space, e) for e in ests], prior)


def load_suite(path, space: CategorySpace) -> SuiteConfig:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return suite_from_dict(space, d)
