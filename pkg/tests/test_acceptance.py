"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""

import itertools
import time

import numpy as np
import pytest
from conftest import DATA, mcar_table, random_observed, random_plan
from oracles import group_permutation_violation, odds_ratio_deviation

from seqident import presets
from seqident.assumptions import step_icin_pair
from seqident.closed_form import closed_form_example1, closed_form_example2
from seqident.engine import run_sequential
from seqident.io import read_counts
from seqident.plan import BlockPartition
from seqident.sensitivity import (
    DirichletPrior,
    load_suite,
    pooled_sd_separation,
    run_suite,
    sample_posterior,
)
from seqident.tables import CategorySpace, linf, observed_from_full


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {n}: {'PASS' if ok else 'FAIL'} {detail}")
    return emit


def test_criterion_1_global_nps(report):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        p = int(rng.integers(2, 4))
        obs = random_observed(rng, rng.integers(2, 4, size=p))
        res = run_sequential(obs, random_plan(rng, p))
        worst = max(worst, linf(observed_from_full(res.final), obs))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 60
    report(1, ok, f"200 random plans, max L-inf {worst:.3g} (<= 1e-10), {elapsed:.1f} s (< 60 s)")
    assert worst <= 1e-10
    assert elapsed < 60


def test_criterion_2_closed_form_equivalence(report):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        obs = random_observed(rng, rng.integers(2, 4, size=2))
        worst = max(worst,
                    linf(run_sequential(obs, presets.example1_plan()).final, closed_form_example1(obs).full),
                    linf(run_sequential(obs, presets.example2_plan()).final, closed_form_example2(obs).full))
    report(2, worst <= 1e-12, f"100 tables, max L-inf vs closed forms {worst:.3g} (<= 1e-12)")
    assert worst <= 1e-12


def test_criterion_3_mcar_collapse(report):
    obs = mcar_table()
    plans = {
        "Example 1": presets.example1_plan(),
        "Example 2": presets.example2_plan(),
        "CCMV": presets.pmm_plan(2),
        "group permutation (1 then 2)": presets.group_permutation_plan(BlockPartition.unit(2)),
        "group permutation (2 then 1)": presets.group_permutation_plan(BlockPartition.unit(2), [1, 0]),
    }
    errors = {name: abs(run_sequential(obs, plan).study[0, 0] - 0.42) for name, plan in plans.items()}
    worst = max(errors.values())
    report(3, worst <= 1e-12, f"P(X1=1,X2=1) = 0.42 under {len(plans)} plans, max error {worst:.3g} (<= 1e-12)")
    assert worst <= 1e-12, errors


def test_criterion_4_order_sensitivity(report):
    rng = np.random.default_rng(4)
    gaps = []
    for _ in range(50):
        obs = random_observed(rng, rng.integers(2, 4, size=2))
        a = run_sequential(obs, presets.example1_plan(first=0)).study
        b = run_sequential(obs, presets.example1_plan(first=1)).study
        gaps.append(linf(a, b))
    ok = max(gaps) > 1e-6
    report(4, ok, f"{sum(g > 1e-6 for g in gaps)}/50 tables order-sensitive, largest gap {max(gaps):.3g} (> 1e-6)")
    assert ok


def test_criterion_5_icin_odds_ratios(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(50):
        ca, cb = (int(c) for c in rng.integers(2, 4, size=2))
        g = rng.random((ca + 1, cb + 1)) + 0.02
        h = step_icin_pair(g / g.sum())  # axes: X_a, X_b, M_a, M_b
        worst = max(worst, odds_ratio_deviation(h, 0, 2), odds_ratio_deviation(h, 1, 3))
    report(5, worst <= 1e-10, f"50 pair inputs, max |OR - 1| {worst:.3g} (<= 1e-10)")
    assert worst <= 1e-10


def test_criterion_6_group_permutation(report):
    rng = np.random.default_rng(6)
    worst = 0.0
    cases = 0
    for cards in itertools.product((2, 3), repeat=3):
        for order in ([0, 1, 2], [2, 0, 1]):
            obs = random_observed(rng, cards)
            res = run_sequential(obs, presets.group_permutation_plan(BlockPartition.unit(3), order))
            worst = max(worst, group_permutation_violation(res.final.probs, [[j] for j in order]))
            cases += 1
    report(6, worst <= 1e-10, f"{cases} tables, p = 3 unit blocks, max factorization error {worst:.3g} (<= 1e-10)")
    assert worst <= 1e-10


def test_criterion_7_posterior_sampling(report):
    space = CategorySpace((2, 2, 2))
    prior = DirichletPrior.symmetric(space)
    start = time.perf_counter()
    draws = sample_posterior(None, prior, 5000, seed=7)
    elapsed = time.perf_counter() - start
    X = np.array([d.probs.ravel() for d in draws])
    assert X.shape == (5000, 27) and np.all(prior.concentration == 1 / 27)
    z = np.abs(X.mean(axis=0) - 1 / 27) / (X.std(axis=0, ddof=1) / np.sqrt(len(X)))
    again = sample_posterior(None, prior, 5000, seed=7)
    identical = all(np.array_equal(a.probs, b.probs) for a, b in zip(draws, again))
    ok = z.max() <= 3 and identical and elapsed < 30
    report(7, ok, f"27 cells, largest |mean - 1/27| {z.max():.2f} SE (<= 3), "
                  f"reruns identical {identical}, {elapsed:.1f} s (< 30 s)")
    assert z.max() <= 3
    assert identical
    assert elapsed < 30


def test_criterion_8_sensitivity_pipeline(report):
    counts = read_counts(DATA / "synthetic_survey_counts.txt")
    config = load_suite(DATA / "suite_six.json", counts.space)
    start = time.perf_counter()
    draws = sample_posterior(counts, DirichletPrior.symmetric(counts.space, config.prior_alpha), 5000, seed=8)
    sd = run_suite(draws, config.suite, config.estimands)
    elapsed = time.perf_counter() - start
    names = list(config.suite.mechanisms)
    checks = [c for m in names for c in sd.spot_checks[m]]
    spot_ok = bool(checks) and all(c["passed"] and c["max_abs_error"] <= 1e-10 for c in checks)
    complete = all(sd.failure_count(m) == 0 for m in names)
    best = max((pooled_sd_separation(sd, e, a, b), e, a, b)
               for e in sd.estimands for a, b in itertools.combinations(names, 2))
    ok = complete and spot_ok and best[0] > 2 and elapsed < 600
    report(8, ok, f"{len(names)} mechanisms x 5000 draws (ICIN unavailable: {'ICIN' in config.suite.unavailable}), "
                  f"{len(checks)} spot checks pass {spot_ok}, largest separation {best[0]:.2f} pooled SD "
                  f"({best[2]} vs {best[3]} on {best[1]}) (> 2), {elapsed:.0f} s (< 600 s)")
    assert complete
    assert spot_ok
    assert best[0] > 2
    assert elapsed < 600
