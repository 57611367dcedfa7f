import numpy as np
import pytest
from conftest import random_observed, random_plan
from hypothesis import given, settings
from hypothesis import strategies as st

from seqident.assumptions import step_conditional_mar, step_icin_pair
from seqident.closed_form import closed_form_example1
from seqident.engine import run_sequential
from seqident.errors import SignatureMismatch, SpaceMismatch
from seqident.tables import CategorySpace, FullTable, observed_from_full
from seqident.verify import check_nps, check_stepwise_nps


def test_closed_form_passes(rng):
    obs = random_observed(rng, (3, 2))
    rep = check_nps(closed_form_example1(obs).full, obs, 1e-10)
    assert rep.passed and set(rep.per_pattern) == {"00", "01", "10", "11"}


def test_negative_control_product_table(rng):
    space = CategorySpace((2, 2))
    fx = rng.random((2, 2))
    full = FullTable(space, fx[:, :, None, None] * np.full((2, 2), 0.25))
    other = random_observed(rng, (2, 2))
    rep = check_nps(full, other)
    assert not rep.passed and rep.max_abs_error > 0


def test_random_engine_runs_pass(rng):
    for _ in range(50):
        p = int(rng.integers(2, 4))
        obs = random_observed(rng, rng.integers(2, 4, size=p))
        res = run_sequential(obs, random_plan(rng, p))
        assert check_nps(res.final, obs, 1e-10).passed


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 2**32 - 1))
def test_self_consistency(cards, seed):
    space = CategorySpace(tuple(cards))
    full = FullTable(space, np.random.default_rng(seed).random(space.full_shape))
    assert check_nps(full, observed_from_full(full)).max_abs_error <= 1e-15


def test_worst_cell_reported(rng):
    obs = random_observed(rng, (2, 2))
    full = closed_form_example1(obs).full
    bumped = np.array(obs.probs)
    bumped[2, 1] += 0.05
    rep = check_nps(full, type(obs)(obs.space, bumped))
    assert not rep.passed
    assert rep.worst_cell == ("10", ("*", 2))
    assert rep.to_dict()["worst_cell"] == {"pattern": "10", "values": ["*", 2]}


def test_space_mismatch(rng):
    with pytest.raises(SpaceMismatch):
        check_nps(closed_form_example1(random_observed(rng, (2, 2))).full, random_observed(rng, (2, 3)))


def test_stepwise_mar_exact():
    g = np.array([[0.4, 0.3, 0.3], [0.1, 0.5, 0.4]])
    assert check_stepwise_nps(step_conditional_mar(g, 1), g).max_abs_error <= 1e-16


def test_stepwise_icin_and_corruption(rng):
    g = rng.random((2, 3, 4)) + 0.05
    g /= g.sum(axis=(1, 2), keepdims=True)
    h = step_icin_pair(g)
    assert check_stepwise_nps(h, g).max_abs_error <= 1e-12
    bad = h.copy()
    bad[1, 0, 2, 1, 0] += 1e-3
    rep = check_stepwise_nps(bad, g)
    assert not rep.passed and abs(rep.max_abs_error - 1e-3) <= 1e-12
    assert rep.worst_cell == ("10", (2, "*", 3))


def test_stepwise_skips_empty_contexts():
    g = np.array([[0.0, 0.0, 0.0], [0.2, 0.3, 0.5]])
    h = np.zeros((2, 2, 2))
    h[1] = step_conditional_mar(g[1], 1)
    assert check_stepwise_nps(h, g).max_abs_error == 0.0


def test_stepwise_signature_mismatch():
    with pytest.raises(SignatureMismatch):
        check_stepwise_nps(np.zeros((2, 2, 2)), np.zeros((2, 4)))
