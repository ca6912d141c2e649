from __future__ import annotations

import numpy as np
import pytest

from somnus.algos import tsallis_objective, tsallis_weights
from somnus.core import ActiveRound, InvalidParameter, sample
from somnus.estimators import ix_estimate, weighted_estimate_sum
from somnus.oracle import GridSpec, exhaustive_expectation, grid_minimize, simplex_grid


def test_grid_on_simplex():
    for k in (1, 2, 3, 5):
        pts = simplex_grid(k, 12)
        assert np.all(np.abs(pts.sum(axis=1) - 1.0) <= 1e-12)
        assert np.all(pts >= 0)
    assert len(simplex_grid(3, 4)) == 15


def test_grid_limits():
    with pytest.raises(InvalidParameter):
        GridSpec(6)
    assert GridSpec(5).divisions() < GridSpec(2).divisions()


def test_linear_objective_vertex():
    c = np.array([0.7, 0.2, 0.9, 0.4])
    point, value = grid_minimize(lambda q: q @ c, GridSpec(4))
    np.testing.assert_allclose(point, [0, 1, 0, 0], atol=1e-12)
    assert value == pytest.approx(0.2)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_symmetric_objective_uniform(k):
    spec = GridSpec(k, passes=0)
    point, _ = grid_minimize(lambda q: tsallis_objective(q, np.zeros(k), 0.5, 0.5), spec)
    assert np.all(np.abs(point - 1.0 / k) <= 1.0 / spec.divisions())


def test_refinement_never_worse():
    L = np.array([0.3, 4.0, 1.1])
    obj = lambda q: tsallis_objective(q, L, 0.2, 0.3)
    values = [grid_minimize(obj, GridSpec(3, passes=n))[1] for n in range(4)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_oracle_agrees_with_solver():
    rng = np.random.default_rng(0)
    for _ in range(5):
        L = rng.uniform(0, 10, 3)
        eta = rng.uniform(0.05, 1.0)
        q, _ = tsallis_weights(L, eta, 0.5)
        _, best = grid_minimize(lambda x: tsallis_objective(x, L, eta, 0.5), GridSpec(3))
        assert abs(tsallis_objective(q, L, eta, 0.5) - best) <= 1e-6


def test_expectation_constant():
    assert exhaustive_expectation([0.2, 0.3, 0.5], lambda i: 4.0) == pytest.approx(4.0, abs=1e-15)


def test_expectation_unbiased_exact():
    r = ActiveRound.from_active([0, 2, 3], 4)
    p = np.array([0.25, 0.0, 0.5, 0.25])
    losses = np.array([0.3, 0.0, 0.9, 0.6])
    mean = exhaustive_expectation(p, lambda i: ix_estimate(r, p, i, losses[i], 0.0))
    np.testing.assert_allclose(mean[r.mask], losses[r.mask], atol=1e-15)


def test_expectation_ix_identity():
    r = ActiveRound([1.0, 0.4, 0.0, 0.7], binary=False)
    w = r.confidences * np.array([1.0, 2.0, 1.0, 0.5])
    p = w / w.sum()
    losses = np.array([0.3, 0.8, 0.0, 0.6])
    gamma = 0.2

    def gap(i):
        est = ix_estimate(r, p, i, losses[i], gamma)
        return np.sum(p * est) - (losses[i] - gamma * weighted_estimate_sum(r, est))

    assert abs(exhaustive_expectation(p, gap)) <= 1e-12


def test_expectation_matches_monte_carlo():
    rng = np.random.default_rng(4)
    for _ in range(5):
        p = rng.dirichlet(np.ones(4))
        vals = rng.uniform(-1, 3, 4)
        exact = exhaustive_expectation(p, lambda i: vals[i])
        n = 50_000
        draws = vals[sample(np.broadcast_to(p, (n, 4)), rng.random(n))]
        assert abs(draws.mean() - exact) < 4 * draws.std() / np.sqrt(n)
