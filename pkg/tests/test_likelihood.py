import sys
import os
# Добавляем корень проекта (project-root) в PYTHONPATH
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest
from scipy.special import gammaln

from src.core.exceptions import ConfigurationError
from src.core.models import ObservationSet, SourceParams
from src.likelihood.objective import (
    ObjectiveContext,
    log_likelihood,
    neg_log_objective,
    ols_objective,
)


def test_objective_is_lower_at_truth(small_ctx, small_scenario):
    truth = small_scenario.true_source
    far = SourceParams(x=80.0, y=20.0, s0=3e9)
    assert neg_log_objective(small_ctx, truth) < neg_log_objective(small_ctx, far)
    assert ols_objective(small_ctx, truth) < ols_objective(small_ctx, far)


def test_objective_matches_log_likelihood(small_ctx, small_scenario):
    """J = −½·(log π + Σ log n!)."""
    theta = SourceParams(x=35.0, y=60.0, s0=5e9)
    ll = log_likelihood(small_ctx, theta)
    j = neg_log_objective(small_ctx, theta)
    assert j == pytest.approx(-0.5 * (ll + small_ctx.log_factorial), rel=1e-10)


def test_objective_identity_on_random_data(small_scenario):
    """2J + log π + Σ log n! = 0 на 100 случайных парах (θ, V)."""
    rng = np.random.Generator(np.random.Philox(11))
    lower = np.asarray(small_scenario.feasible_box.lower)
    upper = np.asarray(small_scenario.feasible_box.upper)
    for _ in range(100):
        counts = rng.poisson(rng.uniform(50.0, 2000.0), size=(5, 10))
        ctx = ObjectiveContext(small_scenario, ObservationSet.from_array(counts), workers=1)
        x, y, s0 = rng.uniform(lower, upper)
        theta = SourceParams(x=float(x), y=float(y), s0=float(s0))
        ll = log_likelihood(ctx, theta)
        j = neg_log_objective(ctx, theta)
        residual = 2.0 * j + ll + gammaln(counts + 1.0).sum()
        assert abs(residual) <= 1e-10 * max(abs(ll), 1.0)


def test_scaled_and_physical_agree(small_ctx):
    theta = SourceParams(x=35.0, y=60.0, s0=5e9)
    vec = small_ctx.to_vector(theta)
    assert vec == pytest.approx([35.0, 60.0, 10.0])
    assert small_ctx(vec) == pytest.approx(neg_log_objective(small_ctx, theta), rel=1e-12)
    assert small_ctx.to_source(vec) == theta


def test_evaluation_counter(small_ctx):
    small_ctx.reset_counter()
    small_ctx([30.0, 70.0, 6.0])
    small_ctx.evaluate_many(np.array([[30.0, 70.0, 6.0], [31.0, 70.0, 6.0], [32.0, 70.0, 6.0]]))
    assert small_ctx.n_evaluations == 4
    small_ctx.reset_counter()
    assert small_ctx.n_evaluations == 0


def test_log_posterior_outside_box_is_free(small_ctx):
    small_ctx.reset_counter()
    assert small_ctx.log_posterior([150.0, 50.0, 6.0]) == -np.inf
    assert small_ctx.log_posterior([50.0, 50.0, 200.0]) == -np.inf
    assert small_ctx.n_evaluations == 0
    assert np.isfinite(small_ctx.log_posterior([30.0, 70.0, 6.0]))


def test_source_on_detector_gives_infinite_objective(small_ctx):
    assert small_ctx([10.0, 10.0, 6.0]) == np.inf
    assert small_ctx.log_posterior([10.0, 10.0, 6.0]) == -np.inf


def test_zero_mean_is_degenerate(small_scenario, small_observations):
    scn = small_scenario.model_copy(update={'background': 0.0})
    ctx = ObjectiveContext(scn, small_observations, workers=1)
    assert ctx.log_likelihood(SourceParams(x=30.0, y=70.0, s0=0.0)) == -np.inf
    assert ctx.degenerate


def test_detector_count_mismatch(small_scenario):
    obs = ObservationSet.from_array(np.ones((3, 4), dtype=int))
    with pytest.raises(ConfigurationError):
        ObjectiveContext(small_scenario, obs)


def test_parallel_evaluation_matches_serial(small_scenario, small_observations):
    points = small_scenario.scaled_box().sample(np.random.Generator(np.random.Philox(1)), 40)
    serial = ObjectiveContext(small_scenario, small_observations, workers=1).evaluate_many(points)
    parallel = ObjectiveContext(small_scenario, small_observations, workers=4).evaluate_many(points)
    assert np.array_equal(serial, parallel)
