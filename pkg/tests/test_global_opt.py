import sys
import os
# Добавляем корень проекта (project-root) в PYTHONPATH
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from src.core.configs import GAConfig, PSConfig, SAConfig, StoppingCriteria
from src.core.exceptions import ConfigurationError
from src.core.models import FeasibleBox
from src.likelihood.objective import FunctionObjective
from src.modules import build_config, get_optimizer
import src.modules.global_opt.annealing as annealing_module
from src.modules.global_opt.annealing import (
    SA_STALL_WINDOW,
    SimulatedAnnealing,
    reanneal_counters,
    sa_accept_probability,
    sa_anneal_and_reanneal,
    sa_propose,
)
from src.modules.global_opt.genetic import (
    GeneticAlgorithm,
    ga_crossover,
    ga_next_generation,
    selection_weights,
)
from src.modules.global_opt.swarm import PS_STALL_WINDOW, ParticleSwarm, adapt_swarm, ps_update
from tests.helpers import DummyRng

BOX = FeasibleBox(lower=(0.0, 0.0, 0.0), upper=(10.0, 10.0, 10.0))
SMALL_SA = SAConfig(initial_temperatures=(5.0, 5.0, 5.0), n_starts=8)


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))


def recording_quadratic():
    """Квадратичная функция, запоминающая все точки вычисления."""
    seen = []

    def fn(v):
        seen.append(np.array(v))
        return float(np.sum((v - np.array([3.0, 4.0, 5.0])) ** 2))

    return FunctionObjective(fn, BOX, workers=1), seen


# --- имитация отжига ---------------------------------------------------------

def test_sa_propose_zero_temperature_keeps_point():
    theta = np.array([2.0, 3.0, 4.0])
    assert np.array_equal(sa_propose(theta, (0.0, 0.0, 0.0), BOX, philox(0)), theta)


def test_sa_propose_repairs_infeasible_candidate():
    """θ̃ = (14, 5, 5) вне Ω → α·(10, 5, 5) + (1 − α)·(9, 5, 5) при α = 0.5."""
    cand = sa_propose(np.array([9.0, 5.0, 5.0]), (5.0, 0.0, 0.0), BOX, DummyRng())
    assert cand == pytest.approx([9.5, 5.0, 5.0])


def test_sa_accept_probability():
    assert sa_accept_probability(1.0, 2.0, (1.0, 1.0, 1.0)) == 1.0
    assert sa_accept_probability(2.0, 2.0, (1.0, 1.0, 1.0)) == pytest.approx(0.5)
    assert sa_accept_probability(1000.0, 0.0, (1.0, 1.0, 1.0)) < 1e-100


def test_sa_cooling_and_reannealing():
    t0 = np.array([5.0, 5.0, 5.0])
    temps, k, reannealed = sa_anneal_and_reanneal(t0, t0, np.ones(3), accepted_count=3, reanneal_interval=50)
    assert not reannealed
    assert k == pytest.approx([2.0, 2.0, 2.0])
    assert temps == pytest.approx(5.0 * 0.95 ** 2)

    cold = np.array([0.1, 0.1, 0.1])
    sens = np.array([4.0, 2.0, 1.0])
    temps, k, reannealed = sa_anneal_and_reanneal(t0, cold, k, 50, 50, sensitivities=sens)
    assert reannealed
    assert k == pytest.approx(reanneal_counters(t0, cold, sens))
    # Менее чувствительная координата остывает сильнее
    assert temps[0] > temps[1] > temps[2]


def test_sa_converges_on_quadratic(quadratic):
    result = SimulatedAnnealing(SMALL_SA).run(
        quadratic, StoppingCriteria(max_evaluations=20000, stall_window=0), philox(1))
    assert result.method == 'sa'
    assert result.best_objective < 0.5
    assert result.termination_reason == 'max_evaluations'
    assert result.budget_exhausted
    assert result.n_evaluations >= 20000


def test_sa_target_objective(quadratic):
    result = SimulatedAnnealing(SMALL_SA).run(
        quadratic, StoppingCriteria(max_evaluations=50000, target_objective=1.0), philox(2))
    assert result.termination_reason == 'target_objective'
    assert result.best_objective <= 1.0
    assert not result.budget_exhausted


def test_sa_stops_after_initialization(quadratic):
    result = SimulatedAnnealing(SMALL_SA).run(quadratic, StoppingCriteria(max_evaluations=8), philox(3))
    assert result.n_evaluations == 8
    assert len(result.trace) == 1


@pytest.mark.parametrize("optimizer", [
    SimulatedAnnealing(SMALL_SA),
    ParticleSwarm(PSConfig(swarm_size=10)),
    GeneticAlgorithm(GAConfig(population=10)),
])
def test_iterates_stay_in_box_and_are_reproducible(optimizer):
    objective, seen = recording_quadratic()
    first = optimizer.run(objective, StoppingCriteria(max_evaluations=1500), philox(4))
    assert seen and all(BOX.contains(p) for p in seen)

    again, _ = recording_quadratic()
    second = optimizer.run(again, StoppingCriteria(max_evaluations=1500), philox(4))
    assert first.best_vector == second.best_vector
    assert first.n_evaluations == second.n_evaluations
    assert first.best_objective <= first.trace[0].best


def test_best_is_monotone_in_trace(quadratic):
    result = ParticleSwarm(PSConfig(swarm_size=10)).run(
        quadratic, StoppingCriteria(max_iterations=30, stall_window=0), philox(5))
    bests = [r.best for r in result.trace]
    assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))
    assert result.termination_reason == 'max_iterations'


# --- рой частиц --------------------------------------------------------------

def test_ps_update_clamps_and_zeroes_velocity():
    config = PSConfig()
    pos = np.array([9.0, 5.0, 5.0])
    vel, new_pos, unchanged = ps_update(pos, np.array([5.0, 0.0, 0.0]), pos, pos, 1.1, config, BOX, DummyRng())
    assert new_pos == pytest.approx([10.0, 5.0, 5.0])
    assert vel == pytest.approx([0.0, 0.0, 0.0])
    assert not unchanged


def test_adapt_swarm():
    config = PSConfig(swarm_size=10, min_neighborhood=3)
    inertia, stall, neighborhood = adapt_swarm(True, 0.6, 0, 6, config)
    assert (inertia, stall, neighborhood) == (pytest.approx(1.1), 0, 3)
    inertia, stall, neighborhood = adapt_swarm(True, 0.6, 8, 6, config)
    assert (inertia, stall, neighborhood) == (pytest.approx(0.3), 7, 3)
    inertia, stall, neighborhood = adapt_swarm(False, 0.6, 0, 8, config)
    assert (inertia, stall, neighborhood) == (pytest.approx(0.6), 1, 9)


def test_ps_evaluations_per_iteration(quadratic):
    result = ParticleSwarm(PSConfig(swarm_size=16)).run(quadratic, StoppingCriteria(max_iterations=5), philox(6))
    assert result.n_evaluations == 16 + 5 * 16


# --- генетический алгоритм ---------------------------------------------------

def test_ga_group_sizes():
    small = GAConfig(population=16)
    assert (small.elite_count, small.crossover_count, small.mutation_count) == (1, 3, 12)
    large = GAConfig(population=40)
    assert (large.elite_count, large.crossover_count, large.mutation_count) == (3, 7, 30)


def test_ga_crossover_is_convex():
    child = ga_crossover(np.array([0.0, 0.0, 0.0]), np.array([2.0, 4.0, 6.0]), np.array([0.5, 0.25, 1.0]))
    assert child == pytest.approx([1.0, 3.0, 0.0])


def test_selection_weights():
    w = selection_weights(5)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(np.diff(w) < 0)


def test_ga_next_generation_keeps_elite_first():
    rng = philox(7)
    config = GAConfig(population=20)
    pop = BOX.sample(rng, 20)
    fitness = np.arange(20, dtype=float)[::-1].copy()
    new_pop, elite_values = ga_next_generation(pop, fitness, config, BOX, rng)
    assert new_pop.shape == (20, 3)
    assert elite_values == pytest.approx([0.0, 1.0])
    assert np.array_equal(new_pop[0], pop[19])
    assert np.array_equal(new_pop[1], pop[18])
    assert all(BOX.contains(p) for p in new_pop)


def test_ga_does_not_reevaluate_elite(quadratic):
    result = GeneticAlgorithm(GAConfig(population=16)).run(quadratic, StoppingCriteria(max_iterations=3), philox(8))
    assert result.n_evaluations == 16 + 3 * 15


# --- конфигурация и фабрика -------------------------------------------------

def test_stopping_requires_a_criterion():
    with pytest.raises(ValueError):
        StoppingCriteria()
    with pytest.raises(ValueError):
        StoppingCriteria(stall_window=0)


def test_stall_window_resolution():
    """Незаданное окно застоя берётся из метода, 0 отключает проверку."""
    assert StoppingCriteria(max_evaluations=10).resolve_stall_window(SA_STALL_WINDOW) == 3
    assert StoppingCriteria(max_evaluations=10).resolve_stall_window(PS_STALL_WINDOW) == 20
    assert StoppingCriteria(max_evaluations=10, stall_window=5).resolve_stall_window(3) == 5
    assert StoppingCriteria(max_evaluations=10, stall_window=0).resolve_stall_window(3) is None


def test_ps_stops_on_stall_after_twenty_iterations():
    flat = FunctionObjective(lambda v: 1.0, BOX, workers=1)
    result = ParticleSwarm(PSConfig(swarm_size=10)).run(flat, StoppingCriteria(max_evaluations=5000), philox(12))
    assert result.termination_reason == 'stall'
    assert result.n_evaluations == 10 + 20 * 10
    assert not result.budget_exhausted

    shorter = ParticleSwarm(PSConfig(swarm_size=10)).run(
        flat, StoppingCriteria(max_evaluations=5000, stall_window=5), philox(12))
    assert shorter.n_evaluations == 10 + 5 * 10


def test_sa_stops_on_stall_by_default(quadratic, monkeypatch):
    """Траектории не двигаются: после трёх повторных отжигов без смещения — останов по застою."""
    monkeypatch.setattr(annealing_module, 'sa_propose', lambda theta, temps, box, rng: theta.copy())
    config = SAConfig(initial_temperatures=(5.0, 5.0, 5.0), n_starts=4, reanneal_interval=2)
    result = SimulatedAnnealing(config).run(quadratic, StoppingCriteria(max_evaluations=50000), philox(13))
    assert result.termination_reason == 'stall'
    assert result.n_evaluations < 50000

    running = SimulatedAnnealing(config).run(
        quadratic, StoppingCriteria(max_evaluations=2000, stall_window=0), philox(13))
    assert running.termination_reason == 'max_evaluations'


def test_ps_config_validation():
    with pytest.raises(ValueError):
        PSConfig(swarm_size=4, min_neighborhood=4)
    with pytest.raises(ValueError):
        PSConfig(inertia=2.0)


def test_factory():
    assert isinstance(get_optimizer('SA'), SimulatedAnnealing)
    assert isinstance(get_optimizer('ga', {'population': 10}).config, GAConfig)
    assert get_optimizer('ps', PSConfig(swarm_size=8)).config.swarm_size == 8
    with pytest.raises(ConfigurationError):
        get_optimizer('tabu')
    with pytest.raises(ConfigurationError):
        build_config('ps', {'swarm_size': 1})
