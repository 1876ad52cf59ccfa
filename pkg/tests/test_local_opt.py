import sys
import os
# Добавляем корень проекта (project-root) в PYTHONPATH
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from src.core.configs import IFConfig
from src.core.models import FeasibleBox
from src.modules.local_opt.implicit_filtering import (
    STENCIL_FAILURE,
    if_run,
    project,
    quasi_newton_direction,
    stencil_gradient,
)
from src.modules.local_opt.simplex import lattice_search, nelder_mead_run

BOX = FeasibleBox(lower=(0.0, 0.0, 0.0), upper=(10.0, 10.0, 10.0))
CENTER = np.array([3.0, 4.0, 5.0])


def bowl(v):
    return float(np.sum((np.asarray(v) - CENTER) ** 2))


def test_project():
    assert project([-1.0, 5.0, 12.0], BOX) == pytest.approx([0.0, 5.0, 10.0])


def test_if_scales():
    scales = IFConfig().scales()
    assert scales[0] == 0.5
    assert scales[-1] == 2.0 ** -15
    assert len(scales) == 15
    with pytest.raises(ValueError):
        IFConfig(h0=0.1, h_min=0.2)


def test_stencil_gradient_central_and_one_sided():
    grad = stencil_gradient(bowl, [5.0, 5.0, 5.0], 0.1, BOX)
    assert grad == pytest.approx([4.0, 2.0, 0.0], abs=1e-9)
    # x = 10 на верхней границе: разность назад
    grad = stencil_gradient(bowl, [10.0, 5.0, 5.0], 0.1, BOX)
    assert grad[0] == pytest.approx(13.9)


def test_quasi_newton_direction():
    g = np.array([1.0, -2.0, 3.0])
    assert quasi_newton_direction(np.eye(3), g, np.zeros(3, dtype=bool)) == pytest.approx(-g)
    R = np.diag([2.0, 4.0, 1.0])
    d = quasi_newton_direction(R, g, np.array([False, False, True]))
    assert d == pytest.approx([-0.5, 0.5, -3.0])


def test_if_converges_on_quadratic(quadratic):
    result = if_run(quadratic, [9.0, 9.0, 9.0], IFConfig(budget=2000))
    assert result.method == 'if'
    assert np.linalg.norm(np.array(result.best_vector) - CENTER) < 1e-2
    assert result.termination_reason == 'scales_exhausted'
    assert result.n_evaluations == quadratic.n_evaluations
    bests = [r.best for r in result.trace]
    assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))


def test_if_stencil_failure_at_minimum(quadratic):
    """В точке минимума каждая шкала заканчивается отказом шаблона."""
    result = if_run(quadratic, CENTER)
    assert len(result.trace) == len(IFConfig().scales())
    assert all(r.line_search_reductions == STENCIL_FAILURE for r in result.trace)
    assert result.best_vector == pytest.approx(tuple(CENTER))
    assert result.n_evaluations <= 300


def test_if_respects_budget(quadratic):
    result = if_run(quadratic, [9.0, 9.0, 9.0], IFConfig(budget=20))
    assert result.termination_reason == 'budget'
    assert result.budget_exhausted
    assert result.n_evaluations <= 26
    assert result.best_objective < bowl([9.0, 9.0, 9.0])


def test_if_in_subbox(quadratic):
    """Поиск в подкоробке не выходит за её пределы."""
    sub = FeasibleBox(lower=(6.0, 6.0, 6.0), upper=(8.0, 8.0, 8.0))
    result = if_run(quadratic, [7.0, 7.0, 7.0], IFConfig(budget=500), box=sub)
    assert result.best_vector == pytest.approx((6.0, 6.0, 6.0), abs=1e-3)
    assert sub.contains(result.best_vector)


def test_nelder_mead_run(quadratic):
    result = nelder_mead_run(quadratic, np.random.Generator(np.random.Philox(0)), theta0=[9.0, 9.0, 9.0])
    assert result.method == 'nelder-mead'
    assert np.linalg.norm(np.array(result.best_vector) - CENTER) < 1e-3
    assert result.termination_reason == 'xatol'


def test_lattice_search():
    best = lattice_search(bowl, BOX, points_per_axis=11, intensity_levels=11)
    assert best[:2] == pytest.approx([3.0, 4.0])
