import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from scsgbench import (
    FiniteSumProblem,
    IfoCounter,
    RunTrace,
    batch_gradient,
    component_gradient,
    effective_passes,
    full_objective,
)
from scsgbench.objectives import MulticlassLogistic, Regularizer, build_problem
from scsgbench.problem import DimensionMismatchError, component_value_gradient

from conftest import central_differences, relative_error


def test_least_squares_component_gradient_formula():
    from scsgbench.objectives import LeastSquares

    problem = build_problem(LeastSquares(np.array([[1.0, 0.0]]), np.array([0.0])))
    counter = IfoCounter()
    g = component_gradient(problem, 0, np.array([2.0, 0.0]), counter)
    np.testing.assert_allclose(g, [2.0, 0.0])
    assert counter.units == 1


def test_gradient_vanishes_at_component_minimizer(tiny_lsq_problem, tiny_lsq):
    # f_i is minimized on the hyperplane a_i.x = b_i
    a, b = tiny_lsq.features[2], tiny_lsq.targets[2]
    x = b * a / (a @ a)
    g = component_gradient(tiny_lsq_problem, 2, x)
    np.testing.assert_allclose(g, 0.0, atol=1e-14)


def test_logistic_component_matches_finite_differences():
    rng = np.random.default_rng(0)
    data = MulticlassLogistic(rng.standard_normal((5, 2)), np.array([1, 2, 3, 1, 2]), 3)
    problem = build_problem(data)
    x = rng.standard_normal(problem.dim)
    value, grad = component_value_gradient(problem, 1, x)
    fd = central_differences(lambda z: problem.component(1, z)[0], x)
    assert relative_error(grad, fd) < 1e-6


def test_component_index_and_dim_errors(tiny_lsq_problem):
    with pytest.raises(IndexError):
        component_gradient(tiny_lsq_problem, 4, np.zeros(2))
    with pytest.raises(IndexError):
        component_gradient(tiny_lsq_problem, -1, np.zeros(2))
    with pytest.raises(DimensionMismatchError):
        component_gradient(tiny_lsq_problem, 0, np.zeros(3))


def test_batch_gradient_full_set_is_mean(tiny_lsq_problem):
    x = np.array([0.3, -0.7])
    full = batch_gradient(tiny_lsq_problem, range(4), x)
    mean = np.mean(
        [component_gradient(tiny_lsq_problem, i, x) for i in range(4)], axis=0
    )
    np.testing.assert_allclose(full, mean, rtol=1e-15)


def test_batch_gradient_singleton(tiny_lsq_problem):
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(
        batch_gradient(tiny_lsq_problem, [2], x),
        component_gradient(tiny_lsq_problem, 2, x),
    )


def test_batch_gradient_errors(tiny_lsq_problem):
    with pytest.raises(ValueError):
        batch_gradient(tiny_lsq_problem, [], np.zeros(2))
    with pytest.raises(ValueError):
        batch_gradient(tiny_lsq_problem, [1, 1], np.zeros(2))
    with pytest.raises(IndexError):
        batch_gradient(tiny_lsq_problem, [0, 9], np.zeros(2))


def test_subset_average_recovers_full_gradient(tiny_lsq_problem):
    # Average of batch gradients over all C(4,2) subsets equals the full
    # gradient: each component appears equally often.
    x = np.array([0.2, 0.9])
    subsets = list(itertools.combinations(range(4), 2))
    avg = np.mean([batch_gradient(tiny_lsq_problem, s, x) for s in subsets], axis=0)
    full = batch_gradient(tiny_lsq_problem, range(4), x)
    np.testing.assert_allclose(avg, full, rtol=1e-13)


def test_full_objective_logistic_at_zero_is_log_k():
    rng = np.random.default_rng(1)
    for K in (2, 3, 5):
        data = MulticlassLogistic(
            rng.standard_normal((6, 3)), rng.integers(1, K + 1, size=6), K
        )
        problem = build_problem(data)
        assert full_objective(problem, np.zeros(problem.dim)) == pytest.approx(
            np.log(K), rel=1e-12
        )


def test_l2_term_adds_nothing_at_zero():
    rng = np.random.default_rng(2)
    data = MulticlassLogistic(rng.standard_normal((4, 2)), np.array([1, 2, 1, 2]), 2)
    plain = build_problem(data)
    composite = build_problem(data, Regularizer("l2_scaled", 0.25), smooth_l2=False)
    z = np.zeros(plain.dim)
    assert full_objective(composite, z) == pytest.approx(full_objective(plain, z))


def test_full_objective_matches_hand_sum(tiny_lsq, tiny_lsq_problem):
    x = np.array([0.5, -0.5])
    hand = np.mean(
        [0.5 * (a @ x - b) ** 2 for a, b in zip(tiny_lsq.features, tiny_lsq.targets)]
    )
    assert full_objective(tiny_lsq_problem, x) == pytest.approx(hand, rel=1e-14)


def test_full_objective_charges_n(tiny_lsq_problem):
    counter = IfoCounter()
    full_objective(tiny_lsq_problem, np.zeros(2), counter)
    assert counter.units == tiny_lsq_problem.n


def test_effective_passes():
    counter = IfoCounter()
    assert effective_passes(counter, 10) == 0.0
    counter.charge(10)
    assert effective_passes(counter, 10) == 1.0
    counter.charge(5)
    assert effective_passes(counter, 10) == 1.5
    with pytest.raises(ValueError):
        effective_passes(counter, 0)


@given(st.lists(st.integers(min_value=1, max_value=4), min_size=0, max_size=30))
def test_cost_additivity(batch_sizes):
    # counter.units equals the sum of requested batch sizes exactly
    A = np.eye(4)
    problem = build_problem(
        __import__("scsgbench").LeastSquares(A, np.zeros(4))
    )
    counter = IfoCounter()
    x = np.zeros(4)
    for size in batch_sizes:
        batch_gradient(problem, range(size), x, counter)
    assert counter.units == sum(batch_sizes)


def test_counter_rejects_negative():
    with pytest.raises(ValueError):
        IfoCounter().charge(-1)


def test_trace_units_strictly_increasing():
    trace = RunTrace(algorithm="x", seed=0, n=10)
    trace.append(0, 1.0)
    trace.append(5, 0.5)
    with pytest.raises(ValueError):
        trace.append(5, 0.4)


def test_gradient_consistency_all_objectives(desk_logistic, quadratic_data):
    # component gradients match central differences at random points
    rng = np.random.default_rng(3)
    for data in (desk_logistic.to_logistic(), quadratic_data):
        problem = build_problem(data)
        for _ in range(10):
            i = int(rng.integers(problem.n))
            x = rng.standard_normal(problem.dim)
            grad = component_gradient(problem, i, x)
            fd = central_differences(lambda z: problem.component(i, z)[0], x)
            assert relative_error(grad, fd) < 1e-5


def test_problem_validation():
    with pytest.raises(ValueError):
        FiniteSumProblem(n=0, dim=1, component=lambda i, x: (0.0, x))
    with pytest.raises(ValueError):
        FiniteSumProblem(n=1, dim=0, component=lambda i, x: (0.0, x))
