import itertools
import math

import numpy as np
import pytest

from scsgbench import (
    SCSG,
    DivergenceError,
    IfoCounter,
    batch_gradient,
    build_problem,
    run_epoch,
    saturation_epoch,
    schedule,
)
from scsgbench.objectives import LeastSquares
from scsgbench.sampling import RngStream, sample_geometric, sample_subset
from scsgbench.scsg import (
    EpochSchedule,
    default_hyperparams,
    variance_reduced_gradient,
)


# ------------------------------------------------------------------- schedule


def test_schedule_hand_example():
    # j=1, m0=50, alpha=1.25, b=1
    m, B, gamma = schedule(n=10**6, j=1, alpha=1.25, m0=50.0, B0=10.0, b=1)
    assert m == pytest.approx(62.5)
    assert gamma == pytest.approx(62.5 / 63.5)
    assert B == math.ceil(10.0 * 1.25**2)


def test_schedule_closed_forms_to_j60():
    n, alpha, m0, B0, b = 50_000, 1.25, 250.0, 50.0, 5
    prev_B = 0
    for j in range(1, 61):
        m, B, gamma = schedule(n, j, alpha, m0, B0, b)
        assert m == m0 * alpha**j
        assert B == math.ceil(min(B0 * alpha ** (2 * j), n))
        assert gamma == m / (m + b)
        assert B >= prev_B  # anchor batches never shrink
        prev_B = B
    assert schedule(n, 60, alpha, m0, B0, b).B == n


def test_schedule_rejects_epoch_zero():
    with pytest.raises(ValueError):
        schedule(100, 0, 1.25, 1.0, 1.0, 1)


def test_saturation_epoch_matches_brute_force():
    for n, alpha, B0 in [(10_000, 1.25, 10.0), (2000, 1.25, 2.0), (777, 1.5, 3.0)]:
        j_star = saturation_epoch(n, alpha, B0)
        assert B0 * alpha ** (2 * j_star) >= n
        assert B0 * alpha ** (2 * (j_star - 1)) < n


def test_default_hyperparams():
    m0, B0, b = default_hyperparams(1_000_000)
    assert (m0, B0, b) == (5000.0, 1000.0, 100)
    assert default_hyperparams(50)[2] == 1  # b floors at 1


# ------------------------------------- variance-reduced gradient (enumeration)


@pytest.fixture(scope="module")
def five_point_problem():
    rng = np.random.default_rng(20)
    return build_problem(LeastSquares(rng.standard_normal((5, 3)), rng.standard_normal(5)))


def test_vr_gradient_at_anchor_returns_mu(five_point_problem):
    problem = five_point_problem
    anchor = np.array([0.5, -1.0, 2.0])
    mu = batch_gradient(problem, [0, 2, 4], anchor)
    nu = variance_reduced_gradient(problem, anchor, mu, [1, 3], anchor)
    np.testing.assert_array_equal(nu, mu)


def test_vr_gradient_enumeration_bias(five_point_problem):
    # mean over all C(5,2) minibatches equals grad f(x) + e, where e is
    # the anchor-batch gradient error; e = 0 when the batch is everything
    problem = five_point_problem
    rng = np.random.default_rng(21)
    x = rng.standard_normal(3)
    anchor = rng.standard_normal(3)
    full_x = batch_gradient(problem, range(5), x)
    full_anchor = batch_gradient(problem, range(5), anchor)
    for index_set in ([0, 1, 2], list(range(5))):
        mu = batch_gradient(problem, index_set, anchor)
        e = mu - full_anchor
        nus = [
            variance_reduced_gradient(problem, anchor, mu, mb, x)
            for mb in itertools.combinations(range(5), 2)
        ]
        mean_nu = np.mean(nus, axis=0)
        np.testing.assert_allclose(mean_nu, full_x + e, atol=1e-12)
        if len(index_set) == 5:
            np.testing.assert_allclose(e, 0.0, atol=1e-15)


def test_vr_gradient_charge_modes(five_point_problem):
    x = np.zeros(3)
    mu = np.zeros(3)
    for mode, expected in (("shared", 2), ("strict", 4)):
        counter = IfoCounter()
        variance_reduced_gradient(
            five_point_problem, x, mu, [0, 1], x, counter, charge_mode=mode
        )
        assert counter.units == expected
    with pytest.raises(ValueError):
        variance_reduced_gradient(
            five_point_problem, x, mu, [0], x, IfoCounter(), charge_mode="free"
        )


# ------------------------------------------------------------------ run_epoch


def test_epoch_zero_length_passes_anchor_through(five_point_problem):
    # gamma = 0 forces a zero-length inner loop
    problem = five_point_problem
    epoch = EpochSchedule(m=0.0, B=3, gamma=0.0)
    counter = IfoCounter()
    x0 = np.array([1.0, 2.0, 3.0])
    x1 = run_epoch(problem, x0, epoch, b=1, eta=0.1, rng=RngStream(0), counter=counter)
    np.testing.assert_array_equal(x1, x0)
    assert counter.units == 3


@pytest.mark.parametrize("mode,per_step", [("shared", 1), ("strict", 2)])
def test_epoch_cost_identity(five_point_problem, mode, per_step):
    # replay the epoch's rng to learn N, then check the exact charge B + c*b*N
    problem = five_point_problem
    epoch = EpochSchedule(m=4.0, B=4, gamma=4.0 / 5.0)
    b = 1
    for seed in range(10):
        shadow = RngStream(seed)
        sample_subset(problem.n, epoch.B, shadow)
        n_steps = sample_geometric(epoch.gamma, shadow)
        counter = IfoCounter()
        run_epoch(
            problem, np.zeros(3), epoch, b, 0.01, RngStream(seed), counter,
            charge_mode=mode,
        )
        assert counter.units == epoch.B + per_step * b * n_steps


def test_expected_epoch_cost_monte_carlo(five_point_problem):
    # E cost = B + m under the single-charge convention (E N = m/b)
    problem = five_point_problem
    epoch = EpochSchedule(m=6.0, B=5, gamma=6.0 / 7.0)
    total = 0
    replays = 4000
    for seed in range(replays):
        counter = IfoCounter()
        run_epoch(problem, np.zeros(3), epoch, 1, 0.001, RngStream(seed), counter)
        total += counter.units
    assert abs(total / replays - (epoch.B + epoch.m)) / (epoch.B + epoch.m) < 0.05


def test_epoch_decreases_quadratic(quadratic_data):
    # full anchor batch, b=1, small step: F should drop for almost every seed
    problem = build_problem(quadratic_data)
    x_star = quadratic_data.solve_normal_equations()
    x0 = x_star + 0.5
    f0 = problem.full_value(x0)
    epoch = EpochSchedule(m=40.0, B=problem.n, gamma=40.0 / 41.0)
    eta = 0.1 / problem.smoothness
    drops = 0
    for seed in range(30):
        x1 = run_epoch(problem, x0.copy(), epoch, 1, eta, RngStream(seed), IfoCounter())
        drops += problem.full_value(x1) < f0
    assert drops >= 28


def test_epoch_geometric_telescoping_in_situ(quadratic_data):
    # with a full anchor batch the per-epoch telescoping identity
    # E(D_N - D_{N+1}) = (1/gamma - 1)(D_0 - E D_N) holds for
    # D_k = ||x_k - x*||^2, estimated over many epoch replays
    problem = build_problem(quadratic_data)
    x_star = quadratic_data.solve_normal_equations()
    anchor = x_star + 0.3
    mu = batch_gradient(problem, range(problem.n), anchor)
    gamma = 0.8
    eta = 0.05 / problem.smoothness
    d0 = float(np.sum((anchor - x_star) ** 2))
    c = 1.0 / gamma - 1.0
    combined = []
    master = RngStream(99)
    for _ in range(10_000):
        n_steps = sample_geometric(gamma, master)
        x = anchor.copy()
        for _ in range(n_steps):
            i = int(master.integers(problem.n))
            nu = (
                problem.component(i, x)[1]
                - problem.component(i, anchor)[1]
                + mu
            )
            x = x - eta * nu
        d_n = float(np.sum((x - x_star) ** 2))
        i = int(master.integers(problem.n))
        nu = problem.component(i, x)[1] - problem.component(i, anchor)[1] + mu
        x = x - eta * nu
        d_n1 = float(np.sum((x - x_star) ** 2))
        combined.append((d_n - d_n1) + c * d_n)
    combined = np.asarray(combined)
    gap = abs(combined.mean() - c * d0)
    se = combined.std(ddof=1) / np.sqrt(combined.size)
    assert gap < 4 * se


# ------------------------------------------------------------------ full runs


def test_run_zero_budget_returns_x0(five_point_problem):
    solver = SCSG(pass_budget=0.0, B0=2.0, m0=1.0, b=1)
    x0 = np.array([1.0, -1.0, 0.5])
    trace = solver.run(five_point_problem, x0)
    np.testing.assert_array_equal(trace.final_x, x0)
    assert len(trace.samples) == 1
    assert trace.samples[0][0] == 0


def test_run_starts_trace_at_zero_units(quadratic_data):
    problem = build_problem(quadratic_data)
    trace = SCSG(eta=0.1 / problem.smoothness, pass_budget=3.0, seed=1).run(problem)
    assert trace.units[0] == 0
    assert trace.objectives[0] == pytest.approx(problem.full_value(np.zeros(problem.dim)))
    assert np.all(np.diff(trace.units) > 0)


def test_run_deterministic_given_seed(quadratic_data):
    problem = build_problem(quadratic_data)
    kw = dict(eta=0.1 / problem.smoothness, pass_budget=5.0)
    t1 = SCSG(seed=3, **kw).run(problem)
    t2 = SCSG(seed=3, **kw).run(problem)
    t3 = SCSG(seed=4, **kw).run(problem)
    np.testing.assert_array_equal(t1.objectives, t2.objectives)
    np.testing.assert_array_equal(t1.final_x, t2.final_x)
    assert not np.array_equal(t1.objectives, t3.objectives)


def test_fast_and_reference_paths_agree(quadratic_data):
    problem = build_problem(quadratic_data)
    kw = dict(eta=0.1 / problem.smoothness, pass_budget=5.0, seed=7)
    fast = SCSG(fast=True, **kw).run(problem)
    slow = SCSG(fast=False, **kw).run(problem)
    np.testing.assert_array_equal(fast.units, slow.units)
    np.testing.assert_allclose(fast.objectives, slow.objectives, rtol=1e-12)


def test_run_converges_on_quadratic(quadratic_data):
    problem = build_problem(quadratic_data)
    x_star = quadratic_data.solve_normal_equations()
    f_star = problem.full_value(x_star)
    f0 = problem.full_value(np.zeros(problem.dim))
    trace = SCSG(eta=0.3 / problem.smoothness, pass_budget=100.0, seed=0).run(problem)
    ratio = (trace.final_objective() - f_star) / (f0 - f_star)
    assert ratio < 1e-10


def test_suboptimality_decays_geometrically_after_saturation(quadratic_data):
    problem = build_problem(quadratic_data)
    f_star = problem.full_value(quadratic_data.solve_normal_equations())
    trace = SCSG(eta=0.1 / problem.smoothness, pass_budget=60.0, seed=5).run(problem)
    n = problem.n
    sat = saturation_epoch(n, 1.25, 0.001 * n)
    gaps = np.asarray(trace.objectives[sat:]) - f_star
    gaps = gaps[gaps > 1e-14]
    # average per-epoch contraction factor across the saturated phase
    mean_ratio = (gaps[-1] / gaps[0]) ** (1.0 / (len(gaps) - 1))
    assert mean_ratio <= 0.95


@pytest.mark.filterwarnings("ignore:overflow")
def test_run_divergence_raises_with_trace(quadratic_data):
    problem = build_problem(quadratic_data)
    solver = SCSG(eta=1e6 / problem.smoothness, pass_budget=20.0, seed=0)
    with pytest.raises(DivergenceError) as info:
        solver.run(problem)
    assert info.value.trace.diverged


def test_config_validation(five_point_problem):
    with pytest.raises(ValueError):
        SCSG(alpha=1.0).run(five_point_problem)
    with pytest.raises(ValueError):
        SCSG(B0=10.0).run(five_point_problem)  # B0 > n = 5
    with pytest.raises(ValueError):
        SCSG(eta=0.0).run(five_point_problem)
    with pytest.raises(ValueError):
        SCSG(b=0).run(five_point_problem)


def test_params_roundtrip():
    solver = SCSG()
    params = solver.get_params()
    assert params["alpha"] == 1.25
    solver.set_params(alpha=2.0, eta=0.5)
    assert solver.alpha == 2.0 and solver.eta == 0.5
    with pytest.raises(ValueError):
        solver.set_params(momentum=0.9)
