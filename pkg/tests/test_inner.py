import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import scalar_system
from oracles import DenseCProblem, brute_force_minimizer
from tikhonov_kaczmarz import EllipticProblemSpec, InnerConfig, InvalidArgument, build_system, solve_subproblem, tikhonov_objective
from tikhonov_kaczmarz.elliptic import Grid1D
from tikhonov_kaczmarz.inner import Safeguard, fixed_point_step

ONE = np.array([1.0])
ZERO = np.array([0.0])


def test_objective_examples(scalar):
    assert tikhonov_objective(scalar, 0, np.array([0.5]), ONE, ZERO, 1.0) == 0.5
    assert tikhonov_objective(scalar, 0, ONE, ONE, ONE, 3.0) == 0.0
    # at the center only the residual remains
    assert tikhonov_objective(scalar, 0, ONE, ONE, np.array([-2.0]), 7.0) == 9.0
    with pytest.raises(InvalidArgument):
        tikhonov_objective(scalar, 0, ONE, ONE, ZERO, 0.0)


def test_fixed_point_step_examples(scalar):
    assert fixed_point_step(scalar, 0, ONE, ZERO, 1.0, ONE)[0] == 0.0
    assert fixed_point_step(scalar, 0, ONE, ZERO, 1.0, np.array([0.5]))[0] == 0.5
    # zero residual returns the center
    assert fixed_point_step(scalar, 0, np.array([3.0]), np.array([2.0]), 1.0, np.array([2.0]))[0] == 3.0


def test_scalar_solve_closed_form(scalar):
    for alpha in (0.5, 1.0, 4.0, 100.0):
        r = solve_subproblem(scalar, 0, ONE, ZERO, alpha)
        assert r.converged and not r.non_contraction
        assert r.x_next[0] == pytest.approx(alpha / (alpha + 1), abs=1e-10)


def test_stationary_start_takes_one_iteration(scalar):
    r = solve_subproblem(scalar, 0, np.array([2.0]), np.array([2.0]), 1.0)
    assert r.iterations == 1 and r.converged
    assert r.x_next[0] == 2.0


def test_raw_map_rate_on_scalar_fixture():
    # the map x -> x_c - (x - y)/alpha contracts by exactly 1/alpha per inner step
    s = scalar_system()
    alpha = 4.0
    x = ONE.copy()
    steps = []
    for _ in range(6):
        xn = fixed_point_step(s, 0, ONE, ZERO, alpha, x)
        steps.append(abs(xn[0] - x[0]))
        x = xn
    ratios = np.array(steps[1:]) / np.array(steps[:-1])
    np.testing.assert_allclose(ratios, 1 / alpha, rtol=0, atol=1e-12)


def test_outer_rate_on_scalar_fixture():
    s = scalar_system()
    for alpha in (0.5, 1.0, 3.0):
        x = ONE.copy()
        for _ in range(4):
            xn = solve_subproblem(s, 0, x, ZERO, alpha, InnerConfig(tol=1e-14)).x_next
            assert xn[0] / x[0] == pytest.approx(alpha / (1 + alpha), abs=1e-12)
            x = xn


def test_unsafeguarded_oscillation_is_flagged(scalar):
    # at alpha = 1 the raw map is x -> 1 - x and never settles
    r = solve_subproblem(scalar, 0, ONE, ZERO, 1.0, InnerConfig(safeguard=Safeguard.NONE))
    assert r.non_contraction and not r.converged
    r = solve_subproblem(scalar, 0, ONE, ZERO, 0.5, InnerConfig(safeguard="none"))
    assert r.non_contraction


def test_safeguard_rescues_alpha_one(scalar):
    r = solve_subproblem(scalar, 0, ONE, ZERO, 1.0)
    assert r.converged and r.x_next[0] == pytest.approx(0.5, abs=1e-10)


@pytest.mark.parametrize("kw", [{"tol": 0.0}, {"max_inner": 0}, {"safeguard": "sometimes"}])
def test_inner_config_validation(kw):
    with pytest.raises(ValueError):
        InnerConfig(**kw)


def random_c_instance(seed, n=9):
    rng = np.random.default_rng(seed)
    a, b, k = rng.uniform(0.5, 2), rng.uniform(-1, 1), int(rng.integers(1, 4))
    f = lambda s: a + b * np.sin(k * np.pi * s)  # noqa: E731
    g0, g1 = rng.uniform(0.5, 1.5, 2)
    system = build_system("c", sources=[EllipticProblemSpec("c", f, g0, g1)], grid=Grid1D(n))
    dense = DenseCProblem(n, f, g0, g1)
    truth = np.maximum(1 + 0.5 * rng.uniform(-1, 1) * np.sin(np.pi * dense.s) + 0.3 * rng.standard_normal(n), 0.2)
    y = dense.u(truth) + 1e-3 * rng.standard_normal(n)
    return system, dense, y


@pytest.mark.parametrize("seed", range(3))
def test_matches_dense_minimizer_small_alpha(seed):
    system, dense, y = random_c_instance(100 + seed)
    center = np.ones(9)
    ref = brute_force_minimizer(dense, center, y, 0.1, seed=seed)
    got = solve_subproblem(system, 0, center, y, 0.1).x_next
    assert system.domain.norm(got - ref) < 1e-6


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), alpha=st.floats(0.02, 50.0))
def test_descent_properties(seed, alpha):
    system, _, y = random_c_instance(seed, n=19)
    rng = np.random.default_rng(seed)
    center = 1 + 0.5 * rng.uniform(size=19)
    op = system.operators[0]
    r = solve_subproblem(system, 0, center, y, alpha)
    J0 = tikhonov_objective(system, 0, center, center, y, alpha)
    assert r.objective_start == pytest.approx(J0, rel=1e-14)
    assert r.objective_end <= r.objective_start + 1e-12 * (1 + r.objective_start)
    assert r.residual == pytest.approx(op.codomain.norm(op(r.x_next) - y), rel=1e-12)
    if r.converged:
        assert r.step_norm <= 1e-10 * (1 + system.domain.norm(center))
        assert r.residual <= op.codomain.norm(op(center) - y) + 1e-10
        # restarting at the answer moves it by less than the tolerance
        again = solve_subproblem(system, 0, center, y, alpha, x_init=r.x_next)
        assert system.domain.norm(again.x_next - r.x_next) <= 1e-10 * (1 + system.domain.norm(center))


def test_inadmissible_candidates():
    # at tiny alpha the raw step drives c negative
    system = build_system("c", 1, Grid1D(49))
    y = [op(1 + 0.5 * np.sin(np.pi * op.grid.interior)) for op in system.operators][0]
    raw = solve_subproblem(system, 0, system.x0, y, 1e-4, InnerConfig(safeguard="none"))
    assert raw.non_contraction and not raw.converged
    assert np.all(raw.x_next >= 0)  # the last admissible iterate is returned
    safe = solve_subproblem(system, 0, system.x0, y, 1e-4, InnerConfig(max_inner=20))
    assert np.all(safe.x_next >= 0)
    assert safe.objective_end < safe.objective_start
