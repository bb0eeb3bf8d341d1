import math

import numpy as np
import pytest

from tikhonov_kaczmarz import (
    DegenerateSample,
    EllipticProblemSpec,
    InvalidArgument,
    LinearOperator,
    OperatorSystem,
    build_system,
    check_adjoint,
    estimate_tangential_cone,
    taylor_test,
)
from tikhonov_kaczmarz.elliptic import Grid1D, profile
from tikhonov_kaczmarz.errors import AdmissibilityViolation
from tikhonov_kaczmarz.operators import (
    Derivative,
    adjoint_apply,
    diagnose,
    estimate_constants,
    forward,
    jacobian_apply,
)

GRID = Grid1D(49)
STEPS = 1e-2 * 2.0 ** -np.arange(7)


def single(kind, **spec):
    return build_system(kind, sources=[EllipticProblemSpec(kind, **spec)], grid=GRID)


def reference(kind, n=49):
    return build_system(kind, 2, Grid1D(n))


# Three admissible parameters per problem, as profile names.
POINTS = {"c": ["one", "bump", "gauss"], "a": ["one", "ramp", "gauss"], "b": ["zero", "sine", "bump"]}


def params(kind, system):
    out = [profile(name, system.operators[0]) for name in POINTS[kind]]
    if kind == "b":
        out[2] = 0.3 * (out[2] - 1.0)  # keep b small: the b-problem is only solvable for small b
    return out


class PerturbedTranspose(LinearOperator):
    """Linear map whose 'adjoint' has one transpose entry off by 1e-3."""

    def linearize(self, x):
        Fx, d = super().linearize(x)
        Bt = self.matrix.T.copy()
        Bt[1, 2] += 1e-3
        return Fx, Derivative(d, lambda w: Bt @ w)


# -- forward ----------------------------------------------------------------------


def test_forward_c_zero_is_linear():
    s = single("c", f=0.0, g0=0.0, g1=1.0)
    np.testing.assert_allclose(forward(s, 0, np.zeros(49)), GRID.interior, rtol=0, atol=1e-13)


def test_forward_a_one_is_linear():
    s = single("a", f=0.0, g0=0.0, g1=1.0)
    np.testing.assert_allclose(forward(s, 0, np.ones(51)), GRID.interior, rtol=0, atol=1e-13)


def test_forward_c_one_manufactured():
    s = single("c", f=lambda x: x, g0=0.0, g1=1.0)
    np.testing.assert_allclose(forward(s, 0, np.ones(49)), GRID.interior, rtol=0, atol=1e-13)


def test_forward_is_bit_deterministic():
    s = reference("a")
    x = profile("gauss", s.operators[0])
    assert np.array_equal(forward(s, 1, x), forward(s, 1, x.copy()))


def test_forward_rejects_inadmissible():
    with pytest.raises(AdmissibilityViolation):
        forward(reference("c"), 0, -np.ones(49))
    with pytest.raises(AdmissibilityViolation):
        forward(reference("a"), 0, np.full(51, 0.05))


def test_bad_index():
    with pytest.raises(InvalidArgument):
        forward(reference("c"), 2, np.ones(49))


# -- derivative and adjoint -----------------------------------------------------------------


@pytest.mark.parametrize("kind", ["a", "b", "c"])
def test_zero_direction_and_zero_data(kind):
    s = reference(kind)
    x = params(kind, s)[1]
    assert np.all(jacobian_apply(s, 0, x, np.zeros(s.domain.size)) == 0)
    assert np.all(adjoint_apply(s, 0, x, np.zeros(s.operators[0].codomain.size)) == 0)


@pytest.mark.parametrize("kind", ["a", "b", "c"])
def test_superposition(kind):
    s = reference(kind)
    op = s.operators[0]
    rng = np.random.default_rng(5)
    x = params(kind, s)[2]
    h1, h2 = op.random_direction(rng), op.random_direction(rng)
    lhs = jacobian_apply(s, 0, x, 2.0 * h1 - 3.0 * h2)
    rhs = 2.0 * jacobian_apply(s, 0, x, h1) - 3.0 * jacobian_apply(s, 0, x, h2)
    assert np.linalg.norm(lhs - rhs) <= 1e-13 * np.linalg.norm(rhs)
    w1, w2 = rng.standard_normal((2, op.codomain.size))
    lhs = adjoint_apply(s, 0, x, w1 + 0.5 * w2)
    rhs = adjoint_apply(s, 0, x, w1) + 0.5 * adjoint_apply(s, 0, x, w2)
    assert np.linalg.norm(lhs - rhs) <= 1e-13 * np.linalg.norm(rhs)


def test_c_adjoint_manufactured():
    s = single("c", f=0.0, g0=0.0, g1=1.0)
    x = GRID.interior
    np.testing.assert_allclose(adjoint_apply(s, 0, np.zeros(49), np.full(49, 2.0)), -(x**2) * (1 - x), atol=1e-13)


@pytest.mark.parametrize("kind", ["a", "b", "c"])
def test_dot_test_all_points(kind):
    s = reference(kind)
    for x in params(kind, s):
        for i in range(s.N):
            assert check_adjoint(s, i, x, trials=20, seed=3) < 1e-12


def test_dot_test_detects_perturbed_adjoint():
    A = np.random.default_rng(0).standard_normal((6, 5))
    good = OperatorSystem((LinearOperator(A),), np.zeros(5))
    bad = OperatorSystem((PerturbedTranspose(A),), np.zeros(5))
    assert check_adjoint(good, 0, np.zeros(5)) < 1e-12
    mismatch = check_adjoint(bad, 0, np.zeros(5))
    assert mismatch > 1e-6
    assert mismatch == pytest.approx(2.3505168169773468e-4, rel=1e-6)


def test_check_adjoint_deterministic_and_validates():
    s = reference("b")
    assert check_adjoint(s, 1, s.x0, seed=9) == check_adjoint(s, 1, s.x0, seed=9)
    with pytest.raises(InvalidArgument):
        check_adjoint(s, 0, s.x0, trials=0)


@pytest.mark.parametrize("kind", ["a", "b", "c"])
def test_derivative_matches_difference_quotients(kind):
    # difference quotients converge to F'h at rate O(t); extrapolating two of them is O(t^2)
    s = build_system(kind, 1, Grid1D(9))
    op = s.operators[0]
    x = params(kind, s)[1]
    h = op.random_direction(np.random.default_rng(2))
    Fh = jacobian_apply(s, 0, x, h)
    Fx = op(x)
    errs = []
    for t in (1e-3, 1e-4, 1e-5):
        q = (op(x + t * h) - Fx) / t
        errs.append(np.linalg.norm(q - Fh) / np.linalg.norm(Fh))
    assert errs[0] < 1e-2
    assert errs[1] < errs[0] / 5 and errs[2] < errs[1] / 5
    q3, q4 = [(op(x + t * h) - Fx) / t for t in (1e-3, 1e-4)]
    extrap = q4 + (q4 - q3) / 9.0
    assert np.linalg.norm(extrap - Fh) < 1e-7 * np.linalg.norm(Fh)


# -- Taylor test ------------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["a", "b", "c"])
def test_taylor_slope_second_order(kind):
    s = reference(kind)
    op = s.operators[0]
    h = op.random_direction(np.random.default_rng(11))
    h *= 0.5 / op.domain.norm(h)
    for x in params(kind, s):
        assert 1.9 <= taylor_test(s, 0, x, h, STEPS) <= 2.2


def test_taylor_linear_and_zero_direction_are_infinite():
    ident = OperatorSystem((LinearOperator(np.eye(4)),), np.zeros(4))
    assert taylor_test(ident, 0, np.ones(4), np.arange(4.0), STEPS) == math.inf
    s = reference("c")
    assert taylor_test(s, 0, s.x0, np.zeros(49), STEPS) == math.inf


@pytest.mark.parametrize("steps", [[1e-2, 1e-3], [1e-3, 1e-2, 1e-4], [1e-2, 0.0, -1e-3], [[1e-2, 1e-3, 1e-4]]])
def test_taylor_bad_steps(steps):
    s = reference("c")
    with pytest.raises(InvalidArgument):
        taylor_test(s, 0, s.x0, np.ones(49), steps)


# -- tangential cone --------------------------------------------------------------------------


def test_cone_linear_is_zero():
    A = np.random.default_rng(1).standard_normal((4, 3))
    s = OperatorSystem((LinearOperator(A),), np.zeros(3))
    assert estimate_tangential_cone(s, 0, np.zeros(3), 1.0, samples=30) == pytest.approx(0.0, abs=1e-12)


def test_cone_c_problem_below_one():
    s = build_system("c", 1)
    eta = estimate_tangential_cone(s, 0, np.ones(199), 0.5, samples=100, seed=0)
    assert 0 < eta < 1


def test_cone_all_skipped():
    s = OperatorSystem((LinearOperator(np.zeros((2, 2))),), np.zeros(2))
    with pytest.raises(DegenerateSample):
        estimate_tangential_cone(s, 0, np.zeros(2), 1.0, samples=5)


@pytest.mark.parametrize("kw", [{"samples": 0}, {"rho": 0.0}])
def test_cone_validates(kw):
    s = reference("c")
    args = {"rho": 0.5, "samples": 10, **kw}
    with pytest.raises(InvalidArgument):
        estimate_tangential_cone(s, 0, s.x0, **args)


# -- system and diagnostics -------------------------------------------------------------------


@pytest.mark.parametrize("kw", [{"eta": 1.0}, {"rho": 0.0}, {"M": -1.0}])
def test_system_rejects_bad_constants(kw):
    with pytest.raises(InvalidArgument):
        OperatorSystem((LinearOperator(np.eye(2)),), np.zeros(2), **kw)


def test_system_needs_an_operator():
    with pytest.raises(InvalidArgument):
        OperatorSystem((), np.zeros(2))


def test_contraction_margin_predicate():
    s = OperatorSystem((LinearOperator(np.eye(2)),), np.zeros(2), M=1.0, L=0.5, Mbar=1.0)
    assert s.contraction_margin(2.0) == pytest.approx(1.0)
    assert s.certifies(2.0) and not s.certifies(1.0)


def test_estimated_constants_are_sane():
    s = reference("c")
    y = [op(profile("bump", op)) for op in s.operators]
    est = estimate_constants(s, y, 1e-3, samples=20)
    assert set(est) == {"eta", "M", "L", "Mbar"}
    assert 0 <= est["eta"] < 1 and all(est[k] > 0 for k in ("M", "L", "Mbar"))


def test_diagnose_report():
    s = reference("c").with_constants(M=0.1, L=0.1, Mbar=0.1)
    r = diagnose(s, alpha=0.05, samples=20)
    assert r.adjoint_rel_error < 1e-12
    assert 1.9 <= r.taylor_order <= 2.2
    assert 0 <= r.eta_estimate < 1
    assert r.contraction_margin == pytest.approx(0.05 - 0.2 * 0.1)
    assert set(r.as_dict()) == {"adjoint_rel_error", "taylor_order", "eta_estimate", "contraction_margin"}
