"""Nonlinear forward operators, systems of them, and numerical checks of the
regularity assumptions (derivative bound, tangential cone, Lipschitz).

Parameters and data are plain 1-D arrays. Each operator carries a ``domain``
and a ``codomain`` :class:`~tikhonov_kaczmarz.spaces.Space`; all norms and
adjoints are taken with respect to those.
"""

import abc
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import AdmissibilityViolation, DegenerateSample, InvalidArgument
from .spaces import WeightedL2

# Pairs whose data differ by less than this are skipped by the cone estimator.
CONE_DENOMINATOR_FLOOR = 1e-14


class Derivative:
    """Frechet derivative at a fixed point, with its Hilbert-space adjoint."""

    def __init__(self, apply, adjoint):
        self._apply = apply
        self._adjoint = adjoint

    def __call__(self, h):
        return self._apply(h)

    def adjoint(self, w):
        return self._adjoint(w)


class Operator(abc.ABC):
    """A Frechet-differentiable map ``F: D subset X -> Y``.

    Subclasses implement :meth:`linearize`, returning the value ``F(x)`` and
    the derivative ``F'(x)``. Linearizing once and reusing the result is how
    the solvers avoid repeated state solves.
    """

    domain = None
    codomain = None

    @abc.abstractmethod
    def linearize(self, x):
        """Return ``(F(x), Derivative)``."""

    def __call__(self, x):
        return self.linearize(x)[0]

    def derivative(self, x, h):
        return self.linearize(x)[1](h)

    def adjoint(self, x, w):
        return self.linearize(x)[1].adjoint(w)

    def check_admissible(self, x):
        """Raise :class:`AdmissibilityViolation` if ``x`` is outside the domain."""
        x = self.domain.check(x)
        if not np.all(np.isfinite(x)):
            raise AdmissibilityViolation("parameter has non-finite entries")
        return x

    def random_direction(self, rng):
        """A random nonzero direction in the domain, used by the estimators."""
        return rng.standard_normal(self.domain.size)


class LinearOperator(Operator):
    """``F(x) = A x``; the derivative is ``A`` everywhere."""

    def __init__(self, matrix, domain=None, codomain=None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        m, n = self.matrix.shape
        self.domain = domain if domain is not None else euclidean(n)
        self.codomain = codomain if codomain is not None else euclidean(m)

    def linearize(self, x):
        x = self.check_admissible(x)
        A = self.matrix
        X, Y = self.domain, self.codomain
        return A @ x, Derivative(lambda h: A @ X.check(h), lambda w: X.riesz(A.T @ Y.gram(w)))


def euclidean(n):
    """Plain Euclidean inner product on R^n."""
    return WeightedL2(np.ones(n))


@dataclass(frozen=True)
class OperatorSystem:
    """``N`` equations ``F_i(x) = y_i`` sharing one unknown and one initial guess.

    ``rho`` is the radius of the ball around ``x0`` the analysis lives in;
    ``eta`` the tangential-cone constant; ``M`` the derivative bound; ``L``
    the joint Lipschitz constant of ``F_i`` and ``F_i'``; ``Mbar`` the bound
    on residuals over the ball.
    """

    operators: tuple
    x0: np.ndarray
    rho: float = 1.0
    eta: float = 0.0
    M: float = 1.0
    L: float = 1.0
    Mbar: float = 1.0

    def __post_init__(self):
        ops = tuple(self.operators)
        if not ops:
            raise InvalidArgument("a system needs at least one operator")
        object.__setattr__(self, "operators", ops)
        x0 = np.array(ops[0].domain.check(self.x0), dtype=float)
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if not self.rho > 0:
            raise InvalidArgument("rho must be positive")
        if not 0 <= self.eta < 1:
            raise InvalidArgument("eta must lie in [0, 1)")
        for name in ("M", "L", "Mbar"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")

    @property
    def N(self):
        return len(self.operators)

    @property
    def domain(self):
        return self.operators[0].domain

    def operator(self, i):
        if not 0 <= i < self.N:
            raise InvalidArgument(f"operator index {i} outside [0, {self.N})")
        return self.operators[i]

    def contraction_margin(self, alpha):
        """``alpha - (Mbar + M) L``; positive when the Tikhonov steps are unique."""
        return alpha - (self.Mbar + self.M) * self.L

    def certifies(self, alpha):
        return self.contraction_margin(alpha) > 0

    def with_constants(self, **constants):
        return replace(self, **constants)


@dataclass(frozen=True)
class DiagnosticsReport:
    adjoint_rel_error: float
    taylor_order: float
    eta_estimate: float
    contraction_margin: float

    def as_dict(self):
        return {
            "adjoint_rel_error": self.adjoint_rel_error,
            "taylor_order": self.taylor_order,
            "eta_estimate": self.eta_estimate,
            "contraction_margin": self.contraction_margin,
        }


def forward(system, i, x):
    """Evaluate ``F_i(x)``."""
    return system.operator(i)(x)


def jacobian_apply(system, i, x, h):
    """Evaluate ``F_i'(x) h``."""
    return system.operator(i).derivative(x, h)


def adjoint_apply(system, i, x, w):
    """Evaluate ``F_i'(x)^* w`` in the operator's declared inner products."""
    return system.operator(i).adjoint(x, w)


def check_adjoint(system, i, x, trials=20, seed=0):
    """Largest relative dot-test mismatch over ``trials`` random pairs.

    Each trial draws ``h`` from the operator's random directions and white
    noise ``w`` in Y, and compares
    ``<F'h, w>_Y`` with ``<h, F'* w>_X``, normalized by ``|F'h| |w|``.
    """
    if trials < 1:
        raise InvalidArgument("trials must be at least 1")
    op = system.operator(i)
    X, Y = op.domain, op.codomain
    _, deriv = op.linearize(x)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        h = op.random_direction(rng)
        w = rng.standard_normal(Y.size)
        Fh = deriv(h)
        lhs = Y.inner(Fh, w)
        rhs = X.inner(h, deriv.adjoint(w))
        scale = Y.norm(Fh) * Y.norm(w)
        if scale == 0.0:
            mismatch = abs(lhs - rhs)
        else:
            mismatch = abs(lhs - rhs) / scale
        worst = max(worst, mismatch)
    return worst


def taylor_remainders(system, i, x, h, steps):
    op = system.operator(i)
    Y = op.codomain
    Fx, deriv = op.linearize(x)
    dFh = deriv(h)
    out = []
    for t in steps:
        Fxt = op(x + t * h)
        r = Y.norm(Fxt - Fx - t * dFh)
        floor = 8 * np.finfo(float).eps * (Y.norm(Fx) + Y.norm(Fxt) + t * Y.norm(dFh))
        out.append((r, floor))
    return out


def taylor_test(system, i, x, h, steps):
    """Observed order of the first-order Taylor remainder.

    Returns the least-squares slope of ``log |F(x+th) - F(x) - t F'(x)h|``
    against ``log t``. A remainder at round-off level for every step (linear
    maps, ``h = 0``) is reported as ``inf``.
    """
    steps = np.asarray(steps, dtype=float)
    if steps.ndim != 1 or len(steps) < 3:
        raise InvalidArgument("need at least three steps")
    if np.any(steps <= 0) or np.any(np.diff(steps) >= 0):
        raise InvalidArgument("steps must be positive and strictly decreasing")
    rem = taylor_remainders(system, i, x, h, steps)
    keep = [(t, r) for t, (r, floor) in zip(steps, rem) if r > floor]
    if len(keep) < 2:
        return math.inf
    t, r = np.array(keep).T
    return float(np.polyfit(np.log(t), np.log(r), 1)[0])


def _ball_point(op, center, rho, rng):
    d = op.random_direction(rng)
    nd = op.domain.norm(d)
    if nd == 0.0:
        return center.copy()
    return center + (rho * rng.uniform() / nd) * d


def estimate_tangential_cone(system, i, x_center, rho, samples=100, seed=0):
    """Sampled estimate of the tangential-cone constant on a ball.

    For random pairs ``x, xb`` in the ball of radius ``rho`` around
    ``x_center`` returns the largest
    ``|F(x) - F(xb) - F'(xb)(x - xb)| / |F(x) - F(xb)|``. Pairs with a
    denominator below 1e-14 or an inadmissible point are skipped.
    """
    if samples < 1:
        raise InvalidArgument("samples must be at least 1")
    if not rho > 0:
        raise InvalidArgument("rho must be positive")
    op = system.operator(i)
    Y = op.codomain
    center = op.domain.check(x_center)
    rng = np.random.default_rng(seed)
    eta = None
    for _ in range(samples):
        x = _ball_point(op, center, rho, rng)
        xb = _ball_point(op, center, rho, rng)
        try:
            Fx = op(x)
            Fxb, deriv = op.linearize(xb)
        except AdmissibilityViolation:
            continue
        diff = Fx - Fxb
        denom = Y.norm(diff)
        if denom < CONE_DENOMINATOR_FLOOR:
            continue
        ratio = Y.norm(diff - deriv(x - xb)) / denom
        eta = ratio if eta is None else max(eta, ratio)
    if eta is None:
        raise DegenerateSample("every sampled pair was skipped")
    return eta


def operator_norm(deriv, domain, codomain, rng, iterations=30):
    """Norm of a linear map ``X -> Y`` by power iteration on ``A^* A``."""
    v = rng.standard_normal(domain.size)
    nv = domain.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    lam = 0.0
    for _ in range(iterations):
        u = deriv.adjoint(deriv(v))
        lam = domain.norm(u)
        if lam == 0.0:
            return 0.0
        v = u / lam
    return math.sqrt(lam)


def estimate_derivative_bound(system, i, x_center, rho, samples=5, seed=0):
    """Sampled ``sup |F_i'(x)|`` over the ball (always includes the center)."""
    op = system.operator(i)
    rng = np.random.default_rng(seed)
    center = op.domain.check(x_center)
    points = [center] + [_ball_point(op, center, rho, rng) for _ in range(samples)]
    best = 0.0
    for x in points:
        try:
            _, deriv = op.linearize(x)
        except AdmissibilityViolation:
            continue
        best = max(best, operator_norm(deriv, op.domain, op.codomain, rng))
    return best


def estimate_lipschitz(system, i, x_center, rho, samples=10, seed=0):
    """Sampled Lipschitz constant of ``x -> (F_i(x), F_i'(x))`` on the ball."""
    op = system.operator(i)
    X, Y = op.domain, op.codomain
    rng = np.random.default_rng(seed)
    center = X.check(x_center)
    best = None
    for _ in range(samples):
        x = _ball_point(op, center, rho, rng)
        xb = _ball_point(op, center, rho, rng)
        dist = X.norm(x - xb)
        if dist == 0.0:
            continue
        try:
            Fx, dx = op.linearize(x)
            Fxb, dxb = op.linearize(xb)
        except AdmissibilityViolation:
            continue
        diff = Derivative(lambda h: dx(h) - dxb(h), lambda w: dx.adjoint(w) - dxb.adjoint(w))
        ratio = (Y.norm(Fx - Fxb) + operator_norm(diff, X, Y, rng)) / dist
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise DegenerateSample("every sampled pair was skipped")
    return best


def estimate_residual_bound(system, i, x_center, rho, y, delta=0.0, samples=10, seed=0):
    """Sampled ``sup |F_i(x) - y_i^delta|`` over the ball and all data within ``delta``."""
    op = system.operator(i)
    rng = np.random.default_rng(seed)
    center = op.domain.check(x_center)
    points = [center] + [_ball_point(op, center, rho, rng) for _ in range(samples)]
    best = 0.0
    for x in points:
        try:
            best = max(best, op.codomain.norm(op(x) - y))
        except AdmissibilityViolation:
            continue
    return best + delta


def estimate_constants(system, y, delta=None, samples=20, seed=0):
    """Estimate ``eta, M, L, Mbar`` at ``system.x0`` over the system's ball.

    Returns a dict suitable for :meth:`OperatorSystem.with_constants`.
    """
    delta = np.zeros(system.N) if delta is None else np.broadcast_to(delta, (system.N,))
    x0, rho = system.x0, system.rho
    eta = M = L = Mbar = 0.0
    for i in range(system.N):
        s = seed + 7919 * i
        eta = max(eta, estimate_tangential_cone(system, i, x0, rho, samples, s))
        M = max(M, estimate_derivative_bound(system, i, x0, rho, max(samples // 4, 1), s))
        L = max(L, estimate_lipschitz(system, i, x0, rho, max(samples // 2, 1), s))
        Mbar = max(Mbar, estimate_residual_bound(system, i, x0, rho, y[i], float(delta[i]), samples, s))
    return {"eta": eta, "M": M, "L": L, "Mbar": Mbar}


def diagnose(system, alpha, trials=20, samples=100, seed=0, steps=None):
    """Run the adjoint, Taylor and cone checks at ``x0`` for every equation.

    The reported values are worst cases over the equations: largest adjoint
    mismatch, smallest Taylor order, largest cone constant. The contraction
    margin uses the constants declared on ``system``.
    """
    if steps is None:
        steps = 1e-2 * 2.0 ** -np.arange(7)
    rng = np.random.default_rng(seed)
    adj, order, eta = 0.0, math.inf, 0.0
    for i in range(system.N):
        op = system.operator(i)
        adj = max(adj, check_adjoint(system, i, system.x0, trials, seed + i))
        h = op.random_direction(rng)
        h = h / op.domain.norm(h)
        order = min(order, taylor_test(system, i, system.x0, h, steps))
        eta = max(eta, estimate_tangential_cone(system, i, system.x0, system.rho, samples, seed + i))
    return DiagnosticsReport(adj, order, eta, system.contraction_margin(alpha))
