"""The implicit Tikhonov step

    x_next = argmin  |F(x) - y|^2 + alpha |x - x_center|^2,

computed through its optimality condition, the fixed-point equation

    x = x_center - alpha^{-1} F'(x)^* (F(x) - y).

The fixed-point map is a gradient step of length 1/(2 alpha) on the Tikhonov
objective, which is what makes the objective backtracking safeguard natural.
"""

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityViolation, InvalidArgument

log = logging.getLogger(__name__)

# Consecutive non-decreasing fixed-point steps that count as non-contraction.
NONCONTRACTION_PATIENCE = 5
# Armijo constant, and the relative size below which objective differences are
# treated as round-off by the safeguard.
_ARMIJO = 1e-4
_OBJECTIVE_SLACK = 1e-14
_MAX_HALVINGS = 40


class Safeguard(enum.Enum):
    NONE = "none"
    OBJECTIVE_BACKTRACK = "objective_backtrack"


@dataclass(frozen=True)
class InnerConfig:
    """Inner solver settings.

    ``tol`` is relative: iteration stops once a fixed-point step is at most
    ``tol * (1 + |x_center|)``.
    """

    tol: float = 1e-10
    max_inner: int = 100
    safeguard: Safeguard = Safeguard.OBJECTIVE_BACKTRACK

    def __post_init__(self):
        object.__setattr__(self, "safeguard", Safeguard(self.safeguard))
        if not self.tol > 0:
            raise InvalidArgument("tol must be positive")
        if self.max_inner < 1:
            raise InvalidArgument("max_inner must be at least 1")


@dataclass(frozen=True)
class InnerResult:
    x_next: np.ndarray
    iterations: int
    step_norm: float
    objective_start: float
    objective_end: float
    converged: bool
    non_contraction: bool = False
    residual: float = float("nan")


def _check_alpha(alpha):
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive")


def tikhonov_objective(system, i, x, x_center, y, alpha):
    """``|F_i(x) - y|_Y^2 + alpha |x - x_center|_X^2``."""
    _check_alpha(alpha)
    op = system.operator(i)
    return op.codomain.norm(op(x) - y) ** 2 + alpha * op.domain.norm(x - x_center) ** 2


def fixed_point_step(system, i, x_center, y, alpha, x_current):
    """``x_center - F_i'(x)^*(F_i(x) - y) / alpha`` at ``x = x_current``."""
    _check_alpha(alpha)
    op = system.operator(i)
    Fx, deriv = op.linearize(x_current)
    return x_center - deriv.adjoint(Fx - y) / alpha


class _Objective:
    """Objective evaluations that keep the latest linearization around."""

    def __init__(self, op, x_center, y, alpha):
        self.op, self.x_center, self.y, self.alpha = op, x_center, y, alpha

    def __call__(self, x):
        Fx, deriv = self.op.linearize(x)
        return self._evaluate(x, Fx, deriv)

    def candidate(self, x):
        """Like calling, but an inadmissible point has objective +inf."""
        try:
            Fx, deriv = self.op.linearize(x)
        except AdmissibilityViolation:
            return np.inf, np.nan, None, None
        return self._evaluate(x, Fx, deriv)

    def _evaluate(self, x, Fx, deriv):
        r = Fx - self.y
        res = self.op.codomain.norm(r)
        value = res**2 + self.alpha * self.op.domain.norm(x - self.x_center) ** 2
        return value, res, r, deriv


def solve_subproblem(system, i, x_center, y, alpha, cfg=None, x_init=None):
    """Minimize the Tikhonov objective by fixed-point iteration from ``x_center``.

    With the objective backtracking safeguard, a fixed-point step that does
    not decrease the objective sufficiently is halved until it does, so the
    objective never increases beyond round-off; candidates outside the
    admissible set count as infinitely bad. If the raw fixed-point step
    fails to shrink for five consecutive iterations, or (unsafeguarded)
    leaves the admissible set, the result is flagged ``non_contraction``
    (and not converged): the map is then not a contraction at the current
    point.
    """
    _check_alpha(alpha)
    cfg = cfg or InnerConfig()
    op = system.operator(i)
    X = op.domain
    x_center = X.check(x_center)
    J = _Objective(op, x_center, y, alpha)
    tol = cfg.tol * (1.0 + X.norm(x_center))

    J_start = J(x_center)[0]
    x = x_center.copy() if x_init is None else X.check(x_init).copy()
    Jx, res, r, deriv = J(x)

    prev_step = np.inf
    stalls = 0
    step = np.inf
    converged = non_contraction = False
    it = 0
    for it in range(1, cfg.max_inner + 1):
        d = x_center - deriv.adjoint(r) / alpha - x
        step = X.norm(d)
        if step <= tol:
            x = x + d
            Jx, res, r, deriv = J(x)
            converged = True
            break
        stalls = stalls + 1 if step >= prev_step else 0
        prev_step = step
        if stalls >= NONCONTRACTION_PATIENCE:
            non_contraction = True
            log.debug("fixed-point steps stopped shrinking at inner iteration %d", it)
            break

        theta = 1.0
        cand = J.candidate(x + d)
        if cfg.safeguard is Safeguard.OBJECTIVE_BACKTRACK:
            # -2 alpha |d|^2 is the directional derivative of J along d
            slack = _OBJECTIVE_SLACK * (1.0 + Jx)
            for _ in range(_MAX_HALVINGS):
                drop = Jx - cand[0]
                if drop > slack:
                    if drop >= _ARMIJO * 2 * alpha * theta * step**2:
                        break
                elif drop >= -slack:
                    # J differences are round-off here; judge by the
                    # fixed-point residual, which does not suffer cancellation
                    x_try = x + theta * d
                    if X.norm(x_center - cand[3].adjoint(cand[2]) / alpha - x_try) < step:
                        break
                theta *= 0.5
                cand = J.candidate(x + theta * d)
            else:
                log.debug("backtracking failed at inner iteration %d", it)
                non_contraction = True
                break
        elif not np.isfinite(cand[0]):
            log.debug("fixed-point step left the admissible set at inner iteration %d", it)
            non_contraction = True
            break
        x = x + theta * d
        Jx, res, r, deriv = cand

    return InnerResult(
        x_next=x,
        iterations=it,
        step_norm=float(step),
        objective_start=float(J_start),
        objective_end=float(Jx),
        converged=converged,
        non_contraction=non_contraction,
        residual=float(res),
    )
