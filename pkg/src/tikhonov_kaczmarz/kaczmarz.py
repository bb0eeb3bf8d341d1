"""Cyclic iterated Tikhonov-Kaczmarz iterations.

``run_itk`` performs one Tikhonov step per equation in cyclic order and stops
at the start of the first cycle in which some residual drops to
``tau * delta_i``. ``run_litk`` computes the same steps as candidates but only
accepts those whose residual stays at or above ``tau * delta_i`` (the loping
weight); it stops at the first cycle in which every candidate was rejected.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .inner import InnerConfig, solve_subproblem

log = logging.getLogger(__name__)


class Method(enum.Enum):
    ITK = "itk"
    LITK = "litk"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "")
        try:
            return cls(key)
        except ValueError:
            raise InvalidArgument(f"unknown method {value!r}; use 'itk' or 'litk'") from None


class StopReason(enum.Enum):
    DISCREPANCY = "Discrepancy"
    CYCLE_STATIONARY = "CycleStationary"
    BUDGET = "Budget"
    EXACT_DATA_BUDGET = "ExactDataBudget"
    INNER_FAILURE = "InnerFailure"


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    tau: float
    method: Method = Method.LITK
    max_cycles: int = 10000
    inner: InnerConfig = field(default_factory=InnerConfig)
    use_loping_shortcut: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        if not self.alpha > 0:
            raise InvalidArgument("alpha must be positive")
        if not self.tau > 1:
            raise InvalidArgument("tau must exceed 1")
        if self.max_cycles < 1:
            raise InvalidArgument("max_cycles must be at least 1")


@dataclass(frozen=True)
class StepRecord:
    k: int
    op_index: int
    omega: int
    residual_pre: float
    residual_post: float
    inner_iterations: int
    error_to_truth: float = None


@dataclass
class RunTrace:
    steps: list
    stop_index: int
    stop_reason: StopReason
    final_x: np.ndarray
    iterates: list = field(default=None, repr=False)

    @property
    def omegas(self):
        return [s.omega for s in self.steps]

    @property
    def total_inner_iterations(self):
        return sum(s.inner_iterations for s in self.steps)

    @property
    def loped_steps(self):
        return sum(1 for s in self.steps if s.omega == 0)


def cycle_index(k, N):
    """``k mod N``: the equation used at step ``k``."""
    if N < 1:
        raise InvalidArgument("N must be at least 1")
    return k % N


def choose_tau(eta, margin=0.1):
    """A tau strictly above ``(1 + eta) / (1 - eta)``."""
    if not 0 <= eta < 1:
        raise InvalidArgument("eta must lie in [0, 1)")
    if not margin > 0:
        raise InvalidArgument("margin must be positive")
    return (1 + eta) / (1 - eta) * (1 + margin)


def choose_alpha(delta_max, rho, margin=0.1, alpha_floor=1.0):
    """``max(alpha_floor, 16/3 (delta_max / rho)^2 (1 + margin))``."""
    if not rho > 0:
        raise InvalidArgument("rho must be positive")
    if delta_max < 0:
        raise InvalidArgument("delta_max must be nonnegative")
    return max(alpha_floor, 16.0 / 3.0 * (delta_max / rho) ** 2 * (1 + margin))


def kappa(eta, M, alpha):
    """Factor in the final-residual bound ``|F_i(x) - y_i| < kappa tau delta_i``."""
    if not eta < 1:
        raise InvalidArgument("eta must be below 1")
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive")
    return ((1 + eta) + M**2 / alpha) / (1 - eta)


def loping_weight(residual_half, delta_i, tau):
    """1 if the candidate residual is at least ``tau * delta_i``, else 0."""
    return 1 if residual_half >= tau * delta_i else 0


def itk_step_bound(alpha, tau, eta, delta_min, initial_error):
    """Upper bound on the iTK stopping index from the monotonicity estimate.

    Valid when ``tau (1 - eta) > 1 + eta`` and ``delta_min > 0``.
    """
    gap = tau * (1 - eta) - (1 + eta)
    if not gap > 0 or not delta_min > 0:
        return math.inf
    return math.ceil(1 + alpha * initial_error**2 / (2 * tau * delta_min**2 * gap))


def litk_cycle_bound(alpha, tau, eta, delta_min, initial_error):
    """Upper bound on the number of non-stationary l-iTK cycles."""
    gap = tau * (1 - eta) - (1 + eta)
    if not gap > 0 or not delta_min > 0:
        return math.inf
    return math.ceil(alpha * initial_error**2 / (2 * tau * delta_min**2 * gap))


def _prepare(system, y_noisy, delta, truth):
    N = system.N
    if len(y_noisy) != N:
        raise InvalidArgument(f"expected {N} data vectors, got {len(y_noisy)}")
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (N,)).copy()
    if np.any(delta < 0):
        raise InvalidArgument("noise levels must be nonnegative")
    ys = [op.codomain.check(y) for op, y in zip(system.operators, y_noisy)]
    if truth is not None:
        truth = system.domain.check(truth)
    return ys, delta, truth


def _error(system, x, truth):
    return None if truth is None else system.domain.norm(x - truth)


def run_itk(system, y_noisy, delta, truth=None, cfg=None, keep_iterates=False):
    """Iterated Tikhonov-Kaczmarz with the discrepancy stopping rule.

    After every step the new residual of the equation just used is compared
    with ``tau * delta_i``; equations with ``delta_i = 0`` never trigger. The
    run stops after the triggering step and reports the start of its cycle
    as ``stop_index``, with ``final_x`` the iterate there.
    """
    if cfg is None:
        raise InvalidArgument("a SolverConfig is required")
    ys, delta, truth = _prepare(system, y_noisy, delta, truth)
    N = system.N
    exact = not np.any(delta > 0)
    x = system.x0.copy()
    history = [x]
    cycle_start_x = x
    steps = []
    for k in range(cfg.max_cycles * N):
        i = cycle_index(k, N)
        if i == 0:
            cycle_start_x = x
        op = system.operators[i]
        res_pre = op.codomain.norm(op(x) - ys[i])
        out = solve_subproblem(system, i, x, ys[i], cfg.alpha, cfg.inner)
        if out.non_contraction:
            steps.append(StepRecord(k, i, 1, res_pre, res_pre, out.iterations, _error(system, x, truth)))
            log.warning("inner solve did not contract at step %d", k)
            return RunTrace(steps, k, StopReason.INNER_FAILURE, x, history if keep_iterates else None)
        if not out.converged:
            log.warning("inner solve hit max_inner at step %d (step %.3g)", k, out.step_norm)
        x = out.x_next
        history.append(x)
        steps.append(StepRecord(k, i, 1, res_pre, out.residual, out.iterations, _error(system, x, truth)))
        if delta[i] > 0 and out.residual <= cfg.tau * delta[i]:
            stop = k - i
            return RunTrace(steps, stop, StopReason.DISCREPANCY, cycle_start_x, history if keep_iterates else None)
    reason = StopReason.EXACT_DATA_BUDGET if exact else StopReason.BUDGET
    return RunTrace(steps, cfg.max_cycles * N, reason, x, history if keep_iterates else None)


def run_litk(system, y_noisy, delta, truth=None, cfg=None, keep_iterates=False):
    """Loping iterated Tikhonov-Kaczmarz, stopped at the first stationary cycle.

    With ``use_loping_shortcut`` a step whose current residual is already
    below ``tau * delta_i`` is loped without solving the subproblem: the
    candidate's residual cannot be larger than the current one.
    """
    if cfg is None:
        raise InvalidArgument("a SolverConfig is required")
    ys, delta, truth = _prepare(system, y_noisy, delta, truth)
    N = system.N
    exact = not np.any(delta > 0)
    x = system.x0.copy()
    history = [x]
    steps = []
    accepted_in_cycle = 0
    for k in range(cfg.max_cycles * N):
        i = cycle_index(k, N)
        if i == 0:
            accepted_in_cycle = 0
        op = system.operators[i]
        res_pre = op.codomain.norm(op(x) - ys[i])
        threshold = cfg.tau * delta[i]
        if cfg.use_loping_shortcut and res_pre < threshold:
            steps.append(StepRecord(k, i, 0, res_pre, res_pre, 0, _error(system, x, truth)))
        else:
            out = solve_subproblem(system, i, x, ys[i], cfg.alpha, cfg.inner)
            if out.non_contraction:
                steps.append(StepRecord(k, i, 1, res_pre, res_pre, out.iterations, _error(system, x, truth)))
                log.warning("inner solve did not contract at step %d", k)
                return RunTrace(steps, k, StopReason.INNER_FAILURE, x, history if keep_iterates else None)
            if not out.converged:
                log.warning("inner solve hit max_inner at step %d (step %.3g)", k, out.step_norm)
            omega = loping_weight(out.residual, delta[i], cfg.tau)
            if omega:
                x = out.x_next
                accepted_in_cycle += 1
                res_post = out.residual
            else:
                res_post = res_pre
            steps.append(StepRecord(k, i, omega, res_pre, res_post, out.iterations, _error(system, x, truth)))
        history.append(x)
        if i == N - 1 and accepted_in_cycle == 0:
            return RunTrace(steps, k + 1 - N, StopReason.CYCLE_STATIONARY, x, history if keep_iterates else None)
    reason = StopReason.EXACT_DATA_BUDGET if exact else StopReason.BUDGET
    return RunTrace(steps, cfg.max_cycles * N, reason, x, history if keep_iterates else None)


def run(system, y_noisy, delta, truth=None, cfg=None, keep_iterates=False):
    """Dispatch on ``cfg.method``."""
    fn = run_itk if cfg.method is Method.ITK else run_litk
    return fn(system, y_noisy, delta, truth, cfg, keep_iterates)
