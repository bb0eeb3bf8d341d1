"""Iterated Tikhonov-Kaczmarz (iTK) and loping iTK (l-iTK) regularization for
systems of nonlinear ill-posed equations, with 1D elliptic parameter
identification benchmarks."""

from .elliptic import (
    AProblem,
    BProblem,
    CProblem,
    EllipticProblemSpec,
    Grid1D,
    ProblemKind,
    build_system,
    profile,
    synthesize_data,
)
from .errors import (
    AdmissibilityViolation,
    ConfigError,
    DegenerateNoise,
    DegenerateSample,
    InvalidArgument,
    SingularMatrix,
)
from .inner import InnerConfig, InnerResult, solve_subproblem, tikhonov_objective
from .kaczmarz import (
    Method,
    RunTrace,
    SolverConfig,
    StepRecord,
    StopReason,
    choose_alpha,
    choose_tau,
    kappa,
    run_itk,
    run_litk,
)
from .operators import (
    DiagnosticsReport,
    LinearOperator,
    Operator,
    OperatorSystem,
    check_adjoint,
    estimate_constants,
    estimate_tangential_cone,
    taylor_test,
)

__version__ = "0.1.0"
