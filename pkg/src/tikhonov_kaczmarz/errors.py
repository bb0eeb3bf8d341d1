"""Exception types raised by the solvers and problem operators."""


class InvalidArgument(ValueError):
    """A precondition on an argument was violated."""


class AdmissibilityViolation(ValueError):
    """A parameter left the admissible set of an operator."""


class SingularMatrix(ArithmeticError):
    """A zero (or vanishing) pivot was met in a tridiagonal factorization."""


class DegenerateSample(RuntimeError):
    """Every sampled pair was rejected, so no estimate could be formed."""


class DegenerateNoise(RuntimeError):
    """A noise draw had vanishing norm and could not be rescaled."""


class ConfigError(ValueError):
    """An experiment configuration file is malformed."""
