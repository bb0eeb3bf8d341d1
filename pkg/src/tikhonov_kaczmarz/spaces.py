"""Discrete Hilbert-space structures on grid functions.

A vector is a plain 1-D ndarray; the space it lives in supplies the Gram
matrix that turns Euclidean algebra into the discrete L2 or H1 geometry.
Adjoints of linear maps ``A: X -> Y`` are then ``X.riesz(A.T @ Y.gram(w))``.
"""

import enum

import numpy as np

from .errors import InvalidArgument
from .tridiag import TridiagonalMatrix, solve_tridiagonal


class InnerProductKind(enum.Enum):
    L2 = "L2"
    H1 = "H1"


class Space:
    """Grid functions with a symmetric positive definite tridiagonal Gram matrix."""

    kind = None

    def __init__(self, size, gram):
        if size < 1:
            raise InvalidArgument("a space needs at least one degree of freedom")
        self.size = int(size)
        self._gram = gram

    @property
    def gram_matrix(self):
        return self._gram

    def gram(self, v):
        return self._gram.matvec(self.check(v))

    def riesz(self, v):
        """Solve ``G x = v``; maps a Euclidean gradient to the space's gradient."""
        return solve_tridiagonal(self._gram, self.check(v))

    def inner(self, u, v):
        return float(np.dot(self.check(u), self.gram(v)))

    def norm(self, v):
        return float(np.sqrt(max(self.inner(v, v), 0.0)))

    def check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise InvalidArgument(f"vector of shape {v.shape} does not belong to a space of size {self.size}")
        return v

    def zeros(self):
        return np.zeros(self.size)

    def __repr__(self):
        return f"{type(self).__name__}(size={self.size})"


class WeightedL2(Space):
    """Discrete L2 with a diagonal (quadrature) weight."""

    kind = InnerProductKind.L2

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=float)
        if np.any(weights <= 0):
            raise InvalidArgument("quadrature weights must be positive")
        n = len(weights)
        super().__init__(n, TridiagonalMatrix(np.zeros(n - 1), weights, np.zeros(n - 1)))
        self.weights = weights

    def gram(self, v):
        return self.weights * self.check(v)

    def riesz(self, v):
        return self.check(v) / self.weights

    def inner(self, u, v):
        return float(np.dot(self.weights * self.check(u), self.check(v)))


def interior_l2(n, h):
    """L2 on interior nodes of a Dirichlet problem; boundary residuals vanish, so
    trapezoid weights reduce to ``h`` everywhere."""
    return WeightedL2(np.full(n, h))


def trapezoid_l2(n, h):
    """L2 with trapezoid weights on ``n`` nodes spanning ``[0, 1]``."""
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return WeightedL2(w)


class H1(Space):
    """Discrete H1 on ``n`` nodes spanning ``[0, 1]``.

    Gram matrix = trapezoid mass + first-difference stiffness. As an operator
    this is ``psi -> -psi_ss + psi`` with reflected ghost nodes, i.e. the
    Neumann closure of the embedding adjoint.
    """

    kind = InnerProductKind.H1

    def __init__(self, n, h):
        if n < 2:
            raise InvalidArgument("H1 needs at least two nodes")
        mass = np.full(n, h)
        mass[0] = mass[-1] = h / 2
        stiff = np.full(n, 2.0 / h)
        stiff[0] = stiff[-1] = 1.0 / h
        off = np.full(n - 1, -1.0 / h)
        super().__init__(n, TridiagonalMatrix(off, mass + stiff, off.copy()))
        self.h = h
