"""Tridiagonal matrices and the Thomas recursion."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, SingularMatrix

# Pivots smaller than this (relative to the largest diagonal entry) are zero.
_PIVOT_FLOOR = 1e-300


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Square tridiagonal matrix stored by its three diagonals.

    Row ``j`` reads ``sub[j-1] x[j-1] + diag[j] x[j] + sup[j] x[j+1]``.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if n < 1 or len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise InvalidArgument(
                f"diagonal lengths {len(self.sub)}, {n}, {len(self.sup)} are inconsistent"
            )

    @property
    def n(self):
        return len(self.diag)

    @property
    def T(self):
        return TridiagonalMatrix(self.sup, self.diag, self.sub)

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[:-1] += self.sup * x[1:]
        y[1:] += self.sub * x[:-1]
        return y

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.sup, 1) + np.diag(self.sub, -1)

    def solve(self, rhs):
        return solve_tridiagonal(self, rhs)


def solve_tridiagonal(m, rhs):
    """Solve ``m x = rhs`` by forward elimination and back substitution.

    No pivoting is done, so the recursion is exact (up to round-off) for the
    diagonally dominant and M-matrix systems produced by the elliptic
    schemes. A zero pivot raises :class:`SingularMatrix`.
    """
    b = np.asarray(rhs, dtype=float)
    n = m.n
    if b.shape != (n,):
        raise InvalidArgument(f"rhs has shape {b.shape}, expected ({n},)")
    a, d, c = m.sub.tolist(), m.diag.tolist(), m.sup.tolist()
    b = b.tolist()
    floor = max(max(abs(v) for v in d), 1.0) * _PIVOT_FLOOR

    cp = [0.0] * n
    dp = [0.0] * n
    piv = d[0]
    if not abs(piv) > floor:
        raise SingularMatrix("zero pivot in row 0")
    if n > 1:
        cp[0] = c[0] / piv
    dp[0] = b[0] / piv
    for j in range(1, n):
        piv = d[j] - a[j - 1] * cp[j - 1]
        if not abs(piv) > floor:
            raise SingularMatrix(f"zero pivot in row {j}")
        if j < n - 1:
            cp[j] = c[j] / piv
        dp[j] = (b[j] - a[j - 1] * dp[j - 1]) / piv

    x = dp
    for j in range(n - 2, -1, -1):
        x[j] = dp[j] - cp[j] * x[j + 1]
    return np.array(x)
