"""Parameter identification in the 1D elliptic problem

    -(a u_s)_s + (b u)_s + c u = f   on (0, 1)

discretized by second-order finite differences.

* c-problem: find c (a = 1, b = 0), Dirichlet data; X = Y = L2.
* b-problem: find b (a = 1, c = 1), flux data ``-u_s + b u = g``; X = H1, Y = L2.
* a-problem: find a (b = c = 0), Dirichlet data; X = H1, Y = L2.

Derivatives are those of the discrete maps and adjoints are their exact
transposes in the discrete inner products, so dot tests hold to round-off.
"""

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityViolation, InvalidArgument, SingularMatrix
from .operators import Derivative, Operator, OperatorSystem
from .spaces import H1, interior_l2, trapezoid_l2
from .tridiag import TridiagonalMatrix, solve_tridiagonal


class ProblemKind(enum.Enum):
    A = "a"
    B = "b"
    C = "c"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().removesuffix("-problem").removesuffix("problem")
        try:
            return cls(key)
        except ValueError:
            raise InvalidArgument(f"unknown problem kind {value!r}") from None


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [0, 1] with ``n_interior`` interior nodes."""

    n_interior: int

    def __post_init__(self):
        if self.n_interior < 3:
            raise InvalidArgument("need at least 3 interior nodes")

    @property
    def h(self):
        return 1.0 / (self.n_interior + 1)

    @property
    def interior(self):
        return np.arange(1, self.n_interior + 1) * self.h

    @property
    def nodes(self):
        """All nodes including ``s = 0`` and ``s = 1``."""
        return np.linspace(0.0, 1.0, self.n_interior + 2)


@dataclass(frozen=True)
class EllipticProblemSpec:
    """Source term and boundary data of one experiment.

    ``f`` is a callable of ``s`` or an array of samples at the interior nodes.
    ``lower_bound`` is the admissibility floor of the unknown (a >= lower_bound
    for the a-problem, c >= lower_bound for the c-problem).
    """

    kind: ProblemKind
    f: object = 0.0
    g0: float = 0.0
    g1: float = 0.0
    lower_bound: float = field(default=None)

    def __post_init__(self):
        kind = ProblemKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.lower_bound is None:
            object.__setattr__(self, "lower_bound", {ProblemKind.A: 0.1, ProblemKind.C: 0.0}.get(kind, -np.inf))
        if kind is ProblemKind.A and not self.lower_bound > 0:
            raise InvalidArgument("the a-problem needs a positive lower bound")

    def source(self, grid):
        s = grid.interior
        if callable(self.f):
            vals = np.asarray(self.f(s), dtype=float)
        else:
            vals = np.asarray(self.f, dtype=float)
        vals = np.broadcast_to(vals, s.shape).astype(float)
        return vals


def reference_source(kind, i):
    """Default experiment ``i``: ``f(s) = sin((i+1) pi s)`` with fixed boundary data."""
    kind = ProblemKind.parse(kind)
    f = lambda s, k=i + 1: np.sin(k * np.pi * s)  # noqa: E731
    g0, g1 = {ProblemKind.C: (1.0, 1.0), ProblemKind.A: (0.0, 1.0), ProblemKind.B: (1.0, 1.0)}[kind]
    return EllipticProblemSpec(kind, f, g0, g1)


def smooth_direction(s, rng, modes=8):
    """Random smooth grid function: Fourier modes with coefficients ~ 1/(1+m)^2."""
    out = np.zeros_like(s)
    for m in range(modes):
        a, b = rng.standard_normal(2) / (1.0 + m) ** 2
        out += a * np.cos(m * np.pi * s) + b * np.sin((m + 1) * np.pi * s)
    return out


class _EllipticOperator(Operator):
    kind = None

    def __init__(self, grid, spec):
        spec = spec if isinstance(spec, EllipticProblemSpec) else EllipticProblemSpec(**spec)
        if spec.kind is not self.kind:
            raise InvalidArgument(f"{type(self).__name__} cannot use a {spec.kind.value}-problem spec")
        self.grid = grid
        self.spec = spec
        self.f = spec.source(grid)

    def parameter_nodes(self):
        return self.grid.nodes

    def random_direction(self, rng):
        return smooth_direction(self.parameter_nodes(), rng)

    def solve(self, x):
        return self.linearize(x)[0]


class CProblem(_EllipticOperator):
    """``c -> u(c)`` with ``-u_ss + c u = f``, ``u(0) = g0``, ``u(1) = g1``.

    c and u live on the interior nodes.
    """

    kind = ProblemKind.C

    def __init__(self, grid, spec):
        super().__init__(grid, spec)
        n, h = grid.n_interior, grid.h
        self.domain = interior_l2(n, h)
        self.codomain = interior_l2(n, h)

    def parameter_nodes(self):
        return self.grid.interior

    def check_admissible(self, c):
        c = super().check_admissible(c)
        if np.any(c < self.spec.lower_bound):
            raise AdmissibilityViolation(
                f"c drops to {c.min():.3g}, below the admissible floor {self.spec.lower_bound:g}"
            )
        return c

    def gamma(self, c):
        n, h = self.grid.n_interior, self.grid.h
        off = np.full(n - 1, -1.0 / h**2)
        return TridiagonalMatrix(off, 2.0 / h**2 + c, off.copy())

    def linearize(self, c):
        c = self.check_admissible(c)
        h = self.grid.h
        G = self.gamma(c)
        rhs = self.f.copy()
        rhs[0] += self.spec.g0 / h**2
        rhs[-1] += self.spec.g1 / h**2
        u = solve_tridiagonal(G, rhs)
        if u.min() <= 0:
            warnings.warn("u(c) is not bounded away from zero; c is not identifiable there", RuntimeWarning)
        X, Y = self.domain, self.codomain

        def apply(dc):
            return solve_tridiagonal(G, -X.check(dc) * u)

        def adjoint(w):
            # Gamma is symmetric
            return X.riesz(-u * solve_tridiagonal(G, Y.gram(w)))

        return u, Derivative(apply, adjoint)


class AProblem(_EllipticOperator):
    """``a -> u(a)`` with ``-(a u_s)_s = f``, ``u(0) = g0``, ``u(1) = g1``.

    a lives on all nodes (midpoint values are arithmetic means); u on the
    interior nodes.
    """

    kind = ProblemKind.A

    def __init__(self, grid, spec):
        super().__init__(grid, spec)
        n, h = grid.n_interior, grid.h
        self.domain = H1(n + 2, h)
        self.codomain = interior_l2(n, h)

    def check_admissible(self, a):
        a = super().check_admissible(a)
        if np.any(a < self.spec.lower_bound):
            raise AdmissibilityViolation(
                f"a drops to {a.min():.3g}, below the lower bound {self.spec.lower_bound:g}"
            )
        return a

    def stiffness(self, a):
        h2 = self.grid.h ** 2
        am = 0.5 * (a[:-1] + a[1:])
        off = -am[1:-1] / h2
        return TridiagonalMatrix(off, (am[:-1] + am[1:]) / h2, off.copy()), am

    def linearize(self, a):
        a = self.check_admissible(a)
        h2 = self.grid.h ** 2
        A, am = self.stiffness(a)
        rhs = self.f.copy()
        rhs[0] += am[0] * self.spec.g0 / h2
        rhs[-1] += am[-1] * self.spec.g1 / h2
        u = solve_tridiagonal(A, rhs)
        du = np.diff(np.concatenate(([self.spec.g0], u, [self.spec.g1])))
        X, Y = self.domain, self.codomain

        def flux_divergence(da):
            flux = 0.5 * (da[:-1] + da[1:]) * du
            return (flux[1:] - flux[:-1]) / h2

        def flux_divergence_T(z):
            zz = np.concatenate(([0.0], z, [0.0]))
            e = du * (zz[:-1] - zz[1:]) / h2
            g = np.zeros(len(e) + 1)
            g[:-1] += 0.5 * e
            g[1:] += 0.5 * e
            return g

        def apply(da):
            return solve_tridiagonal(A, flux_divergence(X.check(da)))

        def adjoint(w):
            return X.riesz(flux_divergence_T(solve_tridiagonal(A, Y.gram(w))))

        return u, Derivative(apply, adjoint)


class BProblem(_EllipticOperator):
    """``b -> u(b)`` with ``-u_ss + (b u)_s + u = f`` and flux conditions
    ``-u_s(0) + b u(0) = g0``, ``-u_s(1) + b u(1) = g1``.

    b and u live on all nodes. The boundary rows use one-sided second-order
    differences for ``u_s``; their third entry is eliminated against the
    neighbouring interior row so the system stays tridiagonal.
    """

    kind = ProblemKind.B

    def __init__(self, grid, spec):
        super().__init__(grid, spec)
        n, h = grid.n_interior, grid.h
        self.domain = H1(n + 2, h)
        self.codomain = trapezoid_l2(n + 2, h)

    def system(self, b):
        """Return the eliminated tridiagonal ``T = E L(b)`` and the row operation ``E``.

        ``E`` is the identity except for rows 0 and n+1, which are
        ``s0 (e_0 - g0 e_1)`` and ``s1 (e_{n+1} - g1 e_n)``.
        """
        h = self.grid.h
        m = len(b)
        lower = -1.0 / h**2 - b[:-1] / (2 * h)  # L[j, j-1], j = 1..m-1
        upper = -1.0 / h**2 + b[1:] / (2 * h)  # L[j, j+1], j = 0..m-2
        diag = np.full(m, 2.0 / h**2 + 1.0)
        if min(abs(upper[1]), abs(lower[-2])) <= 1e-10 / h**2:
            raise SingularMatrix("boundary elimination pivot vanishes; b is too large for this grid")

        # row 0: (3u0 - 4u1 + u2)/(2h) + b0 u0; eliminate u2 with row 1
        r0 = np.array([1.5 / h + b[0], -2.0 / h, 0.5 / h])
        gam0 = r0[2] / upper[1]
        d0 = r0[0] - gam0 * lower[0]
        u0 = r0[1] - gam0 * diag[1]
        # row n+1: (-3u_{n+1} + 4u_n - u_{n-1})/(2h) + b u_{n+1}; eliminate u_{n-1} with row n
        rn = np.array([-0.5 / h, 2.0 / h, -1.5 / h + b[-1]])
        gam1 = rn[0] / lower[-2]
        ln = rn[1] - gam1 * diag[-2]
        dn = rn[2] - gam1 * upper[-1]
        s1 = -1.0

        diag[0], diag[-1] = d0, s1 * dn
        upper = upper.copy()
        lower = lower.copy()
        upper[0] = u0
        lower[-1] = s1 * ln
        return TridiagonalMatrix(lower, diag, upper), (gam0, gam1, s1)

    @staticmethod
    def _apply_E(E, r):
        gam0, gam1, s1 = E
        r = r.copy()
        r[0] = r[0] - gam0 * r[1]
        r[-1] = s1 * (r[-1] - gam1 * r[-2])
        return r

    @staticmethod
    def _apply_ET(E, z):
        gam0, gam1, s1 = E
        z = z.copy()
        z[1] -= gam0 * z[0]
        z[-1] *= s1
        z[-2] -= gam1 * z[-1]
        return z

    def linearize(self, b):
        b = self.check_admissible(b)
        h = self.grid.h
        T, E = self.system(b)
        rhs = np.concatenate(([self.spec.g0], self.f, [self.spec.g1]))
        u = solve_tridiagonal(T, self._apply_E(E, rhs))
        X, Y = self.domain, self.codomain

        def convection(db):
            # d/db of the operator rows applied to u
            r = np.empty_like(u)
            r[0] = db[0] * u[0]
            r[-1] = db[-1] * u[-1]
            r[1:-1] = (db[2:] * u[2:] - db[:-2] * u[:-2]) / (2 * h)
            return r

        def convection_T(z):
            g = np.zeros_like(u)
            g[0] += u[0] * z[0]
            g[-1] += u[-1] * z[-1]
            g[2:] += u[2:] * z[1:-1] / (2 * h)
            g[:-2] -= u[:-2] * z[1:-1] / (2 * h)
            return g

        def apply(db):
            return -solve_tridiagonal(T, self._apply_E(E, convection(X.check(db))))

        def adjoint(w):
            z = self._apply_ET(E, solve_tridiagonal(T.T, Y.gram(w)))
            return -X.riesz(convection_T(z))

        return u, Derivative(apply, adjoint)


_OPERATORS = {ProblemKind.A: AProblem, ProblemKind.B: BProblem, ProblemKind.C: CProblem}


def make_operator(grid, spec):
    return _OPERATORS[spec.kind](grid, spec)


def c_solve(c, spec, grid):
    return CProblem(grid, spec).solve(c)


def c_derivative_apply(c, h_dir, grid, spec):
    return CProblem(grid, spec).derivative(c, h_dir)


def c_adjoint_apply(c, w, grid, spec):
    return CProblem(grid, spec).adjoint(c, w)


def b_solve(b, spec, grid):
    return BProblem(grid, spec).solve(b)


def b_derivative_apply(b, h_dir, grid, spec):
    return BProblem(grid, spec).derivative(b, h_dir)


def b_adjoint_apply(b, w, grid, spec):
    return BProblem(grid, spec).adjoint(b, w)


def a_solve(a, spec, grid):
    return AProblem(grid, spec).solve(a)


def a_derivative_apply(a, h_dir, grid, spec):
    return AProblem(grid, spec).derivative(a, h_dir)


def a_adjoint_apply(a, w, grid, spec):
    return AProblem(grid, spec).adjoint(a, w)


# Named parameter profiles, as functions of s.
PROFILES = {
    "one": lambda s: np.ones_like(s),
    "zero": lambda s: np.zeros_like(s),
    "bump": lambda s: 1.0 + s * (1.0 - s),
    "ramp": lambda s: 1.0 + s,
    "sine": lambda s: 0.1 * np.sin(np.pi * s),
    "gauss": lambda s: 1.0 + 0.5 * np.exp(-50.0 * (s - 0.5) ** 2),
}

DEFAULT_X0 = {ProblemKind.A: "one", ProblemKind.B: "zero", ProblemKind.C: "one"}


def profile(name, operator):
    """Sample a named profile on ``operator``'s parameter nodes."""
    try:
        fn = PROFILES[name]
    except KeyError:
        raise InvalidArgument(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
    return fn(operator.parameter_nodes())


def build_system(kind, N=None, grid=None, sources=None, x0=None, **constants):
    """Bundle ``N`` experiments sharing one unknown coefficient.

    ``sources`` defaults to :func:`reference_source` for ``i = 0..N-1``;
    ``x0`` to the kind's constant default profile. Remaining keyword
    arguments (``rho``, ``eta``, ``M``, ``L``, ``Mbar``) go to
    :class:`OperatorSystem`.
    """
    kind = ProblemKind.parse(kind)
    grid = grid if grid is not None else Grid1D(199)
    if sources is None:
        if N is None or N < 1:
            raise InvalidArgument("N must be at least 1")
        sources = [reference_source(kind, i) for i in range(N)]
    sources = list(sources)
    if N is not None and N != len(sources):
        raise InvalidArgument(f"N = {N} but {len(sources)} sources were given")
    if not sources:
        raise InvalidArgument("need at least one source")
    if any(s.kind is not kind for s in sources):
        raise InvalidArgument("all sources must be of the system's kind")
    ops = tuple(make_operator(grid, s) for s in sources)
    if x0 is None:
        x0 = DEFAULT_X0[kind]
    if isinstance(x0, str):
        x0 = profile(x0, ops[0])
    return OperatorSystem(ops, x0, **constants)


def synthesize_data(system, x_true):
    """Exact data ``y_i = F_i(x_true)``."""
    return [op(x_true) for op in system.operators]
