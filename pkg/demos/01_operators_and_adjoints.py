"""
Forward operators, derivatives and adjoints
===========================================

The three benchmark problems map a coefficient to the solution of a 1D
boundary value problem. Each comes with its derivative and an adjoint that is
the exact discrete transpose under the problem's inner products, so the dot
test holds to round-off.
"""

import numpy as np

from tikhonov_kaczmarz import build_system, check_adjoint, taylor_test
from tikhonov_kaczmarz.elliptic import profile
from tikhonov_kaczmarz.operators import estimate_tangential_cone

# %%
# A two-source c-problem on the default 199-node grid: -u'' + c u = f_i.
system = build_system("c", 2)
op = system.operators[0]
c = profile("bump", op)  # c(s) = 1 + s(1 - s)
u = op(c)
print(f"c-problem: {len(c)} unknowns, u ranges over [{u.min():.3f}, {u.max():.3f}]")

# %%
# The dot test compares <F'h, w> with <h, F'* w>. The a- and b-problems
# measure the coefficient in H1, so their adjoint includes a Riesz solve.
for kind in "abc":
    s = build_system(kind, 2)
    print(f"{kind}-problem dot test mismatch: {check_adjoint(s, 0, s.x0):.1e}")

# %%
# The first-order Taylor remainder should shrink like t^2.
h = op.random_direction(np.random.default_rng(0))
steps = 1e-2 * 2.0 ** -np.arange(7)
print(f"Taylor slope at the bump: {taylor_test(system, 0, c, h, steps):.3f}")

# %%
# The tangential cone constant eta is what the convergence theory needs
# below 1; here it is only sampled, not proven.
eta = estimate_tangential_cone(system, 0, system.x0, rho=0.5, samples=100)
print(f"sampled cone constant on a ball of radius 0.5: {eta:.3f}")
