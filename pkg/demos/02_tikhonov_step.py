"""
One Tikhonov step
=================

Each Kaczmarz step minimizes |F(x) - y|^2 + alpha |x - x_k|^2. The minimizer is
a fixed point of x -> x_k - F'(x)^*(F(x) - y) / alpha, which the inner solver
iterates with an objective backtracking safeguard.
"""

import numpy as np

from tikhonov_kaczmarz import InnerConfig, build_system, solve_subproblem, synthesize_data
from tikhonov_kaczmarz.elliptic import profile

system = build_system("c", 1)
truth = profile("bump", system.operators[0])
(y,) = synthesize_data(system, truth)
x0 = system.x0

# %%
# Larger alpha means a shorter, cheaper step.
for alpha in (10.0, 1.0, 0.1, 0.01):
    r = solve_subproblem(system, 0, x0, y, alpha)
    moved = system.domain.norm(r.x_next - x0)
    print(
        f"alpha={alpha:<5g} inner iterations={r.iterations:3d} "
        f"objective {r.objective_start:.3e} -> {r.objective_end:.3e}  step length {moved:.3e}"
    )

# %%
# Without the safeguard the raw fixed-point map can fail to contract when
# alpha is small; the solver flags this instead of returning garbage.
raw = solve_subproblem(system, 0, x0, y, 1e-4, InnerConfig(safeguard="none"))
print(f"unsafeguarded at alpha=1e-4: converged={raw.converged}, non_contraction={raw.non_contraction}")

# %%
# A scalar sanity check: for F(x) = x the step has the closed form
# (alpha x_k + y) / (alpha + 1).
from tikhonov_kaczmarz import LinearOperator, OperatorSystem  # noqa: E402

scalar = OperatorSystem((LinearOperator([[1.0]]),), np.array([1.0]))
print("scalar step:", solve_subproblem(scalar, 0, np.array([1.0]), np.array([0.0]), 1.0).x_next[0])
