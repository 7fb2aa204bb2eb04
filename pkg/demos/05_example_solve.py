"""Solving the worked example.

The solver runs Picard iteration on the clamped problem for a growing
sequence of m and stops once consecutive stages agree.  The answer is a
tiny symmetric bump whose size follows from balancing x against
lambda * C * x^(-0.9).
"""

# %%
import time

import numpy as np

from fracsbvp.problem import example_problem
from fracsbvp.solver import SolverConfig, solve

t0 = time.perf_counter()
rep = solve(example_problem(lam=1e-16), SolverConfig(grid=401))
print(f"{rep.status} in {time.perf_counter() - t0:.2f}s, epsilon={rep.epsilon:.4f}")
for st in rep.stages:
    print(f"  m={st.m:.3g}  iterations={st.iterations}  fp={st.fp_residual:.1e}  "
          f"sup diff={st.sup_diff}")

# %% Shape and diagnostics
x = rep.x
print("x(0) =", x.values[len(x.values) // 2])
print("symmetry defect:", rep.symmetry_defect)
print("integral residual:", rep.integral_residual)
print("bilateral residual:", rep.bilateral_residual)
print("x / x(0) at t = 0, 0.5, 0.9:", np.round(x(np.array([0.0, 0.5, 0.9])) / x(0.0), 4))
