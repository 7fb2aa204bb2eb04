"""The Green's kernel of the bilateral problem.

For mu in (1, 2] the linear problem with x(+-1) = x'(0+-) = 0 is solved by
x(t) = int G(t, tau) y(tau) dtau.  G vanishes when t and tau have opposite
signs, so each half of [-1, 1] only sees its own forcing.
"""

# %%
import numpy as np

from fracsbvp.greens import (FracOrder, QuadrantPolicy, green_eval, green_row_integral,
                             solve_linear)
from fracsbvp.errors import UndefinedRegionError

mu = FracOrder(1.9)
tau = np.linspace(-1, 1, 9)
print("G(0.5, tau):", np.round(green_eval(0.5, tau, mu), 4))

# %% Mixed signs are zero by default and undefined under the literal reading
try:
    green_eval(0.5, -0.5, mu, QuadrantPolicy.PAPER_LITERAL)
except UndefinedRegionError as err:
    print("literal policy:", err)

# %% Row integrals.  The closed form has no factor 2; the original statement has one.
for t in (0.0, 0.5, 0.9):
    r = green_row_integral(t, mu)
    print(f"t={t:.1f}  quadrature={r.value:.12f}  closed form={r.derived:.12f}  "
          f"ratio to printed={r.ratio_to_printed:.10f}")

# %% Linear oracle: y = Gamma(mu+1) gives x = 1 - |t|^mu
x = solve_linear(lambda t: np.full_like(t, mu.gamma_mu1), mu)
print("sup error:", np.max(np.abs(x.values - (1 - np.abs(x.nodes) ** mu.mu))))
