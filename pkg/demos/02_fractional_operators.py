"""Caputo derivatives and the bilateral residual.

The left Caputo derivative of order mu in (1, 2] integrates x'' against
(t - tau)^(1 - mu).  Affine functions are annihilated and tau^2 maps to
2 t^(2 - mu) / Gamma(3 - mu).  The bilateral residual applies the right
derivative on [-1, 0] and the left one on [0, 1].
"""

# %%
import numpy as np

from fracsbvp.fracops import SampledFn, bilateral_residual, caputo_left, caputo_right
from fracsbvp.greens import solve_linear
from fracsbvp.numerics import gamma

mu = 1.5
s = np.linspace(0, 1, 201)
t = np.array([0.1, 0.5, 0.9])
print("D(1 + 2t):", caputo_left(SampledFn(s, 1 + 2 * s), mu, t))
print("D(t^2):   ", caputo_left(SampledFn(s, s ** 2), mu, t))
print("exact:    ", 2 * t ** (2 - mu) / gamma(3 - mu))

# %% The right derivative is the mirror image of the left one
sm = -s[::-1]
right = caputo_right(SampledFn(sm, np.cos(sm)), mu, -t)
left = caputo_left(SampledFn(s, np.cos(s)), mu, t)
print("mirror defect:", np.max(np.abs(right - left)))

# %% Round trip: solve the linear problem and measure the residual
def y(t):
    return 1 + 0.5 * np.cos(np.pi * t)


x = solve_linear(y, mu)
rep = bilateral_residual(x, lambda t, _x: y(t), mu)
print(f"residual sup {rep.sup:.2e} over {len(rep.nodes)} nodes, skipped {rep.skipped}")
