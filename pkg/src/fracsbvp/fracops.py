"""Riemann-Liouville integrals and Caputo derivatives on the half intervals.

Left operators act on [0, 1] with base point 0, right operators on [-1, 0]
with base point 0 and are obtained from the left ones by ``t -> -t``.
Sampled data are interpolated by a quintic spline; the Caputo derivative
integrates the spline's second derivative against ``(t - tau)^(1 - mu)``
with Gauss-Jacobi on the panel touching ``t`` and Gauss-Legendre elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.special import roots_jacobi, roots_legendre

from .errors import DomainError
from .greens import FracOrder, GridFn, as_order
from .numerics import Interval, QuadratureScheme, gamma, integrate_graded

__all__ = [
    "InsufficientSmoothnessError",
    "SampledFn",
    "ResidualReport",
    "rl_int_left",
    "rl_int_right",
    "caputo_left",
    "caputo_right",
    "verify_solution_form",
    "bilateral_residual",
]

GAUSS_POINTS = 10


class InsufficientSmoothnessError(DomainError):
    """Caputo derivative requested of data declared less than C^2."""


class SampledFn:
    """Samples of a function on one half interval.

    Parameters
    ----------
    nodes : array_like
        Strictly increasing; must cover [0, 1] or [-1, 0].
    values : array_like
    smoothness : int
        Declared number of continuous derivatives.  Caputo derivatives
        need at least 2.
    """

    def __init__(self, nodes, values, smoothness: int = 2):
        self.nodes = np.array(nodes, dtype=float)
        self.values = np.array(values, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape or len(self.nodes) < 2:
            raise DomainError("SampledFn needs matching 1-D nodes and values")
        if np.any(np.diff(self.nodes) <= 0):
            raise DomainError("SampledFn nodes must be strictly increasing")
        if int(smoothness) < 0:
            raise DomainError("smoothness hint must be >= 0")
        self.smoothness = int(smoothness)
        self._spline = None

    @classmethod
    def sample(cls, func, nodes, smoothness: int = 2) -> "SampledFn":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.broadcast_to(func(nodes), nodes.shape), smoothness)

    @property
    def spline(self):
        if self._spline is None:
            k = min(5, len(self.nodes) - 1)
            self._spline = make_interp_spline(self.nodes, self.values, k=k)
        return self._spline

    def mirrored(self) -> "SampledFn":
        """The function ``t -> self(-t)``."""
        return SampledFn(-self.nodes[::-1], self.values[::-1], self.smoothness)

    def __call__(self, t):
        return self.spline(t)


def _check_range(x: SampledFn, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < x.nodes[0]) or np.any(t > x.nodes[-1]):
        raise DomainError(f"evaluation point outside [{x.nodes[0]}, {x.nodes[-1]}]")
    return t


def rl_int_left(x, mu: float, t):
    """``(1/Gamma(mu)) int_0^t (t - tau)^(mu-1) x(tau) dtau`` for ``mu > 0``.

    ``x`` is a :class:`SampledFn` on [0, 1] or a vectorised callable; a
    callable is integrated exactly, which matters when ``x`` itself has a
    power-law singularity at 0.
    """
    if not mu > 0:
        raise DomainError("integration order must be positive")
    if isinstance(x, SampledFn):
        if x.nodes[0] != 0.0:
            raise DomainError("rl_int_left needs samples starting at 0")
        t = _check_range(x, t)
    else:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0):
            raise DomainError("rl_int_left needs t >= 0")
    g = gamma(mu)
    scheme = QuadratureScheme(grading_exponent=10.0).flagged(True, True)

    def one(s):
        if s == 0.0:
            return 0.0
        val, _ = integrate_graded(lambda tau: (s - tau) ** (mu - 1.0) * x(tau),
                                  Interval(0.0, s), scheme)
        return val / g

    out = np.array([one(s) for s in np.atleast_1d(t)])
    return out.reshape(t.shape)[()] if t.ndim == 0 else out.reshape(t.shape)


def rl_int_right(x: SampledFn, mu: float, t):
    """Mirror of :func:`rl_int_left`: ``int_t^0 (tau - t)^(mu-1) x(tau) dtau / Gamma(mu)``."""
    if x.nodes[-1] != 0.0:
        raise DomainError("rl_int_right needs samples ending at 0")
    return rl_int_left(x.mirrored(), mu, -np.asarray(t, dtype=float))


@lru_cache(maxsize=4)
def _legendre(n: int):
    return roots_legendre(n)


@lru_cache(maxsize=32)
def _jacobi(n: int, alpha: float):
    return roots_jacobi(n, alpha, 0.0)


def _panels(breaks, t):
    """Split [0, t] so that every panel is at least as far from ``t`` as it is wide."""
    pts = [p for p in np.unique(breaks) if 0.0 < p < t]
    pts = [0.0] + pts + [t]
    out = []
    right = pts[-1]
    last_left = pts[-2]
    out.append((last_left, right))
    # walk leftwards, splitting panels that are too close to t
    hi = last_left
    for lo in reversed(pts[:-2]):
        while hi - lo > t - hi and hi > lo:
            mid = max(hi - (t - hi), lo)
            out.append((mid, hi))
            hi = mid
        if hi > lo:
            out.append((lo, hi))
        hi = lo
    return out[::-1]


def _caputo_core(d2, breaks, mu: float, t: float) -> float:
    """``(1/Gamma(2-mu)) int_0^t d2(tau) (t - tau)^(1-mu) dtau`` for ``t > 0``."""
    if mu == 2.0:
        return float(d2(np.array([t]))[0])
    alpha = 1.0 - mu
    xg, wg = _legendre(GAUSS_POINTS)
    xj, wj = _jacobi(GAUSS_POINTS, alpha)
    panels = np.array(_panels(breaks, t))
    a, b = panels[:, 0], panels[:, 1]
    h = 0.5 * (b - a)
    # Legendre nodes on every panel but the last, Jacobi nodes on the last;
    # one spline call for all of them
    tau = np.concatenate([(a[:-1, None] + h[:-1, None] * (xg + 1.0)).ravel(),
                          a[-1] + h[-1] * (xj + 1.0)])
    vals = d2(tau)
    k = GAUSS_POINTS * (len(panels) - 1)
    smooth = vals[:k].reshape(-1, GAUSS_POINTS) * (t - tau[:k].reshape(-1, GAUSS_POINTS)) ** alpha
    parts = list(h[:-1] * (smooth @ wg))
    # (t - tau)^alpha = h^alpha (1 - u)^alpha, absorbed into the Jacobi weight
    parts.append(h[-1] ** (1.0 + alpha) * np.dot(wj, vals[k:]))
    return math.fsum(parts) / gamma(2.0 - mu)


def _require_c2(x: SampledFn):
    if x.smoothness < 2:
        raise InsufficientSmoothnessError(
            f"Caputo derivative needs smoothness >= 2, data declared C^{x.smoothness}")


def caputo_left(x: SampledFn, mu, t):
    """Left Caputo derivative of order ``mu`` in (1, 2] with base point 0."""
    order = as_order(mu)
    _require_c2(x)
    if x.nodes[0] != 0.0:
        raise DomainError("caputo_left needs samples starting at 0")
    t = _check_range(x, t)
    # the affine chord has zero second derivative; removing it keeps spline
    # roundoff (amplified by 1/h^2) out of the result for near-affine data
    n, v = x.nodes, x.values
    chord = v[0] + (v[-1] - v[0]) * (n - n[0]) / (n[-1] - n[0])
    r = v - chord
    # remainders at rounding level carry no curvature information
    r[np.abs(r) <= 16.0 * np.finfo(float).eps * np.max(np.abs(v))] = 0.0
    rem = SampledFn(n, r, x.smoothness)
    d2 = rem.spline.derivative(2)
    breaks = np.unique(rem.spline.t)
    out = np.array([_caputo_core(d2, breaks, order.mu, s) if s > 0 else math.nan
                    for s in np.atleast_1d(t)])
    return out.reshape(t.shape)[()] if t.ndim == 0 else out.reshape(t.shape)


def caputo_right(x: SampledFn, mu, t):
    """Right Caputo derivative on [-1, 0]; the mirror image of :func:`caputo_left`.

    With the base point at 0 and ``t < 0`` the operator reads
    ``(1/Gamma(2-mu)) int_t^0 (tau - t)^(1-mu) x''(tau) dtau``.
    """
    if x.nodes[-1] != 0.0:
        raise DomainError("caputo_right needs samples ending at 0")
    return caputo_left(x.mirrored(), mu, -np.asarray(t, dtype=float))


@dataclass
class ResidualReport:
    """Sup-norm residual over the nodes that were checked."""

    sup: float
    nodes: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    skipped: int = 0


def verify_solution_form(mu, y, coeffs, side: str = "left", n: int = 201,
                         margin: float = 0.05) -> ResidualReport:
    """Check that ``x = b1 + b2 |t| - I^mu y`` satisfies ``D^mu x + y = 0``.

    The candidate is composed on ``n`` nodes of the chosen half interval,
    differentiated with the Caputo operator of that side, and the residual
    is measured on nodes at distance at least ``margin`` from both ends.

    Parameters
    ----------
    mu : float or FracOrder
    y : callable
        Forcing on the half interval, vectorised.
    coeffs : tuple of float
        ``(b1, b2)``; on the right side the linear term is ``b2 * (-t)``.
    side : {"left", "right"}
    """
    order = as_order(mu)
    if side not in ("left", "right"):
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    b1, b2 = coeffs
    s = np.linspace(0.0, 1.0, n)
    ys = SampledFn.sample(y if side == "left" else (lambda u: y(-u)), s)
    xs = b1 + b2 * s - rl_int_left(ys, order.mu, s)
    cand = SampledFn(s, xs, smoothness=2)
    keep = (s >= margin) & (s <= 1.0 - margin)
    d = _caputo_split(cand, order, s[keep], True)
    yv = ys.values[keep]
    res = np.abs(d + yv)
    nodes = s[keep] if side == "left" else -s[keep]
    return ResidualReport(sup=float(res.max()), nodes=nodes, residuals=res)


def _leading_part(nodes, values, mu: float, k: int = 8):
    """Fit ``a + b t + sum_j c_j t^(mu+j)`` on the first ``k`` nodes from the base point.

    Solutions expand in these powers at the base point, where a spline
    cannot follow the ``t^(mu-2)`` blow-up of ``x''``.  Only the
    fractional powers are returned.
    """
    powers = (mu, mu + 1.0, mu + 2.0)
    k = min(k, len(nodes))
    a = np.column_stack([np.ones(k), nodes[:k]] + [nodes[:k] ** p for p in powers])
    coef = np.linalg.lstsq(a, values[:k], rcond=None)[0][2:]
    return powers, coef


def _caputo_split(sampled: SampledFn, order: FracOrder, t, subtract: bool):
    if not subtract or order.mu == 2.0:
        return caputo_left(sampled, order, t)
    powers, coef = _leading_part(sampled.nodes, sampled.values, order.mu)
    lead = sum(c * sampled.nodes ** p for c, p in zip(coef, powers))
    rem = SampledFn(sampled.nodes, sampled.values - lead, sampled.smoothness)
    exact = sum(c * gamma(p + 1.0) / gamma(p + 1.0 - order.mu) * t ** (p - order.mu)
                for c, p in zip(coef, powers))
    return caputo_left(rem, order, t) + exact


def bilateral_residual(x: GridFn, f, mu=None, band: float = 0.95,
                       subtract_leading: bool = True) -> ResidualReport:
    """``sup |D^mu x(t) + f(t, x(t))|`` over grid nodes with ``0 < |t| <= band``.

    Parameters
    ----------
    x : GridFn
        Candidate solution, positive at every interior node.
    f : ProblemSpec or callable
        Either an object with ``mu`` and ``f_values(t, x)`` or a callable
        ``f(t, x)``; in the latter case ``mu`` is required.
    band : float
        Nodes with ``|t| > band`` are excluded because the Caputo operator
        is stiff near the boundary.  ``t = 0`` is excluded because the
        integral there is taken over an empty interval.
    subtract_leading : bool
        Remove fitted ``|t|^(mu+j)`` terms, j = 0, 1, 2, before spline
        differentiation and add its exact derivative back.
    """
    if hasattr(f, "f_values"):
        order = as_order(f.mu if mu is None else mu)
        fv = f.f_values
    else:
        if mu is None:
            raise DomainError("mu is required when f is a plain callable")
        order = as_order(mu)
        fv = f
    if not 0.0 < band < 1.0:
        raise DomainError("band must lie in (0, 1)")
    interior = np.abs(x.nodes) < 1.0
    if np.any(x.values[interior] <= 0.0):
        raise DomainError("candidate solution must be positive at interior nodes")
    mid = len(x.nodes) // 2
    pos_half = SampledFn(x.half_nodes, x.half_values, smoothness=2)
    neg_half = SampledFn(-x.nodes[mid::-1], x.values[mid::-1], smoothness=2)
    keep = (np.abs(x.nodes) <= band) & (x.nodes != 0.0)
    t = x.nodes[keep]
    d = np.empty_like(t)
    pos = t > 0
    d[pos] = _caputo_split(pos_half, order, t[pos], subtract_leading)
    # right operator on [-1, 0] is the left operator of the mirrored data
    d[~pos] = _caputo_split(neg_half, order, -t[~pos], subtract_leading)
    res = np.abs(d + np.asarray(fv(t, x.values[keep]), dtype=float))
    return ResidualReport(sup=float(res.max()) if res.size else 0.0, nodes=t, residuals=res,
                          skipped=int(len(x.nodes) - keep.sum()))
