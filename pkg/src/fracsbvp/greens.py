"""Green's function of the linear bilateral Caputo problem and its quadrature.

The linear problem is ``D^mu x + y = 0`` on (-1, 1) with ``x(+-1) = 0`` and
``x'(0+-) = 0``.  Its kernel is given branch-wise on the two diagonal
quadrants ``[-1,0]^2`` and ``[0,1]^2``; the representation builds ``x`` on
each half from ``y`` on the same half only, so under the default
zero-extension policy the kernel vanishes when ``t`` and ``tau`` have
strictly opposite signs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DivergenceSuspected, DomainError, IllPosedDataError, UndefinedRegionError
from .numerics import (
    Interval,
    QuadratureScheme,
    gamma,
    integrate_graded,
    pairwise_sum,
    quadrature_rule,
    refine_to_tolerance,
)

__all__ = [
    "FracOrder",
    "GridFn",
    "QuadrantPolicy",
    "RowIntegral",
    "GreenOperator",
    "green_eval",
    "green_row_integral",
    "row_integral_closed_form",
    "solve_linear",
    "symmetric_nodes",
]


@dataclass(frozen=True)
class FracOrder:
    """Derivative order ``mu`` in the half-open interval (1, 2]."""

    mu: float

    def __post_init__(self):
        mu = float(self.mu)
        if not (math.isfinite(mu) and 1.0 < mu <= 2.0):
            raise DomainError(f"mu out of (1,2]: {self.mu!r}")
        object.__setattr__(self, "mu", mu)

    @property
    def gamma_mu(self) -> float:
        return gamma(self.mu)

    @property
    def gamma_mu1(self) -> float:
        return gamma(self.mu + 1.0)


def as_order(mu) -> FracOrder:
    return mu if isinstance(mu, FracOrder) else FracOrder(mu)


class QuadrantPolicy(enum.Enum):
    ZERO_EXTENSION = "zero-extension"
    PAPER_LITERAL = "paper-literal"


def symmetric_nodes(n: int) -> np.ndarray:
    """``n`` equispaced nodes on [-1, 1], closed under negation exactly.

    ``n`` must be odd so that 0 is a node.
    """
    if n < 3 or n % 2 == 0:
        raise DomainError(f"symmetric grids need an odd node count >= 3, got {n}")
    half = np.linspace(0.0, 1.0, (n + 1) // 2)
    return np.concatenate([-half[:0:-1], half])


class GridFn:
    """A function sampled on a symmetric grid over [-1, 1].

    Parameters
    ----------
    nodes : array_like
        Strictly increasing, containing -1, 0 and 1, with ``-t`` a node for
        every node ``t`` (bitwise).
    values : array_like
        One value per node.
    symmetric : bool
        When set, ``values`` must satisfy ``value(t) == value(-t)`` exactly.
    """

    def __init__(self, nodes, values, symmetric: bool = False):
        nodes = np.array(nodes, dtype=float)
        values = np.array(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise DomainError("nodes and values must be 1-D arrays of equal length")
        if len(nodes) < 3 or np.any(np.diff(nodes) <= 0):
            raise DomainError("nodes must be strictly increasing")
        if nodes[0] != -1.0 or nodes[-1] != 1.0 or not np.array_equal(nodes, -nodes[::-1]):
            raise DomainError("nodes must be symmetric about 0 and span [-1, 1]")
        if symmetric and not np.array_equal(values, values[::-1]):
            raise DomainError("values flagged symmetric but value(t) != value(-t)")
        self.nodes = nodes
        self.values = values
        self.symmetric = symmetric
        self.nodes.flags.writeable = False
        self.values.flags.writeable = False

    @classmethod
    def from_half(cls, half_nodes, half_values) -> "GridFn":
        """Mirror values given on the nonnegative nodes into a symmetric GridFn."""
        half_nodes = np.asarray(half_nodes, dtype=float)
        half_values = np.asarray(half_values, dtype=float)
        nodes = np.concatenate([-half_nodes[:0:-1], half_nodes])
        values = np.concatenate([half_values[:0:-1], half_values])
        return cls(nodes, values, symmetric=True)

    @classmethod
    def sample(cls, func, n: int = 401, symmetric: bool = True) -> "GridFn":
        """Sample a vectorised ``func`` on :func:`symmetric_nodes`."""
        nodes = symmetric_nodes(n)
        if symmetric:
            half = nodes[nodes >= 0.0]
            return cls.from_half(half, np.broadcast_to(func(half), half.shape))
        return cls(nodes, np.broadcast_to(func(nodes), nodes.shape))

    @property
    def half_nodes(self) -> np.ndarray:
        return self.nodes[len(self.nodes) // 2:]

    @property
    def half_values(self) -> np.ndarray:
        return self.values[len(self.nodes) // 2:]

    def __call__(self, t):
        return np.interp(t, self.nodes, self.values)

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return f"GridFn(n={len(self.nodes)}, symmetric={self.symmetric})"


def green_eval(t, tau, mu, policy: QuadrantPolicy = QuadrantPolicy.ZERO_EXTENSION):
    """Evaluate the kernel ``G(t, tau)``.

    Arguments broadcast.  The value is computed on ``(|t|, |tau|)`` so
    ``G(t, tau) == G(-t, -tau)`` holds bitwise.

    Raises
    ------
    UndefinedRegionError
        Under ``PAPER_LITERAL`` when ``t * tau < 0`` anywhere.
    """
    order = as_order(mu)
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(np.abs(t) > 1.0) or np.any(np.abs(tau) > 1.0):
        raise DomainError("green_eval arguments must lie in [-1, 1]")
    mixed = t * tau < 0.0
    if policy is QuadrantPolicy.PAPER_LITERAL and np.any(mixed):
        raise UndefinedRegionError("kernel undefined for t and tau of opposite signs")
    s, sig = np.abs(t), np.abs(tau)
    p = order.mu - 1.0
    val = (1.0 - sig) ** p
    below = sig <= s
    val = np.where(below, val - np.where(below, s - sig, 0.0) ** p, val)
    val = np.maximum(val, 0.0) / order.gamma_mu
    val = np.where(mixed, 0.0, val)
    return val[()] if val.ndim == 0 else val


def row_integral_closed_form(t, mu, factor: float = 1.0):
    """``factor * (1 - |t|^mu) / Gamma(mu + 1)``; the original statement has factor 2."""
    order = as_order(mu)
    return factor * (1.0 - np.abs(t) ** order.mu) / order.gamma_mu1


@dataclass(frozen=True)
class RowIntegral:
    t: float
    mu: float
    value: float
    derived: float
    printed: float

    @property
    def ratio_to_printed(self) -> float:
        return self.value / self.printed if self.printed else math.nan


def _half_rows(t: float):
    # pieces of [0, 1] on which the kernel row is smooth
    if t <= 0.0:
        return [Interval(0.0, 1.0)]
    if t >= 1.0:
        return [Interval(0.0, 1.0)]
    return [Interval(0.0, t), Interval(t, 1.0)]


def green_row_integral(t: float, mu, scheme: QuadratureScheme | None = None) -> RowIntegral:
    """Quadrature of ``tau -> G(t, tau)`` over [-1, 1] (zero extension).

    For ``t >= 0`` only ``tau`` in [0, 1] contributes, for ``t < 0`` only
    [-1, 0]; ``t = 0`` takes the one-sided limit, which both sides share.
    The kink at ``tau = t`` is always a panel breakpoint.
    """
    order = as_order(mu)
    if not -1.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [-1, 1], got {t}")
    scheme = (scheme or QuadratureScheme.for_order(order.mu)).flagged(True, True)
    s = abs(t)
    total = 0.0
    for iv in _half_rows(s):
        value, _ = integrate_graded(lambda tau: green_eval(s, tau, order), iv, scheme)
        total += value
    return RowIntegral(
        t=float(t), mu=order.mu, value=total,
        derived=float(row_integral_closed_form(t, order, 1.0)),
        printed=float(row_integral_closed_form(t, order, 2.0)),
    )


class GreenOperator:
    """Discrete ``y -> int G(t_i, tau) y(tau) dtau`` on the nonnegative grid nodes.

    Each target row is integrated over [0, t_i] and [t_i, 1] with the graded
    rule, both ends flagged.  The kernel weights are precomputed once; so is
    the linear interpolation that carries grid values to quadrature nodes.
    """

    def __init__(self, half_nodes, mu, scheme: QuadratureScheme | None = None):
        order = as_order(mu)
        self.order = order
        self.half_nodes = np.asarray(half_nodes, dtype=float)
        self.scheme = (scheme or QuadratureScheme.for_order(order.mu)).flagged(True, True)
        h = self.half_nodes
        if h[0] != 0.0 or h[-1] != 1.0 or np.any(np.diff(h) <= 0):
            raise DomainError("half grid must increase from 0 to 1")
        ref_nodes, _ = quadrature_rule(Interval(0.0, 1.0), self.scheme)
        width = len(ref_nodes)
        rows = len(h)
        tau = np.full((rows, 2 * width), 0.5)
        wts = np.zeros((rows, 2 * width))
        for i, t in enumerate(h):
            if t >= 1.0:
                continue  # boundary row is exactly zero
            for j, iv in enumerate(_half_rows(t)):
                nodes, weights = quadrature_rule(iv, self.scheme)
                sl = slice(j * width, (j + 1) * width)
                tau[i, sl] = nodes
                wts[i, sl] = weights * green_eval(t, nodes, order)
        self.tau = tau
        self.weights = wts
        idx = np.clip(np.searchsorted(h, tau, side="right") - 1, 0, len(h) - 2)
        self._idx = idx
        self._frac = (tau - h[idx]) / (h[idx + 1] - h[idx])

    def interpolate(self, half_values):
        """Grid values (nonnegative half) at every quadrature node."""
        v = np.asarray(half_values, dtype=float)
        lo = v[self._idx]
        hi = v[self._idx + 1]
        return lo * (1.0 - self._frac) + hi * self._frac

    def apply(self, integrand_values):
        """Row sums of ``weights * integrand``; the ``t = 1`` row is zero."""
        out = pairwise_sum(self.weights * integrand_values, axis=1)
        out[-1] = 0.0
        return out

    @classmethod
    def for_grid(cls, nodes, mu, scheme=None) -> "GreenOperator":
        nodes = np.asarray(nodes, dtype=float)
        half = nodes[len(nodes) // 2:]
        scheme = (scheme or QuadratureScheme.for_order(as_order(mu).mu))
        return _cached_operator(half.tobytes(), as_order(mu).mu, scheme)


@lru_cache(maxsize=16)
def _cached_operator(half_bytes, mu, scheme):
    return GreenOperator(np.frombuffer(half_bytes), mu, scheme)


def solve_linear(y, mu, scheme: QuadratureScheme | None = None, nodes=None) -> GridFn:
    """Integral representation ``x(t) = int G(t, tau) y(tau) dtau``.

    Parameters
    ----------
    y : GridFn or callable
        Symmetric forcing.  A GridFn is carried to quadrature nodes by
        linear interpolation; a vectorised callable is sampled exactly.
    mu : float or FracOrder
    scheme : QuadratureScheme, optional
    nodes : array_like, optional
        Output grid when ``y`` is a callable (default 401 symmetric nodes).

    Returns
    -------
    GridFn
        Symmetric, with exact zeros at +-1.

    Raises
    ------
    IllPosedDataError
        If ``int (1-|t|)^(mu-1) |y|`` appears to diverge.
    """
    order = as_order(mu)
    if isinstance(y, GridFn):
        if not y.symmetric:
            raise DomainError("solve_linear needs symmetric forcing")
        grid = y.nodes
    else:
        grid = symmetric_nodes(401) if nodes is None else np.asarray(nodes, dtype=float)
        _check_integrable(y, order)
    op = GreenOperator.for_grid(grid, order, scheme)
    if isinstance(y, GridFn):
        forcing = op.interpolate(y.half_values)
    else:
        forcing = np.broadcast_to(np.asarray(y(op.tau), dtype=float), op.tau.shape)
    half = op.apply(forcing)
    half[-1] = 0.0
    return GridFn.from_half(op.half_nodes, half)


def _check_integrable(y, order: FracOrder):
    p = order.mu - 1.0
    try:
        refine_to_tolerance(
            lambda t: (1.0 - np.abs(t)) ** p * np.abs(y(t)),
            Interval(-1.0, 1.0), True, True, tol=1e-6, max_levels=6,
            scheme=QuadratureScheme.for_order(order.mu))
    except DivergenceSuspected as err:
        raise IllPosedDataError(f"forcing not integrable against (1-|t|)^(mu-1): {err}") from err
