"""Regularised fixed-point solution of the nonlinear problem.

For each ``m`` the clamped operator

    T_m x(t) = int G(t, tau) f(tau, min(max(x(tau) + 1/m, 1/m), R)) dtau

is iterated to a fixed point ``x_m``; the stages ``m_0 < m_1 < ...`` are
warm-started from each other and stop once successive stage solutions
agree.  Work is done on the nonnegative half grid and mirrored, so every
iterate is exactly symmetric.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    ExpressionError,
    FracBVPError,
    NonConvergenceError,
)
from .fracops import bilateral_residual
from .greens import GreenOperator, GridFn, symmetric_nodes
from .numerics import QuadratureScheme
from .problem import HypothesisReport, ProblemSpec, check_hypotheses

__all__ = [
    "SolverConfig",
    "StageRecord",
    "SolutionReport",
    "clamp_m",
    "apply_T",
    "fixed_point_m",
    "solve",
]

log = logging.getLogger(__name__)

ENVELOPE_TOL = 1e-12
OMEGA_MIN = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    Tolerances are relative: a fixed-point or stage difference ``d`` is
    accepted when ``d <= tol * min(1, |x|_inf)``, which keeps them
    meaningful for solutions of size ``1e-8`` as well as ``1``.

    ``clamp_headroom`` sets how far ``1/m`` must sit below the solution
    before a stage is trusted: after each stage the next ``m`` is at least
    ``clamp_headroom / |x_m|_inf``.
    """

    grid: int = 401
    tol_fp: float = 1e-10
    tol_seq: float = 1e-8
    damping: float = 0.5
    adaptive_damping: bool = True
    max_iter: int = 500
    m0: int | None = None
    m_growth: float = 2.0
    max_stages: int = 8
    clamp_headroom: float = 1e9
    anderson_after: int = 50
    band: float = 0.95
    seed: int = 20240101
    scheme: QuadratureScheme | None = None

    def __post_init__(self):
        if self.grid < 3 or self.grid % 2 == 0:
            raise ConfigurationError("grid must be an odd node count >= 3")
        for name in ("tol_fp", "tol_seq", "clamp_headroom"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigurationError("damping must lie in (0, 1]")
        if self.max_iter < 1 or self.max_stages < 1:
            raise ConfigurationError("max_iter and max_stages must be >= 1")
        if self.m0 is not None and self.m0 < 1:
            raise ConfigurationError("m0 must be >= 1")
        if not self.m_growth > 1.0:
            raise ConfigurationError("m_growth must exceed 1")


def clamp_m(xval, m: int, R: float):
    """``min(max(x + 1/m, 1/m), R)``, elementwise."""
    if m < 1:
        raise ConfigurationError(f"m must be >= 1, got {m}")
    inv = 1.0 / m
    if not R > inv:
        raise ConfigurationError(f"R={R} must exceed 1/m={inv}")
    out = np.minimum(np.maximum(np.asarray(xval, dtype=float) + inv, inv), R)
    if not (np.all(out >= inv) and np.all(out <= R)):
        raise AssertionError("clamped argument left [1/m, R]")
    return out[()] if out.ndim == 0 else out


def _operator(p: ProblemSpec, nodes, scheme) -> GreenOperator:
    return GreenOperator.for_grid(nodes, p.mu, scheme)


def _T_half(op: GreenOperator, p: ProblemSpec, half_values, m: int | None):
    """One application on half-grid values; ``m=None`` leaves ``f`` unclamped."""
    xs = op.interpolate(half_values)
    if m is not None:
        xs = clamp_m(xs, m, p.R)
    fv = np.broadcast_to(np.asarray(p.f_values(op.tau, xs), dtype=float), op.tau.shape)
    return op.apply(fv)


def apply_T(x: GridFn, m: int, p: ProblemSpec, scheme: QuadratureScheme | None = None) -> GridFn:
    """``T_m x`` on the grid of ``x``; symmetric with exact zeros at +-1."""
    op = _operator(p, x.nodes, scheme)
    return GridFn.from_half(op.half_nodes, _T_half(op, p, x.half_values, m))


def _sup(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _rel_target(tol: float, scale: float) -> float:
    return tol * min(1.0, scale)


def fixed_point_m(m: int, p: ProblemSpec, cfg: SolverConfig, x0: GridFn,
                  operator: GreenOperator | None = None):
    """Damped Picard iteration ``x <- x + omega (T_m x - x)``.

    The damping starts at ``cfg.damping`` and adapts by a secant rule:
    along the last step ``T`` behaves like a scalar map of slope ``s``,
    for which ``omega = 1/(1 - s)`` is optimal.  The estimate is allowed to
    at most double ``omega`` per step and is clipped to (0, 1].  A step that
    raises the residual is rejected and the damping halved.  Once
    ``cfg.anderson_after`` steps have failed to reduce the residual,
    two-term Anderson mixing replaces the plain damped step.

    Returns
    -------
    x : GridFn
        The last iterate; its defect ``|x - T_m x|_inf`` is ``residual``.
    iterations : int
        Number of updates applied to ``x0``.
    residual : float

    Raises
    ------
    NonConvergenceError
        After ``cfg.max_iter`` updates, carrying the residual history.
    """
    op = operator or _operator(p, x0.nodes, cfg.scheme)
    x = np.array(x0.half_values, dtype=float)
    omega = cfg.damping
    history = []
    best = None
    stalls = 0
    prev = None
    dx_hist, dg_hist = [], []
    for it in range(cfg.max_iter + 1):
        tx = _T_half(op, p, x, m)
        g = tx - x
        r = _sup(g)
        history.append(r)
        if r <= _rel_target(cfg.tol_fp, _sup(tx)) or r == 0.0:
            return GridFn.from_half(op.half_nodes, x), it, r
        if it == cfg.max_iter:
            break
        if cfg.adaptive_damping and prev is not None:
            dx = x - prev[0]
            dd = dx - (tx - prev[1])
            den = float(np.dot(dx, dd))
            if den > 0.0:
                omega = min(float(np.dot(dx, dx)) / den, 2.0 * omega, 1.0)
                omega = max(omega, OMEGA_MIN)
        if best is not None and r >= best[1]:
            stalls += 1
            if cfg.adaptive_damping and stalls < cfg.anderson_after:
                # reject: go back to the best iterate with a shorter step
                prev = (x, tx)
                omega = max(0.5 * omega, OMEGA_MIN)
                x = best[0] + omega * best[2]
                continue
        else:
            best = (x, r, g)
        if stalls >= cfg.anderson_after and prev is not None:
            dx_hist.append(x - prev[0])
            dg_hist.append(g - (prev[1] - prev[0]))
            del dx_hist[:-2], dg_hist[:-2]
            dG = np.column_stack(dg_hist)
            gam = np.linalg.lstsq(dG, g, rcond=None)[0]
            step = x + omega * g - (np.column_stack(dx_hist) + omega * dG) @ gam
        else:
            step = x + omega * g
        prev = (x, tx)
        x = step
    raise NonConvergenceError(
        f"fixed point for m={m} not reached in {cfg.max_iter} iterations "
        f"(last residual {history[-1]:.3e})", history)


@dataclass
class StageRecord:
    m: int
    iterations: int
    fp_residual: float
    sup_diff: float | None


@dataclass
class SolutionReport:
    """Solution and diagnostics of :func:`solve`.

    ``status`` is ``"converged"``, ``"not-converged"`` (stages exhausted
    before successive solutions agreed) or ``"failed"`` (a stage's fixed
    point iteration broke down).  ``hypotheses_verified`` is False when the
    run went ahead with a fallback epsilon.
    """

    x: GridFn | None
    epsilon: float
    hypotheses: HypothesisReport
    hypotheses_verified: bool
    status: str = "failed"
    stages: list = field(default_factory=list)
    envelope_lo_factor1: np.ndarray | None = field(default=None, repr=False)
    envelope_lo_paper: np.ndarray | None = field(default=None, repr=False)
    envelope_hi: float | None = None
    lower_margin_factor1: float | None = None   # min of x - gamma_R (1-|t|^mu)/Gamma(mu+1)
    lower_margin_paper: float | None = None     # same with factor 2 and gamma_R
    lower_margin_paper_eps: float | None = None  # factor 2 and gamma_{R+eps}
    upper_margin: float | None = None
    lower_ok: bool | None = None
    upper_ok: bool | None = None
    symmetry_defect: float | None = None
    positivity_margin: float | None = None
    integral_residual: float | None = None
    bilateral_residual: float | None = None
    band: float = 0.95
    stage_diffs_monotone: bool | None = None
    notes: list = field(default_factory=list)
    failure_history: list = field(default_factory=list)

    @property
    def fp_residual(self) -> float | None:
        return self.stages[-1].fp_residual if self.stages else None

    def summary(self) -> dict:
        """Scalar fields only, for structured reports."""
        skip = {"x", "hypotheses", "envelope_lo_factor1", "envelope_lo_paper", "stages"}
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in skip}
        d["stages"] = [vars(s) for s in self.stages]
        d["fp_residual"] = self.fp_residual
        return d


def _envelope_shape(p: ProblemSpec, nodes):
    return (1.0 - np.abs(nodes) ** p.mu.mu) / p.mu.gamma_mu1


def _envelopes(p: ProblemSpec, nodes, gamma_R: float, gamma_R_eps: float | None):
    """Factor-1 lower envelope with gamma_R, and the factor-2 one as originally stated.

    That bound is stated with ``gamma_{R+eps}``; ``gamma_R`` is used
    when no epsilon was selected.
    """
    shape = _envelope_shape(p, nodes)
    lo1 = gamma_R * shape
    lo2 = 2.0 * (gamma_R_eps if gamma_R_eps is not None else gamma_R) * shape
    return lo1, lo2


def solve(p: ProblemSpec, cfg: SolverConfig | None = None,
          hypotheses: HypothesisReport | None = None) -> SolutionReport:
    """Run the ``m`` schedule and collect diagnostics.

    The first stage uses ``m0 = ceil(1/eps) + 1`` unless overridden.  Each
    further stage takes ``m`` at least ``m_growth`` times larger and at
    least ``clamp_headroom / |x_m|_inf``, so the shift ``1/m`` ends far
    below the solution's own scale.
    """
    cfg = cfg or SolverConfig()
    scheme = cfg.scheme or QuadratureScheme.for_order(p.mu.mu)
    hyp = hypotheses or check_hypotheses(p, scheme, cfg.seed)
    verified = hyp.passed
    eps = hyp.epsilon
    gamma_R = hyp.gamma_R if hyp.gamma_R is not None else float(p.gamma_values(p.R))
    upper = p.R - 2.0 * gamma_R / p.mu.gamma_mu1
    if eps is None:
        eps = 0.5 * upper if upper > 0 else 0.5 * p.R
    report = SolutionReport(x=None, epsilon=eps, hypotheses=hyp,
                            hypotheses_verified=verified, band=cfg.band)
    if not verified:
        report.notes.append("unverified hypotheses: proceeding with epsilon = half the upper endpoint")
    nodes = symmetric_nodes(cfg.grid)
    op = _operator(p, nodes, scheme)
    cfg_run = replace(cfg, scheme=scheme)
    lo1, lo2 = _envelopes(p, nodes, gamma_R, hyp.gamma_R_eps)
    report.envelope_lo_factor1, report.envelope_lo_paper = lo1, lo2
    report.envelope_hi = p.R - eps

    x = GridFn(nodes, lo1, symmetric=True)
    m = cfg.m0 if cfg.m0 is not None else math.ceil(1.0 / eps) + 1
    prev = None
    for _ in range(cfg.max_stages):
        try:
            xm, iters, res = fixed_point_m(m, p, cfg_run, x, op)
        except NonConvergenceError as err:
            report.status = "failed"
            report.failure_history = err.history
            report.notes.append(str(err))
            report.x = x
            return report
        except (ExpressionError, FracBVPError) as err:
            report.status = "failed"
            report.notes.append(f"stage m={m} failed: {err}")
            report.x = x
            return report
        diff = None if prev is None else _sup(xm.values - prev.values)
        report.stages.append(StageRecord(int(m), iters, res, diff))
        log.info("stage m=%d iterations=%d residual=%.3e diff=%s", m, iters, res, diff)
        x = xm
        scale = _sup(xm.values)
        if diff is not None and diff <= _rel_target(cfg.tol_seq, scale):
            report.status = "converged"
            break
        prev = xm
        nxt = math.ceil(cfg.m_growth * m)
        if scale > 0:
            nxt = max(nxt, math.ceil(min(cfg.clamp_headroom / scale, 1e300)))
        m = nxt
    else:
        report.status = "not-converged"
    report.x = x
    _diagnose(report, p, x, op, lo1, lo2, cfg)
    return report


def _diagnose(report: SolutionReport, p: ProblemSpec, x: GridFn, op, lo1, lo2, cfg):
    v = x.values
    interior = np.abs(x.nodes) < 1.0
    report.symmetry_defect = _sup(v - v[::-1])
    report.positivity_margin = float(np.min(v[interior]))
    # margins over interior nodes; all envelopes vanish at +-1
    report.lower_margin_factor1 = float(np.min((v - lo1)[interior]))
    gamma_R = report.hypotheses.gamma_R if report.hypotheses.gamma_R is not None else float(
        p.gamma_values(p.R))
    shape = _envelope_shape(p, x.nodes)
    report.lower_margin_paper = float(np.min((v - 2.0 * gamma_R * shape)[interior]))
    if report.hypotheses.gamma_R_eps is not None:
        report.lower_margin_paper_eps = float(np.min((v - lo2)[interior]))
    report.upper_margin = float(report.envelope_hi - np.max(v))
    report.lower_ok = bool(np.all(v >= lo1 - ENVELOPE_TOL))
    report.upper_ok = report.upper_margin >= 0.0
    diffs = [s.sup_diff for s in report.stages if s.sup_diff is not None]
    report.stage_diffs_monotone = all(b < a for a, b in zip(diffs, diffs[1:]))
    try:
        tx = _T_half(op, p, x.half_values, None)
        report.integral_residual = _sup((tx - x.half_values)[:-1])
    except (ExpressionError, FracBVPError) as err:
        report.notes.append(f"integral-equation residual unavailable: {err}")
    try:
        report.bilateral_residual = bilateral_residual(x, p, band=cfg.band).sup
    except (DomainError, ExpressionError, FracBVPError) as err:
        report.notes.append(f"bilateral Caputo residual unavailable: {err}")
