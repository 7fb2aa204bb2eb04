"""Problem instances and the solvability hypotheses.

A problem is ``D^mu x + f(t, x) = 0`` on (-1, 1) with the boundary data of
the linear problem.  Besides ``f`` it carries a majorant decomposition
``|f(t, x)| <= q(t) (u(x) + v(x))``, a minorant family ``gamma_r`` with
``f(t, x) >= gamma_r`` for ``x`` in (0, r], and a bound ``R``.

The quantity

    chi_r = int (1-|t|)^(mu-1) q(t) u(2 gamma_r (1-|t|^mu) / Gamma(mu+1)) dt

is computed with the factor 2 of its original statement, so that the
reference Example constants reproduce; a factor-1 variant, which matches
the row integral of the kernel actually used, is reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivergenceSuspected,
    DomainError,
    EvaluationDomainError,
    ExpressionError,
    SingularSampleError,
)
from .expr import Node, evaluate, free_variables, parse, to_source
from .greens import FracOrder, as_order
from .numerics import Interval, QuadratureScheme, refine_to_tolerance

__all__ = [
    "ProblemSpec",
    "HypothesisReport",
    "check_A1",
    "check_A2",
    "check_hypotheses",
    "compute_chi",
    "select_epsilon",
    "example_problem",
    "A2_READING_NOTE",
]

DEFAULT_SEED = 20240101
PROBES = 10_000
PROBE_RTOL = 1e-12
C_PROBES = (0.1, 1.0, 10.0)
EPS_CANDIDATES = 64
EPS_RATIO = 0.75
REFINE_RTOL = 1e-8

A2_READING_NOTE = ("(A2) is stated with the factor 1+q(R)/p(R), p undefined; "
                   "it is read as 1+v(R)/u(R), the form the upper bound needs")

_EXPR_VARS = {"f": {"t", "x"}, "q": {"t"}, "u": {"x"}, "v": {"x"}, "gamma_r": {"r"}}


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A singular BVP instance with its hypothesis data.

    Parameters
    ----------
    mu : float or FracOrder
    f, q, u, v, gamma_r : str or Node
        Expressions over ``(t, x)``, ``t``, ``x``, ``x`` and ``r``
        respectively, plus any names in ``params``.
    R : float
        Upper bound in the clamp; must be positive.
    params : dict
        Free parameters such as ``lambda``.  ``R`` is bound automatically.
    """

    mu: FracOrder
    f: Node
    q: Node
    u: Node
    v: Node
    gamma_r: Node
    R: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "mu", as_order(self.mu))
        R = float(self.R)
        if not (math.isfinite(R) and R > 0):
            raise DomainError(f"R must be positive and finite, got {self.R!r}")
        object.__setattr__(self, "R", R)
        params = {}
        for k, v in dict(self.params).items():
            v = float(v)
            if not math.isfinite(v):
                raise DomainError(f"parameter {k} must be finite")
            if k in ("t", "x", "r", "R"):
                raise DomainError(f"parameter name {k!r} is reserved")
            params[k] = v
        object.__setattr__(self, "params", params)
        for name, allowed in _EXPR_VARS.items():
            node = getattr(self, name)
            if isinstance(node, str):
                node = parse(node)
                object.__setattr__(self, name, node)
            unbound = free_variables(node) - allowed - set(params) - {"R"}
            if unbound:
                raise DomainError(f"{name} uses unbound names: {', '.join(sorted(unbound))}")

    def _env(self, **kw):
        env = dict(self.params)
        env["R"] = self.R
        env.update(kw)
        return env

    def _eval(self, node, **kw):
        # constant expressions come back as scalars; give them the input shape
        val = evaluate(node, self._env(**kw))
        shape = np.broadcast_shapes(*(np.shape(a) for a in kw.values()))
        return float(val) if shape == () else np.broadcast_to(val, shape).astype(float)

    def f_values(self, t, x):
        return self._eval(self.f, t=t, x=x)

    def q_values(self, t):
        return self._eval(self.q, t=t)

    def u_values(self, x):
        return self._eval(self.u, x=x)

    def v_values(self, x):
        return self._eval(self.v, x=x)

    def gamma_values(self, r):
        return self._eval(self.gamma_r, r=r)

    def source(self, name: str) -> str:
        return to_source(getattr(self, name))

    def with_params(self, R: float | None = None, **params) -> "ProblemSpec":
        merged = dict(self.params)
        merged.update(params)
        return ProblemSpec(self.mu, self.f, self.q, self.u, self.v, self.gamma_r,
                           self.R if R is None else R, merged)

    def equivalent(self, other: "ProblemSpec") -> bool:
        return (self.mu == other.mu and self.R == other.R and self.params == other.params
                and all(getattr(self, k) == getattr(other, k) for k in _EXPR_VARS))


def example_problem(lam: float = 1e-16, R: float = 1.0) -> ProblemSpec:
    """The worked example: mu = 1.9, ``f = q(t) (x^-0.9 - x + R)``."""
    return ProblemSpec(
        mu=1.9,
        f="lambda/(1-abs(t)^0.9)^0.9*(1/x^0.9 - x + R)",
        q="lambda/(1-abs(t)^0.9)^0.9",
        u="1/x^0.9",
        v="x + R",
        gamma_r="lambda/r^0.9",
        R=R,
        params={"lambda": lam},
    )


@dataclass
class HypothesisReport:
    """Outcome of the sampled (A1)/(A2) checks and the epsilon scan.

    Integrals that appear divergent are stored as ``None``.  Every check
    marked "sampled" is a spot-check on random probes, not a proof.
    """

    seed: int = DEFAULT_SEED
    a1_majorant_ok: bool | None = None
    a1_majorant_worst: float | None = None
    a1_integral_q: float | None = None
    a1_integral_qu: dict = field(default_factory=dict)
    u_nonincreasing: bool | None = None
    v_nondecreasing: bool | None = None
    f_symmetric: bool | None = None
    gamma_R: float | None = None
    min_R_bound: float | None = None
    R_above_bound: bool | None = None
    a2_minorant_ok: bool | None = None
    a2_minorant_worst: float | None = None
    chi_R: float | None = None
    chi_R_factor1: float | None = None
    a2_ratio: float | None = None
    a2_ratio_factor1: float | None = None
    epsilon: float | None = None
    gamma_R_eps: float | None = None
    notes: list = field(default_factory=list)

    @property
    def a1_ok(self) -> bool:
        return bool(self.a1_majorant_ok and self.a1_integral_q is not None
                    and self.a1_integral_qu and all(v is not None for v in self.a1_integral_qu.values())
                    and self.u_nonincreasing and self.v_nondecreasing and self.f_symmetric)

    @property
    def a2_ok(self) -> bool:
        return bool(self.R_above_bound and self.a2_minorant_ok
                    and self.a2_ratio is not None and self.a2_ratio > 1.0)

    @property
    def passed(self) -> bool:
        return self.a1_ok and self.a2_ok and self.epsilon is not None

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["a1_integral_qu"] = {str(k): v for k, v in self.a1_integral_qu.items()}
        d.update(a1_ok=self.a1_ok, a2_ok=self.a2_ok, passed=self.passed)
        return d


def _split_integral(func, scheme) -> float:
    # data may have a cusp at t = 0 as well as singularities at +-1, so each
    # half is integrated separately with both of its ends graded
    return math.fsum(
        refine_to_tolerance(func, iv, True, True, tol=1e-300, rtol=REFINE_RTOL,
                            max_levels=8, scheme=scheme)
        for iv in (Interval(-1.0, 0.0), Interval(0.0, 1.0)))


def _weighted_integral(p: ProblemSpec, integrand, scheme) -> float | None:
    """``int (1-|t|)^(mu-1) integrand(t) dt`` over [-1, 1]; None if divergent."""
    w = p.mu.mu - 1.0
    try:
        return _split_integral(lambda t: (1.0 - np.abs(t)) ** w * integrand(t), scheme)
    except (DivergenceSuspected, SingularSampleError):
        return None


def _scheme(p: ProblemSpec, scheme):
    return scheme or QuadratureScheme.for_order(p.mu.mu)


def _probe_x(rng, n, lo, hi):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), n))


def check_A1(p: ProblemSpec, scheme: QuadratureScheme | None = None,
             seed: int = DEFAULT_SEED, report: HypothesisReport | None = None) -> HypothesisReport:
    """Sampled majorant check plus the (A1) integrability integrals.

    The majorant ``|f| <= q (u + v)`` is probed at ``10^4`` random points
    with ``t`` uniform in (-1, 1) and ``x`` log-uniform in ``[1e-6 R, 1e6 R]``.
    Monotonicity of ``u``, ``v`` and the evenness of ``f`` in ``t`` are
    sampled on the same kind of grid.
    """
    rep = report or HypothesisReport(seed=seed)
    rep.seed = seed
    rng = np.random.default_rng(seed)
    scheme = _scheme(p, scheme)
    t = rng.uniform(-1.0, 1.0, PROBES)
    t = t[np.abs(t) < 1.0]
    x = _probe_x(rng, len(t), 1e-6 * p.R, 1e6 * p.R)
    try:
        fv = np.abs(p.f_values(t, x))
        maj = p.q_values(t) * (p.u_values(x) + p.v_values(x))
        excess = (fv - maj) / np.maximum(np.abs(maj), np.finfo(float).tiny)
        rep.a1_majorant_worst = float(np.max(excess))
        rep.a1_majorant_ok = bool(rep.a1_majorant_worst <= PROBE_RTOL)
        xs = np.logspace(-6, 6, 241) * p.R
        uu, vv = p.u_values(xs), p.v_values(xs)
        rep.u_nonincreasing = bool(np.all(np.diff(uu) <= PROBE_RTOL * np.abs(uu[:-1])))
        rep.v_nondecreasing = bool(np.all(np.diff(vv) >= -PROBE_RTOL * np.abs(vv[:-1])))
        f_plus, f_minus = p.f_values(t, x), p.f_values(-t, x)
        rep.f_symmetric = bool(np.all(np.abs(f_plus - f_minus)
                                      <= PROBE_RTOL * np.maximum(np.abs(f_plus), 1e-300)))
    except ExpressionError as err:
        rep.a1_majorant_ok = False
        rep.notes.append(f"A1 probe evaluation failed: {err}")
    rep.notes.append("A1 majorant, u/v monotonicity and evenness of f are sampled, not proven")
    rep.a1_integral_q = _weighted_integral(p, p.q_values, scheme)
    w = p.mu.mu
    qu = {}
    for c in C_PROBES:
        qu[c] = _weighted_integral(
            p, lambda t, c=c: p.q_values(t) * p.u_values(c * (1.0 - np.abs(t) ** w)), scheme)
    rep.a1_integral_qu = qu
    if rep.a1_integral_q is None:
        rep.notes.append("int (1-|t|)^(mu-1) q dt appears divergent")
    for c, val in qu.items():
        if val is None:
            rep.notes.append(f"int (1-|t|)^(mu-1) q u(c(1-|t|^mu)) dt appears divergent at c={c:g}")
    return rep


def compute_chi(p: ProblemSpec, r: float, scheme: QuadratureScheme | None = None,
                factor: float = 2.0) -> float:
    """``int (1-|t|)^(mu-1) q(t) u(factor gamma_r (1-|t|^mu)/Gamma(mu+1)) dt``.

    ``factor=2`` is the printed definition; ``factor=1`` the corrected one.

    Raises
    ------
    DomainError
        If ``gamma_r`` is not positive.
    DivergenceSuspected
        If the integral does not settle.
    """
    g = float(p.gamma_values(float(r)))
    if not g > 0:
        raise DomainError(f"gamma_r must be positive, got {g} at r={r}")
    mu = p.mu.mu
    scale = factor * g / p.mu.gamma_mu1
    return _split_integral(
        lambda t: (1.0 - np.abs(t)) ** (mu - 1.0) * p.q_values(t)
        * p.u_values(scale * (1.0 - np.abs(t) ** mu)),
        _scheme(p, scheme))


def _ratio(p: ProblemSpec, r: float, chi: float, bound: float) -> float:
    return bound / (chi * (1.0 + p.v_values(r) / p.u_values(r)))


def check_A2(p: ProblemSpec, scheme: QuadratureScheme | None = None,
             seed: int = DEFAULT_SEED, report: HypothesisReport | None = None) -> HypothesisReport:
    """Minorant bound, the lower limit on ``R`` and the (A2) ratio."""
    rep = report or HypothesisReport(seed=seed)
    rng = np.random.default_rng(seed + 1)
    R = p.R
    try:
        g = float(p.gamma_values(R))
    except ExpressionError as err:
        rep.notes.append(f"gamma_R not evaluable: {err}")
        rep.R_above_bound = False
        return rep
    rep.gamma_R = g
    rep.min_R_bound = 2.0 * g / p.mu.gamma_mu1
    rep.R_above_bound = bool(R > rep.min_R_bound)
    t = rng.uniform(-1.0, 1.0, PROBES)
    t = t[np.abs(t) < 1.0]
    x = _probe_x(rng, len(t), 1e-6 * R, R)
    try:
        fv = p.f_values(t, x)
        deficit = (g - fv) / abs(g) if g else -fv
        rep.a2_minorant_worst = float(np.max(deficit))
        rep.a2_minorant_ok = bool(rep.a2_minorant_worst <= PROBE_RTOL)
    except ExpressionError as err:
        rep.a2_minorant_ok = False
        rep.notes.append(f"A2 probe evaluation failed: {err}")
    rep.notes.append("A2 minorant f >= gamma_R is sampled on x in (0, R], not proven")
    rep.notes.append(A2_READING_NOTE)
    try:
        rep.chi_R = compute_chi(p, R, scheme, 2.0)
        rep.chi_R_factor1 = compute_chi(p, R, scheme, 1.0)
        rep.a2_ratio = float(_ratio(p, R, rep.chi_R, R))
        rep.a2_ratio_factor1 = float(_ratio(p, R, rep.chi_R_factor1, R))
    except (DivergenceSuspected, ExpressionError, DomainError) as err:
        rep.notes.append(f"chi_R not computable: {err}")
    return rep


def select_epsilon(p: ProblemSpec, scheme: QuadratureScheme | None = None,
                   report: HypothesisReport | None = None) -> float | None:
    """Largest ``eps`` on a geometric grid with ``(R-eps)/(chi_{R+eps}(1+v/u)) >= 1``.

    Candidates are ``U * 0.75^k`` for ``k = 0..63`` with
    ``U = R - 2 gamma_R / Gamma(mu+1)``, and ``v``, ``u`` evaluated at
    ``R + eps``.  Returns None when the (A2) ratio is not above 1 or no
    candidate passes.
    """
    rep = report if report is not None else check_A2(p, scheme)
    if not (rep.R_above_bound and rep.a2_ratio is not None and rep.a2_ratio > 1.0):
        return None
    upper = p.R - rep.min_R_bound
    for k in range(EPS_CANDIDATES):
        eps = upper * EPS_RATIO ** k
        r = p.R + eps
        try:
            chi = compute_chi(p, r, scheme, 2.0)
        except (DivergenceSuspected, ExpressionError, DomainError):
            continue
        if _ratio(p, r, chi, p.R - eps) >= 1.0:
            return eps
    return None


def check_hypotheses(p: ProblemSpec, scheme: QuadratureScheme | None = None,
                     seed: int = DEFAULT_SEED) -> HypothesisReport:
    """Run (A1), (A2) and the epsilon scan into one report."""
    rep = check_A1(p, scheme, seed)
    check_A2(p, scheme, seed, rep)
    if rep.a1_ok and rep.a2_ok:
        rep.epsilon = select_epsilon(p, scheme, rep)
        if rep.epsilon is None:
            rep.notes.append("no epsilon candidate satisfies the (A2) inequality at R+eps")
        else:
            try:
                rep.gamma_R_eps = float(p.gamma_values(p.R + rep.epsilon))
            except ExpressionError:
                pass
    return rep
