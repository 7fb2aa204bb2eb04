import numpy as np
import pytest

from fracsbvp.errors import ConfigurationError, NonConvergenceError
from fracsbvp.greens import GridFn, symmetric_nodes
from fracsbvp.numerics import gamma
from fracsbvp.problem import ProblemSpec, example_problem
from fracsbvp.solver import SolverConfig, apply_T, clamp_m, fixed_point_m, solve


def constant_problem(c, mu=1.5, R=10.0):
    return ProblemSpec(mu, str(c), str(c), "1", "0", str(c), R=R)


@pytest.mark.parametrize("x, expected", [(-5.0, 0.1), (0.5, 0.6), (5.0, 1.0)])
def test_clamp_examples(x, expected):
    assert clamp_m(x, 10, 1.0) == pytest.approx(expected)


def test_clamp_vectorised_and_config():
    out = clamp_m(np.array([-1.0, 0.0, 10.0]), 4, 2.0)
    np.testing.assert_array_equal(out, [0.25, 0.25, 2.0])
    with pytest.raises(ConfigurationError):
        clamp_m(0.0, 2, 0.5)
    with pytest.raises(ConfigurationError):
        clamp_m(0.0, 0, 1.0)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(grid=400)
    with pytest.raises(ConfigurationError):
        SolverConfig(damping=0.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(tol_fp=-1.0)


def test_apply_T_constant_forcing():
    mu, c = 1.7, 2.5
    x = GridFn.sample(lambda t: np.cos(t), 201)
    out = apply_T(x, 5, constant_problem(c, mu))
    np.testing.assert_allclose(out.values, c * (1 - np.abs(out.nodes) ** mu) / gamma(mu + 1),
                               atol=1e-13)
    assert out.values[0] == 0.0 and out.values[-1] == 0.0


def test_apply_T_zero_forcing():
    out = apply_T(GridFn.sample(lambda t: 1 - t * t, 101), 3, constant_problem(0))
    assert np.all(out.values == 0.0)


def test_apply_T_upper_clamp_saturates():
    p = example_problem(lam=1.0)
    # every value already exceeds R, so both clamp to R
    x = GridFn.sample(lambda t: 2 - t * t, 101)
    y = GridFn(x.nodes, x.values + 1000.0, symmetric=True)
    assert np.array_equal(apply_T(x, 3, p).values, apply_T(y, 3, p).values)


def test_apply_T_output_symmetric():
    out = apply_T(GridFn.sample(lambda t: 0.3 + t ** 2, 201), 7, example_problem(lam=1e-3))
    assert np.array_equal(out.values, out.values[::-1])


def test_fixed_point_constant_in_two_steps():
    p = constant_problem(2.0)
    x0 = GridFn.sample(lambda t: 0.1 * (1 - t * t), 201)
    x, iters, res = fixed_point_m(20, p, SolverConfig(grid=201), x0)
    assert iters <= 2 and res == 0.0
    np.testing.assert_allclose(x.values, 2 * (1 - np.abs(x.nodes) ** 1.5) / gamma(2.5), atol=1e-13)


def test_fixed_point_zero():
    x, iters, res = fixed_point_m(2, constant_problem(0), SolverConfig(),
                                  GridFn.sample(lambda t: 0 * t, 401))
    assert iters <= 1 and np.all(x.values == 0.0)


def test_fixed_point_budget():
    p = example_problem(lam=1e-16)
    x0 = GridFn.sample(lambda t: 1e-16 * (1 - np.abs(t) ** 1.9), 401)
    with pytest.raises(NonConvergenceError) as info:
        fixed_point_m(10 ** 20, p, SolverConfig(max_iter=3), x0)
    assert len(info.value.history) == 4


def test_fixed_point_with_anderson_mixing():
    p = example_problem(lam=1e-16)
    x0 = GridFn.sample(lambda t: 1e-16 * (1 - np.abs(t) ** 1.9), 201)
    cfg = SolverConfig(grid=201, anderson_after=0)
    x, iters, res = fixed_point_m(10 ** 20, p, cfg, x0)
    assert res <= 1e-10 * min(1.0, np.max(x.values)) * 1.0001


def test_solve_manufactured_linear():
    mu = 1.9
    p = ProblemSpec(mu, "gammafn(2.9)", "gammafn(2.9)", "1", "0", "gammafn(2.9)", R=10.0)
    rep = solve(p)
    assert rep.status == "converged" and rep.hypotheses_verified
    assert np.max(np.abs(rep.x.values - (1 - np.abs(rep.x.nodes) ** mu))) <= 1e-8
    assert rep.integral_residual <= 1e-8 and rep.bilateral_residual <= 1e-8


def test_solve_classical():
    rep = solve(constant_problem(1.0, mu=2.0))
    assert rep.x.values[200] == pytest.approx(0.5, rel=1e-12)


def test_solve_example_properties():
    p = example_problem(lam=1e-16)
    rep = solve(p)
    assert rep.status == "converged"
    assert rep.symmetry_defect == 0.0
    assert rep.positivity_margin > 0
    assert rep.lower_ok and rep.upper_ok
    assert rep.fp_residual <= 1e-10
    assert rep.integral_residual <= 1e-8
    assert rep.stage_diffs_monotone
    # magnitude from balancing x ~ lambda C x^-0.9
    assert 1e-10 < rep.x.values.max() < 1e-7


def test_solve_unverified_hypotheses():
    rep = solve(example_problem(lam=1e-12), SolverConfig(grid=101))
    assert not rep.hypotheses_verified
    assert any("unverified" in n for n in rep.notes)
    assert rep.status == "converged"


def test_solve_reports_stage_failure():
    rep = solve(example_problem(lam=1e-16), SolverConfig(grid=101, max_iter=2))
    assert rep.status == "failed" and rep.failure_history


def test_symmetric_nodes_used():
    rep = solve(constant_problem(1.0), SolverConfig(grid=51))
    assert np.array_equal(rep.x.nodes, symmetric_nodes(51))
