import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsbvp.errors import DomainError, IllPosedDataError, UndefinedRegionError
from fracsbvp.greens import (
    FracOrder,
    GreenOperator,
    GridFn,
    QuadrantPolicy,
    green_eval,
    green_row_integral,
    row_integral_closed_form,
    solve_linear,
    symmetric_nodes,
)
from fracsbvp.numerics import gamma

MUS = [1.1, 1.5, 1.9, 2.0]


@pytest.mark.parametrize("mu", [1.0, 0.5, 2.5, float("nan")])
def test_frac_order_rejects(mu):
    with pytest.raises(DomainError, match=r"mu out of \(1,2\]"):
        FracOrder(mu)


def test_frac_order_accepts_near_one():
    assert FracOrder(1.0001).mu == 1.0001


def test_symmetric_nodes_exact():
    n = symmetric_nodes(401)
    assert n[200] == 0.0 and n[0] == -1.0 and n[-1] == 1.0
    assert np.array_equal(n, -n[::-1])
    with pytest.raises(DomainError):
        symmetric_nodes(400)


def test_gridfn_validation():
    n = symmetric_nodes(5)
    with pytest.raises(DomainError):
        GridFn(n, [0, 1, 2, 3, 4], symmetric=True)
    with pytest.raises(DomainError):
        GridFn(np.linspace(0, 1, 5), np.zeros(5))
    g = GridFn.from_half(n[2:], [1.0, 0.5, 0.0])
    assert np.array_equal(g.values, [0.0, 0.5, 1.0, 0.5, 0.0])


# -- kernel values ---------------------------------------------------------

def test_green_branches_mu2():
    # mu = 2: G(t, tau) = 1 - tau - (t - tau)_+ on [0,1]^2
    assert green_eval(0.5, 0.25, 2.0) == pytest.approx(0.5)
    assert green_eval(0.25, 0.5, 2.0) == pytest.approx(0.5)
    assert green_eval(-0.5, -0.25, 2.0) == pytest.approx(0.5)


def test_green_literal_at_zero():
    # t = 0 is the shared boundary of both quadrants; both branches agree there
    for mu in MUS:
        assert green_eval(0.0, 0.3, mu) == green_eval(0.0, -0.3, mu)
        assert green_eval(0.0, 0.3, mu) == pytest.approx(0.7 ** (mu - 1) / gamma(mu))


def test_green_mixed_quadrants():
    assert green_eval(0.5, -0.5, 1.5) == 0.0
    with pytest.raises(UndefinedRegionError):
        green_eval(0.5, -0.5, 1.5, QuadrantPolicy.PAPER_LITERAL)
    assert green_eval(0.5, 0.2, 1.5, QuadrantPolicy.PAPER_LITERAL) > 0


def test_green_domain():
    with pytest.raises(DomainError):
        green_eval(1.5, 0.0, 1.5)


@pytest.mark.parametrize("mu", MUS)
def test_kernel_grid_properties(mu):
    grid = np.linspace(-1, 1, 161)
    t, tau = np.meshgrid(grid, grid, indexing="ij")
    g = green_eval(t, tau, mu)
    assert g.min() >= 0.0
    assert np.array_equal(g, green_eval(-t, -tau, mu))
    assert np.all(g <= (1 - np.abs(tau)) ** (mu - 1) / gamma(mu) + 1e-14)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.sampled_from(MUS + [1.3, 1.7]))
def test_kernel_properties_random(t, tau, mu):
    g = green_eval(t, tau, mu)
    assert g >= 0.0
    assert g == green_eval(-t, -tau, mu)
    assert g <= (1 - abs(tau)) ** (mu - 1) / gamma(mu) + 1e-14


# -- row integrals ---------------------------------------------------------

@pytest.mark.parametrize("mu", MUS)
def test_row_integral_factor1(mu):
    for t in np.linspace(-1, 1, 21):
        r = green_row_integral(t, mu)
        assert r.value == pytest.approx(r.derived, rel=1e-8, abs=1e-15)
        if r.printed:
            assert r.ratio_to_printed == pytest.approx(0.5, abs=1e-8)


def test_row_integral_mu2_centre():
    r = green_row_integral(0.0, 2.0)
    assert r.value == pytest.approx(0.5, rel=1e-12)
    assert r.printed == pytest.approx(1.0)


def test_closed_form_factor():
    assert row_integral_closed_form(0.0, 2.0, 2.0) == 2 * row_integral_closed_form(0.0, 2.0)


# -- linear solve ----------------------------------------------------------

def test_solve_linear_classical():
    x = solve_linear(lambda t: np.ones_like(t), 2.0)
    assert np.max(np.abs(x.values - (1 - x.nodes ** 2) / 2)) < 1e-8


@pytest.mark.parametrize("mu", MUS)
def test_solve_linear_manufactured(mu):
    y = GridFn.sample(lambda t: np.full_like(t, gamma(mu + 1)), 201)
    x = solve_linear(y, mu)
    assert np.max(np.abs(x.values - (1 - np.abs(x.nodes) ** mu))) < 1e-8
    assert x.values[0] == 0.0 and x.values[-1] == 0.0
    assert np.array_equal(x.values, x.values[::-1])


def test_solve_linear_zero():
    x = solve_linear(lambda t: np.zeros_like(t), 1.5)
    assert np.all(x.values == 0.0)


def test_solve_linear_rejects_nonintegrable():
    with pytest.raises(IllPosedDataError):
        solve_linear(lambda t: (1 - np.abs(t)) ** -1.5, 1.5)


def test_solve_linear_needs_symmetric_grid_data():
    n = symmetric_nodes(5)
    with pytest.raises(DomainError):
        solve_linear(GridFn(n, [0, 1, 2, 3, 4]), 1.5)


def test_operator_is_cached():
    n = symmetric_nodes(101)
    assert GreenOperator.for_grid(n, 1.7) is GreenOperator.for_grid(n, 1.7)
