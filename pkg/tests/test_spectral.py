import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from kacspec.spectral import (CrossSectionParams, ExpMollifierParams, FourierGrid,
                              PolyMollifierParams, SpectralState, WeightedNormSpec,
                              conserved_quantities, g_delta, g_delta_dt, g_delta_dxi, japanese,
                              m_delta, m_delta_dt, mollifier_symbol, sobolev_sq, weighted_norm,
                              weighted_sobolev_sq, xi_derivative)


# --- containers ---------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        FourierGrid(0.0, 65)
    with pytest.raises(ValueError):
        FourierGrid(8.0, 5)
    g = FourierGrid(8.0, 65)
    assert g.spacing == 0.125
    assert g.nodes[-1] == 8.0


def test_state_is_immutable_and_checked(grid):
    s = SpectralState(grid, np.ones(grid.n_points))
    with pytest.raises(ValueError):
        s.values[0] = 2.0
    with pytest.raises(ValueError):
        SpectralState(grid, np.ones(3))
    with pytest.raises(ValueError):
        SpectralState(grid, np.full(grid.n_points, np.nan))
    with pytest.raises(ValueError):
        SpectralState(grid, np.ones(grid.n_points), -1.0)


def test_monotone_bounded(gaussian, grid):
    assert gaussian.is_monotone_bounded()
    assert not SpectralState(grid, np.linspace(1, 2, grid.n_points)).is_monotone_bounded()


@pytest.mark.parametrize("kw", [dict(s=0.0), dict(s=1.0), dict(s=1.5), dict(s=0.5, b0=0.0),
                                dict(s=0.5, angle_map="other"), dict(s=0.5, theta_cut=0.5)])
def test_cross_section_rejects(kw):
    with pytest.raises(ValueError):
        CrossSectionParams(**kw)


def test_cross_section_message_names_range():
    with pytest.raises(ValueError, match="0 < s < 1"):
        CrossSectionParams(s=1.5)


def test_poly_params_order():
    assert PolyMollifierParams(4.0, 1.0).N0 == 4.0
    assert PolyMollifierParams(2.0, 3.0).N0 == 5.0


# --- exponential mollifier ------------------------------------------------------

def test_g_delta_at_t0():
    # exponent vanishes at t = 0
    assert g_delta(0.0, 3.7, ExpMollifierParams(1.0, 1.0, 0.5)) == pytest.approx(2.0 / 3.0, rel=1e-15)


def test_g_delta_saturates():
    assert g_delta(1e6, 2.0, ExpMollifierParams(1.0, 1.0, 0.25)) == 4.0


def test_g_delta_scalar_value():
    # independent evaluation at 30 digits
    mpmath.mp.dps = 30
    ref = float(mpmath.e / (1 + mpmath.mpf("0.1") * mpmath.e))
    assert g_delta(1.0, 0.0, ExpMollifierParams(1.0, 1.0, 0.1)) == pytest.approx(ref, rel=1e-14)
    assert ref == pytest.approx(2.1373027151957, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0, 50), xi=st.floats(-1e3, 1e3), delta=st.floats(1e-3, 0.999),
       alpha=st.floats(0.05, 1.95))
def test_g_delta_bounds(t, xi, delta, alpha):
    mp = ExpMollifierParams(1.0, alpha, delta)
    g = g_delta(t, xi, mp)
    assert 1.0 / (1.0 + delta) * (1 - 1e-14) <= g <= 1.0 / delta * (1 + 1e-14)
    assert g_delta_dt(t, xi, mp) >= 0


def test_g_delta_derivatives_match_fd():
    mp = ExpMollifierParams(0.7, 0.8, 0.2)
    for t, xi in [(0.3, 1.5), (1.0, 4.0), (0.05, -2.0)]:
        h = 1e-5
        fd_t = (g_delta(t + h, xi, mp) - g_delta(t - h, xi, mp)) / (2 * h)
        fd_x = (g_delta(t, xi + h, mp) - g_delta(t, xi - h, mp)) / (2 * h)
        assert g_delta_dt(t, xi, mp) == pytest.approx(fd_t, rel=1e-8)
        assert g_delta_dxi(t, xi, mp) == pytest.approx(fd_x, rel=1e-8)


# --- polynomial mollifier ----------------------------------------------------------

def test_m_delta_order_zero_at_one_over_n():
    p = PolyMollifierParams(2.0, 1.0, 0.5)
    xi = np.array([0.0, 1.0, 3.0, 10.0])
    np.testing.assert_allclose(m_delta(0.5, xi, p), (1 + 0.5 * xi ** 2) ** (-p.N0), rtol=1e-14)


def test_m_delta_at_origin():
    p = PolyMollifierParams(3.0, 2.0, 0.3)
    for t in (0.0, 0.7, 2.0):
        assert m_delta(t, 0.0, p) == 1.0


def test_m_delta_scalar_value():
    p = PolyMollifierParams(4.0, 1.0, 0.1)
    assert m_delta(1.0, 2.0, p) == pytest.approx(5 ** 1.5 / 1.4 ** 4, rel=1e-14)
    assert m_delta(1.0, 2.0, p) == pytest.approx(2.9103, abs=1e-4)


def test_m_delta_domain():
    p = PolyMollifierParams(2.0, 1.0)
    with pytest.raises(ValueError):
        m_delta(1.5, 1.0, p)
    with pytest.raises(ValueError):
        m_delta(-0.1, 1.0, p)


def test_m_delta_dt_matches_fd():
    p = PolyMollifierParams(2.0, 1.0, 0.2)
    h = 1e-6
    for xi in (0.5, 3.0, 20.0):
        fd = (m_delta(0.5 + h, xi, p) - m_delta(0.5 - h, xi, p)) / (2 * h)
        assert m_delta_dt(0.5, xi, p) == pytest.approx(fd, rel=1e-7)


def test_mollifier_symbol_dispatch():
    xi = np.linspace(0, 4, 5)
    np.testing.assert_array_equal(mollifier_symbol(None, xi), np.ones(5))
    with pytest.raises(ValueError):
        mollifier_symbol(("bogus", None, 0.0), xi)


# --- derivatives and norms -----------------------------------------------------

@pytest.mark.parametrize("order", [1, 2])
def test_xi_derivative_fourth_order(order):
    errs = []
    for n in (129, 257):
        g = FourierGrid(16.0, n)
        x = g.nodes
        u = np.exp(-0.5 * x * x)
        exact = -x * u if order == 1 else (x * x - 1) * u
        errs.append(np.max(np.abs(xi_derivative(u, g.spacing, 1, order) - exact)))
    assert errs[0] / errs[1] > 12


def test_xi_derivative_odd_parity():
    g = FourierGrid(16.0, 257)
    x = g.nodes
    u = x * np.exp(-0.5 * x * x)
    d = xi_derivative(u, g.spacing, -1, 1)
    np.testing.assert_allclose(d, (1 - x * x) * np.exp(-0.5 * x * x), atol=1e-5)


def test_gaussian_l2_norm(gaussian):
    ref = (4 * math.pi) ** -0.25
    assert weighted_norm(gaussian, WeightedNormSpec()) == pytest.approx(ref, rel=1e-10)


def test_sobolev_norm_against_quadrature(gaussian, grid):
    k = 1.5
    ref = quad(lambda x: (1 + x * x) ** k * math.exp(-x * x), 0, 32)[0] / math.pi
    assert sobolev_sq(gaussian.values, grid, k) == pytest.approx(ref, rel=1e-10)


def test_weighted_norm_against_velocity_integral(gaussian, grid):
    # ||<v> f||^2 = int (1 + v^2) f^2 dv with f the standard normal density
    ref = quad(lambda v: (1 + v * v) * math.exp(-v * v) / (2 * math.pi), -40, 40)[0]
    # the derivative stencil is O(h^4); h = 1/8 here
    assert weighted_sobolev_sq(gaussian.values, grid, 0, 1) == pytest.approx(ref, rel=1e-4)
    fine = FourierGrid(32.0, 1025)
    vals = np.exp(-0.5 * fine.nodes ** 2)
    assert weighted_sobolev_sq(vals, fine, 0, 1) == pytest.approx(ref, rel=1e-7)


def test_zero_state_norms(grid):
    z = SpectralState(grid, np.zeros(grid.n_points))
    for k, l in [(0, 0), (1, 1), (2, 2)]:
        assert weighted_norm(z, WeightedNormSpec(k, l)) == 0.0


def test_mollified_norm_at_t0(gaussian):
    mp = ExpMollifierParams(1.0, 1.0, 0.3)
    plain = weighted_norm(gaussian, WeightedNormSpec())
    moll = weighted_norm(gaussian, WeightedNormSpec(), ("exp", mp, 0.0))
    assert moll == pytest.approx(plain / 1.3, rel=1e-14)


def test_norm_spec_validation():
    with pytest.raises(ValueError):
        WeightedNormSpec(-1.0, 0)
    with pytest.raises(ValueError):
        WeightedNormSpec(0.0, 3)


def test_japanese():
    assert japanese(0.0) == 1.0
    assert japanese(3.0) == pytest.approx(math.sqrt(10.0))


# --- conserved quantities ---------------------------------------------------------

def test_conserved_gaussian(gaussian):
    m, e = conserved_quantities(gaussian)
    assert m == 1.0
    # stencil error h^4 |f^(6)(0)| / 90 = 15 h^4 / 90 at h = 1/8
    assert e == pytest.approx(1.0, abs=15 * 0.125 ** 4 / 90 * 1.01)


def test_conserved_linear(gaussian):
    m, e = conserved_quantities(gaussian)
    m2, e2 = conserved_quantities(gaussian.with_values(2 * gaussian.values))
    assert (m2, e2) == (2 * m, 2 * e)


def test_conserved_laplace_refined():
    # int v^2 e^{-|v|} / 2 dv = 2; the 5-point stencil error is O(h^4 f^(6)(0))
    g = FourierGrid(32.0, 2049)
    m, e = conserved_quantities(SpectralState.from_function(g, lambda x: 1 / (1 + x * x)))
    assert m == 1.0
    assert e == pytest.approx(2.0, rel=1e-6)
