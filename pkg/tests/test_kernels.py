import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import CubicSpline

from kacspec._accel import HAVE_NUMBA
from kacspec.collision import FourierInterpolant
from kacspec.kernels import bobylev_sum, velocity_collision_sum
from kacspec.spectral import FourierGrid

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")


def _tables(seed, n=65, log=False):
    rng = np.random.default_rng(seed)
    g = FourierGrid(8.0, n)
    x = g.nodes
    vals = np.exp(-0.3 * x * x) * (1 + 0.2 * rng.standard_normal() * np.cos(x))
    vals = np.abs(vals) + 1e-3 if log else vals
    return g, FourierInterpolant(g, vals, "log_cubic" if log else "cubic")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), log=st.booleans(), n_theta=st.integers(1, 40))
def test_bobylev_backends_identical(seed, log, n_theta):
    g, sp = _tables(seed, log=log)
    rng = np.random.default_rng(seed + 1)
    th = np.sort(rng.uniform(1e-6, np.pi / 2, n_theta))
    wb = rng.uniform(0.1, 2.0, n_theta)
    am, om = np.sin(th), 2 * np.sin(0.5 * th) ** 2
    args = (sp.coef, sp.near0, sp.coef, sp.node_data, g.spacing, am, om, wb, sp.log_mode)
    a = bobylev_sum(*args, backend="numba")
    b = bobylev_sum(*args, backend="numpy")
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_velocity_backends_identical(seed):
    rng = np.random.default_rng(seed)
    v = np.linspace(-6, 6, 33)
    f = np.exp(-0.5 * v * v) * (1 + 0.1 * rng.uniform())
    c = CubicSpline(v, f, bc_type="natural").c
    th = np.sort(rng.uniform(1e-3, np.pi / 2, 7))
    wb = rng.uniform(0.1, 1.0, 7)
    wv = np.full(33, v[1] - v[0])
    a = velocity_collision_sum(c, f, v, wv, np.cos(th), np.sin(th), wb, "numba")
    b = velocity_collision_sum(c, f, v, wv, np.cos(th), np.sin(th), wb, "numpy")
    np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-15)


def test_zero_weights_give_zero():
    g, sp = _tables(0)
    th = np.array([0.1, 0.5])
    out = bobylev_sum(sp.coef, sp.near0, sp.coef, sp.node_data, g.spacing, np.sin(th),
                      1 - np.cos(th), np.zeros(2))
    assert np.all(out == 0.0)


def test_unknown_backend():
    g, sp = _tables(0)
    with pytest.raises(ValueError):
        bobylev_sum(sp.coef, sp.near0, sp.coef, sp.node_data, g.spacing, np.ones(1), np.ones(1),
                    np.ones(1), backend="cuda")
    with pytest.raises(ValueError):
        velocity_collision_sum(np.zeros((4, 2)), np.zeros(3), np.zeros(3), np.zeros(3),
                               np.ones(1), np.zeros(1), np.ones(1), backend="cuda")
