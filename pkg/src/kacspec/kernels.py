"""Hot loops: the Bobylev angular sum and the velocity-space collision oracle.

Each kernel has a numba version and a numpy version with identical
arithmetic. ``KACSPEC_DISABLE_NUMBA=1`` selects the numpy path globally;
tests call both directly.

Spline tables are ``(4, m)`` power-basis coefficients (scipy ``CubicSpline.c``
layout) on a uniform grid of spacing ``h`` starting at ``x0``.
"""
import numpy as np

from ._accel import njit, prange, use_numba


# --- Bobylev sum -------------------------------------------------------------
#
# out[j] = sum_k wb[k] * ( f(xi_j a_-) u(xi_j a_+) - f(0) u(xi_j) )
#
# written as  dA * u(xi_j a_+) + f(0) * dB  with
#   dA = f(xi_j a_-) - f(0)      (even polynomial in xi^2 on the first interval)
#   dB = u(xi_j a_+) - u(xi_j)   (Taylor form about the node when the shift < h)
# so the O(theta^2) bracket never comes from subtracting O(1) numbers.
# In log mode the tables hold log f and the bracket is f0 f_j expm1(dA + dB).


@njit(cache=True)
def _nb_eval(c, h, x):
    m = c.shape[1]
    i = int(x / h)
    if i > m - 1:
        i = m - 1
    dx = x - i * h
    return ((c[0, i] * dx + c[1, i]) * dx + c[2, i]) * dx + c[3, i]


@njit(cache=True)
def _nb_diff_from_zero(c, e, h, x):
    # e: even-polynomial coefficients used on [0, h)
    if x < h:
        y = x * x
        return y * (e[0] + y * (e[1] + y * e[2]))
    return _nb_eval(c, h, x) - c[3, 0]


@njit(cache=True)
def _nb_diff_left_of_node(c, h, j, u_j, d):
    # u(x_j - d) - u(x_j)
    if j == 0 or d == 0.0:
        return 0.0
    if d < h:
        i = j - 1
        c0 = c[0, i]
        c1 = c[1, i]
        c2 = c[2, i]
        slope = (3.0 * c0 * h + 2.0 * c1) * h + c2
        return -d * slope + d * d * (3.0 * c0 * h + c1) - d * d * d * c0
    return _nb_eval(c, h, j * h - d) - u_j


@njit(cache=True, parallel=True)
def _bobylev_numba(fc, fe, uc, u_nodes, h, a_minus, one_minus_a_plus, wb, log_mode):
    n = u_nodes.shape[0]
    nk = wb.shape[0]
    out = np.zeros(n)
    f0 = fc[3, 0]
    for j in prange(n):
        x = j * h
        acc = 0.0
        if log_mode:
            scale = np.exp(f0 + u_nodes[j])
            for k in range(nk):
                dA = _nb_diff_from_zero(fc, fe, h, x * a_minus[k])
                dB = _nb_diff_left_of_node(uc, h, j, u_nodes[j], x * one_minus_a_plus[k])
                acc += wb[k] * np.expm1(dA + dB)
            out[j] = scale * acc
        else:
            for k in range(nk):
                dA = _nb_diff_from_zero(fc, fe, h, x * a_minus[k])
                dB = _nb_diff_left_of_node(uc, h, j, u_nodes[j], x * one_minus_a_plus[k])
                acc += wb[k] * (dA * (u_nodes[j] + dB) + f0 * dB)
            out[j] = acc
    return out


def _np_eval(c, h, x):
    m = c.shape[1]
    i = np.minimum((x / h).astype(np.int64), m - 1)
    dx = x - i * h
    return ((c[0, i] * dx + c[1, i]) * dx + c[2, i]) * dx + c[3, i]


def _bobylev_numpy(fc, fe, uc, u_nodes, h, a_minus, one_minus_a_plus, wb, log_mode):
    n = u_nodes.shape[0]
    j = np.arange(n)
    x = (j * h)[:, None]
    xm = x * a_minus[None, :]
    d = x * one_minus_a_plus[None, :]
    f0 = fc[3, 0]

    near = xm < h
    y = xm * xm
    dA = np.where(near, y * (fe[0] + y * (fe[1] + y * fe[2])),
                  _np_eval(fc, h, xm) - f0)

    i = np.maximum(j - 1, 0)[:, None]
    c0, c1, c2 = uc[0, i], uc[1, i], uc[2, i]
    slope = (3.0 * c0 * h + 2.0 * c1) * h + c2
    taylor = -d * slope + d * d * (3.0 * c0 * h + c1) - d * d * d * c0
    far = _np_eval(uc, h, np.maximum(x - d, 0.0)) - u_nodes[:, None]
    dB = np.where(d < h, taylor, far)
    dB[0, :] = 0.0
    dB = np.where(d == 0.0, 0.0, dB)

    if log_mode:
        return np.exp(f0 + u_nodes) * (np.expm1(dA + dB) @ wb)
    return (dA * (u_nodes[:, None] + dB) + f0 * dB) @ wb


def bobylev_sum(fc, fe, uc, u_nodes, h, a_minus, one_minus_a_plus, wb, log_mode=False, backend=None):
    """Folded angular sum of the Bobylev bracket at every grid node."""
    if backend is None:
        backend = "numba" if use_numba() else "numpy"
    args = (np.ascontiguousarray(fc, dtype=np.float64), np.ascontiguousarray(fe, dtype=np.float64),
            np.ascontiguousarray(uc, dtype=np.float64),
            np.ascontiguousarray(u_nodes, dtype=np.float64), float(h),
            np.ascontiguousarray(a_minus, dtype=np.float64),
            np.ascontiguousarray(one_minus_a_plus, dtype=np.float64),
            np.ascontiguousarray(wb, dtype=np.float64), bool(log_mode))
    if backend == "numba":
        return _bobylev_numba(*args)
    if backend == "numpy":
        return _bobylev_numpy(*args)
    raise ValueError(f"unknown backend {backend!r}")


# --- velocity-space oracle ---------------------------------------------------
#
# K(f,f)(v_i) = sum_k wb[k] sum_j w_j [ (f(v') f(v'_*))_folded - f(v_i) f(v_j) ]
# v'  = v cos - v_* sin,  v'_* = v sin + v_* cos, folded over +/- theta.


@njit(cache=True)
def _nb_eval_v(c, x0, h, x):
    m = c.shape[1]
    if x < x0 or x > x0 + m * h:
        return 0.0
    i = int((x - x0) / h)
    if i > m - 1:
        i = m - 1
    dx = x - x0 - i * h
    return ((c[0, i] * dx + c[1, i]) * dx + c[2, i]) * dx + c[3, i]


@njit(cache=True, parallel=True)
def _velocity_numba(c, f, v, wv, cos_t, sin_t, wb):
    n = v.shape[0]
    nk = wb.shape[0]
    x0 = v[0]
    h = v[1] - v[0]
    out = np.zeros(n)
    for i in prange(n):
        acc = 0.0
        for k in range(nk):
            ct = cos_t[k]
            st = sin_t[k]
            inner = 0.0
            for j in range(n):
                g1 = _nb_eval_v(c, x0, h, v[i] * ct - v[j] * st) * _nb_eval_v(c, x0, h, v[i] * st + v[j] * ct)
                g2 = _nb_eval_v(c, x0, h, v[i] * ct + v[j] * st) * _nb_eval_v(c, x0, h, -v[i] * st + v[j] * ct)
                inner += wv[j] * (0.5 * (g1 + g2) - f[i] * f[j])
            acc += wb[k] * inner
        out[i] = acc
    return out


def _np_eval_v(c, x0, h, x):
    m = c.shape[1]
    inside = (x >= x0) & (x <= x0 + m * h)
    i = np.clip(((x - x0) / h).astype(np.int64), 0, m - 1)
    dx = x - x0 - i * h
    val = ((c[0, i] * dx + c[1, i]) * dx + c[2, i]) * dx + c[3, i]
    return np.where(inside, val, 0.0)


def _velocity_numpy(c, f, v, wv, cos_t, sin_t, wb):
    x0 = v[0]
    h = v[1] - v[0]
    vi = v[:, None]
    vj = v[None, :]
    base = f[:, None] * f[None, :]
    out = np.zeros(v.size)
    for ct, st, w in zip(cos_t, sin_t, wb):
        g1 = _np_eval_v(c, x0, h, vi * ct - vj * st) * _np_eval_v(c, x0, h, vi * st + vj * ct)
        g2 = _np_eval_v(c, x0, h, vi * ct + vj * st) * _np_eval_v(c, x0, h, -vi * st + vj * ct)
        out += w * ((0.5 * (g1 + g2) - base) @ wv)
    return out


def velocity_collision_sum(c, f, v, wv, cos_t, sin_t, wb, backend=None):
    if backend is None:
        backend = "numba" if use_numba() else "numpy"
    args = tuple(np.ascontiguousarray(a, dtype=np.float64) for a in (c, f, v, wv, cos_t, sin_t, wb))
    if backend == "numba":
        return _velocity_numba(*args)
    if backend == "numpy":
        return _velocity_numpy(*args)
    raise ValueError(f"unknown backend {backend!r}")
