"""Hot integration kernels, each with a numba and a pure-numpy implementation.

State layout for the geodesic flow is ``(theta, theta_dot, r1, r2, r3)``:
the pendulum equation for the control angle integrated jointly with the
reduced three-dimensional transfer system it drives.

Chain kernels integrate dX/dt = A(t) X for the (2n-2)-dimensional chain,
with couplings ``ks`` and at most one active control ``u_l`` (``l`` is
1-based, 0 means free evolution).

The module-level names without suffix dispatch to the backend chosen by
``ISINGCHAIN_DISABLE_NUMBA``; the ``_nb`` / ``_np`` variants are always
importable so the two paths can be compared.
"""
import math

import numpy as np

from ._accel import NUMBA_ENABLED, njit


# ---------------------------------------------------------------- numba path

@njit
def _geo_rhs_nb(th, w, r1, r2, r3, a, k):
    s = math.sin(th)
    c = math.cos(th)
    return w, a * s * c, -r2 * c, r1 * c - k * r3 * s, k * r2 * s


@njit
def _geo_step_nb(th, w, r1, r2, r3, a, k, h):
    a1, b1, c1, d1, e1 = _geo_rhs_nb(th, w, r1, r2, r3, a, k)
    hh = 0.5 * h
    a2, b2, c2, d2, e2 = _geo_rhs_nb(th + hh * a1, w + hh * b1, r1 + hh * c1,
                                     r2 + hh * d1, r3 + hh * e1, a, k)
    a3, b3, c3, d3, e3 = _geo_rhs_nb(th + hh * a2, w + hh * b2, r1 + hh * c2,
                                     r2 + hh * d2, r3 + hh * e2, a, k)
    a4, b4, c4, d4, e4 = _geo_rhs_nb(th + h * a3, w + h * b3, r1 + h * c3,
                                     r2 + h * d3, r3 + h * e3, a, k)
    h6 = h / 6.0
    return (th + h6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            w + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
            r1 + h6 * (c1 + 2.0 * c2 + 2.0 * c3 + c4),
            r2 + h6 * (d1 + 2.0 * d2 + 2.0 * d3 + d4),
            r3 + h6 * (e1 + 2.0 * e2 + 2.0 * e3 + e4))


@njit
def _terminal_one_nb(th, w, a, k, r1, r2, r3, h, t_max, e1, e2, e3, tol, out):
    ev = e1 * r1 + e2 * r2 + e3 * r3
    if ev == 0.0:
        _, _, dr1, dr2, dr3 = _geo_rhs_nb(th, w, r1, r2, r3, a, k)
        if e1 * dr1 + e2 * dr2 + e3 * dr3 < 0.0:
            out[0] = 0.0
            out[1] = th
            out[2] = w
            out[3] = r1
            out[4] = r2
            out[5] = r3
            return True
    i = 0
    while i * h < t_max:
        nth, nw, nr1, nr2, nr3 = _geo_step_nb(th, w, r1, r2, r3, a, k, h)
        nev = e1 * nr1 + e2 * nr2 + e3 * nr3
        if nev <= 0.0 and (ev > 0.0 or i == 0):
            lo = 0.0
            hi = h
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                mth, mw, mr1, mr2, mr3 = _geo_step_nb(th, w, r1, r2, r3, a, k, mid)
                if e1 * mr1 + e2 * mr2 + e3 * mr3 > 0.0:
                    lo = mid
                else:
                    hi = mid
            nth, nw, nr1, nr2, nr3 = _geo_step_nb(th, w, r1, r2, r3, a, k, hi)
            out[0] = i * h + hi
            out[1] = nth
            out[2] = nw
            out[3] = nr1
            out[4] = nr2
            out[5] = nr3
            return True
        th, w, r1, r2, r3, ev = nth, nw, nr1, nr2, nr3, nev
        i += 1
    return False


@njit
def terminal_scan_nb(theta0, theta_dot0, a, k, r0, h, t_max, ev_w, tol):
    n = theta0.shape[0]
    s = np.full(n, np.nan)
    states = np.full((n, 5), np.nan)
    out = np.empty(6)
    for j in range(n):
        if _terminal_one_nb(theta0[j], theta_dot0[j], a, k, r0[0], r0[1], r0[2], h, t_max,
                            ev_w[0], ev_w[1], ev_w[2], tol, out):
            s[j] = out[0]
            for c in range(5):
                states[j, c] = out[c + 1]
    return s, states


@njit
def geodesic_dense_nb(theta0, theta_dot0, a, k, r0, h, n_steps):
    states = np.empty((n_steps + 1, 5))
    th, w, r1, r2, r3 = theta0, theta_dot0, r0[0], r0[1], r0[2]
    states[0, 0] = th
    states[0, 1] = w
    states[0, 2] = r1
    states[0, 3] = r2
    states[0, 4] = r3
    for i in range(1, n_steps + 1):
        th, w, r1, r2, r3 = _geo_step_nb(th, w, r1, r2, r3, a, k, h)
        states[i, 0] = th
        states[i, 1] = w
        states[i, 2] = r1
        states[i, 3] = r2
        states[i, 4] = r3
    return states


@njit
def _chain_rhs_nb(x, ks, l, u, out):
    for j in range(ks.shape[0]):
        out[2 * j] = -ks[j] * x[2 * j + 1]
        out[2 * j + 1] = ks[j] * x[2 * j]
    if l > 0:
        out[2 * l - 1] -= u * x[2 * l]
        out[2 * l] += u * x[2 * l - 1]


@njit
def chain_segment_nb(x0, ks, l, u, dt, nsub):
    m = u.shape[0]
    dim = x0.shape[0]
    states = np.empty((m, dim))
    x = x0.copy()
    states[0] = x
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    h = dt / nsub
    for j in range(m - 1):
        du = (u[j + 1] - u[j]) / nsub
        for q in range(nsub):
            u0 = u[j] + q * du
            um = u0 + 0.5 * du
            u1 = u0 + du
            _chain_rhs_nb(x, ks, l, u0, k1)
            for c in range(dim):
                tmp[c] = x[c] + 0.5 * h * k1[c]
            _chain_rhs_nb(tmp, ks, l, um, k2)
            for c in range(dim):
                tmp[c] = x[c] + 0.5 * h * k2[c]
            _chain_rhs_nb(tmp, ks, l, um, k3)
            for c in range(dim):
                tmp[c] = x[c] + h * k3[c]
            _chain_rhs_nb(tmp, ks, l, u1, k4)
            for c in range(dim):
                x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
        states[j + 1] = x
    return states


# ---------------------------------------------------------------- numpy path

def _geo_rhs_np(th, w, r1, r2, r3, a, k):
    s = np.sin(th)
    c = np.cos(th)
    return w, a * s * c, -r2 * c, r1 * c - k * r3 * s, k * r2 * s


def _geo_step_np(y, a, k, h):
    """One RK4 step on a ``(5, ...)`` stack; ``h`` may broadcast."""
    k1 = np.array(_geo_rhs_np(*y, a, k))
    k2 = np.array(_geo_rhs_np(*(y + 0.5 * h * k1), a, k))
    k3 = np.array(_geo_rhs_np(*(y + 0.5 * h * k2), a, k))
    k4 = np.array(_geo_rhs_np(*(y + h * k3), a, k))
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def terminal_scan_np(theta0, theta_dot0, a, k, r0, h, t_max, ev_w, tol):
    theta0 = np.asarray(theta0, dtype=float)
    n = theta0.size
    ev_w = np.asarray(ev_w, dtype=float)
    y = np.empty((5, n))
    y[0] = theta0
    y[1] = theta_dot0
    y[2:] = np.asarray(r0, dtype=float)[:, None]
    s = np.full(n, np.nan)
    hit = np.full((5, n), np.nan)
    t_hit = np.zeros(n)

    ev = ev_w @ y[2:]
    slope = ev_w @ np.array(_geo_rhs_np(*y, a, k))[2:]
    at_start = (ev == 0.0) & (slope < 0.0)
    s[at_start] = 0.0
    hit[:, at_start] = y[:, at_start]
    active = ~at_start

    i = 0
    while i * h < t_max and active.any():
        idx = np.flatnonzero(active)
        y_old = y[:, idx]
        y_new = _geo_step_np(y_old, a, k, h)
        ev_new = ev_w @ y_new[2:]
        crossed = (ev_new <= 0.0) & ((ev[idx] > 0.0) | (i == 0))
        if crossed.any():
            cidx = idx[crossed]
            hit[:, cidx] = y_old[:, crossed]
            t_hit[cidx] = i * h
            active[cidx] = False
        y[:, idx] = y_new
        ev[idx] = ev_new
        i += 1

    pending = np.flatnonzero(~np.isnan(hit[0]) & np.isnan(s))
    if pending.size:
        y0 = hit[:, pending]
        lo = np.zeros(pending.size)
        hi = np.full(pending.size, h)
        while np.any(hi - lo > tol):
            mid = 0.5 * (lo + hi)
            ym = _geo_step_np(y0, a, k, mid)
            above = ev_w @ ym[2:] > 0.0
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        hit[:, pending] = _geo_step_np(y0, a, k, hi)
        s[pending] = t_hit[pending] + hi
    return s, hit.T.copy()


def geodesic_dense_np(theta0, theta_dot0, a, k, r0, h, n_steps):
    states = np.empty((n_steps + 1, 5))
    y = np.array([theta0, theta_dot0, r0[0], r0[1], r0[2]], dtype=float)
    states[0] = y
    for i in range(1, n_steps + 1):
        y = _geo_step_np(y, a, k, h)
        states[i] = y
    return states


def chain_generators(ks, l):
    """Coupling matrix and unit-control generator of the chain system."""
    ks = np.asarray(ks, dtype=float)
    dim = 2 * ks.size
    coupling = np.zeros((dim, dim))
    for j, kj in enumerate(ks):
        coupling[2 * j, 2 * j + 1] = -kj
        coupling[2 * j + 1, 2 * j] = kj
    control = np.zeros((dim, dim))
    if l > 0:
        control[2 * l - 1, 2 * l] = -1.0
        control[2 * l, 2 * l - 1] = 1.0
    return coupling, control


def chain_segment_np(x0, ks, l, u, dt, nsub):
    coupling, control = chain_generators(ks, l)
    u = np.asarray(u, dtype=float)
    x = np.array(x0, dtype=float)
    states = np.empty((u.size, x.size))
    states[0] = x
    h = dt / nsub
    for j in range(u.size - 1):
        du = (u[j + 1] - u[j]) / nsub
        for q in range(nsub):
            u0 = u[j] + q * du
            a0 = coupling + u0 * control
            am = coupling + (u0 + 0.5 * du) * control
            a1 = coupling + (u0 + du) * control
            k1 = a0 @ x
            k2 = am @ (x + 0.5 * h * k1)
            k3 = am @ (x + 0.5 * h * k2)
            k4 = a1 @ (x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[j + 1] = x
    return states


NUMBA = {"terminal_scan": terminal_scan_nb, "geodesic_dense": geodesic_dense_nb,
         "chain_segment": chain_segment_nb}
NUMPY = {"terminal_scan": terminal_scan_np, "geodesic_dense": geodesic_dense_np,
         "chain_segment": chain_segment_np}

_active = NUMBA if NUMBA_ENABLED else NUMPY
terminal_scan = _active["terminal_scan"]
geodesic_dense = _active["geodesic_dense"]
chain_segment = _active["chain_segment"]
