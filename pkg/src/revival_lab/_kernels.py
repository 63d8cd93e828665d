"""Compiled inner loops: Lindblad right-hand side and an adaptive RK4(5) stepper.

The master equation is integrated on the vectorized joint density matrix
(atom x field ordering, atom index first).  The stepper is the classic
Dormand-Prince embedded 4(5) pair with PI-free step control, stepping
exactly onto requested sample times and recording a small set of
observables (ground-state population, trace, mean photon number) there.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1

# Dormand-Prince coefficients (embedded 4(5) pair, FSAL).
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@njit(cache=True, nogil=True)
def _coupling_at(tau, env_on, x0pos, v, w):
    if env_on == 0:
        return 1.0
    x = (x0pos + v * tau) / w
    return math.exp(-x * x)


@njit(cache=True, nogil=True)
def _rhs(y, out, d, coup, delta, g_dn, g_up, g_at, sq1, w_aad):
    """d rho/dt for the joint density matrix, flattened row-major."""
    r = y.reshape(2, d, 2, d)
    o = out.reshape(2, d, 2, d)
    hd = 0.5 * delta
    for s in range(2):
        zs = 1.0 - 2.0 * s
        for m in range(d):
            for t in range(2):
                zt = 1.0 - 2.0 * t
                for n in range(d):
                    v_ = r[s, m, t, n]
                    hr = hd * zs * v_
                    if s == 0 and m < d - 1:
                        hr += coup * sq1[m] * r[1, m + 1, t, n]
                    elif s == 1 and m >= 1:
                        hr += coup * sq1[m - 1] * r[0, m - 1, t, n]
                    rh = hd * zt * v_
                    if t == 0 and n < d - 1:
                        rh += coup * r[s, m, 1, n + 1] * sq1[n]
                    elif t == 1 and n >= 1:
                        rh += coup * r[s, m, 0, n - 1] * sq1[n - 1]
                    acc = -1j * (hr - rh)
                    if m < d - 1 and n < d - 1:
                        acc += g_dn * sq1[m] * sq1[n] * r[s, m + 1, t, n + 1]
                    acc -= 0.5 * g_dn * (m + n) * v_
                    if g_up > 0.0:
                        if m >= 1 and n >= 1:
                            acc += g_up * sq1[m - 1] * sq1[n - 1] * r[s, m - 1, t, n - 1]
                        acc -= 0.5 * g_up * (w_aad[m] + w_aad[n]) * v_
                    if g_at > 0.0:
                        if s == 1 and t == 1:
                            acc += g_at * r[0, m, 0, n]
                        acc -= 0.5 * g_at * ((1 - s) + (1 - t)) * v_
                    o[s, m, t, n] = acc


@njit(cache=True, nogil=True)
def _record(y, d, obs, row):
    pg = 0.0
    tr = 0.0
    nbar = 0.0
    r = y.reshape(2, d, 2, d)
    for s in range(2):
        for n in range(d):
            pop = r[s, n, s, n].real
            tr += pop
            nbar += n * pop
            if s == 1:
                pg += pop
    obs[row, 0] = pg
    obs[row, 1] = tr
    obs[row, 2] = nbar


@njit(cache=True, nogil=True)
def _error_norm(err, y0, y1, rtol, atol):
    n = err.shape[0]
    acc = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y0[i]), abs(y1[i]))
        q = abs(err[i]) / sc
        acc += q * q
    return math.sqrt(acc / n)


@njit(cache=True, nogil=True)
def integrate_lindblad(
    y,
    t0,
    t1,
    rtol,
    atol,
    d,
    coup0,
    delta,
    g_dn,
    g_up,
    g_at,
    env_on,
    x0pos,
    v,
    w,
    t_eval,
    obs,
):
    """Advance y (flattened joint density matrix) from t0 to t1 in place.

    Records observables at each entry of t_eval (must be sorted, within
    [t0, t1]).  Returns (status, n_steps, n_rhs_evals).
    """
    n = y.shape[0]
    sq1 = np.sqrt(np.arange(1, d + 1).astype(np.float64))
    w_aad = np.arange(1, d + 1).astype(np.float64)
    w_aad[d - 1] = 0.0

    n_eval = t_eval.shape[0]
    idx = 0
    t = t0
    span = t1 - t0
    eps_t = 1e-12 * max(abs(t0), abs(t1), 1e-30)
    while idx < n_eval and t_eval[idx] <= t + eps_t:
        _record(y, d, obs, idx)
        idx += 1
    if span <= 0.0:
        return STATUS_OK, 0, 0

    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    k5 = np.empty(n, np.complex128)
    k6 = np.empty(n, np.complex128)
    k7 = np.empty(n, np.complex128)
    ynew = np.empty(n, np.complex128)
    ytmp = np.empty(n, np.complex128)
    err = np.empty(n, np.complex128)

    cpl = coup0 * _coupling_at(t - t0, env_on, x0pos, v, w)
    _rhs(y, k1, d, cpl, delta, g_dn, g_up, g_at, sq1, w_aad)
    nfev = 1
    nsteps = 0

    # conservative first step; the controller expands it geometrically
    h = span * 1e-6
    scale0 = atol + rtol
    f_norm = 0.0
    for i in range(n):
        q = abs(k1[i])
        if q > f_norm:
            f_norm = q
    if f_norm > 0.0:
        h = min(h, 0.01 * scale0 * n / f_norm + 1e-12 * span)
    if h <= 0.0:
        h = span * 1e-6

    min_step = 1e-14 * max(abs(t1), span)
    rejected = False
    while t < t1 - eps_t:
        target = t1
        if idx < n_eval and t_eval[idx] < target:
            target = t_eval[idx]
        if h > target - t:
            h = target - t
        if h < min_step:
            return STATUS_STEP_UNDERFLOW, nsteps, nfev

        for i in range(n):
            ytmp[i] = y[i] + h * _A21 * k1[i]
        cpl = coup0 * _coupling_at(t - t0 + _C2 * h, env_on, x0pos, v, w)
        _rhs(ytmp, k2, d, cpl, delta, g_dn, g_up, g_at, sq1, w_aad)
        for i in range(n):
            ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        cpl = coup0 * _coupling_at(t - t0 + _C3 * h, env_on, x0pos, v, w)
        _rhs(ytmp, k3, d, cpl, delta, g_dn, g_up, g_at, sq1, w_aad)
        for i in range(n):
            ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        cpl = coup0 * _coupling_at(t - t0 + _C4 * h, env_on, x0pos, v, w)
        _rhs(ytmp, k4, d, cpl, delta, g_dn, g_up, g_at, sq1, w_aad)
        for i in range(n):
            ytmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        cpl = coup0 * _coupling_at(t - t0 + _C5 * h, env_on, x0pos, v, w)
        _rhs(ytmp, k5, d, cpl, delta, g_dn, g_up, g_at, sq1, w_aad)
        for i in range(n):
            ytmp[i] = y[i] + h * (
                _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
            )
        cpl = coup0 * _coupling_at(t - t0 + h, env_on, x0pos, v, w)
        _rhs(ytmp, k6, d, cpl, delta, g_dn, g_up, g_at, sq1, w_aad)
        for i in range(n):
            ynew[i] = y[i] + h * (
                _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
            )
        _rhs(ynew, k7, d, cpl, delta, g_dn, g_up, g_at, sq1, w_aad)
        nfev += 6
        for i in range(n):
            err[i] = h * (
                _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i]
            )
        enorm = _error_norm(err, y, ynew, rtol, atol)

        if enorm <= 1.0:
            t = t + h
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            nsteps += 1
            while idx < n_eval and t_eval[idx] <= t + eps_t:
                _record(y, d, obs, idx)
                idx += 1
            if enorm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * enorm ** (-0.2))
            if rejected:
                factor = min(1.0, factor)
            h = h * factor
            rejected = False
        else:
            h = h * max(_MIN_FACTOR, _SAFETY * enorm ** (-0.2))
            rejected = True

    while idx < n_eval:
        _record(y, d, obs, idx)
        idx += 1
    return STATUS_OK, nsteps, nfev
