# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled integration core: the hot twin of ``_rk45_py``.

Same contract, same constants, same exit statuses; keep the two in lockstep.
"""

from libc.math cimport pow, sqrt, isfinite

import numpy as np

NAME = "cython"

WALL_HIT = 0
DECAYED = 1
TRUNCATED = 2
STEP_LIMIT = 3
STEP_UNDERFLOW = 4
MONOTONE_FAIL = 5

# quartic dense-output weights (rows follow the seven stages)
_P_NP = np.array(
    [
        [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
        [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
        [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
        [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
        [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
    ]
)

DEF MAX_GROW = 5.0
DEF MIN_SHRINK = 0.2
DEF SAFETY = 0.9
DEF DERIV_SLACK = 1e-12


cdef void _rhs(int n, double r, double[:] y, double[:] out, int L,
               long[:] term_off, double[:] coefs, double[:] sigmas,
               double[:, :] powmat) noexcept:
    cdef int m, l
    cdef long t
    cdef double fm, g, p, b
    cdef double nm1 = n - 1.0
    for m in range(L):
        out[m] = y[L + m]
    for m in range(L):
        fm = 0.0
        for t in range(term_off[m], term_off[m + 1]):
            g = coefs[t]
            if sigmas[t] != 0.0:
                g = g * pow(r, -sigmas[t])
            for l in range(L):
                p = powmat[t, l]
                if p != 0.0:
                    b = y[l] if y[l] > 0.0 else 0.0
                    g = g * (b if p == 1.0 else pow(b, p))
            fm = fm + g
        out[L + m] = -fm - nm1 / r * y[L + m]


cdef void _dense(double[:] y, double h, double[:, :] Q, double theta,
                 double[:] out, int twoL) noexcept:
    cdef int i
    cdef double t1 = theta
    cdef double t2 = theta * theta
    cdef double t3 = t2 * theta
    cdef double t4 = t3 * theta
    for i in range(twoL):
        out[i] = y[i] + h * (Q[i, 0] * t1 + Q[i, 1] * t2 + Q[i, 2] * t3 + Q[i, 3] * t4)


def integrate_core(
    int n,
    term_off_in,
    coefs_in,
    sigmas_in,
    powmat_in,
    y0_in,
    double r_start,
    double r_max,
    double rel_tol,
    double abs_tol,
    double eps_wall,
    double eps_decay,
    double decay_r_min,
    long max_steps,
):
    cdef long[:] term_off = np.ascontiguousarray(term_off_in, dtype=np.int64)
    cdef double[:] coefs = np.ascontiguousarray(coefs_in, dtype=np.float64)
    cdef double[:] sigmas = np.ascontiguousarray(sigmas_in, dtype=np.float64)
    cdef double[:, :] powmat = np.ascontiguousarray(powmat_in, dtype=np.float64)
    y_arr = np.array(y0_in, dtype=np.float64)
    cdef double[:] y = y_arr
    cdef int twoL = y_arr.shape[0]
    cdef int L = twoL // 2
    cdef double[:, :] P = _P_NP

    # Dormand-Prince 5(4) coefficients
    cdef double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0
    cdef double a21 = 1.0 / 5.0
    cdef double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0
    cdef double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0
    cdef double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0
    cdef double a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0
    cdef double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0
    cdef double a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0
    cdef double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0
    cdef double b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0
    cdef double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0
    cdef double e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0

    K_arr = np.empty((7, twoL), dtype=np.float64)
    cdef double[:, :] K = K_arr
    scratch_arr = np.empty(twoL, dtype=np.float64)
    cdef double[:] ys = scratch_arr
    ynew_arr = np.empty(twoL, dtype=np.float64)
    cdef double[:] y_new = ynew_arr
    Q_arr = np.empty((twoL, 4), dtype=np.float64)
    cdef double[:, :] Q = Q_arr
    buf_arr = np.empty(twoL, dtype=np.float64)
    cdef double[:] buf = buf_arr

    cdef long cap = 4096
    grid_arr = np.empty(cap, dtype=np.float64)
    states_arr = np.empty((cap, twoL), dtype=np.float64)
    cdef double[:] grid = grid_arr
    cdef double[:, :] states = states_arr
    cdef long count = 0

    cdef double r = r_start
    cdef double h = 0.01 * r_start
    cdef double err_prev = 1.0
    cdef int status = TRUNCATED
    cdef double event_r = float("nan")
    cdef int event_index = -1
    cdef long n_acc = 0

    cdef int i, s, m, best_m, finite_ok, last
    cdef long t
    cdef double err_norm, sc, e_i, fac, theta, lo, hi, mid, best_theta
    cdef double r_mid, r_ev, absy, absn

    grid[0] = r
    for i in range(twoL):
        states[0, i] = y[i]
    count = 1

    _rhs(n, r, y, K[0], L, term_off, coefs, sigmas, powmat)

    while True:
        if n_acc >= max_steps:
            status = STEP_LIMIT
            break
        if not isfinite(h) or h <= 1e-15 * r:
            status = STEP_UNDERFLOW
            break
        last = 0
        if r + h >= r_max:
            h = r_max - r
            last = 1
            if h <= 0.0:
                status = TRUNCATED
                break

        # stages
        for i in range(twoL):
            ys[i] = y[i] + h * a21 * K[0, i]
        _rhs(n, r + c2 * h, ys, K[1], L, term_off, coefs, sigmas, powmat)
        for i in range(twoL):
            ys[i] = y[i] + h * (a31 * K[0, i] + a32 * K[1, i])
        _rhs(n, r + c3 * h, ys, K[2], L, term_off, coefs, sigmas, powmat)
        for i in range(twoL):
            ys[i] = y[i] + h * (a41 * K[0, i] + a42 * K[1, i] + a43 * K[2, i])
        _rhs(n, r + c4 * h, ys, K[3], L, term_off, coefs, sigmas, powmat)
        for i in range(twoL):
            ys[i] = y[i] + h * (
                a51 * K[0, i] + a52 * K[1, i] + a53 * K[2, i] + a54 * K[3, i]
            )
        _rhs(n, r + c5 * h, ys, K[4], L, term_off, coefs, sigmas, powmat)
        for i in range(twoL):
            ys[i] = y[i] + h * (
                a61 * K[0, i] + a62 * K[1, i] + a63 * K[2, i] + a64 * K[3, i]
                + a65 * K[4, i]
            )
        _rhs(n, r + h, ys, K[5], L, term_off, coefs, sigmas, powmat)
        for i in range(twoL):
            y_new[i] = y[i] + h * (
                b1 * K[0, i] + b3 * K[2, i] + b4 * K[3, i] + b5 * K[4, i]
                + b6 * K[5, i]
            )
        _rhs(n, r + h, y_new, K[6], L, term_off, coefs, sigmas, powmat)

        err_norm = 0.0
        finite_ok = 1
        for i in range(twoL):
            if not isfinite(y_new[i]):
                finite_ok = 0
                break
            e_i = h * (
                e1 * K[0, i] + e3 * K[2, i] + e4 * K[3, i] + e5 * K[4, i]
                + e6 * K[5, i] + e7 * K[6, i]
            )
            absy = y[i] if y[i] >= 0.0 else -y[i]
            absn = y_new[i] if y_new[i] >= 0.0 else -y_new[i]
            sc = abs_tol + rel_tol * (absy if absy > absn else absn)
            err_norm += (e_i / sc) * (e_i / sc)
        if finite_ok:
            err_norm = sqrt(err_norm / twoL)

        if not finite_ok or not isfinite(err_norm):
            h = h * MIN_SHRINK
            continue
        if err_norm > 1.0:
            fac = SAFETY * pow(err_norm, -0.2)
            if fac < MIN_SHRINK:
                fac = MIN_SHRINK
            h = h * fac
            continue

        # accepted
        n_acc += 1
        for i in range(twoL):
            Q[i, 0] = 0.0
            Q[i, 1] = 0.0
            Q[i, 2] = 0.0
            Q[i, 3] = 0.0
            for s in range(7):
                Q[i, 0] += K[s, i] * P[s, 0]
                Q[i, 1] += K[s, i] * P[s, 1]
                Q[i, 2] += K[s, i] * P[s, 2]
                Q[i, 3] += K[s, i] * P[s, 3]

        # grow storage if needed (two rows per step)
        if count + 2 >= cap:
            cap = cap * 2
            new_grid = np.empty(cap, dtype=np.float64)
            new_grid[: count] = grid_arr[: count]
            new_states = np.empty((cap, twoL), dtype=np.float64)
            new_states[: count] = states_arr[: count]
            grid_arr = new_grid
            states_arr = new_states
            grid = grid_arr
            states = states_arr

        # wall crossing?
        best_m = -1
        for m in range(L):
            if y_new[m] <= 0.0:
                best_m = m
                break
        if best_m >= 0:
            best_theta = 2.0
            best_m = -1
            for m in range(L):
                if y_new[m] > 0.0:
                    continue
                lo = 0.0
                hi = 1.0
                while h * (hi - lo) > eps_wall:
                    mid = 0.5 * (lo + hi)
                    _dense(y, h, Q, mid, buf, twoL)
                    if buf[m] > 0.0:
                        lo = mid
                    else:
                        hi = mid
                if lo < best_theta:
                    best_theta = lo
                    best_m = m
            theta = best_theta
            r_mid = r + 0.5 * theta * h
            r_ev = r + theta * h
            if r_mid > grid[count - 1]:
                _dense(y, h, Q, 0.5 * theta, buf, twoL)
                grid[count] = r_mid
                for i in range(twoL):
                    states[count, i] = buf[i]
                count += 1
            if r_ev > grid[count - 1]:
                _dense(y, h, Q, theta, buf, twoL)
                grid[count] = r_ev
                for i in range(twoL):
                    states[count, i] = buf[i]
                count += 1
            status = WALL_HIT
            event_r = r_ev
            event_index = best_m
            break

        # store midpoint and endpoint
        _dense(y, h, Q, 0.5, buf, twoL)
        grid[count] = r + 0.5 * h
        for i in range(twoL):
            states[count, i] = buf[i]
        count += 1
        grid[count] = r + h
        for i in range(twoL):
            states[count, i] = y_new[i]
        count += 1

        r = r + h
        for i in range(twoL):
            y[i] = y_new[i]
            K[0, i] = K[6, i]

        # decay?
        finite_ok = 1  # reused as "all small" flag
        for m in range(L):
            if not (y[m] < eps_decay):
                finite_ok = 0
                break
        if r >= decay_r_min and finite_ok:
            status = DECAYED
            break
        if last:
            status = TRUNCATED
            break
        finite_ok = 0  # reused as "drift detected" flag
        for m in range(L):
            if y[L + m] > DERIV_SLACK:
                finite_ok = 1
                break
        if finite_ok:
            status = MONOTONE_FAIL
            break

        fac = SAFETY * pow(err_norm if err_norm > 1e-10 else 1e-10, -0.14) * pow(err_prev, 0.08)
        if fac > MAX_GROW:
            fac = MAX_GROW
        if fac < MIN_SHRINK:
            fac = MIN_SHRINK
        h = h * fac
        err_prev = err_norm if err_norm > 1e-10 else 1e-10

    return (
        status,
        grid_arr[:count].copy(),
        states_arr[:count].copy(),
        event_r,
        event_index,
        n_acc,
    )
