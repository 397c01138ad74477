"""Pure-Python integration core: adaptive Dormand-Prince 5(4) with dense
output, first-wall-crossing localization, decay and truncation exits.

This is the reference twin of the compiled kernel; keep the two in lockstep.
The radial system is ``w'' + (n-1)/r w' = -f(r, w)`` written first order in
``y = [w, w']``.  Right-hand sides are generalized monomial tables: component
``m`` sums terms ``coef_t * r^(-sigma_t) * prod_l w_l^(pow_t[l])`` over
``t in [term_off[m], term_off[m+1])``; states are clamped below at zero
inside the monomials so stage probes past the wall stay defined.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "python"

WALL_HIT = 0
DECAYED = 1
TRUNCATED = 2
STEP_LIMIT = 3
STEP_UNDERFLOW = 4
MONOTONE_FAIL = 5

# Dormand-Prince 5(4) tableau, propagating the 5th-order solution.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# quartic dense-output weights: y(theta) = y0 + h * (K^T P) @ [theta, ..., theta^4]
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_MAX_GROW = 5.0
_MIN_SHRINK = 0.2
_SAFETY = 0.9
_DERIV_SLACK = 1e-12  # tolerated positive w' while all components positive


def _make_rhs(n, term_off, coefs, sigmas, powmat):
    nm1 = float(n - 1)
    L = len(term_off) - 1

    def rhs(r, y, out):
        out[:L] = y[L:]
        for m in range(L):
            fm = 0.0
            for t in range(term_off[m], term_off[m + 1]):
                g = coefs[t]
                if sigmas[t] != 0.0:
                    g *= r ** (-sigmas[t])
                for l in range(L):
                    p = powmat[t, l]
                    if p == 0.0:
                        continue
                    b = y[l] if y[l] > 0.0 else 0.0
                    g *= b if p == 1.0 else b ** p
                fm += g
            out[L + m] = -fm - nm1 / r * y[L + m]

    return rhs


def _first_crossing(dense, h, eps_wall, L, w_end):
    """Earliest in-step zero among components non-positive at the endpoint.

    Returns (theta_lo, index) with the state still non-negative at theta_lo
    and the bracket width below eps_wall in radius; ties break to the lowest
    component index.
    """
    best_theta = math.inf
    best_m = -1
    for m in range(L):
        if w_end[m] > 0.0:
            continue
        lo, hi = 0.0, 1.0
        while h * (hi - lo) > eps_wall:
            mid = 0.5 * (lo + hi)
            if dense(mid)[m] > 0.0:
                lo = mid
            else:
                hi = mid
        if lo < best_theta:
            best_theta = lo
            best_m = m
    return best_theta, best_m


def integrate_core(
    n,
    term_off,
    coefs,
    sigmas,
    powmat,
    y0,
    r_start,
    r_max,
    rel_tol,
    abs_tol,
    eps_wall,
    eps_decay,
    decay_r_min,
    max_steps,
):
    """Run the adaptive loop; see the module docstring for the contract.

    Returns ``(status, grid, states, event_r, event_index, n_accepted)`` where
    ``states`` holds rows ``[w, w']`` on a grid that interleaves each accepted
    step's dense midpoint (so downstream quadrature can walk Simpson triples).
    """
    y = np.asarray(y0, dtype=float).copy()
    L = y.size // 2
    rhs = _make_rhs(n, term_off, coefs, sigmas, powmat)

    r = float(r_start)
    grid = [r]
    states = [y.copy()]

    K = np.empty((7, 2 * L))
    rhs(r, y, K[0])

    h = 0.01 * r
    err_prev = 1.0
    status = TRUNCATED
    event_r = math.nan
    event_index = -1
    n_acc = 0

    while True:
        if n_acc >= max_steps:
            status = STEP_LIMIT
            break
        if not math.isfinite(h) or h <= 1e-15 * r:
            status = STEP_UNDERFLOW
            break
        last = False
        if r + h >= r_max:
            h = r_max - r
            last = True
            if h <= 0.0:
                status = TRUNCATED
                break

        for s in range(1, 6):
            ys = y + h * (_A[s - 1] @ K[:s])
            rhs(r + _C[s] * h, ys, K[s])
        y_new = y + h * (_B @ K[:6])
        rhs(r + h, y_new, K[6])
        err = h * (_E @ K)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(all="ignore"):
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if not math.isfinite(err_norm):
            err_norm = math.inf

        if err_norm > 1.0 or not np.all(np.isfinite(y_new)):
            fac = _MIN_SHRINK if not math.isfinite(err_norm) else max(
                _MIN_SHRINK, _SAFETY * err_norm ** -0.2
            )
            h *= fac
            continue

        n_acc += 1
        Q = K.T @ _P

        def dense(theta, _y=y, _h=h, _Q=Q):
            th = np.array([theta, theta * theta, theta ** 3, theta ** 4])
            return _y + _h * (_Q @ th)

        w_new = y_new[:L]
        if np.any(w_new <= 0.0):
            theta, m_hit = _first_crossing(dense, h, eps_wall, L, w_new)
            mid = dense(0.5 * theta)
            ev = dense(theta)
            r_mid = r + 0.5 * theta * h
            r_ev = r + theta * h
            if r_mid > grid[-1]:
                grid.append(r_mid)
                states.append(mid)
            if r_ev > grid[-1]:
                grid.append(r_ev)
                states.append(ev)
            status = WALL_HIT
            event_r = r_ev
            event_index = m_hit
            break

        grid.append(r + 0.5 * h)
        states.append(dense(0.5))
        grid.append(r + h)
        states.append(y_new.copy())

        r += h
        y = y_new
        K[0] = K[6]

        if r >= decay_r_min and np.all(w_new < eps_decay):
            status = DECAYED
            break
        if last:
            status = TRUNCATED
            break
        if np.any(y[L:] > _DERIV_SLACK):
            status = MONOTONE_FAIL
            break

        fac = _SAFETY * max(err_norm, 1e-10) ** -0.14 * err_prev ** 0.08
        h *= min(_MAX_GROW, max(_MIN_SHRINK, fac))
        err_prev = max(err_norm, 1e-10)

    return (
        status,
        np.array(grid),
        np.array(states),
        event_r,
        event_index,
        n_acc,
    )
