"""Radial initial value problems for reduced chain systems.

The chain system in radial coordinates is

    w_m''(r) + (n-1)/r * w_m'(r) = -f_m(r, w(r)),   w_m(0) = alpha_m, w_m'(0) = 0,

singular at r = 0 both through the drift and through the r^(-sigma) weights.
Integration therefore starts at a small offset radius h0 from the closed-form
second integral of the source frozen at alpha (:func:`series_start`) and then
hands off to an adaptive Dormand-Prince kernel with wall-event localization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import kernels
from .errors import (
    MonotonicityViolation,
    NonPositiveAlpha,
    StepLimitExceeded,
    StiffnessFailure,
)
from .system_spec import ChainLink, ReducedSystem


# --------------------------------------------------------------------------
# controls and result types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IvpControls:
    """Knobs of one integration run.

    Defaults match the documented CLI defaults.  ``eps_wall`` localizes the
    first wall crossing in radius; ``eps_decay`` is the componentwise
    smallness threshold for declaring decay.
    """

    h0: float = 1e-6
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    r_max: float = 1e3
    eps_wall: float = 1e-10
    eps_decay: float = 1e-6
    max_steps: int = 500_000

    def __post_init__(self):
        if not self.h0 > 0.0:
            raise ValueError(f"h0 must be > 0, got {self.h0}")
        for name in ("rel_tol", "abs_tol", "eps_wall", "eps_decay"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if not self.r_max > self.h0:
            raise ValueError(f"r_max must exceed h0, got {self.r_max} <= {self.h0}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def replace(self, **kw) -> "IvpControls":
        data = {
            "h0": self.h0,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "r_max": self.r_max,
            "eps_wall": self.eps_wall,
            "eps_decay": self.eps_decay,
            "max_steps": self.max_steps,
        }
        data.update(kw)
        return IvpControls(**data)


@dataclass(frozen=True)
class Trajectory:
    """Radial profile samples: ``values[i] = w(grid[i])``, ``derivs[i] = w'(grid[i])``.

    The grid interleaves each accepted step's dense midpoint with its endpoint
    so Simpson triples are available to the quadrature downstream; the first
    row is the series start at h0, not the raw alpha.
    """

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    alpha: Optional[np.ndarray]

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0.0):
            raise ValueError("trajectory grid must be strictly increasing")


@dataclass(frozen=True)
class WallHit:
    r0: float
    hit_index: int
    state: np.ndarray


@dataclass(frozen=True)
class Decayed:
    limit: np.ndarray


@dataclass(frozen=True)
class Truncated:
    r_end: float
    state: np.ndarray


Outcome = Union[WallHit, Decayed, Truncated]


# --------------------------------------------------------------------------
# generalized monomial tables (kernel encoding)
# --------------------------------------------------------------------------

@lru_cache(maxsize=128)
def _term_table(rs: ReducedSystem):
    """Flatten the rhs table into arrays: chain rows become power-1 monomials."""
    offsets = [0]
    coefs: list[float] = []
    sigmas: list[float] = []
    powrows: list[list[float]] = []
    L = rs.total_len
    for row in rs.rhs_table:
        if isinstance(row, ChainLink):
            coefs.append(1.0)
            sigmas.append(0.0)
            pw = [0.0] * L
            pw[row.next_index] = 1.0
            powrows.append(pw)
        else:
            for mono in row.monomials:
                coefs.append(mono.coef)
                sigmas.append(mono.sigma)
                powrows.append(list(mono.powers))
        offsets.append(len(coefs))
    return (
        np.asarray(offsets, dtype=np.int64),
        np.asarray(coefs, dtype=float),
        np.asarray(sigmas, dtype=float),
        np.asarray(powrows, dtype=float).reshape(len(coefs), L),
    )


def _check_alpha(alpha, L: int) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.shape != (L,):
        raise ValueError(f"alpha must have length {L}, got shape {a.shape}")
    if np.any(a <= 0.0):
        raise NonPositiveAlpha(f"alpha must be strictly positive, got {a.tolist()}")
    return a


# --------------------------------------------------------------------------
# singular start-up
# --------------------------------------------------------------------------

def series_start(rs: ReducedSystem, alpha, h0: float):
    """Closed-form start at radius h0 from the source frozen at alpha.

    Each term ``g * r^(-sigma)`` integrates twice against the radial measure:

        w_m(h0)  = alpha_m - g * h0^(2-sigma) / ((2-sigma)(n-sigma))
        w_m'(h0) = -g * h0^(1-sigma) / (n-sigma)

    summed over the row's terms, with chain rows contributing ``sigma = 0``
    and ``g`` equal to the chained component of alpha.  The start error is
    O(h0^(4-2*sigma_max)) and shrinks under h0 refinement.
    """
    a = _check_alpha(alpha, rs.total_len)
    term_off, coefs, sigmas, powmat = _term_table(rs)
    n = rs.n
    w0 = a.copy()
    dw0 = np.zeros_like(a)
    for m in range(rs.total_len):
        for t in range(term_off[m], term_off[m + 1]):
            g = coefs[t]
            for l in range(rs.total_len):
                p = powmat[t, l]
                if p != 0.0:
                    g *= a[l] if p == 1.0 else a[l] ** p
            s = sigmas[t]
            w0[m] -= g * h0 ** (2.0 - s) / ((2.0 - s) * (n - s))
            dw0[m] -= g * h0 ** (1.0 - s) / (n - s)
    return w0, dw0


def _series_wall_hit(rs: ReducedSystem, a: np.ndarray, h0: float):
    """First zero of the frozen-source series on (0, h0], for starts that
    already cross the wall before the numerical kernel can take over."""
    def w_of(r):
        w, _ = series_start(rs, a, r)
        return w

    r0, hit = locate_wall_event(w_of, h0 * 1e-12, h0, eps_wall=h0 * 1e-9)
    r_mid = 0.5 * r0
    w_mid, dw_mid = series_start(rs, a, r_mid)
    w_end, dw_end = series_start(rs, a, r0)
    traj = Trajectory(
        grid=np.array([r_mid, r0]),
        values=np.vstack([w_mid, w_end]),
        derivs=np.vstack([dw_mid, dw_end]),
        alpha=a.copy(),
    )
    state = np.maximum(w_end, 0.0)
    return traj, WallHit(r0=r0, hit_index=hit, state=state)


# --------------------------------------------------------------------------
# main entry points
# --------------------------------------------------------------------------

def _decay_radius_floor(rs: ReducedSystem, a: np.ndarray, h0: float) -> float:
    """Problem length scale guard: never declare decay before the trajectory
    had room to move, which protects starts already below eps_decay."""
    g = rs.frozen_sources(a)
    gmax = max(g) if g else 0.0
    if gmax <= 0.0:
        return math.inf
    r_scale = math.sqrt(float(np.min(a)) / gmax)
    return max(1.0, 10.0 * h0, 10.0 * r_scale)


def integrate(rs: ReducedSystem, alpha, controls: IvpControls):
    """Shoot from alpha; returns ``(Trajectory, Outcome)``.

    Outcomes: :class:`WallHit` when a component first reaches zero (localized
    to within ``eps_wall`` in radius, ties to the lowest index),
    :class:`Decayed` when all components fall below ``eps_decay`` past the
    problem length scale, :class:`Truncated` at ``r_max`` otherwise.

    Raises :class:`StepLimitExceeded` or :class:`StiffnessFailure` when the
    controls cannot carry the run to a terminal state.
    """
    a = _check_alpha(alpha, rs.total_len)
    w0, dw0 = series_start(rs, a, controls.h0)
    if np.any(w0 <= 0.0):
        return _series_wall_hit(rs, a, controls.h0)

    term_off, coefs, sigmas, powmat = _term_table(rs)
    y0 = np.concatenate([w0, dw0])
    status, grid, states, event_r, event_index, _ = kernels.integrate_core(
        rs.n,
        term_off,
        coefs,
        sigmas,
        powmat,
        y0,
        controls.h0,
        controls.r_max,
        controls.rel_tol,
        controls.abs_tol,
        controls.eps_wall,
        controls.eps_decay,
        _decay_radius_floor(rs, a, controls.h0),
        controls.max_steps,
    )

    L = rs.total_len
    traj = Trajectory(
        grid=grid, values=states[:, :L], derivs=states[:, L:], alpha=a.copy()
    )
    if status == kernels.WALL_HIT:
        state = np.maximum(states[-1, :L], 0.0)
        return traj, WallHit(r0=event_r, hit_index=event_index, state=state)
    if status == kernels.DECAYED:
        return traj, Decayed(limit=states[-1, :L].copy())
    if status == kernels.TRUNCATED:
        return traj, Truncated(r_end=float(grid[-1]), state=states[-1, :L].copy())
    if status == kernels.STEP_LIMIT:
        raise StepLimitExceeded(
            f"step cap {controls.max_steps} reached at r={grid[-1]:.6g}; retune controls"
        )
    if status == kernels.STEP_UNDERFLOW:
        raise StiffnessFailure(
            f"step size underflowed near r={grid[-1]:.6g}; retune controls"
        )
    raise MonotonicityViolation(
        f"positive drift of w' detected near r={grid[-1]:.6g}; integration untrustworthy"
    )


def locate_wall_event(
    w_of_r: Callable[[float], Sequence[float]],
    r_lo: float,
    r_hi: float,
    eps_wall: float,
):
    """Localize the first componentwise zero of ``w_of_r`` across a bracket.

    Requires some component to change sign across ``[r_lo, r_hi]``.  Each
    crossing component is bisected to ``eps_wall``; the smallest localized
    radius wins and exact ties break to the lowest component index.
    Returns ``(r0, hit_index)``.
    """
    w_hi = np.asarray(w_of_r(r_hi), dtype=float)
    crossing = [m for m in range(w_hi.size) if w_hi[m] <= 0.0]
    if not crossing:
        raise ValueError("no sign change across the bracket")
    best_r = math.inf
    best_m = -1
    for m in crossing:
        lo, hi = r_lo, r_hi
        while hi - lo > eps_wall:
            mid = 0.5 * (lo + hi)
            if w_of_r(mid)[m] > 0.0:
                lo = mid
            else:
                hi = mid
        if lo < best_r:
            best_r = lo
            best_m = m
    return best_r, best_m


# --------------------------------------------------------------------------
# trajectory CSV interchange
# --------------------------------------------------------------------------

def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write ``r, w_1, ..., w_L, dw_1, ..., dw_L`` rows at full precision."""
    L = traj.values.shape[1]
    header = (
        "r, "
        + ", ".join(f"w_{i + 1}" for i in range(L))
        + ", "
        + ", ".join(f"dw_{i + 1}" for i in range(L))
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i in range(traj.grid.size):
            cells = [f"{traj.grid[i]:.16e}"]
            cells += [f"{v:.16e}" for v in traj.values[i]]
            cells += [f"{v:.16e}" for v in traj.derivs[i]]
            fh.write(", ".join(cells) + "\n")


def trajectory_from_csv(path) -> Trajectory:
    """Read a trajectory written by :func:`trajectory_to_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        names = [c.strip() for c in header.split(",")]
        if not names or names[0] != "r":
            raise ValueError(f"unexpected trajectory header: {header!r}")
        w_cols = [i for i, c in enumerate(names) if c.startswith("w_")]
        dw_cols = [i for i, c in enumerate(names) if c.startswith("dw_")]
        if not w_cols or len(w_cols) != len(dw_cols):
            raise ValueError(f"unexpected trajectory header: {header!r}")
        rows = []
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(c) for c in line.split(",")])
    data = np.asarray(rows, dtype=float)
    return Trajectory(
        grid=data[:, 0],
        values=data[:, w_cols],
        derivs=data[:, dw_cols],
        alpha=None,
    )
