"""Integral identities and decay diagnostics on computed trajectories.

Volume integrals over the ball of radius R are evaluated in radial form,
``integral_B g dx = omega * integral_0^R g(r) r^(n-1) dr`` with
``omega = 2 pi^(n/2) / Gamma(n/2)``, by composite Simpson on the trajectory
grid (which interleaves step midpoints).  The short stretch below the start
radius is handled by the closed-form frozen-source head where it matters.

Two identity families are checked: the chain energy equalities (all pairings
``j <-> K+1-j`` of gradient and product integrals must agree with the source
integrals) and the dilation identity whose sign certificate separates
parameter ranges admitting ball solutions from those that do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import QuadratureFailure, WindowTooShort
from .integrator import Trajectory
from .system_spec import ChainLink, ReducedSystem, SourceTerm


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in dimension n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


# --------------------------------------------------------------------------
# quadrature on interleaved grids
# --------------------------------------------------------------------------

def radial_integral(grid: np.ndarray, samples: np.ndarray, n: int, head: float = 0.0) -> float:
    """``integral g(r) r^(n-1) dr`` over the grid, plus an analytic head.

    Walks Simpson triples wherever the midpoint pattern holds and falls back
    to the trapezoid rule on irregular intervals (e.g. the final event pair).
    """
    if grid.size < 3:
        raise QuadratureFailure(f"grid of {grid.size} points cannot support quadrature")
    f = samples * grid ** (n - 1)
    if not np.all(np.isfinite(f)):
        raise QuadratureFailure("non-finite integrand samples")
    total = head
    i = 0
    m = grid.size
    while i < m - 1:
        if i + 2 <= m - 1:
            h = grid[i + 2] - grid[i]
            mid_err = abs(grid[i + 1] - 0.5 * (grid[i] + grid[i + 2]))
            if mid_err <= 1e-8 * h:
                total += h / 6.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2])
                i += 2
                continue
        total += 0.5 * (grid[i + 1] - grid[i]) * (f[i] + f[i + 1])
        i += 1
    return float(total)


# --------------------------------------------------------------------------
# chain shapes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _ChainShape:
    kind: str  # "scalar" | "system"
    order: int  # the equation order k


def _chain_shape(rs: ReducedSystem) -> _ChainShape:
    eqs = sorted({i for i, _ in rs.index_map})
    if eqs == [0]:
        return _ChainShape(kind="scalar", order=rs.total_len)
    if eqs == [0, 1]:
        k0 = sum(1 for i, _ in rs.index_map if i == 0)
        k1 = rs.total_len - k0
        if k0 == k1:
            return _ChainShape(kind="system", order=k0)
    raise ValueError(
        "energy identities are defined for scalar chains and two-equation "
        "equal-order systems"
    )


def _clamped_pow(w: np.ndarray, p: float) -> np.ndarray:
    if p == 0.0:
        return np.ones_like(w)
    base = np.maximum(w, 0.0)
    return base if p == 1.0 else base ** p


def _source_samples(rs: ReducedSystem, m: int, grid: np.ndarray, w: np.ndarray) -> np.ndarray:
    row = rs.rhs_table[m]
    assert isinstance(row, SourceTerm)
    out = np.zeros_like(grid)
    for mono in row.monomials:
        term = np.full_like(grid, mono.coef)
        if mono.sigma != 0.0:
            term = term * grid ** (-mono.sigma)
        for l, p in enumerate(mono.powers):
            if p != 0.0:
                term = term * _clamped_pow(w[:, l], p)
        out += term
    return out


def _source_head(rs: ReducedSystem, m: int, r0: float, w0: np.ndarray, pair_col: int, n: int) -> float:
    """Closed-form ``integral_0^r0 f_m(r, w) w_pair r^(n-1) dr`` with the state
    frozen at the first grid row; exact to leading order near the origin."""
    row = rs.rhs_table[m]
    head = 0.0
    for mono in row.monomials:
        g = mono.frozen_coef(w0) * max(w0[pair_col], 0.0)
        head += g * r0 ** (n - mono.sigma) / (n - mono.sigma)
    return head


# --------------------------------------------------------------------------
# energy identities
# --------------------------------------------------------------------------

def energy_identity(traj: Trajectory, rs: ReducedSystem) -> list[tuple[str, float]]:
    """All formulations of the chain energy on a wall-terminated trajectory.

    Returns labeled values: one source integral per source row, the gradient
    pairings ``integral w_j' w_(K+1-j)' dx`` and the product pairings
    ``integral w_(j+1) w_(K+1-j) dx`` over chain rows, deduplicated by
    symmetry.  On true zero-boundary (Navier) data they must all agree.
    """
    _chain_shape(rs)  # raises on unsupported shapes
    n = rs.n
    K = rs.total_len
    omega = sphere_area(n)
    grid, w, dw = traj.grid, traj.values, traj.derivs

    out: list[tuple[str, float]] = []
    for m, row in enumerate(rs.rhs_table):
        if isinstance(row, SourceTerm):
            pair = K - m - 1  # 0-based column of w_(K+1-ms), ms = m+1
            samples = _source_samples(rs, m, grid, w) * np.maximum(w[:, pair], 0.0)
            head = _source_head(rs, m, grid[0], w[0], pair, n)
            out.append((f"source[{m + 1}]", omega * radial_integral(grid, samples, n, head)))
    for j in range(1, K + 1):
        if j > K + 1 - j:
            break
        samples = dw[:, j - 1] * dw[:, K - j]
        out.append((f"grad[{j}]", omega * radial_integral(grid, samples, n)))
    seen = set()
    for m, row in enumerate(rs.rhs_table):
        if isinstance(row, ChainLink):
            j = m + 1  # 1-based row, product pair (j+1, K+1-j)
            key = frozenset((j + 1, K + 1 - j))
            if key in seen:
                continue
            seen.add(key)
            samples = w[:, j] * w[:, K - j]
            out.append((f"prod[{j}]", omega * radial_integral(grid, samples, n)))
    return out


# --------------------------------------------------------------------------
# dilation (Pohozaev-type) identity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PohozaevReport:
    energy_values: tuple[tuple[str, float], ...]
    interior_combination: float
    boundary_flux: float
    extra_terms: float
    residual: float
    bracket: float
    navier_data: bool
    scale: float
    rule: str

    def to_json(self) -> dict:
        return {
            "energy_values": [[name, val] for name, val in self.energy_values],
            "interior_combination": self.interior_combination,
            "boundary_flux": self.boundary_flux,
            "extra_terms": self.extra_terms,
            "residual": self.residual,
            "bracket": self.bracket,
            "navier_data": self.navier_data,
            "scale": self.scale,
            "rule": self.rule,
        }


def _navier_flag(w: np.ndarray) -> bool:
    scale = float(np.max(np.abs(w)))
    return bool(np.max(np.abs(w[-1])) <= 1e-5 * max(scale, 1e-300))


def pohozaev_residual(traj: Trajectory, rs: ReducedSystem) -> PohozaevReport:
    """Check the dilation identity on a wall-terminated trajectory.

    The interior combination (gradient pairings, product pairings and the
    weighted source integrals with their dilation coefficients) must balance
    the boundary flux ``omega R^n sum_j w_j'(R) w_(K+1-j)'(R)`` plus, for
    systems with own-power factors, the explicit cross terms.  The residual
    is reported relative to the largest participating magnitude, together
    with the sign certificate whose non-positivity certifies that no
    zero-boundary ball solution exists at these parameters.
    """
    shape = _chain_shape(rs)
    n = rs.n
    K = rs.total_len
    k = shape.order
    omega = sphere_area(n)
    grid, w, dw = traj.grid, traj.values, traj.derivs
    R = float(grid[-1])

    grads = {}
    for j in range(1, k + 1):
        samples = dw[:, j - 1] * dw[:, K - j]
        grads[j] = omega * radial_integral(grid, samples, n)
    prods = {}
    for j in range(1, k):
        samples = w[:, j] * w[:, K - j]
        prods[j] = omega * radial_integral(grid, samples, n)

    sources = []
    for m, row in enumerate(rs.rhs_table):
        if isinstance(row, SourceTerm):
            pair = K - m - 1
            samples = _source_samples(rs, m, grid, w) * np.maximum(w[:, pair], 0.0)
            head = _source_head(rs, m, grid[0], w[0], pair, n)
            sources.append((m, omega * radial_integral(grid, samples, n, head)))

    flux = omega * R ** n * sum(dw[-1, j - 1] * dw[-1, K - j] for j in range(1, k + 1))

    terms = [(2.0 - n) * sum(grads.values()), n * sum(prods.values())]
    cross = 0.0
    bracket = math.nan
    if shape.kind == "scalar":
        row = rs.rhs_table[K - 1]
        src_total = 0.0
        for mono in row.monomials:
            p = mono.powers[0]
            samples = (
                mono.coef
                * _clamped_pow(w[:, 0], p + 1.0)
                * (grid ** (-mono.sigma) if mono.sigma != 0.0 else 1.0)
            )
            head = mono.frozen_coef(w[0]) * max(w[0, 0], 0.0) * grid[0] ** (
                n - mono.sigma
            ) / (n - mono.sigma)
            val = omega * radial_integral(grid, samples, n, head)
            src_total += 2.0 * (n - mono.sigma) / (1.0 + p) * val
        terms.append(src_total)
        if len(row.monomials) == 1:
            mono = row.monomials[0]
            bracket = k * (2.0 - n) + n * (k - 1.0) + 2.0 * (n - mono.sigma) / (
                1.0 + mono.powers[0]
            )
        rule = "scalar dilation identity"
    else:
        mono1 = rs.rhs_table[k - 1].monomials[0]
        mono2 = rs.rhs_table[K - 1].monomials[0]
        if len(rs.rhs_table[k - 1].monomials) != 1 or len(rs.rhs_table[K - 1].monomials) != 1:
            raise ValueError("system dilation identity needs single-monomial sources")
        u_col, v_col = 0, k
        s = mono1.powers[u_col]
        q = mono1.powers[v_col]
        t = mono2.powers[v_col]
        p = mono2.powers[u_col]
        src1 = dict(sources)[k - 1]
        src2 = dict(sources)[K - 1]
        terms.append((n - mono1.sigma) / (1.0 + q) * src1)
        terms.append((n - mono2.sigma) / (1.0 + p) * src2)
        if s != 0.0:
            samples = (
                mono1.coef
                * _clamped_pow(w[:, v_col], q + 1.0)
                * _clamped_pow(w[:, u_col], s - 1.0)
                * (grid ** (-mono1.sigma) if mono1.sigma != 0.0 else 1.0)
                * grid
                * dw[:, u_col]
            )
            cross += s / (1.0 + q) * omega * radial_integral(grid, samples, n)
        if t != 0.0:
            samples = (
                mono2.coef
                * _clamped_pow(w[:, u_col], p + 1.0)
                * _clamped_pow(w[:, v_col], t - 1.0)
                * (grid ** (-mono2.sigma) if mono2.sigma != 0.0 else 1.0)
                * grid
                * dw[:, v_col]
            )
            cross += t / (1.0 + p) * omega * radial_integral(grid, samples, n)
        bracket = (
            k * (2.0 - n)
            + (n - mono1.sigma) / (1.0 + q)
            + (n - mono2.sigma) / (1.0 + p)
            + (k - 1.0) * n
        )
        rule = "system dilation identity with cross terms"

    interior = sum(terms)
    e_hat = float(np.mean([v for _, v in sources])) if sources else math.nan
    scale = max(
        abs(flux), abs(e_hat), max((abs(t) for t in terms), default=0.0), 1e-300
    )
    residual = abs(interior - flux + cross) / scale

    return PohozaevReport(
        energy_values=tuple(energy_identity(traj, rs)),
        interior_combination=bracket * e_hat if math.isfinite(bracket) else math.nan,
        boundary_flux=flux,
        extra_terms=-cross,
        residual=residual,
        bracket=bracket,
        navier_data=_navier_flag(w),
        scale=scale,
        rule=rule,
    )


# --------------------------------------------------------------------------
# decay fitting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    fitted_rate: float
    window: tuple[float, float]
    rms: float

    def to_json(self) -> dict:
        return {
            "fitted_rate": self.fitted_rate,
            "window": list(self.window),
            "rms": self.rms,
        }


def decay_fit(
    traj: Trajectory,
    window: Optional[tuple[float, float]] = None,
    component: int = 0,
) -> DecayFit:
    """Algebraic tail exponent: least squares of log w against log r.

    Raises :class:`WindowTooShort` when the window holds too few points, too
    little radial span, or no actual decay to fit (a flat tail is degenerate).
    """
    grid = traj.grid
    if window is None:
        window = (grid[-1] / 30.0, float(grid[-1]))
    r_lo, r_hi = window
    if not (grid[0] <= r_lo < r_hi <= grid[-1] * (1 + 1e-12)):
        raise WindowTooShort(f"window {window} outside trajectory range")
    mask = (grid >= r_lo) & (grid <= r_hi)
    r = grid[mask]
    vals = traj.values[mask, component]
    if r.size < 8:
        raise WindowTooShort(f"only {r.size} samples in window")
    if r[-1] / r[0] < 5.0:
        raise WindowTooShort("window spans less than half a decade")
    if np.any(vals <= 0.0):
        raise WindowTooShort("non-positive values in window")
    if float(vals.max() / vals.min()) < 1.05:
        raise WindowTooShort("tail is flat; nothing to fit")
    x = np.log(r)
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return DecayFit(
        fitted_rate=float(slope),
        window=(float(r_lo), float(r_hi)),
        rms=float(np.sqrt(np.mean(resid ** 2))),
    )
