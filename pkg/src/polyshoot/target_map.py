"""The target map and the mass-simplex chart.

``psi`` sends a shooting vector to the point where the radial profile first
reaches the wall (the boundary of the positive cone), to its limit when it
decays instead, or to itself when it already sits on the wall.  The chart
maps ``phi`` / ``phi_inverse`` exchange the wall piece of mass at most ``a``
with the mass simplex ``A_a`` used by the degree search.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import MassExceeded, NonPositiveAlpha
from .integrator import Decayed, IvpControls, Trajectory, Truncated, WallHit, integrate
from .system_spec import ReducedSystem

CASE_BOUNDARY = "boundary"
CASE_WALL_HIT = "wall_hit"
CASE_DECAY = "decay"
CASE_UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class TargetResult:
    """Value of the target map with provenance.

    ``case`` is one of the four strings above.  Wall hits clamp the hit
    component to exactly zero so the value lies on the wall; unresolved runs
    surface the truncated state and must never be silently treated as zeros.
    """

    alpha: np.ndarray
    psi: np.ndarray
    case: str
    r0: Optional[float] = None
    hit_index: Optional[int] = None
    r_end: Optional[float] = None
    trajectory: Optional[Trajectory] = None

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.psi)))

    def to_json(self) -> dict:
        out = {
            "alpha": [float(x) for x in self.alpha],
            "psi": [float(x) for x in self.psi],
            "case": self.case,
        }
        if self.r0 is not None:
            out["r0"] = float(self.r0)
        if self.hit_index is not None:
            out["hit_index"] = int(self.hit_index)
        if self.r_end is not None:
            out["r_end"] = float(self.r_end)
        return out


def psi(rs: ReducedSystem, alpha, controls: IvpControls, keep_trajectory: bool = False) -> TargetResult:
    """Evaluate the target map at ``alpha >= 0``.

    Boundary points return themselves without any integration.  Interior
    points dispatch to the integrator; truncated runs come back with case
    ``unresolved`` carrying the state at ``r_max`` for the caller to judge.
    """
    a = np.asarray(alpha, dtype=float)
    if a.shape != (rs.total_len,):
        raise ValueError(f"alpha must have length {rs.total_len}, got shape {a.shape}")
    if np.any(a < 0.0):
        raise NonPositiveAlpha(f"alpha must be componentwise >= 0, got {a.tolist()}")
    if np.any(a == 0.0):
        return TargetResult(alpha=a.copy(), psi=a.copy(), case=CASE_BOUNDARY)

    traj, outcome = integrate(rs, a, controls)
    kept = traj if keep_trajectory else None
    if isinstance(outcome, WallHit):
        value = np.maximum(outcome.state, 0.0)
        value[outcome.hit_index] = 0.0
        return TargetResult(
            alpha=a.copy(),
            psi=value,
            case=CASE_WALL_HIT,
            r0=outcome.r0,
            hit_index=outcome.hit_index,
            trajectory=kept,
        )
    if isinstance(outcome, Decayed):
        return TargetResult(
            alpha=a.copy(), psi=outcome.limit.copy(), case=CASE_DECAY, trajectory=kept
        )
    assert isinstance(outcome, Truncated)
    return TargetResult(
        alpha=a.copy(),
        psi=outcome.state.copy(),
        case=CASE_UNRESOLVED,
        r_end=outcome.r_end,
        trajectory=kept,
    )


def default_jobs() -> int:
    env = os.environ.get("POLYSHOOT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def psi_batch(
    rs: ReducedSystem,
    alphas: Sequence[Sequence[float]],
    controls: IvpControls,
    jobs: Optional[int] = None,
) -> list[TargetResult]:
    """Evaluate ``psi`` over a batch, preserving input order deterministically."""
    jobs = default_jobs() if jobs is None else max(1, jobs)
    if jobs == 1 or len(alphas) <= 1:
        return [psi(rs, a, controls) for a in alphas]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda a: psi(rs, a, controls), alphas))


# --------------------------------------------------------------------------
# chart between the wall piece B_a and the mass simplex A_a
# --------------------------------------------------------------------------

MASS_SLACK = 1e-9  # relative tolerance on the mass constraint


def phi(alpha, a: float) -> np.ndarray:
    """Fill mass uniformly: boundary point with sum <= a -> simplex point.

    ``phi(alpha) = alpha + (a - sum(alpha))/L * ones``; the result is
    renormalized so its components sum to exactly ``a`` up to rounding.
    """
    v = np.asarray(alpha, dtype=float)
    total = float(v.sum())
    if total > a * (1.0 + MASS_SLACK) + MASS_SLACK:
        raise MassExceeded(f"component sum {total} exceeds mass {a}")
    out = v + (a - total) / v.size
    out += (a - out.sum()) / v.size
    return out


def phi_inverse(beta) -> np.ndarray:
    """Project a simplex point back to the wall by subtracting its minimum."""
    v = np.asarray(beta, dtype=float)
    out = v - v.min()
    return np.maximum(out, 0.0)
