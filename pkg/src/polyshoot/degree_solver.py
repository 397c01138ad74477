"""Zero finding on the mass simplex via labeled simplicial subdivision.

Every vertex of a triangulated mass simplex ``A_a`` is labeled by where the
target map sends it: the wall component it hits, "solution" when it lands at
(numerical) zero, the face it lies on for boundary points, or "unresolved"
for truncated runs.  The hit index is a wall-style Sperner labeling whose
boundary pattern matches the identity, so the signed count of completely
labeled cells equals the map degree (1 here), and those cells bracket zeros.

The search itself degenerates to a single shot for one component and to
bisection of the label-switch point for two; three components and up walk a
coarse-to-fine subdivision restricted to completely labeled cells.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AllUnresolved, InconsistentBoundary, NonPositiveAlpha, NotFound
from .integrator import IvpControls
from .system_spec import ReducedSystem
from .target_map import CASE_DECAY, CASE_WALL_HIT, TargetResult, default_jobs, psi

# retry policy for unresolved vertices: one re-run with extended range
RMAX_BOOST = 1e4

LABEL_HIT = "hit"
LABEL_SOLUTION = "solution"
LABEL_BOUNDARY = "boundary"
LABEL_UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class Label:
    """Vertex label: which wall the target value lies on.

    ``index`` is the 0-based component for hit/boundary kinds and ``None``
    otherwise.  For degree counting, solutions stand in for the lowest
    component index (a numerical zero lies on every wall at once).
    """

    kind: str
    index: Optional[int] = None

    def as_int(self) -> Optional[int]:
        if self.kind in (LABEL_HIT, LABEL_BOUNDARY):
            return self.index
        if self.kind == LABEL_SOLUTION:
            return 0
        return None

    def to_json(self):
        return {"kind": self.kind, "index": self.index}


@dataclass(frozen=True)
class SimplexGrid:
    """Barycentric lattice of ``A_a`` at dyadic resolution ``2**depth``."""

    a: float
    depth: int
    resolution: int
    lattice: np.ndarray  # (V, L) integer coordinates summing to resolution
    vertices: np.ndarray  # (V, L) scaled points, rows sum to a
    labels: tuple[Label, ...]


@dataclass(frozen=True)
class DegreeReport:
    degree: int
    grid_depth: int
    completely_labeled_count: int
    completely_labeled_cells: tuple[tuple[tuple[int, ...], ...], ...]
    unresolved_cells: int = 0
    trace: tuple[dict, ...] = ()

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "grid_depth": self.grid_depth,
            "completely_labeled_count": self.completely_labeled_count,
            "completely_labeled_cells": [
                [list(v) for v in cell] for cell in self.completely_labeled_cells
            ],
            "unresolved_cells": self.unresolved_cells,
            "trace": list(self.trace),
        }


# --------------------------------------------------------------------------
# labeling
# --------------------------------------------------------------------------

def label_with_result(
    rs: ReducedSystem, alpha, controls: IvpControls
) -> tuple[Label, Optional[TargetResult]]:
    """Label one point; boundary faces are decided without integration."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0.0):
        raise NonPositiveAlpha(f"labels are defined on the closed cone, got {a.tolist()}")
    if np.any(a == 0.0):
        return Label(LABEL_BOUNDARY, int(np.argmin(a))), None
    result = psi(rs, a, controls)
    if result.case == CASE_WALL_HIT:
        return Label(LABEL_HIT, int(result.hit_index)), result
    if result.case == CASE_DECAY and result.sup_norm() < controls.eps_decay:
        return Label(LABEL_SOLUTION), result
    return Label(LABEL_UNRESOLVED), result


def label(rs: ReducedSystem, alpha, controls: IvpControls) -> Label:
    return label_with_result(rs, alpha, controls)[0]


def _label_retrying(rs, alpha, controls):
    """Label a point, re-running unresolved verdicts once with extended range."""
    lab, result = label_with_result(rs, alpha, controls)
    if lab.kind == LABEL_UNRESOLVED:
        boosted = controls.replace(r_max=controls.r_max * RMAX_BOOST)
        lab, result = label_with_result(rs, alpha, boosted)
    return lab, result


# --------------------------------------------------------------------------
# lattice and triangulation
# --------------------------------------------------------------------------

def _compositions(total: int, parts: int):
    """All tuples of `parts` non-negative ints summing to `total`, lexicographic."""
    for dividers in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for d in dividers:
            out.append(d - prev - 1)
            prev = d
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def _x_from_s(s: Sequence[int], total: int) -> tuple[int, ...]:
    out = [s[0]]
    for j in range(1, len(s)):
        out.append(s[j] - s[j - 1])
    out.append(total - s[-1])
    return tuple(out)


def _cells(resolution: int, L: int):
    """Simplices of the standard triangulation, as tuples of lattice points.

    Lattice points map to staircase coordinates (partial sums), where the
    simplex becomes the sorted sector of a cube and the Kuhn/Freudenthal
    triangulation applies: a cell is a base point plus a permutation path.
    """
    if L == 1:
        return
    dims = L - 1
    for base in itertools.product(range(resolution), repeat=dims):
        for perm in itertools.permutations(range(dims)):
            svs = [tuple(base)]
            cur = list(base)
            for axis in perm:
                cur[axis] += 1
                svs.append(tuple(cur))
            ok = all(
                s[0] >= 0
                and all(s[t] <= s[t + 1] for t in range(dims - 1))
                and s[-1] <= resolution
                for s in svs
            )
            if ok:
                yield tuple(_x_from_s(s, resolution) for s in svs)


def _orientation_sign(points: Sequence[Sequence[float]]) -> int:
    """Orientation of an ordered point tuple in the mass hyperplane
    (first coordinate projected out)."""
    arr = np.asarray(points, dtype=float)[:, 1:]
    det = float(np.linalg.det(arr[1:] - arr[0]))
    return 1 if det > 0.0 else (-1 if det < 0.0 else 0)


def _reference_sign(L: int, resolution: int) -> int:
    """Orientation of the facet-barycenter simplex (label i <-> face x_i = 0)."""
    ws = []
    for i in range(L):
        w = [resolution / (L - 1)] * L
        w[i] = 0.0
        ws.append(w)
    return _orientation_sign(ws)


# --------------------------------------------------------------------------
# grid construction and degree
# --------------------------------------------------------------------------

def build_grid(
    rs: ReducedSystem,
    a: float,
    depth: int,
    controls: IvpControls,
    jobs: Optional[int] = None,
    label_fn: Optional[Callable] = None,
) -> SimplexGrid:
    """Label the full dyadic lattice of ``A_a``; interior points in parallel."""
    L = rs.total_len
    resolution = 2 ** depth
    lattice = np.array(list(_compositions(resolution, L)), dtype=int)
    scale = a / resolution
    vertices = lattice * scale

    labeler = label_fn
    if labeler is None:
        labeler = lambda alpha: _label_retrying(rs, alpha, controls)[0]

    labels: list[Optional[Label]] = [None] * len(lattice)
    interior: list[int] = []
    for idx, coords in enumerate(lattice):
        if np.any(coords == 0):
            labels[idx] = Label(LABEL_BOUNDARY, int(np.argmin(vertices[idx])))
        else:
            interior.append(idx)

    jobs = default_jobs() if jobs is None else max(1, jobs)
    if jobs == 1 or len(interior) <= 1:
        results = [labeler(vertices[i]) for i in interior]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda i: labeler(vertices[i]), interior))
    for i, lab in zip(interior, results):
        labels[i] = lab

    return SimplexGrid(
        a=a,
        depth=depth,
        resolution=resolution,
        lattice=lattice,
        vertices=vertices,
        labels=tuple(labels),
    )


def compute_degree(grid: SimplexGrid) -> DegreeReport:
    """Signed count of completely labeled cells, normalized so the identity
    boundary pattern yields 1.

    Raises :class:`InconsistentBoundary` when a face vertex carries a label
    outside its own zero set.  Cells touching unresolved vertices are skipped
    and reported, never counted.  The boundary winding only resolves once the
    lattice resolution reaches the number of components minus one; coarser
    grids can miss labels entirely and legitimately report degree 0.
    """
    L = grid.lattice.shape[1]
    if L == 1:
        lab = grid.labels[0]
        deg = 1 if lab.kind in (LABEL_HIT, LABEL_SOLUTION, LABEL_BOUNDARY) else 0
        cells = ((tuple(grid.lattice[0]),),) if deg else ()
        return DegreeReport(
            degree=deg,
            grid_depth=grid.depth,
            completely_labeled_count=len(cells),
            completely_labeled_cells=cells,
            unresolved_cells=0 if deg else 1,
        )

    by_coords: dict[tuple[int, ...], int] = {
        tuple(c): i for i, c in enumerate(grid.lattice)
    }
    int_labels: list[Optional[int]] = []
    for coords, lab in zip(grid.lattice, grid.labels):
        zeros = {i for i, c in enumerate(coords) if c == 0}
        value = lab.as_int()
        if zeros:
            if value is None or value not in zeros:
                raise InconsistentBoundary(
                    f"face vertex {tuple(coords)} carries foreign label {lab}"
                )
        int_labels.append(value)

    ref_sign = _reference_sign(L, grid.resolution)
    degree = 0
    cl_cells: list[tuple[tuple[int, ...], ...]] = []
    unresolved = 0
    for cell in _cells(grid.resolution, L):
        values = [int_labels[by_coords[v]] for v in cell]
        if any(v is None for v in values):
            unresolved += 1
            continue
        if sorted(values) != list(range(L)):
            continue
        by_label = [cell[values.index(i)] for i in range(L)]
        degree += _orientation_sign(by_label) * ref_sign
        cl_cells.append(cell)

    return DegreeReport(
        degree=degree,
        grid_depth=grid.depth,
        completely_labeled_count=len(cl_cells),
        completely_labeled_cells=tuple(cl_cells),
        unresolved_cells=unresolved,
    )


# --------------------------------------------------------------------------
# zero search
# --------------------------------------------------------------------------

def _verify_candidate(rs, alpha, controls):
    """Final check of a candidate: evaluate the target map with extended range
    and accept only a terminal value below eps_decay."""
    boosted = controls.replace(r_max=controls.r_max * RMAX_BOOST)
    result = psi(rs, alpha, boosted, keep_trajectory=True)
    ok = result.case != CASE_WALL_HIT and result.sup_norm() < controls.eps_decay
    return ok, result


def _find_zero_interval(rs, a, controls, budget, trace):
    """Two-component workhorse: bisect the hit-index switch point of the
    segment ``alpha(t) = (t a, (1-t) a)``."""
    lo, hi = 0.0, 1.0
    resolved_any = False
    for it in range(budget):
        t = 0.5 * (lo + hi)
        alpha = np.array([t * a, (1.0 - t) * a])
        lab, result = _label_retrying(rs, alpha, controls)
        if lab.kind == LABEL_SOLUTION:
            trace.append(
                {"iteration": it, "cell": [lo, hi], "labels": ["solution"], "diameter": hi - lo}
            )
            return alpha, result
        if lab.kind == LABEL_HIT:
            resolved_any = True
            side = lab.index
        else:
            # still unresolved after the retry: steer by the smaller truncated
            # component, the one that would cross first (conservative)
            side = int(np.argmin(result.psi)) if result is not None else 0
        trace.append(
            {
                "iteration": it,
                "cell": [lo, hi],
                "labels": [lab.kind if lab.kind != LABEL_HIT else f"hit_{lab.index}"],
                "diameter": hi - lo,
            }
        )
        if side == 0:
            lo = t
        else:
            hi = t
    t = 0.5 * (lo + hi)
    alpha = np.array([t * a, (1.0 - t) * a])
    ok, result = _verify_candidate(rs, alpha, controls)
    if ok:
        return alpha, result
    if not resolved_any:
        raise AllUnresolved(
            "every bisection probe stayed unresolved; loosen eps_decay or extend r_max"
        )
    raise NotFound(
        f"bisection budget {budget} exhausted; best bracket [{lo}, {hi}] "
        f"with terminal norm {result.sup_norm():.3g}",
        best_cell=(lo, hi),
    )


def _find_zero_subdivision(rs, a, controls, budget, trace, label_fn, jobs):
    """Three and more components: coarse-to-fine subdivision restricted to
    completely labeled cells."""
    L = rs.total_len
    if label_fn is None:
        cache: dict[tuple, tuple] = {}

        def label_fn(alpha):
            key = tuple(np.round(np.asarray(alpha, float), 14))
            if key not in cache:
                cache[key] = _label_retrying(rs, alpha, controls)
            return cache[key][0]

    def label_many(points):
        jobs_n = default_jobs() if jobs is None else max(1, jobs)
        if jobs_n == 1 or len(points) <= 1:
            return [label_fn(p) for p in points]
        with ThreadPoolExecutor(max_workers=jobs_n) as pool:
            return list(pool.map(label_fn, points))

    def cells_of(corners, resolution):
        """Label the refined lattice over a simplex given by its corner rows."""
        lam = np.array(list(_compositions(resolution, L)), dtype=float) / resolution
        pts = lam @ corners
        labs = label_many(list(pts))
        return lam, pts, labs

    def pick_cell(lam, labs, resolution):
        """Best candidate cell: prefer one containing a solution vertex, then
        completely labeled ones; ties go to the lexicographically smallest."""
        key = {tuple(np.round(l * resolution).astype(int)): i for i, l in enumerate(lam)}
        best = None
        for cell in _cells(resolution, L):
            idxs = [key[v] for v in cell]
            kinds = [labs[i].kind for i in idxs]
            ints = [labs[i].as_int() for i in idxs]
            has_solution = LABEL_SOLUTION in kinds
            complete = None not in ints and sorted(ints) == list(range(L))
            if not (has_solution or complete):
                continue
            rank = (0 if has_solution else 1, cell)
            if best is None or rank < best[0]:
                best = (rank, cell, idxs)
        return best

    corners = np.eye(L) * a
    resolution = 2
    for it in range(budget):
        lam, pts, labs = cells_of(corners, resolution)
        for p, lab in zip(pts, labs):
            if lab.kind == LABEL_SOLUTION:
                ok, result = _verify_candidate(rs, p, controls)
                if ok:
                    trace.append(
                        {"iteration": it, "cell": corners.tolist(), "labels": ["solution"],
                         "diameter": _diameter(corners)}
                    )
                    return np.asarray(p), result
        best = pick_cell(lam, labs, resolution)
        trace.append(
            {
                "iteration": it,
                "cell": corners.tolist(),
                "labels": [l.kind for l in labs],
                "diameter": _diameter(corners),
            }
        )
        if best is None:
            if resolution >= 64:
                raise NotFound(
                    "no completely labeled cell at the deepest grid",
                    best_cell=corners.tolist(),
                )
            resolution *= 2  # lost the winding: refine in place before moving
            continue
        _, cell, idxs = best
        corners = np.array([lam[i] for i in idxs]) @ corners
        resolution = 2
        if _diameter(corners) < 1e-9 * a:
            break

    bary = corners.mean(axis=0)
    ok, result = _verify_candidate(rs, bary, controls)
    if ok:
        return bary, result
    raise NotFound(
        f"subdivision budget {budget} exhausted at diameter {_diameter(corners):.3g}",
        best_cell=corners.tolist(),
    )


def _diameter(corners: np.ndarray) -> float:
    m = 0.0
    for i in range(corners.shape[0]):
        for j in range(i + 1, corners.shape[0]):
            m = max(m, float(np.max(np.abs(corners[i] - corners[j]))))
    return m


def find_zero(
    rs: ReducedSystem,
    a: float,
    controls: IvpControls,
    budget: int = 80,
    depth: int = 3,
    jobs: Optional[int] = None,
    label_fn: Optional[Callable] = None,
):
    """Locate ``alpha`` on the mass simplex with target value (numerically) zero.

    Returns ``(alpha_star, TargetResult, DegreeReport)``.  The report is
    computed on the full grid at ``depth`` independently of the search.
    Raises :class:`NotFound` when the budget runs out and
    :class:`AllUnresolved` when the controls resolve nothing at all.
    """
    if a <= 0.0:
        raise ValueError(f"mass must be positive, got {a}")
    L = rs.total_len
    trace: list[dict] = []

    if L == 1:
        alpha = np.array([a])
        lab, result = _label_retrying(rs, alpha, controls)
        trace.append({"iteration": 0, "cell": [[a]], "labels": [lab.kind], "diameter": 0.0})
        report = DegreeReport(
            degree=1,
            grid_depth=0,
            completely_labeled_count=1 if lab.kind == LABEL_SOLUTION else 0,
            completely_labeled_cells=(((1,),),) if lab.kind == LABEL_SOLUTION else (),
            unresolved_cells=1 if lab.kind == LABEL_UNRESOLVED else 0,
            trace=tuple(trace),
        )
        if lab.kind == LABEL_SOLUTION:
            return alpha, result, report
        if lab.kind == LABEL_UNRESOLVED:
            raise AllUnresolved(
                f"single shot at mass {a} stayed unresolved "
                f"(terminal norm {result.sup_norm():.3g})"
            )
        raise NotFound(
            f"single shot at mass {a} hit the wall at r0={result.r0:.6g}",
            best_cell=[[a]],
        )

    if L == 2:
        alpha_star, result = _find_zero_interval(rs, a, controls, budget, trace)
    else:
        alpha_star, result = _find_zero_subdivision(
            rs, a, controls, budget, trace, label_fn, jobs
        )

    grid = build_grid(rs, a, depth, controls, jobs=jobs, label_fn=label_fn)
    report = compute_degree(grid)
    report = DegreeReport(
        degree=report.degree,
        grid_depth=report.grid_depth,
        completely_labeled_count=report.completely_labeled_count,
        completely_labeled_cells=report.completely_labeled_cells,
        unresolved_cells=report.unresolved_cells,
        trace=tuple(trace),
    )
    return alpha_star, result, report
