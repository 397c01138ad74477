"""Weighted polyharmonic monomial systems and their second-order reduction.

A system couples L unknowns through equations ``(-laplace)^k_i u_i = f_i``
where each right-hand side ``f_i`` is a finite sum of weighted monomials
``coef * r^(-sigma) * prod_j u_j^(powers[j])``.  Everything downstream
(shooting, target map, degree search, identity checks) operates on the
flattened chain system produced by :func:`reduce`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import ConfigError


# --------------------------------------------------------------------------
# domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Monomial:
    """One term ``coef * r^(-sigma) * prod_j w_j^(powers[j])``.

    ``sigma`` is stored as the exponent of the *decaying* radial factor
    ``r^(-sigma)``; the solver supports ``sigma < 2`` only.
    """

    coef: float
    sigma: float
    powers: tuple[float, ...]

    def value(self, r: float, w: Sequence[float]) -> float:
        """Evaluate at radius ``r > 0`` and state ``w`` (clamped below at 0)."""
        out = self.coef
        if self.sigma != 0.0:
            out *= r ** (-self.sigma)
        for base, p in zip(w, self.powers):
            if p == 0.0:
                continue
            b = base if base > 0.0 else 0.0
            out *= b if p == 1.0 else b ** p
        return out

    def frozen_coef(self, alpha: Sequence[float]) -> float:
        """The radial-independent factor with the state frozen at ``alpha``."""
        out = self.coef
        for base, p in zip(alpha, self.powers):
            if p == 0.0:
                continue
            b = base if base > 0.0 else 0.0
            out *= b if p == 1.0 else b ** p
        return out

    def support(self) -> frozenset[int]:
        """Indices of unknowns the monomial actually depends on."""
        return frozenset(j for j, p in enumerate(self.powers) if p > 0.0)


@dataclass(frozen=True)
class EquationSpec:
    """One equation ``(-laplace)^order u_i = sum(monomials)``."""

    order: int
    monomials: tuple[Monomial, ...]


@dataclass(frozen=True)
class SystemSpec:
    """A coupled system over dimension ``n >= 3``."""

    n: int
    equations: tuple[EquationSpec, ...]

    @property
    def num_unknowns(self) -> int:
        return len(self.equations)


@dataclass(frozen=True)
class Violation:
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]

    def messages(self) -> list[str]:
        return [f"{v.path}: {v.message}" for v in self.violations]


@dataclass(frozen=True)
class ChainLink:
    """Row whose right-hand side is the next chain component."""

    next_index: int  # 0-based chain index


@dataclass(frozen=True)
class SourceTerm:
    """Row carrying the original monomial sum, re-indexed onto the chain."""

    monomials: tuple[Monomial, ...]


Row = Union[ChainLink, SourceTerm]


@dataclass(frozen=True)
class ReducedSystem:
    """Second-order chain form: components ``w_(i,j) = (-laplace)^(j-1) u_i``.

    ``index_map[m]`` gives the originating pair ``(i, j)`` (0-based equation,
    1-based rung) of chain component ``m``; exactly one row per equation is a
    :class:`SourceTerm` (the ``j = k_i`` rung).
    """

    n: int
    total_len: int
    rhs_table: tuple[Row, ...]
    index_map: tuple[tuple[int, int], ...]

    def chain_index(self, i: int, j: int) -> int:
        """0-based chain position of ``w_(i,j)`` (``i`` 0-based, ``j`` 1-based)."""
        return self.index_map.index((i, j))

    def chain_pair(self, m: int) -> tuple[int, int]:
        return self.index_map[m]

    def first_component_indices(self) -> tuple[int, ...]:
        """Chain positions of the original unknowns ``w_(i,1)``."""
        return tuple(m for m, (_, j) in enumerate(self.index_map) if j == 1)

    def rhs_value(self, m: int, r: float, w: Sequence[float]) -> float:
        row = self.rhs_table[m]
        if isinstance(row, ChainLink):
            nxt = w[row.next_index]
            return nxt if nxt > 0.0 else 0.0
        return sum(mono.value(r, w) for mono in row.monomials)

    def frozen_sources(self, alpha: Sequence[float]) -> list[float]:
        """Per-row frozen magnitudes ``g_m(alpha)`` ignoring the radial weight."""
        out = []
        for row in self.rhs_table:
            if isinstance(row, ChainLink):
                out.append(max(alpha[row.next_index], 0.0))
            else:
                out.append(sum(mono.frozen_coef(alpha) for mono in row.monomials))
        return out


@dataclass(frozen=True)
class CriticalityReport:
    classification: str  # subcritical | critical | supercritical | not-classifiable
    threshold_value: float | None
    rule: str

    def to_json(self) -> dict:
        return {
            "class": self.classification,
            "threshold_value": self.threshold_value,
            "rule": self.rule,
        }


@dataclass(frozen=True)
class NondegeneracyReport:
    type1: str  # holds | fails | undecided
    type2: str
    witnesses: tuple[str, ...]

    def to_json(self) -> dict:
        return {"type1": self.type1, "type2": self.type2, "witnesses": list(self.witnesses)}


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

SIGMA_MAX = 2.0  # exclusive; the singular start-up needs 2 - sigma > 0


def validate(spec: SystemSpec) -> ValidationReport:
    """Check every structural invariant; never raises."""
    bad: list[Violation] = []
    if spec.n < 3:
        bad.append(Violation("n", f"dimension must be >= 3, got {spec.n}"))
    if not spec.equations:
        bad.append(Violation("equations", "at least one equation required"))
    L = spec.num_unknowns
    for i, eq in enumerate(spec.equations):
        base = f"equations[{i}]"
        if eq.order < 1:
            bad.append(Violation(f"{base}.order", f"order must be >= 1, got {eq.order}"))
        if 2 * eq.order >= spec.n:
            bad.append(
                Violation(f"{base}.order", f"2k < n fails: 2*{eq.order} >= {spec.n}")
            )
        if not eq.monomials:
            bad.append(Violation(f"{base}.monomials", "right-hand side must be nonempty"))
        for t, mono in enumerate(eq.monomials):
            mbase = f"{base}.monomials[{t}]"
            if not mono.coef > 0.0:
                bad.append(Violation(f"{mbase}.coef", f"coefficient must be > 0, got {mono.coef}"))
            if not mono.sigma < SIGMA_MAX:
                bad.append(Violation(f"{mbase}.sigma", f"sigma < 2 required, got {mono.sigma}"))
            if len(mono.powers) != L:
                bad.append(
                    Violation(
                        f"{mbase}.powers",
                        f"expected {L} exponents (one per unknown), got {len(mono.powers)}",
                    )
                )
            if any(p < 0.0 for p in mono.powers):
                bad.append(Violation(f"{mbase}.powers", "exponents must be non-negative"))
    return ValidationReport(ok=not bad, violations=tuple(bad))


# --------------------------------------------------------------------------
# reduction to the chain system
# --------------------------------------------------------------------------

def reduce(spec: SystemSpec) -> ReducedSystem:
    """Flatten to the chain system of total length ``sum(k_i)``.

    Chain rows point at the next rung; the final rung of each equation keeps
    the original monomials with exponents re-indexed onto the first rungs
    ``w_(l,1)`` of every equation.
    """
    offsets = []
    off = 0
    for eq in spec.equations:
        offsets.append(off)
        off += eq.order
    total = off
    first = tuple(offsets)

    rows: list[Row] = []
    pairs: list[tuple[int, int]] = []
    for i, eq in enumerate(spec.equations):
        for j in range(1, eq.order + 1):
            pairs.append((i, j))
            if j < eq.order:
                rows.append(ChainLink(next_index=offsets[i] + j))
            else:
                lifted = []
                for mono in eq.monomials:
                    powers = [0.0] * total
                    for l, p in enumerate(mono.powers):
                        powers[first[l]] = float(p)
                    lifted.append(Monomial(mono.coef, mono.sigma, tuple(powers)))
                rows.append(SourceTerm(monomials=tuple(lifted)))
    return ReducedSystem(
        n=spec.n, total_len=total, rhs_table=tuple(rows), index_map=tuple(pairs)
    )


# --------------------------------------------------------------------------
# criticality thresholds
# --------------------------------------------------------------------------

def scalar_supercritical_bracket(n, k, sigma, p):
    """Sign certificate for the scalar equation: <= 0 means no ball solution.

    Works with exact number types (e.g. ``fractions.Fraction``) as well as
    floats; it vanishes identically at ``p = (n + 2k - 2 sigma)/(n - 2k)``.
    """
    return k * (2 - n) + n * (k - 1) + 2 * (n - sigma) / (1 + p)


def system_supercritical_bracket(n, k, sigma1, sigma2, p, q):
    """Sign certificate for the two-equation system; <= 0 means no ball solution."""
    return k * (2 - n) + (n - sigma1) / (1 + q) + (n - sigma2) / (1 + p) + (k - 1) * n


def _scalar_shape(spec: SystemSpec):
    """(k, sigma, p) when the spec is one equation with one self-power monomial."""
    if spec.num_unknowns != 1:
        return None
    eq = spec.equations[0]
    if len(eq.monomials) != 1:
        return None
    mono = eq.monomials[0]
    if mono.powers[0] <= 0.0:
        return None
    return eq.order, mono.sigma, mono.powers[0]


def _system_shape(spec: SystemSpec):
    """(k, sigma1, sigma2, p, q) for the two-equation cross-power shape.

    Equation 0 must read ``u^s v^q / r^sigma1`` with ``q > 0`` and equation 1
    ``v^t u^p / r^sigma2`` with ``p > 0``; both orders must agree.
    """
    if spec.num_unknowns != 2:
        return None
    eq0, eq1 = spec.equations
    if eq0.order != eq1.order:
        return None
    if len(eq0.monomials) != 1 or len(eq1.monomials) != 1:
        return None
    m0, m1 = eq0.monomials[0], eq1.monomials[0]
    q = m0.powers[1]
    p = m1.powers[0]
    if q <= 0.0 or p <= 0.0:
        return None
    return eq0.order, m0.sigma, m1.sigma, p, q


def classify_criticality(spec: SystemSpec) -> CriticalityReport:
    """Decide sub/super-criticality for the two recognized shapes.

    Shapes outside the scalar single-monomial equation and the two-equation
    cross-power system are reported as not-classifiable rather than guessed.
    """
    scalar = _scalar_shape(spec)
    if scalar is not None:
        k, sigma, p = scalar
        thr = (spec.n + 2 * k - 2 * sigma) / (spec.n - 2 * k)
        if p > thr:
            cls = "supercritical"
        elif p == thr:
            cls = "critical"
        else:
            cls = "subcritical"
        return CriticalityReport(
            classification=cls,
            threshold_value=thr,
            rule=f"scalar exponent test: p={p} vs (n+2k-2*sigma)/(n-2k)={thr}",
        )

    system = _system_shape(spec)
    if system is not None:
        k, s1, s2, p, q = system
        lhs = (spec.n - s1) / (1 + q) + (spec.n - s2) / (1 + p)
        rhs = spec.n - 2 * k
        if lhs < rhs:
            cls = "supercritical"
        elif lhs == rhs:
            cls = "critical"
        else:
            cls = "subcritical"
        return CriticalityReport(
            classification=cls,
            threshold_value=lhs,
            rule=(
                f"system exponent test: (n-sigma1)/(1+q) + (n-sigma2)/(1+p)={lhs} "
                f"vs n-2k={rhs} (<= means supercritical-or-critical)"
            ),
        )

    return CriticalityReport(
        classification="not-classifiable",
        threshold_value=None,
        rule="no threshold known for this shape",
    )


# --------------------------------------------------------------------------
# non-degeneracy checks
# --------------------------------------------------------------------------

def _monomial_forces(mono: Monomial, alive: frozenset[int]) -> bool:
    """True when the monomial stays bounded below near states positive on ``alive``.

    Requires the radial weight to be admissible (sigma < 2, so the factor
    dominates ``r^(-2)``) and every exponent to sit on a surviving unknown.
    """
    return mono.sigma < SIGMA_MAX and mono.support() <= alive


def check_nondegeneracy(spec: SystemSpec) -> NondegeneracyReport:
    """Classify the structural non-degeneracy of the coupling map.

    Type I is decided exactly for monomial systems:

    * part (i): for every proper nonempty zero-set ``I0`` of unknowns, some
      equation indexed inside ``I0`` must keep a monomial supported entirely
      outside ``I0`` (that term stays bounded below near such states);
    * part (ii): near any nonzero boundary state, some equation must retain a
      forcing term (admissible weight, exponents on the surviving unknowns),
      ruling out positive limits of never-crossing trajectories.

    Type II needs an autonomous map (no radial weights), every monomial fully
    coupled (all exponents positive), and, partition by partition, each
    large-side monomial dominated by a small-side one.  The dominance rule is
    sufficient in general and exact for two-equation single-monomial systems;
    anything else that fails it is reported as undecided.
    """
    L = spec.num_unknowns
    witnesses: list[str] = []

    # --- type I ---
    type1 = "holds"
    if L == 1:
        witnesses.append("type1: single unknown, boundary conditions are vacuous")
    else:
        indices = range(L)
        for size in range(1, L):
            for zero_set in itertools.combinations(indices, size):
                z = frozenset(zero_set)
                alive = frozenset(indices) - z
                cond_i = any(
                    _monomial_forces(mono, alive)
                    for j in z
                    for mono in spec.equations[j].monomials
                )
                cond_ii = any(
                    _monomial_forces(mono, alive)
                    for j in indices
                    for mono in spec.equations[j].monomials
                )
                if not cond_i:
                    type1 = "fails"
                    witnesses.append(
                        "type1(i): no equation in zero-set "
                        f"{sorted(z)} keeps a term supported on {sorted(alive)}"
                    )
                if not cond_ii:
                    type1 = "fails"
                    witnesses.append(
                        f"type1(ii): all forcing vanishes near states positive on {sorted(alive)}"
                    )

    # --- type II ---
    type2 = "holds"
    if any(mono.sigma != 0.0 for eq in spec.equations for mono in eq.monomials):
        type2 = "fails"
        witnesses.append("type2: radial weights make the coupling non-autonomous")
    else:
        for i, eq in enumerate(spec.equations):
            for t, mono in enumerate(eq.monomials):
                missing = [j for j in range(L) if mono.powers[j] <= 0.0]
                if missing:
                    type2 = "fails"
                    witnesses.append(
                        f"type2(i): equations[{i}].monomials[{t}] has zero exponent on "
                        f"unknowns {missing}, so it survives on that part of the boundary"
                    )
        if type2 == "holds" and L >= 2:
            single = all(len(eq.monomials) == 1 for eq in spec.equations)
            for size in range(1, L):
                for small in itertools.combinations(range(L), size):
                    s = frozenset(small)
                    big = frozenset(range(L)) - s
                    for i in big:
                        for mono in spec.equations[i].monomials:
                            dominated = any(
                                all(
                                    cand.powers[l] <= mono.powers[l]
                                    if l in s
                                    else cand.powers[l] >= mono.powers[l]
                                    for l in range(L)
                                )
                                for j in s
                                for cand in spec.equations[j].monomials
                            )
                            if not dominated:
                                msg = (
                                    f"type2(ii): with unknowns {sorted(s)} small and "
                                    f"{sorted(big)} large, equation {i} is not dominated"
                                )
                                if single and L == 2:
                                    type2 = "fails"
                                else:
                                    type2 = "undecided" if type2 == "holds" else type2
                                witnesses.append(msg)

    return NondegeneracyReport(type1=type1, type2=type2, witnesses=tuple(witnesses))


# --------------------------------------------------------------------------
# config ingestion
# --------------------------------------------------------------------------

def _require_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = allowed - set(d)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def spec_from_dict(data: dict) -> SystemSpec:
    """Build a spec from the config schema; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("top level: expected an object")
    _require_keys(data, {"n", "equations"}, "top level")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ConfigError(f"n: expected an integer, got {n!r}")
    eqs_in = data["equations"]
    if not isinstance(eqs_in, list) or not eqs_in:
        raise ConfigError("equations: expected a nonempty list")
    equations = []
    for i, eq in enumerate(eqs_in):
        where = f"equations[{i}]"
        if not isinstance(eq, dict):
            raise ConfigError(f"{where}: expected an object")
        _require_keys(eq, {"order", "monomials"}, where)
        order = eq["order"]
        if isinstance(order, bool) or not isinstance(order, int):
            raise ConfigError(f"{where}.order: expected an integer, got {order!r}")
        monos_in = eq["monomials"]
        if not isinstance(monos_in, list) or not monos_in:
            raise ConfigError(f"{where}.monomials: expected a nonempty list")
        monomials = []
        for t, mono in enumerate(monos_in):
            mwhere = f"{where}.monomials[{t}]"
            if not isinstance(mono, dict):
                raise ConfigError(f"{mwhere}: expected an object")
            _require_keys(mono, {"coef", "sigma", "powers"}, mwhere)
            powers = mono["powers"]
            if not isinstance(powers, list):
                raise ConfigError(f"{mwhere}.powers: expected a list")
            monomials.append(
                Monomial(
                    coef=_number(mono["coef"], f"{mwhere}.coef"),
                    sigma=_number(mono["sigma"], f"{mwhere}.sigma"),
                    powers=tuple(
                        _number(p, f"{mwhere}.powers[{l}]") for l, p in enumerate(powers)
                    ),
                )
            )
        equations.append(EquationSpec(order=order, monomials=tuple(monomials)))
    return SystemSpec(n=n, equations=tuple(equations))


def spec_to_dict(spec: SystemSpec) -> dict:
    return {
        "n": spec.n,
        "equations": [
            {
                "order": eq.order,
                "monomials": [
                    {"coef": m.coef, "sigma": m.sigma, "powers": list(m.powers)}
                    for m in eq.monomials
                ],
            }
            for eq in spec.equations
        ],
    }


def load_spec(path) -> SystemSpec:
    """Read a config file (JSON object per the documented schema)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return spec_from_dict(data)
