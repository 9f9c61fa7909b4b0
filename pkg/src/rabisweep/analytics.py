"""Closed-form results: sudden-limit overlaps, two-level sweep survival, and
the independent-crossing cascade with its gap spectrum.

Gap arithmetic is done in log space throughout; at g/omega = 3 the common
prefactor exp(-2 (g/omega)^2) is already ~1.5e-8 and products of such factors
underflow quickly in linear space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DegenerateCrossingError,
    GapTruncationError,
    InvalidParameterError,
)
from .model import BasisLabel, MultiModeParams, ProbabilityRecord

# Relative tolerance used to declare two crossing positions coincident.
CROSSING_DEGENERACY_RTOL = 1e-9
# Residual survival weight allowed past the last retained crossing.
CASCADE_RESIDUAL_TOL = 1e-9

Occupation = int | tuple[int, ...]


def poisson_overlap(n: int, g: float, omega: float) -> float:
    """Sudden-limit occupation of the n-th level: e^{-m} m^n / n!, m = (g/omega)^2."""
    if n < 0:
        raise InvalidParameterError(f"level index must be >= 0, got {n}")
    if omega <= 0:
        raise InvalidParameterError(f"omega must be positive, got {omega}")
    mean = (g / omega) ** 2
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mean + n * math.log(mean) - math.lgamma(n + 1))


def lz_probability(delta: float, v: float) -> float:
    """Two-level diabatic survival e^{-pi delta^2 / (2 v)} for a linear sweep."""
    if v <= 0:
        raise InvalidParameterError(f"sweep rate must be positive, got {v}")
    return math.exp(-math.pi * delta * delta / (2.0 * v))


def _log_gap_factor(n: int, alpha: float) -> float:
    """log of (2 alpha)^n / sqrt(n!) * exp(-2 alpha^2); -inf when it vanishes."""
    if alpha == 0.0:
        return 0.0 if n == 0 else -math.inf
    return n * math.log(2.0 * abs(alpha)) - 0.5 * math.lgamma(n + 1) - 2.0 * alpha * alpha


def default_n_max(g: float, omega: float) -> int:
    """Crossings retained by default: covers the gap-spectrum peak plus a tail."""
    return int(math.ceil(4.0 * (g / omega) ** 2)) + 60


@dataclass(frozen=True)
class GapSpectrum:
    """Effective gaps and positions of the avoided-crossing mesh."""

    delta: float
    ratios: tuple[float, ...]
    gaps: dict[Occupation, float]
    log_gaps: dict[Occupation, float]
    crossing_positions: dict[Occupation, float]
    sum_rule_tail: float

    def sorted_occupations(self) -> list[Occupation]:
        """Occupations ordered by crossing position, lexicographic on ties."""
        def sort_key(occ: Occupation):
            key = occ if isinstance(occ, tuple) else (occ,)
            return (self.crossing_positions[occ], key)

        return sorted(self.gaps, key=sort_key)

    def degenerate_groups(self) -> list[tuple[Occupation, ...]]:
        """Groups of distinct occupations whose crossings coincide."""
        order = self.sorted_occupations()
        groups: list[list[Occupation]] = []
        for occ in order:
            pos = self.crossing_positions[occ]
            if groups:
                prev = self.crossing_positions[groups[-1][-1]]
                scale = max(1.0, abs(pos), abs(prev))
                if abs(pos - prev) <= CROSSING_DEGENERACY_RTOL * scale:
                    groups[-1].append(occ)
                    continue
            groups.append([occ])
        return [tuple(grp) for grp in groups if len(grp) > 1]


def _validate_spectrum(spec: GapSpectrum) -> GapSpectrum:
    total = 0.0
    for occ, lg in spec.log_gaps.items():
        if spec.gaps[occ] < 0:
            raise InvalidParameterError("gaps must be nonnegative")
        if math.isfinite(lg) and spec.delta != 0.0:
            total += math.exp(2.0 * (lg - math.log(abs(spec.delta))))
    if total > 1.0 + 1e-12:
        raise InvalidParameterError(
            f"gap sum rule violated: sum(gap^2)/delta^2 = {total!r} > 1"
        )
    return spec


def cascade_gaps(delta: float, g: float, omega: float, n_max: int | None = None) -> GapSpectrum:
    """Single-mode gap ladder Delta_n with crossings at n*omega."""
    if omega <= 0:
        raise InvalidParameterError(f"omega must be positive, got {omega}")
    if n_max is None:
        n_max = default_n_max(g, omega)
    if n_max < 1:
        raise InvalidParameterError(f"n_max must be >= 1, got {n_max}")
    alpha = g / omega
    log_delta = math.log(abs(delta)) if delta != 0.0 else -math.inf
    log_gaps = {n: _log_gap_factor(n, alpha) + log_delta for n in range(n_max + 1)}
    gaps = {n: math.exp(lg) if math.isfinite(lg) else 0.0 for n, lg in log_gaps.items()}
    covered = sum(
        math.exp(2.0 * _log_gap_factor(n, alpha)) for n in range(n_max + 1)
    ) if alpha != 0.0 else 1.0
    tail = max(0.0, 1.0 - covered) * delta * delta
    positions = {n: n * omega for n in range(n_max + 1)}
    return _validate_spectrum(
        GapSpectrum(delta, (alpha,), gaps, log_gaps, positions, tail)
    )


def multimode_gaps(p: MultiModeParams, caps: tuple[int, ...]) -> GapSpectrum:
    """Gap mesh of a qubit swept past several modes; crossings at sum_j n_j w_j."""
    if len(caps) != len(p.modes):
        raise InvalidParameterError("one occupation cap per mode is required")
    if any(c < 0 for c in caps):
        raise InvalidParameterError("occupation caps must be >= 0")
    occs: list[tuple[int, ...]] = [()]
    for cap in caps:
        occs = [o + (n,) for o in occs for n in range(cap + 1)]
    log_delta = math.log(abs(p.delta)) if p.delta != 0.0 else -math.inf
    log_gaps: dict[Occupation, float] = {}
    positions: dict[Occupation, float] = {}
    covered = 0.0
    for occ in occs:
        lg = sum(_log_gap_factor(n, r) for n, r in zip(occ, p.ratios))
        log_gaps[occ] = lg + log_delta
        positions[occ] = float(sum(n * m.omega for n, m in zip(occ, p.modes)))
        if math.isfinite(lg):
            covered += math.exp(2.0 * lg)
    gaps = {o: math.exp(lg) if math.isfinite(lg) else 0.0 for o, lg in log_gaps.items()}
    tail = max(0.0, 1.0 - covered) * p.delta * p.delta
    return _validate_spectrum(
        GapSpectrum(p.delta, p.ratios, gaps, log_gaps, positions, tail)
    )


def _transit_exponents(spec: GapSpectrum, v: float) -> tuple[list[Occupation], np.ndarray]:
    """x_k = pi gap_k^2 / (2 v) along the sorted crossing order."""
    if v <= 0:
        raise InvalidParameterError(f"sweep rate must be positive, got {v}")
    order = spec.sorted_occupations()
    log_v = math.log(v)
    xs = np.empty(len(order))
    for i, occ in enumerate(order):
        lg = spec.log_gaps[occ]
        if math.isfinite(lg):
            xs[i] = math.exp(math.log(math.pi / 2.0) + 2.0 * lg - log_v)
        else:
            xs[i] = 0.0
    return order, xs


def sequential_crossing_probabilities(
    spec: GapSpectrum, v: float, residual_tol: float = CASCADE_RESIDUAL_TOL
) -> list[ProbabilityRecord]:
    """Independent-crossing populations after one pass through the mesh.

    Refuses coincident crossings: probability would have to be split through
    simultaneous transitions, which the sequential picture cannot order.
    """
    degenerate = spec.degenerate_groups()
    if degenerate:
        raise DegenerateCrossingError(
            f"coincident crossings for occupations {degenerate}; "
            "sequential evaluation is not defined there"
        )
    order, xs = _transit_exponents(spec, v)
    multimode = isinstance(order[0], tuple)
    records = []
    log_survival = 0.0
    for occ, x in zip(order, xs):
        transfer = math.exp(log_survival) * (-math.expm1(-x))
        records.append(ProbabilityRecord(BasisLabel("displaced", "up", occ), transfer))
        log_survival -= x
    exact_log_survival = -math.pi * spec.delta**2 / (2.0 * v)
    residual = math.exp(log_survival) - math.exp(exact_log_survival)
    if residual > residual_tol:
        raise GapTruncationError(
            f"retained crossings leave residual survival weight {residual:.2e} "
            f"(> {residual_tol:.0e}); extend the occupation caps"
        )
    ground_occ: Occupation = tuple(0 for _ in order[0]) if multimode else 0
    records.append(
        ProbabilityRecord(
            BasisLabel("displaced", "down", ground_occ), math.exp(exact_log_survival)
        )
    )
    return records


def cascade_probabilities(
    delta: float, v: float, g: float, omega: float, n_max: int | None = None
) -> list[ProbabilityRecord]:
    """Single-mode cascade populations P(up, n), plus the exact P(down, 0)."""
    return sequential_crossing_probabilities(cascade_gaps(delta, g, omega, n_max), v)


@dataclass(frozen=True)
class FockPrepWindow:
    """Sweep-rate window for preparing |up, target_n>, with the formula's peak."""

    target_n: int
    v_low: float
    v_high: float
    predicted_peak: float
    peak_rate: float
    empty: bool

    @property
    def separated(self) -> bool:
        """True when both decade margins fit inside the window."""
        return (not self.empty) and self.v_low < self.v_high


def fock_prep_window(
    delta: float, g: float, omega: float, target_n: int
) -> FockPrepWindow:
    """Rate window fast for crossings below target_n yet adiabatic at target_n.

    The window exists when the target gap exceeds the previous one; the margin
    endpoints (one decade on each side of the adjacent gap scales) may cross
    when the separation is only partial.
    """
    if target_n < 1:
        raise InvalidParameterError(f"target level must be >= 1, got {target_n}")
    spec = cascade_gaps(delta, g, omega, n_max=max(target_n, 1))
    gap_prev = spec.gaps[target_n - 1]
    gap_n = spec.gaps[target_n]
    v_low = 10.0 * math.pi * gap_prev**2 / 2.0
    v_high = math.pi * gap_n**2 / 2.0 / 10.0
    if gap_n <= gap_prev:
        return FockPrepWindow(target_n, v_low, v_high, 0.0, math.nan, True)

    # Peak of P(up, target_n) over v; exponents scale together so optimize in
    # x = pi gap_n^2 / (2 v).
    log_ratio_sum = [
        2.0 * (spec.log_gaps[m] - spec.log_gaps[target_n]) for m in range(target_n)
    ]
    big_r = sum(math.exp(lr) for lr in log_ratio_sum if math.isfinite(lr))

    def negated(log_x: float) -> float:
        x = math.exp(log_x)
        return -(math.exp(-big_r * x) * (-math.expm1(-x)))

    opt = minimize_scalar(negated, bounds=(math.log(1e-12), math.log(700.0)), method="bounded")
    x_star = math.exp(opt.x)
    peak = -opt.fun
    v_star = math.pi * gap_n**2 / (2.0 * x_star)
    return FockPrepWindow(target_n, v_low, v_high, float(peak), float(v_star), False)
