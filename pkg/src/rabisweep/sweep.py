"""Time evolution under linear parameter schedules.

The stepper is a piecewise-constant midpoint exponential: within each step the
Hamiltonian is frozen at the step's midpoint and its exact exponential is
applied, so every step is unitary by construction and the scheme is
second-order in the step size.

The exponential action is computed two ways: batched eigendecomposition for
tiny dimensions, and a Chebyshev expansion of exp(-i H dt) (coefficients shared
across a chunk of steps, spectral bounds from Gershgorin discs) otherwise.
Per-step eigendecomposition is prohibitively slow past dim ~ 32 on one core;
the Chebyshev action reproduces the exact exponential to machine precision
and is matvec-bound.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import jv

from .errors import (
    InsufficientTruncationError,
    InvalidParameterError,
    NumericalInstabilityError,
)
from .model import (
    BasisLabel,
    MultiModeParams,
    ParitySector,
    ProbabilityRecord,
    QrmParams,
    build_multimode,
    build_qrm,
    critical_delta,
    delta_ramp,
    epsilon_ramp,
    multimode_displaced_basis,
    parity_sector_basis,
    parity_sector_labels,
    scheme_basis,
)
from .operators import StateVector, eig_hermitian

# Hard error threshold on norm drift during a run.
NORM_DRIFT_LIMIT = 1e-6
# Per-sample norm tolerance logged as a conservation violation.
SAMPLE_NORM_TOL = 1e-8
# Opposite-parity weight allowed in bias-free full-space runs.
LEAKAGE_TOL = 1e-10
# Final-state weight allowed in the top tenth of the Fock ladder.
TOP_OCCUPANCY_TOL = 1e-6
# Adjacent tracked levels closer than this (times the spectral scale) are
# flagged: their populations are not individually trustworthy there.
DEGENERACY_WARN_RTOL = 1e-8

_EIGH_BACKEND_MAX_DIM = 16
_CHEB_COEFF_TOL = 1e-16


@dataclass(frozen=True)
class SweepSchedule:
    """Linear ramp of one Hamiltonian parameter."""

    parameter: str
    start_value: float
    end_value: float
    rate_v: float
    n_steps: int = 100_000
    n_samples: int = 400
    sample_times: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.parameter not in ("delta", "epsilon"):
            raise InvalidParameterError(f"unknown sweep parameter {self.parameter!r}")
        for name in ("start_value", "end_value", "rate_v"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.rate_v <= 0:
            raise InvalidParameterError(f"rate_v must be positive, got {self.rate_v}")
        if self.n_steps < 1000:
            raise InvalidParameterError(
                f"n_steps = {self.n_steps} is below the 1000-step resolution guard"
            )
        if self.n_samples < 2:
            raise InvalidParameterError("need at least two samples (start and end)")
        if self.sample_times is not None:
            ts = tuple(float(t) for t in self.sample_times)
            total = self.total_time
            if any(t < 0 or t > total + 1e-12 * max(total, 1.0) for t in ts):
                raise InvalidParameterError("sample_times must lie within [0, T]")
            if list(ts) != sorted(ts):
                raise InvalidParameterError("sample_times must be ordered")
            object.__setattr__(self, "sample_times", ts)

    @property
    def total_time(self) -> float:
        return abs(self.end_value - self.start_value) / self.rate_v

    def value_at(self, t: float) -> float:
        total = self.total_time
        if total == 0.0:
            return self.start_value
        return self.start_value + (self.end_value - self.start_value) * (t / total)

    def reversed(self) -> "SweepSchedule":
        return replace(self, start_value=self.end_value, end_value=self.start_value)


@dataclass(frozen=True)
class ConservationSample:
    time: float
    norm_deviation: float
    parity_leakage: float | None


@dataclass
class Trajectory:
    """Sampled output of one sweep."""

    schedule: SweepSchedule
    times: np.ndarray
    final_state: StateVector
    states: list[StateVector] | None = None
    records: list[list[ProbabilityRecord]] | None = None
    conservation_log: list[ConservationSample] = field(default_factory=list)
    warnings: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    @property
    def max_norm_deviation(self) -> float:
        return max((abs(c.norm_deviation) for c in self.conservation_log), default=0.0)

    @property
    def max_parity_leakage(self) -> float:
        vals = [c.parity_leakage for c in self.conservation_log if c.parity_leakage is not None]
        return max(vals, default=0.0)


# ---------------------------------------------------------------------------
# Propagation backends
# ---------------------------------------------------------------------------

def _chebyshev_coefficients(z: float) -> np.ndarray:
    """Expansion coefficients of exp(-i z x) over Chebyshev T_k(x), x in [-1, 1]."""
    if z < 1e-14:
        k_max = 4
    else:
        k_max = int(z + 12.0 * z ** (1.0 / 3.0) + 30.0)
    k = np.arange(k_max + 1)
    bessels = jv(k, z)
    keep = np.nonzero(np.abs(bessels) >= _CHEB_COEFF_TOL)[0]
    cut = min(int(keep[-1]) + 2 if keep.size else 1, k_max)
    coeffs = ((-1j) ** k[: cut + 1]) * bessels[: cut + 1]
    coeffs[1:] *= 2.0
    return coeffs


def _gershgorin_bounds(h0: np.ndarray, h1: np.ndarray, f_vals: np.ndarray) -> tuple[float, float]:
    d0 = np.real(np.diag(h0))
    d1 = np.real(np.diag(h1))
    s0 = np.sum(np.abs(h0), axis=1) - np.abs(np.diag(h0))
    s1 = np.sum(np.abs(h1), axis=1) - np.abs(np.diag(h1))
    f_lo, f_hi = float(f_vals.min()), float(f_vals.max())
    f_abs = max(abs(f_lo), abs(f_hi))
    lo = min(
        float(np.min(d0 + f_lo * d1 - s0 - f_abs * s1)),
        float(np.min(d0 + f_hi * d1 - s0 - f_abs * s1)),
    )
    hi = max(
        float(np.max(d0 + f_lo * d1 + s0 + f_abs * s1)),
        float(np.max(d0 + f_hi * d1 + s0 + f_abs * s1)),
    )
    return lo, hi


def _evolve_linear(
    h_static: np.ndarray,
    h_ramp: np.ndarray,
    f_start: float,
    f_end: float,
    total_time: float,
    n_steps: int,
    psi0: np.ndarray,
    sample_steps: set[int],
    force_backend: str | None = None,
) -> dict[int, np.ndarray]:
    """Midpoint-exponential propagation of H(t) = h_static + f(t) h_ramp."""
    dim = h_static.shape[0]
    psi = np.asarray(psi0, dtype=complex).copy()
    out: dict[int, np.ndarray] = {}
    if 0 in sample_steps:
        out[0] = psi.copy()
    if total_time == 0.0:
        out[n_steps] = psi.copy()
        return out
    dt = total_time / n_steps
    slope = (f_end - f_start) / total_time
    if force_backend is None:
        use_eigh = dim <= _EIGH_BACKEND_MAX_DIM
    else:
        use_eigh = force_backend == "eigh"
    chunk_size = 4096 if use_eigh else 1024
    start = 0
    while start < n_steps:
        stop = min(n_steps, start + chunk_size)
        steps = np.arange(start, stop)
        f_mid = f_start + slope * ((steps + 0.5) * dt)
        if use_eigh:
            hb = h_static[None, :, :] + f_mid[:, None, None] * h_ramp[None, :, :]
            w, v = np.linalg.eigh(hb)
            phases = np.exp(-1j * dt * w)
            for i, k in enumerate(steps):
                psi = v[i] @ (phases[i] * (v[i].conj().T @ psi))
                if k + 1 in sample_steps:
                    out[k + 1] = psi.copy()
        else:
            lo, hi = _gershgorin_bounds(h_static, h_ramp, f_mid)
            center = 0.5 * (hi + lo)
            radius = 0.5 * (hi - lo) + 1e-300
            coeffs = _chebyshev_coefficients(radius * dt)
            phase = np.exp(-1j * center * dt)
            for i, k in enumerate(steps):
                hk = h_static + f_mid[i] * h_ramp
                prev = psi
                acc = coeffs[0] * prev
                if len(coeffs) > 1:
                    cur = (hk @ psi - center * psi) / radius
                    acc = acc + coeffs[1] * cur
                    for c in coeffs[2:]:
                        nxt = 2.0 * ((hk @ cur - center * cur) / radius) - prev
                        acc = acc + c * nxt
                        prev, cur = cur, nxt
                psi = phase * acc
                if k + 1 in sample_steps:
                    out[k + 1] = psi.copy()
        start = stop
    return out


# ---------------------------------------------------------------------------
# Model plumbing
# ---------------------------------------------------------------------------

def _hamiltonian_parts(
    p: QrmParams | MultiModeParams, parameter: str
) -> tuple[np.ndarray, np.ndarray]:
    """(static part, ramp generator) for the swept parameter."""
    if isinstance(p, MultiModeParams):
        if parameter != "epsilon":
            raise InvalidParameterError("multimode sweeps support the bias parameter only")
        return build_multimode(p, epsilon=0.0), epsilon_ramp(p)
    if parameter == "delta":
        return build_qrm(replace(p, delta=0.0)), delta_ramp(p)
    return build_qrm(replace(p, epsilon=0.0)), epsilon_ramp(p)


def _sample_steps(schedule: SweepSchedule) -> list[int]:
    n = schedule.n_steps
    total = schedule.total_time
    if schedule.sample_times is not None:
        if total == 0.0:
            steps = [0]
        else:
            steps = [int(round(t / total * n)) for t in schedule.sample_times]
    else:
        steps = list(np.linspace(0, n, schedule.n_samples).round().astype(int))
    steps = sorted(set(steps) | {n})
    return steps


def _top_fock_occupancy(p: QrmParams | MultiModeParams, amplitudes: np.ndarray) -> float:
    """Largest per-mode weight in the top tenth of any Fock ladder."""
    if isinstance(p, QrmParams):
        shape: tuple[int, ...] = (2, p.n_fock)
        sizes = (p.n_fock,)
    else:
        sizes = tuple(m.n_fock for m in p.modes)
        shape = (2, *sizes)
    probs = np.abs(amplitudes.reshape(shape)) ** 2
    worst = 0.0
    for j, size in enumerate(sizes):
        top = max(1, size // 10)
        axis_probs = np.moveaxis(probs, 1 + j, -1).reshape(-1, size).sum(axis=0)
        worst = max(worst, float(axis_probs[size - top :].sum()))
    return worst


def _scheme_columns(
    p: QrmParams | MultiModeParams, scheme: str
) -> tuple[np.ndarray, list[BasisLabel]]:
    if isinstance(p, MultiModeParams):
        if scheme != "displaced":
            raise InvalidParameterError("multimode readout supports the displaced scheme only")
        return multimode_displaced_basis(p)
    return scheme_basis(p, scheme)


def project_records(
    p: QrmParams | MultiModeParams, scheme: str, amplitudes: np.ndarray
) -> list[ProbabilityRecord]:
    """|<basis state | psi>|^2 over one complete labelling scheme."""
    cols, labels = _scheme_columns(p, scheme)
    probs = np.abs(cols.conj().T @ amplitudes) ** 2
    return [ProbabilityRecord(lab, float(pr)) for lab, pr in zip(labels, probs)]


# ---------------------------------------------------------------------------
# Public sweep driver
# ---------------------------------------------------------------------------

def run_sweep(
    p: QrmParams | MultiModeParams,
    schedule: SweepSchedule,
    psi0: StateVector,
    readout: str = "state",
    sector: ParitySector | None = None,
    check_truncation: bool = True,
) -> Trajectory:
    """Evolve psi0 under the scheduled ramp and sample it.

    The swept parameter's value in ``p`` is ignored; the schedule supplies it.
    With ``sector`` given (bias-free gap sweeps only) the evolution runs inside
    that parity block and psi0 must be given in block coordinates.
    """
    h_static, h_ramp = _hamiltonian_parts(p, schedule.parameter)
    sector_matrix = None
    leak_matrix = None
    if sector is not None:
        if isinstance(p, MultiModeParams) or schedule.parameter != "delta" or p.epsilon != 0.0:
            raise InvalidParameterError(
                "sector-restricted runs require a single-mode, bias-free gap sweep"
            )
        sector_matrix, _ = parity_sector_basis(p, sector)
        h_static = sector_matrix.conj().T @ h_static @ sector_matrix
        h_ramp = sector_matrix.conj().T @ h_ramp @ sector_matrix
        expected_tag = "parity-symmetric" if sector.sign == +1 else "parity-antisymmetric"
        if psi0.basis_tag != expected_tag:
            raise InvalidParameterError(
                f"sector run expects a {expected_tag!r} state, got {psi0.basis_tag!r}"
            )
    elif isinstance(p, QrmParams) and schedule.parameter == "delta" and p.epsilon == 0.0:
        plus, _ = parity_sector_basis(p, ParitySector(+1))
        minus, _ = parity_sector_basis(p, ParitySector(-1))
        w_plus = float(np.sum(np.abs(plus.conj().T @ psi0.amplitudes) ** 2))
        if w_plus > 1.0 - 1e-12:
            leak_matrix = minus
        elif w_plus < 1e-12:
            leak_matrix = plus
    if psi0.dim != h_static.shape[0]:
        raise InvalidParameterError(
            f"initial state dimension {psi0.dim} does not match the model ({h_static.shape[0]})"
        )

    steps = _sample_steps(schedule)
    sampled = _evolve_linear(
        h_static,
        h_ramp,
        schedule.start_value,
        schedule.end_value,
        schedule.total_time,
        schedule.n_steps,
        psi0.amplitudes,
        set(steps),
    )
    dt = schedule.total_time / schedule.n_steps if schedule.total_time else 0.0
    times = np.array([k * dt for k in sorted(sampled)])

    warnings: list[str] = []
    conservation = []
    for k in sorted(sampled):
        amp = sampled[k]
        norm_dev = float(np.linalg.norm(amp) - 1.0)
        if abs(norm_dev) > NORM_DRIFT_LIMIT:
            raise NumericalInstabilityError(
                f"norm drifted by {norm_dev:.2e} at t = {k * dt:.6g}"
            )
        if abs(norm_dev) > SAMPLE_NORM_TOL:
            warnings.append(f"norm deviation {norm_dev:.2e} at t = {k * dt:.6g}")
        leak = None
        if leak_matrix is not None:
            leak = float(np.sum(np.abs(leak_matrix.conj().T @ amp) ** 2))
            if leak > LEAKAGE_TOL:
                warnings.append(f"parity leakage {leak:.2e} at t = {k * dt:.6g}")
        conservation.append(ConservationSample(k * dt, norm_dev, leak))

    final_amp = sampled[max(sampled)]
    full_final = sector_matrix @ final_amp if sector_matrix is not None else final_amp
    top_occ = _top_fock_occupancy(p, full_final)
    if top_occ > TOP_OCCUPANCY_TOL:
        message = (
            f"final state holds weight {top_occ:.2e} in the top tenth of the "
            "Fock ladder; results are truncation-limited"
        )
        if check_truncation:
            raise InsufficientTruncationError(message)
        warnings.append(message)

    tag = psi0.basis_tag
    final_state = StateVector(final_amp / np.linalg.norm(final_amp), tag)
    states = None
    records = None
    if readout == "state":
        states = [
            StateVector(sampled[k] / np.linalg.norm(sampled[k]), tag) for k in sorted(sampled)
        ]
    else:
        records = []
        for k in sorted(sampled):
            amp = sampled[k]
            full = sector_matrix @ amp if sector_matrix is not None else amp
            records.append(project_records(p, readout, full))

    return Trajectory(
        schedule=schedule,
        times=times,
        final_state=final_state,
        states=states,
        records=records,
        conservation_log=conservation,
        warnings=tuple(warnings),
        metadata={"top_fock_occupancy": top_occ, "sector": sector.sign if sector else None},
    )


def run_sweep_batch(jobs: list[dict], max_workers: int | None = None) -> list:
    """Run independent sweeps concurrently; results keep the submission order.

    Each job is a kwargs dict for run_sweep. A failed job yields its exception
    in the result list instead of aborting its siblings.
    """

    def one(kwargs: dict):
        try:
            return run_sweep(**kwargs)
        except Exception as exc:  # noqa: BLE001 - isolated per job by contract
            return exc

    if max_workers is None or max_workers <= 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, jobs))


# ---------------------------------------------------------------------------
# Instantaneous-eigenbasis readout
# ---------------------------------------------------------------------------

def greedy_label_assignment(
    reference: np.ndarray, labels: list[BasisLabel], vectors: np.ndarray
) -> list[BasisLabel]:
    """Assign each vector (column) the label of its best-matching reference
    column: repeatedly take the globally largest remaining overlap."""
    overlaps = np.abs(reference.conj().T @ vectors) ** 2
    if overlaps.shape[0] != overlaps.shape[1]:
        raise InvalidParameterError("label matching needs a complete reference basis")
    n = overlaps.shape[0]
    out: list[BasisLabel | None] = [None] * n
    work = overlaps.copy()
    for _ in range(n):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        out[j] = labels[i]
        work[i, :] = -1.0
        work[:, j] = -1.0
    return out  # type: ignore[return-value]


def _auto_scheme(p: QrmParams) -> str:
    if p.epsilon != 0.0:
        return "displaced"
    if p.delta == 0.0:
        return "superradiant"
    return "normal" if p.delta >= critical_delta(p.g, p.omega) else "superradiant"


def instantaneous_populations(
    p: QrmParams,
    psi: StateVector,
    sector: ParitySector | None = None,
    scheme: str = "auto",
) -> list[ProbabilityRecord]:
    """Populations of the eigenstates of H(p), labelled by best overlap with a
    named scheme. Adjacent near-degenerate levels are flagged on their records.

    ``p`` carries the instantaneous parameter values. With ``sector`` given,
    both psi and the diagonalization are restricted to that parity block.
    """
    if scheme == "auto":
        scheme = _auto_scheme(p)
    h = build_qrm(p)
    if sector is not None:
        basis, _ = parity_sector_basis(p, sector)
        h = basis.conj().T @ h @ basis
        cols_full, all_labels = _scheme_columns(p, scheme)
        sector_labels = parity_sector_labels(sector, p.n_fock, scheme) if scheme in (
            "normal",
            "superradiant",
        ) else None
        if sector_labels is None:
            raise InvalidParameterError(
                "sector-restricted readout needs a parity-definite scheme"
            )
        keep = [all_labels.index(lab) for lab in sector_labels]
        cols = basis.conj().T @ cols_full[:, keep]
        labels = sector_labels
    else:
        cols, labels = _scheme_columns(p, scheme)
    if psi.dim != h.shape[0]:
        raise InvalidParameterError("state dimension does not match the model")
    eigvals, eigvecs = eig_hermitian(h)
    assigned = greedy_label_assignment(cols, labels, eigvecs)
    scale = max(np.max(np.abs(eigvals)), 1e-300)
    gaps = np.diff(eigvals)
    near = np.zeros(len(eigvals), dtype=bool)
    tight = gaps <= DEGENERACY_WARN_RTOL * scale
    near[:-1] |= tight
    near[1:] |= tight
    probs = np.abs(eigvecs.conj().T @ psi.amplitudes) ** 2
    return [
        ProbabilityRecord(lab, float(pr), degenerate_tracking=bool(fl))
        for lab, pr, fl in zip(assigned, probs, near)
    ]


def eigen_level_series(
    h_static: np.ndarray,
    h_ramp: np.ndarray,
    values: np.ndarray,
    states: list[np.ndarray],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Energy-ordered level populations along a trace.

    Returns (populations[time, level], eigenvalues[time, level],
    degenerate_flags[time, level]). Level identity is the energy ordering at
    each instant; labels are attached by the caller at an anchor time.
    """
    pops = []
    vals = []
    flags = []
    for value, amp in zip(values, states):
        w, v = np.linalg.eigh(h_static + value * h_ramp)
        pops.append(np.abs(v.conj().T @ amp) ** 2)
        vals.append(w)
        scale = max(np.max(np.abs(w)), 1e-300)
        tight = np.diff(w) <= DEGENERACY_WARN_RTOL * scale
        near = np.zeros(len(w), dtype=bool)
        near[:-1] |= tight
        near[1:] |= tight
        flags.append(near)
    return np.array(pops), np.array(vals), np.array(flags)


# ---------------------------------------------------------------------------
# Convergence scanning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of rerunning a sweep at 2x and 4x one resolution knob."""

    knob: str
    base_value: float
    tolerance: float
    max_change_2x: float | None
    max_change_4x: float | None
    passed: bool
    notes: tuple[str, ...] = ()


def _embed_state(
    p_old: QrmParams | MultiModeParams,
    p_new: QrmParams | MultiModeParams,
    psi: StateVector,
) -> StateVector:
    """Zero-pad a state into a larger truncation, preserving labels."""
    if psi.basis_tag in ("parity-symmetric", "parity-antisymmetric"):
        # Block coordinates are indexed by photon number directly.
        amp = np.zeros(p_new.n_fock, dtype=complex)
        amp[: psi.dim] = psi.amplitudes
        return StateVector(amp, psi.basis_tag)
    if isinstance(p_old, QrmParams):
        old_shape: tuple[int, ...] = (2, p_old.n_fock)
        new_shape: tuple[int, ...] = (2, p_new.n_fock)
    else:
        old_shape = (2, *(m.n_fock for m in p_old.modes))
        new_shape = (2, *(m.n_fock for m in p_new.modes))
    amp = np.zeros(new_shape, dtype=complex)
    amp[tuple(slice(0, s) for s in old_shape)] = psi.amplitudes.reshape(old_shape)
    return StateVector(amp.ravel(), psi.basis_tag)


def _scaled_truncation(p: QrmParams | MultiModeParams, factor: int):
    if isinstance(p, QrmParams):
        return replace(p, n_fock=factor * p.n_fock)
    return replace(
        p, modes=tuple(replace(m, n_fock=factor * m.n_fock) for m in p.modes)
    )


def convergence_scan(
    p: QrmParams | MultiModeParams,
    schedule: SweepSchedule,
    psi0: StateVector,
    knob: str,
    readout: str = "bare",
    sector: ParitySector | None = None,
    tolerance: float = 1e-3,
    state_builder=None,
    factors: tuple[int, ...] = (2, 4),
) -> ConvergenceReport:
    """Rerun the sweep at scaled resolution and report final-probability drift.

    ``state_builder(p, sector) -> StateVector`` regenerates the initial state
    for truncation changes; without it the state is zero-padded.
    """
    if knob not in ("n_steps", "n_fock", "endpoint_magnitude"):
        raise InvalidParameterError(f"unknown convergence knob {knob!r}")
    if readout == "state":
        raise InvalidParameterError("convergence comparison needs a probability readout")

    def final_probs(pp, sched, state) -> dict[BasisLabel, float]:
        traj = run_sweep(pp, sched, state, readout=readout, sector=sector, check_truncation=False)
        if any("truncation-limited" in w for w in traj.warnings):
            raise InsufficientTruncationError(traj.warnings[-1])
        return {rec.label: rec.probability for rec in traj.records[-1]}

    def configured(factor: int):
        if knob == "n_steps":
            return p, replace(schedule, n_steps=factor * schedule.n_steps), psi0
        if knob == "n_fock":
            p_new = _scaled_truncation(p, factor)
            state = (
                state_builder(p_new, sector)
                if state_builder is not None
                else _embed_state(p, p_new, psi0)
            )
            return p_new, schedule, state
        # endpoint_magnitude: scale both endpoints, keep dt fixed.
        sched = replace(
            schedule,
            start_value=factor * schedule.start_value,
            end_value=factor * schedule.end_value,
            n_steps=factor * schedule.n_steps,
        )
        state = state_builder(p, sector) if state_builder is not None else psi0
        return p, sched, state

    notes: list[str] = []
    base_value = {
        "n_steps": float(schedule.n_steps),
        "n_fock": float(p.n_fock if isinstance(p, QrmParams) else max(m.n_fock for m in p.modes)),
        "endpoint_magnitude": max(abs(schedule.start_value), abs(schedule.end_value)),
    }[knob]
    try:
        base = final_probs(*configured(1))
        changes = []
        prev = base
        for factor in factors:
            cur = final_probs(*configured(factor))
            keys = set(prev) & set(cur)
            missing = (set(prev) | set(cur)) - keys
            # Labels only existing at the higher resolution carry their full
            # probability as change.
            extra = max(
                (cur.get(k, prev.get(k, 0.0)) for k in missing), default=0.0
            )
            delta = max((abs(cur[k] - prev[k]) for k in keys), default=0.0)
            changes.append(max(delta, extra))
            prev = cur
        passed = all(c <= tolerance for c in changes)
    except (InsufficientTruncationError, NumericalInstabilityError) as exc:
        notes.append(f"{type(exc).__name__}: {exc}")
        return ConvergenceReport(knob, base_value, tolerance, None, None, False, tuple(notes))
    return ConvergenceReport(
        knob,
        base_value,
        tolerance,
        changes[0],
        changes[1] if len(changes) > 1 else None,
        passed,
        tuple(notes),
    )
