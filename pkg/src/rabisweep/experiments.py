"""Figure-level drivers: rate scans, time traces, and formula-vs-simulation
tables, each pairing the dynamics with its closed-form oracle where one exists.

Scan axes are dimensionless: quench rates in units of omega^2, bias sweep
rates in units of delta^2, trace rows on the swept-parameter time axis.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._version import __version__ as _version
from .analytics import (
    cascade_probabilities,
    default_n_max,
    multimode_gaps,
    poisson_overlap,
    sequential_crossing_probabilities,
)
from .errors import InvalidParameterError, RabisweepError
from .model import (
    BasisLabel,
    EVEN_SECTOR,
    MultiModeParams,
    ProbabilityRecord,
    QrmParams,
    build_multimode,
    build_qrm,
    critical_delta,
    delta_ramp,
    parity_sector_basis,
    parity_sector_labels,
    scheme_basis,
)
from .operators import StateVector, eig_hermitian
from .sweep import (
    LEAKAGE_TOL,
    SAMPLE_NORM_TOL,
    SweepSchedule,
    Trajectory,
    eigen_level_series,
    greedy_label_assignment,
    run_sweep,
)

EXPERIMENT_KINDS = (
    "quench_ns",
    "quench_sn",
    "quench_trace",
    "lz_scan",
    "lz_trace",
    "lz_formula",
    "multimode_scan",
)

# Probability-sum defect allowed before a row is flagged unconverged.
ROW_SUM_TOL = 1e-6


@dataclass
class ExperimentSpec:
    """One parameterized experiment: what to sweep, over which grid."""

    kind: str
    params: QrmParams | MultiModeParams
    scan_name: str
    scan_values: tuple[float, ...]
    n_steps: int = 20_000
    label_photon_cap: int = 6
    options: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise InvalidParameterError(f"unknown experiment kind {self.kind!r}")
        values = tuple(float(v) for v in self.scan_values)
        if len(values) == 0:
            raise InvalidParameterError("scan grid must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidParameterError("scan grid must be strictly increasing")
        self.scan_values = values
        if self.kind.startswith("quench"):
            if not isinstance(self.params, QrmParams):
                raise InvalidParameterError("quench experiments take single-mode parameters")
            if self.params.epsilon != 0.0:
                raise InvalidParameterError("quench experiments run at zero bias")
        if self.kind == "multimode_scan" and not isinstance(self.params, MultiModeParams):
            raise InvalidParameterError("multimode_scan takes MultiModeParams")
        if self.kind in ("quench_trace", "lz_trace") and "rate" not in self.options:
            raise InvalidParameterError(f"{self.kind} requires options['rate']")
        if self.kind == "quench_trace" and self.options.get("direction") not in ("ns", "sn"):
            raise InvalidParameterError("quench_trace requires options['direction'] in 'ns'/'sn'")


@dataclass
class ResultRow:
    scan_value: float
    sim: tuple[ProbabilityRecord, ...] | None
    oracle: tuple[ProbabilityRecord, ...] | None
    converged: bool
    checks: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()


@dataclass
class ResultTable:
    spec: ExperimentSpec
    rows: list[ResultRow]
    provenance: dict = field(default_factory=dict)

    def labels(self) -> list[BasisLabel]:
        seen: dict[BasisLabel, None] = {}
        for row in self.rows:
            for recs in (row.sim, row.oracle):
                if recs:
                    for rec in recs:
                        seen.setdefault(rec.label, None)
        return list(seen)

    def column(self, label: BasisLabel, which: str = "sim") -> np.ndarray:
        out = np.full(len(self.rows), np.nan)
        for i, row in enumerate(self.rows):
            recs = row.sim if which == "sim" else row.oracle
            if recs:
                for rec in recs:
                    if rec.label == label:
                        out[i] = rec.probability
                        break
        return out

    def max_abs_deviation(self, labels: list[BasisLabel]) -> float:
        worst = 0.0
        for lab in labels:
            sim = self.column(lab, "sim")
            oracle = self.column(lab, "oracle")
            ok = ~(np.isnan(sim) | np.isnan(oracle))
            if ok.any():
                worst = max(worst, float(np.max(np.abs(sim[ok] - oracle[ok]))))
        return worst


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------

def default_quench_delta_hi(p: QrmParams) -> float:
    """Desk-scale initial/final gap: far above the semiclassical change."""
    return max(200.0 * p.omega, 50.0 * critical_delta(p.g, p.omega))


def lz_window(p: QrmParams | MultiModeParams) -> float:
    """Half-width of the bias sweep: all populated crossings sit far inside.

    Single mode: +-max(50 delta, (n_rel + 10) omega + 50 delta) with
    n_rel = ceil(4 (g/omega)^2 + 10); multimode uses the farthest retained
    crossing plus the same margins.
    """
    if isinstance(p, QrmParams):
        n_rel = int(np.ceil(4.0 * p.g_over_omega**2 + 10.0))
        return max(50.0 * abs(p.delta), (n_rel + 10.0) * p.omega + 50.0 * abs(p.delta))
    farthest = sum((m.n_fock - 1) * m.omega for m in p.modes)
    return farthest + 10.0 * max(m.omega for m in p.modes) + 50.0 * abs(p.delta)


def sector_ground_state(p: QrmParams, delta_value: float) -> StateVector:
    """Ground state of the even-parity block at the given gap, block coords."""
    basis, _ = parity_sector_basis(p, EVEN_SECTOR)
    h = build_qrm(replace(p, delta=delta_value, epsilon=0.0))
    hb = basis.conj().T @ h @ basis
    _, vecs = eig_hermitian(hb)
    return StateVector(vecs[:, 0], "parity-symmetric")


def instantaneous_ground_state(
    p: QrmParams | MultiModeParams, epsilon: float
) -> StateVector:
    """Full-space ground state at a frozen bias value."""
    if isinstance(p, QrmParams):
        h = build_qrm(replace(p, epsilon=epsilon))
    else:
        h = build_multimode(p, epsilon=epsilon)
    _, vecs = eig_hermitian(h)
    return StateVector(vecs[:, 0], "bare")


def _row_checks(
    traj: Trajectory,
    records: tuple[ProbabilityRecord, ...],
    top_occupancy_tol: float = 1e-6,
) -> tuple[dict, bool, tuple[str, ...]]:
    total = float(sum(r.probability for r in records))
    checks = {
        "norm_deviation": traj.max_norm_deviation,
        "parity_leakage": traj.max_parity_leakage,
        "top_fock_occupancy": traj.metadata.get("top_fock_occupancy", 0.0),
        "probability_sum": total,
    }
    warnings = list(traj.warnings)
    ok = (
        checks["norm_deviation"] <= SAMPLE_NORM_TOL
        and checks["parity_leakage"] <= LEAKAGE_TOL
        and checks["top_fock_occupancy"] <= top_occupancy_tol
        and abs(total - 1.0) <= ROW_SUM_TOL
    )
    if abs(total - 1.0) > ROW_SUM_TOL:
        warnings.append(f"readout probabilities sum to {total:.8f}")
    return checks, ok, tuple(warnings)


def _failed_row(scan_value: float, exc: Exception) -> ResultRow:
    return ResultRow(
        scan_value,
        sim=None,
        oracle=None,
        converged=False,
        checks={},
        warnings=(f"{type(exc).__name__}: {exc}",),
    )


def _sector_scheme_columns(p: QrmParams, scheme: str) -> tuple[np.ndarray, list[BasisLabel]]:
    """Even-sector states of a parity-definite scheme, in block coordinates."""
    basis, _ = parity_sector_basis(p, EVEN_SECTOR)
    cols_full, all_labels = scheme_basis(p, scheme)
    labels = parity_sector_labels(EVEN_SECTOR, p.n_fock, scheme)
    keep = [all_labels.index(lab) for lab in labels]
    return basis.conj().T @ cols_full[:, keep], labels


# ---------------------------------------------------------------------------
# Quench experiments
# ---------------------------------------------------------------------------

def _quench_endpoints(spec: ExperimentSpec) -> tuple[float, float]:
    p = spec.params
    hi = float(spec.options.get("delta_hi", default_quench_delta_hi(p)))
    lo = float(spec.options.get("delta_lo", 0.0))
    direction = spec.options.get("direction", "ns" if spec.kind == "quench_ns" else "sn")
    return (hi, lo) if direction == "ns" else (lo, hi)


def quench_rate_scan(spec: ExperimentSpec) -> ResultTable:
    """Final-state populations vs sweep rate for a gap quench.

    The run stays in the even-parity block (the ground state's sector).
    Readout: exact strong-coupling doublet states for sweeps ending at zero
    gap, instantaneous eigenstates named by the weak-coupling labels for
    sweeps ending at large gap. The sudden-limit Poisson law rides along as
    the oracle column.
    """
    if spec.kind not in ("quench_ns", "quench_sn"):
        raise InvalidParameterError(f"quench_rate_scan cannot run kind {spec.kind!r}")
    p = spec.params
    start, end = _quench_endpoints(spec)
    to_superradiant = end < start
    if to_superradiant:
        cols, labels = _sector_scheme_columns(p, "superradiant")
    else:
        basis, _ = parity_sector_basis(p, EVEN_SECTOR)
        h_final = basis.conj().T @ build_qrm(replace(p, delta=end, epsilon=0.0)) @ basis
        _, eigvecs = eig_hermitian(h_final)
        ref_cols, ref_labels = _sector_scheme_columns(p, "normal")
        assigned = greedy_label_assignment(ref_cols, ref_labels, eigvecs)
        cols, labels = eigvecs, assigned
    oracle = tuple(
        ProbabilityRecord(lab, poisson_overlap(lab.photons, p.g, p.omega)) for lab in labels
    )

    rows = []
    times = []
    psi0 = sector_ground_state(p, start)
    for scan_value in spec.scan_values:
        rate = scan_value * p.omega**2
        t0 = time.perf_counter()
        try:
            schedule = SweepSchedule(
                "delta", start, end, rate, n_steps=spec.n_steps, n_samples=2
            )
            traj = run_sweep(
                p, schedule, psi0, readout="state", sector=EVEN_SECTOR, check_truncation=False
            )
            probs = np.abs(cols.conj().T @ traj.final_state.amplitudes) ** 2
            sim = tuple(ProbabilityRecord(l, float(pr)) for l, pr in zip(labels, probs))
            checks, ok, warns = _row_checks(traj, sim)
            rows.append(ResultRow(scan_value, sim, oracle, ok, checks, warns))
        except RabisweepError as exc:
            rows.append(_failed_row(scan_value, exc))
        times.append(time.perf_counter() - t0)
    return ResultTable(spec, rows, _provenance(spec, times))


def quench_time_trace(spec: ExperimentSpec) -> ResultTable:
    """Populations of the instantaneous energy levels along one gap quench.

    Levels are tracked by their energy ordering at each sample and named by
    the basis state each level matches at the final time, so the curves read
    as the final-state labels; samples where adjacent tracked levels approach
    degeneracy are flagged on their records.
    """
    if spec.kind != "quench_trace":
        raise InvalidParameterError(f"quench_time_trace cannot run kind {spec.kind!r}")
    p = spec.params
    direction = spec.options["direction"]
    rate = float(spec.options["rate"]) * p.omega**2
    start, end = _quench_endpoints(spec)
    total_time = abs(end - start) / rate
    # Paper-style axis: rate*(t - T)/omega toward the strong-coupling side,
    # rate*t/omega away from it.
    axis = np.asarray(spec.scan_values)
    if direction == "ns":
        sample_times = axis * p.omega / rate + total_time
    else:
        sample_times = axis * p.omega / rate
    if np.any(sample_times < -1e-9) or np.any(sample_times > total_time * (1 + 1e-12)):
        raise InvalidParameterError("trace axis values fall outside the sweep")
    sample_times = np.clip(sample_times, 0.0, total_time)

    schedule = SweepSchedule(
        "delta",
        start,
        end,
        rate,
        n_steps=spec.n_steps,
        sample_times=tuple(sample_times),
    )
    psi0 = sector_ground_state(p, start)
    traj = run_sweep(
        p, schedule, psi0, readout="state", sector=EVEN_SECTOR, check_truncation=False
    )

    basis, _ = parity_sector_basis(p, EVEN_SECTOR)
    h0 = basis.conj().T @ build_qrm(replace(p, delta=0.0, epsilon=0.0)) @ basis
    h1 = basis.conj().T @ delta_ramp(p) @ basis
    delta_values = np.array([schedule.value_at(t) for t in traj.times])
    pops, _, flags = eigen_level_series(
        h0, h1, delta_values, [s.amplitudes for s in traj.states]
    )

    scheme = "superradiant" if abs(delta_values[-1]) < abs(delta_values[0]) else "normal"
    ref_cols, ref_labels = _sector_scheme_columns(p, scheme)
    _, final_vecs = eig_hermitian(h0 + delta_values[-1] * h1)
    level_labels = greedy_label_assignment(ref_cols, ref_labels, final_vecs)

    rows = []
    for i, t in enumerate(traj.times):
        axis_value = (
            rate * (t - total_time) / p.omega if direction == "ns" else rate * t / p.omega
        )
        sim = tuple(
            ProbabilityRecord(lab, float(pr), degenerate_tracking=bool(fl))
            for lab, pr, fl in zip(level_labels, pops[i], flags[i])
        )
        checks, ok, warns = _row_checks(traj, sim)
        rows.append(ResultRow(float(axis_value), sim, None, ok, checks, warns))
    prov = _provenance(spec, [])
    prov["semiclassical_crossing_axis_value"] = (
        -critical_delta(p.g, p.omega) / p.omega
        if direction == "ns"
        else critical_delta(p.g, p.omega) / p.omega
    )
    return ResultTable(spec, rows, prov)


# ---------------------------------------------------------------------------
# Bias-sweep (multi-crossing) experiments
# ---------------------------------------------------------------------------

def _cascade_oracle(p: QrmParams, rate: float) -> tuple[ProbabilityRecord, ...]:
    records = cascade_probabilities(p.delta, rate, p.g, p.omega, default_n_max(p.g, p.omega))
    return tuple(records)


def lz_scan(spec: ExperimentSpec) -> ResultTable:
    """Bias sweep through the crossing mesh vs the independent-crossing formula.

    Formula-only tables (kind ``lz_formula``) carry just the oracle column.
    Simulated runs start from the instantaneous ground state at the window
    edge (the finite-window stand-in for the asymptotic ground state) and are
    read out in the displaced basis at the far edge.
    """
    if spec.kind not in ("lz_scan", "lz_formula"):
        raise InvalidParameterError(f"lz_scan cannot run kind {spec.kind!r}")
    p = spec.params
    window = float(spec.options.get("window", lz_window(p)))
    rows = []
    times = []
    psi0 = None if spec.kind == "lz_formula" else instantaneous_ground_state(p, -window)
    for scan_value in spec.scan_values:
        rate = scan_value * p.delta**2
        t0 = time.perf_counter()
        try:
            oracle = _cascade_oracle(p, rate)
            if spec.kind == "lz_formula":
                rows.append(ResultRow(scan_value, None, oracle, True, {}, ()))
            else:
                schedule = SweepSchedule(
                    "epsilon", -window, window, rate, n_steps=spec.n_steps, n_samples=2
                )
                traj = run_sweep(p, schedule, psi0, readout="displaced", check_truncation=False)
                sim = tuple(traj.records[-1])
                checks, ok, warns = _row_checks(traj, sim)
                rows.append(ResultRow(scan_value, sim, oracle, ok, checks, warns))
        except RabisweepError as exc:
            rows.append(_failed_row(scan_value, exc))
        times.append(time.perf_counter() - t0)
    prov = _provenance(spec, times)
    prov["window"] = window
    return ResultTable(spec, rows, prov)


def lz_time_trace(spec: ExperimentSpec) -> ResultTable:
    """Displaced-basis populations along one bias sweep; axis is bias/omega."""
    if spec.kind != "lz_trace":
        raise InvalidParameterError(f"lz_time_trace cannot run kind {spec.kind!r}")
    p = spec.params
    window = float(spec.options.get("window", lz_window(p)))
    rate = float(spec.options["rate"]) * p.delta**2
    omega = p.omega if isinstance(p, QrmParams) else min(m.omega for m in p.modes)
    axis = np.asarray(spec.scan_values)
    sample_times = (axis * omega + window) / rate
    total_time = 2 * window / rate
    if np.any(sample_times < -1e-9) or np.any(sample_times > total_time * (1 + 1e-12)):
        raise InvalidParameterError("trace axis values fall outside the sweep window")
    schedule = SweepSchedule(
        "epsilon",
        -window,
        window,
        rate,
        n_steps=spec.n_steps,
        sample_times=tuple(np.clip(sample_times, 0.0, total_time)),
    )
    psi0 = instantaneous_ground_state(p, -window)
    traj = run_sweep(p, schedule, psi0, readout="displaced", check_truncation=False)
    rows = []
    for t, recs in zip(traj.times, traj.records):
        sim = tuple(recs)
        checks, ok, warns = _row_checks(traj, sim)
        rows.append(ResultRow(float((t * rate - window) / omega), sim, None, ok, checks, warns))
    prov = _provenance(spec, [])
    prov["window"] = window
    return ResultTable(spec, rows, prov)


def multimode_scan(spec: ExperimentSpec) -> ResultTable:
    """Bias sweep with several modes vs the sequential-crossing oracle."""
    if spec.kind != "multimode_scan":
        raise InvalidParameterError(f"multimode_scan cannot run kind {spec.kind!r}")
    p = spec.params
    caps = tuple(spec.options.get("caps", tuple(m.n_fock - 3 for m in p.modes)))
    spectrum = multimode_gaps(p, caps)  # degenerate-crossing refusal surfaces here
    window = float(spec.options.get("window", lz_window(p)))
    simulate = bool(spec.options.get("simulate", True))
    # Bounded caps leave a small unassigned survival weight in the oracle; it
    # is recorded per row and only fails the row past this tolerance.
    residual_tol = float(spec.options.get("oracle_residual_tol", 1e-3))
    psi0 = instantaneous_ground_state(p, -window) if simulate else None
    rows = []
    times = []
    for scan_value in spec.scan_values:
        rate = scan_value * p.delta**2
        t0 = time.perf_counter()
        try:
            oracle = tuple(
                sequential_crossing_probabilities(spectrum, rate, residual_tol=residual_tol)
            )
            oracle_residual = 1.0 - sum(r.probability for r in oracle)
            if not simulate:
                rows.append(
                    ResultRow(scan_value, None, oracle, True,
                              {"oracle_residual": oracle_residual}, ())
                )
            else:
                schedule = SweepSchedule(
                    "epsilon", -window, window, rate, n_steps=spec.n_steps, n_samples=2
                )
                traj = run_sweep(p, schedule, psi0, readout="displaced", check_truncation=False)
                sim = tuple(traj.records[-1])
                checks, ok, warns = _row_checks(
                    traj, sim, float(spec.options.get("top_occupancy_tol", 1e-6))
                )
                checks["oracle_residual"] = oracle_residual
                rows.append(ResultRow(scan_value, sim, oracle, ok, checks, warns))
        except RabisweepError as exc:
            rows.append(_failed_row(scan_value, exc))
        times.append(time.perf_counter() - t0)
    prov = _provenance(spec, times)
    prov["window"] = window
    prov["caps"] = caps
    return ResultTable(spec, rows, prov)


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    runner = {
        "quench_ns": quench_rate_scan,
        "quench_sn": quench_rate_scan,
        "quench_trace": quench_time_trace,
        "lz_scan": lz_scan,
        "lz_formula": lz_scan,
        "lz_trace": lz_time_trace,
        "multimode_scan": multimode_scan,
    }[spec.kind]
    return runner(spec)


def rerun_point(
    spec: ExperimentSpec,
    scan_value: float,
    n_steps_factor: int = 1,
    n_fock_factor: int = 1,
) -> ResultRow:
    """Recompute a single grid point at scaled resolution (doubling audits)."""
    p = spec.params
    if n_fock_factor != 1:
        if isinstance(p, QrmParams):
            p = replace(p, n_fock=n_fock_factor * p.n_fock)
        else:
            p = replace(
                p, modes=tuple(replace(m, n_fock=n_fock_factor * m.n_fock) for m in p.modes)
            )
    point_spec = replace(
        spec,
        params=p,
        scan_values=(scan_value,),
        n_steps=n_steps_factor * spec.n_steps,
        options=dict(spec.options),
    )
    return run_experiment(point_spec).rows[0]


def _provenance(spec: ExperimentSpec, wall_times: list[float]) -> dict:
    p = spec.params
    if isinstance(p, QrmParams):
        truncation: object = p.n_fock
    else:
        truncation = tuple(m.n_fock for m in p.modes)
    return {
        "version": _version,
        "kind": spec.kind,
        "n_steps": spec.n_steps,
        "truncation": truncation,
        "wall_times_s": [round(t, 4) for t in wall_times],
    }
