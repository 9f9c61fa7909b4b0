"""Qubit-oscillator dynamics under linear parameter sweeps.

A dense-matrix simulator for a single qubit coupled to one or more oscillator
modes, driven by linear ramps of the qubit gap (quenches between the weakly
and strongly correlated regimes) or of the qubit bias (multi-level
avoided-crossing sweeps), together with the closed-form results that serve as
independent oracles for the dynamics.
"""

from ._version import __version__
from .analytics import (
    FockPrepWindow,
    GapSpectrum,
    cascade_gaps,
    cascade_probabilities,
    default_n_max,
    fock_prep_window,
    lz_probability,
    multimode_gaps,
    poisson_overlap,
    sequential_crossing_probabilities,
)
from .errors import (
    DegenerateCrossingError,
    GapTruncationError,
    InsufficientTruncationError,
    InvalidParameterError,
    InvalidTruncationError,
    NumericalInstabilityError,
    RabisweepError,
    ResourceLimitError,
    SymmetryViolationError,
)
from .experiments import (
    ExperimentSpec,
    ResultRow,
    ResultTable,
    default_quench_delta_hi,
    instantaneous_ground_state,
    lz_scan,
    lz_time_trace,
    lz_window,
    multimode_scan,
    quench_rate_scan,
    quench_time_trace,
    rerun_point,
    run_experiment,
    sector_ground_state,
)
from .io import (
    emit_svg,
    parse_config_file,
    read_result_table,
    render_result_csv,
    write_result_table,
)
from .model import (
    BasisLabel,
    EVEN_SECTOR,
    Mode,
    MultiModeParams,
    ODD_SECTOR,
    ParitySector,
    ProbabilityRecord,
    QrmParams,
    build_multimode,
    build_qrm,
    critical_delta,
    default_n_fock,
    delta_ramp,
    displaced_state,
    epsilon_ramp,
    multimode_displaced_basis,
    normal_state,
    parity_operator,
    parity_projector,
    parity_sector_basis,
    parity_sector_labels,
    scheme_basis,
    scheme_state,
    superradiant_state,
)
from .operators import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    StateVector,
    StepPropagator,
    annihilation,
    creation,
    displaced_fock_tail,
    displacement,
    eig_hermitian,
    hermiticity_defect,
    kron,
    number_operator,
    propagate_step,
    unitary_displacement,
)
from .presets import PRESETS, bundled_presets
from .sweep import (
    ConservationSample,
    ConvergenceReport,
    SweepSchedule,
    Trajectory,
    convergence_scan,
    greedy_label_assignment,
    instantaneous_populations,
    project_records,
    run_sweep,
    run_sweep_batch,
)

__all__ = [name for name in dir() if not name.startswith("_")]
