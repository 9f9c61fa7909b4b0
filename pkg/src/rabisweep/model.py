"""Physics layer: Rabi Hamiltonian, parity structure, and readout bases.

Conventions (fixed once, asserted in tests):
  * sigma_z |up> = +|up>, sigma_z |down> = -|down>; |right/left> = (|up> +/- |down>)/sqrt(2).
  * Tensor ordering is qubit (x) oscillator; for several modes, qubit (x) mode1 (x) mode2 ...
  * H = -(delta/2) sx - (epsilon/2) sz + omega n + g sz (a + a^dag), hbar = 1.
  * The parity operator is sx (x) (-1)^n, signed so that its +1 sector is the
    one containing |right,0>, |left,1>, |right,2>, ...
  * Displaced-basis states pair |up> with D(-g/omega)|n> and |down> with
    D(+g/omega)|n>, so the qubit-conditioned excitation counters
    (a^dag +/- g/omega)(a +/- g/omega) read n on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientTruncationError,
    InvalidParameterError,
    ResourceLimitError,
)
from .operators import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Z,
    StateVector,
    annihilation,
    displacement,
    kron,
    unitary_displacement,
)

# Truncation-tail weight allowed in displaced-state constructors.
STATE_TAIL_TOL = 1e-8
# Default cap on the full Hilbert-space dimension for multimode problems.
DEFAULT_DIM_CAP = 4096

QUBIT_LABELS = {
    "bare": ("up", "down"),
    "normal": ("right", "left"),
    "superradiant": ("+", "-"),
    "displaced": ("up", "down"),
}


def default_n_fock(g: float, omega: float) -> int:
    """Truncation keeping displaced-state tails below ~1e-8."""
    ratio = g / omega
    return max(32, int(math.ceil(10.0 * (ratio * ratio + 1.0))))


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not np.isfinite(value):
            raise InvalidParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class QrmParams:
    """Single-mode qubit-oscillator parameters (angular-frequency units)."""

    delta: float
    epsilon: float
    omega: float
    g: float
    n_fock: int

    def __post_init__(self) -> None:
        _require_finite(delta=self.delta, epsilon=self.epsilon, omega=self.omega, g=self.g)
        if self.omega <= 0:
            raise InvalidParameterError(f"omega must be positive, got {self.omega}")
        if self.n_fock < 2:
            raise InvalidParameterError(f"n_fock must be >= 2, got {self.n_fock}")

    @property
    def g_over_omega(self) -> float:
        return self.g / self.omega

    @property
    def delta_over_omega(self) -> float:
        return self.delta / self.omega

    @property
    def dim(self) -> int:
        return 2 * self.n_fock

    @staticmethod
    def with_default_truncation(
        delta: float, epsilon: float, omega: float, g: float
    ) -> "QrmParams":
        return QrmParams(delta, epsilon, omega, g, default_n_fock(g, omega))


@dataclass(frozen=True)
class Mode:
    """One oscillator mode of a multimode model."""

    omega: float
    g: float
    n_fock: int

    def __post_init__(self) -> None:
        _require_finite(omega=self.omega, g=self.g)
        if self.omega <= 0:
            raise InvalidParameterError(f"mode omega must be positive, got {self.omega}")
        if self.n_fock < 2:
            raise InvalidParameterError(f"mode n_fock must be >= 2, got {self.n_fock}")


@dataclass(frozen=True)
class MultiModeParams:
    """Qubit coupled to several oscillator modes."""

    delta: float
    modes: tuple[Mode, ...]
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self) -> None:
        _require_finite(delta=self.delta)
        if len(self.modes) < 1:
            raise InvalidParameterError("at least one mode is required")
        object.__setattr__(self, "modes", tuple(self.modes))

    @property
    def dim(self) -> int:
        d = 2
        for m in self.modes:
            d *= m.n_fock
        return d

    @property
    def osc_dim(self) -> int:
        return self.dim // 2

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(m.g / m.omega for m in self.modes)


@dataclass(frozen=True)
class BasisLabel:
    """A (scheme, qubit, photons) label for one basis state."""

    scheme: str
    qubit: str
    photons: int | tuple[int, ...]

    def __post_init__(self) -> None:
        if self.scheme not in QUBIT_LABELS:
            raise InvalidParameterError(f"unknown labelling scheme {self.scheme!r}")
        if self.qubit not in QUBIT_LABELS[self.scheme]:
            raise InvalidParameterError(
                f"qubit label {self.qubit!r} not valid for scheme {self.scheme!r}"
            )
        ns = self.photons if isinstance(self.photons, tuple) else (self.photons,)
        if any((not isinstance(n, int)) or n < 0 for n in ns):
            raise InvalidParameterError(f"photon numbers must be >= 0, got {self.photons}")

    def __str__(self) -> str:
        n = ";".join(str(k) for k in self.photons) if isinstance(self.photons, tuple) else self.photons
        return f"({self.qubit},{n})"


@dataclass(frozen=True)
class ParitySector:
    sign: int

    def __post_init__(self) -> None:
        if self.sign not in (+1, -1):
            raise InvalidParameterError(f"parity sign must be +1 or -1, got {self.sign}")


EVEN_SECTOR = ParitySector(+1)
ODD_SECTOR = ParitySector(-1)


@dataclass(frozen=True)
class ProbabilityRecord:
    """One (basis label, probability) readout entry."""

    label: BasisLabel
    probability: float
    degenerate_tracking: bool = False

    def __post_init__(self) -> None:
        if not (-1e-9 <= self.probability <= 1.0 + 1e-9):
            raise InvalidParameterError(
                f"probability {self.probability!r} outside [0, 1]"
            )


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def build_qrm(p: QrmParams) -> np.ndarray:
    """Full Rabi Hamiltonian at the parameters in p."""
    a = annihilation(p.n_fock)
    ad = a.conj().T
    eye = np.eye(p.n_fock, dtype=complex)
    h = (-0.5 * p.delta) * kron(SIGMA_X, eye)
    h += (-0.5 * p.epsilon) * kron(SIGMA_Z, eye)
    h += p.omega * kron(IDENTITY_2, ad @ a)
    h += p.g * kron(SIGMA_Z, a + ad)
    return h


def delta_ramp(p: QrmParams | MultiModeParams) -> np.ndarray:
    """dH/d(delta): the qubit-gap ramp generator."""
    osc = (p.n_fock if isinstance(p, QrmParams) else p.osc_dim)
    return -0.5 * kron(SIGMA_X, np.eye(osc, dtype=complex))


def epsilon_ramp(p: QrmParams | MultiModeParams) -> np.ndarray:
    """dH/d(epsilon): the qubit-bias ramp generator."""
    osc = (p.n_fock if isinstance(p, QrmParams) else p.osc_dim)
    return -0.5 * kron(SIGMA_Z, np.eye(osc, dtype=complex))


def _mode_operator(modes: tuple[Mode, ...], index: int, op: np.ndarray) -> np.ndarray:
    out = None
    for j, m in enumerate(modes):
        factor = op if j == index else np.eye(m.n_fock, dtype=complex)
        out = factor if out is None else np.kron(out, factor)
    return out


def build_multimode(p: MultiModeParams, epsilon: float = 0.0) -> np.ndarray:
    """Multimode Hamiltonian with an instantaneous bias epsilon."""
    _require_finite(epsilon=epsilon)
    if p.dim > p.dim_cap:
        raise ResourceLimitError(
            f"multimode dimension {p.dim} exceeds the cap {p.dim_cap}"
        )
    osc_eye = np.eye(p.osc_dim, dtype=complex)
    h = (-0.5 * p.delta) * kron(SIGMA_X, osc_eye)
    h += (-0.5 * epsilon) * kron(SIGMA_Z, osc_eye)
    for j, m in enumerate(p.modes):
        a = annihilation(m.n_fock)
        h += m.omega * kron(IDENTITY_2, _mode_operator(p.modes, j, a.conj().T @ a))
        h += m.g * kron(SIGMA_Z, _mode_operator(p.modes, j, a + a.conj().T))
    return h


def critical_delta(g: float, omega: float) -> float:
    """Gap value where the semiclassical normal/superradiant change occurs."""
    if omega <= 0:
        raise InvalidParameterError(f"omega must be positive, got {omega}")
    return 4.0 * g * g / omega


# ---------------------------------------------------------------------------
# Parity
# ---------------------------------------------------------------------------

def parity_operator(p: QrmParams) -> np.ndarray:
    """Conserved Z2 parity of the epsilon = 0 model: sx (x) (-1)^n.

    Signed so that |right,0> (the weak-coupling ground state) sits in the
    +1 eigenspace.
    """
    signs = np.diag(np.where(np.arange(p.n_fock) % 2 == 0, 1.0, -1.0)).astype(complex)
    return kron(SIGMA_X, signs)


def parity_sector_labels(sector: ParitySector, n_fock: int, scheme: str = "normal") -> list[BasisLabel]:
    """The alternating state list spanning one parity sector.

    For sign +1 and the normal scheme: (right,0), (left,1), (right,2), ...
    """
    if scheme not in ("normal", "superradiant"):
        raise InvalidParameterError("parity sectors alternate in the normal or superradiant schemes")
    first, second = QUBIT_LABELS[scheme]
    labels = []
    for n in range(n_fock):
        even = (n % 2 == 0)
        if sector.sign == -1:
            even = not even
        labels.append(BasisLabel(scheme, first if even else second, n))
    return labels


def parity_sector_basis(p: QrmParams, sector: ParitySector) -> tuple[np.ndarray, list[BasisLabel]]:
    """Orthonormal columns spanning one parity sector, with their labels."""
    labels = parity_sector_labels(sector, p.n_fock, "normal")
    b = np.zeros((p.dim, p.n_fock), dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    for col, lab in enumerate(labels):
        n = lab.photons
        b[n, col] = s
        b[p.n_fock + n, col] = s if lab.qubit == "right" else -s
    return b, labels


def parity_projector(p: QrmParams, sector: ParitySector) -> tuple[np.ndarray, list[BasisLabel]]:
    """(I + sign P)/2 together with the sector's basis-state list."""
    proj = 0.5 * (np.eye(p.dim, dtype=complex) + sector.sign * parity_operator(p))
    return proj, parity_sector_labels(sector, p.n_fock, "normal")


# ---------------------------------------------------------------------------
# Readout bases
# ---------------------------------------------------------------------------

def _qubit_vector(scheme: str, qubit: str) -> np.ndarray:
    up = np.array([1.0, 0.0], dtype=complex)
    down = np.array([0.0, 1.0], dtype=complex)
    if scheme in ("bare", "displaced"):
        return up if qubit == "up" else down
    s = 1.0 / np.sqrt(2.0)
    if qubit in ("right", "+"):
        return s * (up + down)
    return s * (up - down)


def _fock_vector(n: int, n_fock: int) -> np.ndarray:
    if n >= n_fock:
        raise InvalidParameterError(f"photon number {n} outside truncation {n_fock}")
    v = np.zeros(n_fock, dtype=complex)
    v[n] = 1.0
    return v


def normal_state(p: QrmParams, qubit: str, n: int) -> StateVector:
    """|right/left> (x) |n>, the weak-coupling product state."""
    label = BasisLabel("normal", qubit, n)
    amp = np.kron(_qubit_vector("normal", label.qubit), _fock_vector(n, p.n_fock))
    return StateVector(amp, "bare")


def _displaced_column(alpha: float, n: int, n_fock: int) -> np.ndarray:
    """Column of the unitary displacement, tail-checked against the exact one."""
    tail = 1.0 - float(np.sum(np.abs(displacement(alpha, n_fock)[:, n]) ** 2))
    if tail > STATE_TAIL_TOL:
        raise InsufficientTruncationError(
            f"displaced Fock state |{n}> at alpha={alpha:+.3f} leaves weight "
            f"{tail:.2e} outside {n_fock} levels (limit {STATE_TAIL_TOL:.0e})"
        )
    return unitary_displacement(alpha, n_fock)[:, n]


def displaced_state(p: QrmParams, qubit: str, n: int) -> StateVector:
    """Qubit-conditioned displaced Fock state, in the bare product basis."""
    label = BasisLabel("displaced", qubit, n)
    alpha = p.g_over_omega
    sign = -1.0 if label.qubit == "up" else +1.0
    col = _displaced_column(sign * alpha, n, p.n_fock)
    amp = np.kron(_qubit_vector("bare", label.qubit), col)
    return StateVector(amp, "bare")


def superradiant_state(p: QrmParams, qubit: str, n: int) -> StateVector:
    """Strong-coupling doublet state (|up,D(-a)n> +/- |down,D(+a)n>)/sqrt(2)."""
    label = BasisLabel("superradiant", qubit, n)
    sign = +1.0 if label.qubit == "+" else -1.0
    up = displaced_state(p, "up", n).amplitudes
    down = displaced_state(p, "down", n).amplitudes
    return StateVector((up + sign * down) / np.sqrt(2.0), "bare")


def scheme_state(p: QrmParams, label: BasisLabel) -> StateVector:
    if label.scheme == "bare":
        amp = np.kron(_qubit_vector("bare", label.qubit), _fock_vector(label.photons, p.n_fock))
        return StateVector(amp, "bare")
    if label.scheme == "normal":
        return normal_state(p, label.qubit, label.photons)
    if label.scheme == "superradiant":
        return superradiant_state(p, label.qubit, label.photons)
    return displaced_state(p, label.qubit, label.photons)


def scheme_basis(p: QrmParams, scheme: str) -> tuple[np.ndarray, list[BasisLabel]]:
    """Complete column basis of one labelling scheme, qubit-major ordering.

    Displacement-bearing schemes use the exactly unitary truncated rotation, so
    the columns are orthonormal and projections onto them sum to one; the
    columns agree with the state constructors up to the truncation tail.
    """
    labels = [
        BasisLabel(scheme, q, n) for q in QUBIT_LABELS[scheme] for n in range(p.n_fock)
    ]
    if scheme in ("bare", "normal"):
        cols = np.column_stack([scheme_state(p, lab).amplitudes for lab in labels])
        return cols, labels
    alpha = p.g_over_omega
    eye2 = np.eye(2, dtype=complex)
    up_block = np.kron(eye2[:, [0]], unitary_displacement(-alpha, p.n_fock))
    down_block = np.kron(eye2[:, [1]], unitary_displacement(+alpha, p.n_fock))
    if scheme == "displaced":
        cols = np.hstack([up_block, down_block])
    else:
        s = 1.0 / np.sqrt(2.0)
        cols = np.hstack([s * (up_block + down_block), s * (up_block - down_block)])
    return cols, labels


def multimode_displaced_basis(
    p: MultiModeParams, caps: tuple[int, ...] | None = None
) -> tuple[np.ndarray, list[BasisLabel]]:
    """Displaced product basis |gamma> (x)_j D(-/+ g_j/w_j)|n_j>.

    Without caps the complete (exactly orthonormal) rotated basis is returned
    for readout bookkeeping; with caps, the requested columns are additionally
    tail-checked against the untruncated displacement.
    """
    check_tails = caps is not None
    if caps is None:
        caps = tuple(m.n_fock - 1 for m in p.modes)
    if len(caps) != len(p.modes):
        raise InvalidParameterError("one occupation cap per mode is required")
    per_mode: dict[str, list[np.ndarray]] = {"up": [], "down": []}
    for cap, m in zip(caps, p.modes):
        if cap >= m.n_fock:
            raise InvalidParameterError("occupation cap exceeds the mode truncation")
        alpha = m.g / m.omega
        for key, sign in (("up", -1.0), ("down", +1.0)):
            if check_tails:
                exact = displacement(sign * alpha, m.n_fock)
                worst_tail = float(
                    1.0 - np.min(np.linalg.norm(exact[:, : cap + 1], axis=0)) ** 2
                )
                if worst_tail > STATE_TAIL_TOL:
                    raise InsufficientTruncationError(
                        f"mode with omega={m.omega}: displaced columns leave weight "
                        f"{worst_tail:.2e} outside {m.n_fock} levels"
                    )
            per_mode[key].append(unitary_displacement(sign * alpha, m.n_fock))
    occs = [()]
    for cap in caps:
        occs = [o + (n,) for o in occs for n in range(cap + 1)]
    labels = []
    cols = []
    for qi, q in enumerate(("up", "down")):
        qvec = np.zeros(2, dtype=complex)
        qvec[qi] = 1.0
        for occ in occs:
            vec = None
            for j, n in enumerate(occ):
                c = per_mode[q][j][:, n]
                vec = c if vec is None else np.kron(vec, c)
            cols.append(np.kron(qvec, vec))
            labels.append(BasisLabel("displaced", q, occ))
    return np.column_stack(cols), labels
