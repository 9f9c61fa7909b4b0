"""Dense complex linear-algebra kernel for truncated qubit-oscillator problems.

All operators are plain complex ndarrays; states carry a basis tag in a thin
wrapper. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    InvalidParameterError,
    InvalidTruncationError,
    SymmetryViolationError,
)

# Relative tolerance for accepting a matrix as Hermitian.
HERMITICITY_RTOL = 1e-12
# Norm tolerance enforced on StateVector construction.
STATE_NORM_ATOL = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

#: Basis tags a StateVector may carry.
BASIS_TAGS = ("bare", "parity-symmetric", "parity-antisymmetric", "displaced")


@dataclass(frozen=True)
class StateVector:
    """Unit-norm complex amplitude vector over a labelled basis."""

    amplitudes: np.ndarray
    basis_tag: str = "bare"

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amp)
        if amp.ndim != 1 or amp.size < 1:
            raise InvalidParameterError("amplitudes must be a nonempty 1-D array")
        if self.basis_tag not in BASIS_TAGS:
            raise InvalidParameterError(f"unknown basis tag {self.basis_tag!r}")
        nrm = np.linalg.norm(amp)
        if abs(nrm - 1.0) > STATE_NORM_ATOL:
            raise InvalidParameterError(
                f"state norm {nrm:.12f} deviates from 1 beyond {STATE_NORM_ATOL}"
            )

    @property
    def dim(self) -> int:
        return self.amplitudes.size


def hermiticity_defect(matrix: np.ndarray) -> float:
    """Max |M - M^dagger| entry, relative to the largest entry magnitude."""
    m = np.asarray(matrix)
    scale = np.max(np.abs(m))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)) / scale)


def require_hermitian(matrix: np.ndarray, rtol: float = HERMITICITY_RTOL) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > rtol:
        raise SymmetryViolationError(
            f"matrix is not Hermitian: relative defect {defect:.3e} > {rtol:.1e}"
        )
    return m


def annihilation(n_fock: int) -> np.ndarray:
    """Bosonic annihilation operator in an n_fock-dimensional truncation."""
    if n_fock < 2:
        raise InvalidTruncationError(f"Fock truncation must be >= 2, got {n_fock}")
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), k=1).astype(complex)


def creation(n_fock: int) -> np.ndarray:
    return annihilation(n_fock).conj().T


def number_operator(n_fock: int) -> np.ndarray:
    if n_fock < 2:
        raise InvalidTruncationError(f"Fock truncation must be >= 2, got {n_fock}")
    return np.diag(np.arange(n_fock, dtype=float)).astype(complex)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two square operators."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    for m in (a, b):
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidParameterError("kron expects square matrices")
    return np.kron(a, b)


def _check_displacement_args(alpha: complex, n_fock: int) -> complex:
    if n_fock < 2:
        raise InvalidTruncationError(f"Fock truncation must be >= 2, got {n_fock}")
    alpha = complex(alpha)
    if not (np.isfinite(alpha.real) and np.isfinite(alpha.imag)):
        raise InvalidParameterError("displacement amplitude must be finite")
    return alpha


@lru_cache(maxsize=64)
def _displacement_block(re: float, im: float, n_fock: int) -> np.ndarray:
    alpha = complex(re, im)
    # Work in a padded space so that every kept level is converged, then crop.
    pad_dim = int(np.ceil((np.sqrt(n_fock) + abs(alpha)) ** 2)) + 16
    a = annihilation(pad_dim)
    gen_h = -1j * (alpha * a.conj().T - np.conjugate(alpha) * a)  # Hermitian
    w, v = np.linalg.eigh(gen_h)
    full = (v * np.exp(1j * w)) @ v.conj().T
    block = np.ascontiguousarray(full[:n_fock, :n_fock])
    block.setflags(write=False)
    return block


@lru_cache(maxsize=64)
def _displacement_unitary(re: float, im: float, n_fock: int) -> np.ndarray:
    alpha = complex(re, im)
    a = annihilation(n_fock)
    gen_h = -1j * (alpha * a.conj().T - np.conjugate(alpha) * a)
    w, v = np.linalg.eigh(gen_h)
    out = (v * np.exp(1j * w)) @ v.conj().T
    out.setflags(write=False)
    return out


def displacement(alpha: complex, n_fock: int) -> np.ndarray:
    """Displacement operator exp(alpha a^dag - alpha* a) in an n_fock truncation.

    The returned block holds the untruncated operator's matrix elements, so its
    unitarity defect is the genuine truncation tail and shrinks as n_fock
    grows; low columns are exact displaced Fock states.
    """
    alpha = _check_displacement_args(alpha, n_fock)
    if alpha == 0:
        return np.eye(n_fock, dtype=complex)
    return _displacement_block(alpha.real, alpha.imag, n_fock)


def unitary_displacement(alpha: complex, n_fock: int) -> np.ndarray:
    """Exactly unitary displacement: the exponential of the truncated generator.

    Columns form an orthonormal set by construction; low columns agree with
    ``displacement`` up to the truncation tail. Used for complete readout
    bases, where probabilities must sum to one.
    """
    alpha = _check_displacement_args(alpha, n_fock)
    if alpha == 0:
        return np.eye(n_fock, dtype=complex)
    return _displacement_unitary(alpha.real, alpha.imag, n_fock)


def displaced_fock_tail(alpha: complex, n: int, n_fock: int) -> float:
    """Weight of D(alpha)|n> outside the first n_fock Fock levels."""
    col = displacement(alpha, max(n_fock, n + 2))[:n_fock, n]
    return max(0.0, 1.0 - float(np.sum(np.abs(col) ** 2)))


def displacement_truncation_defect(alpha: complex, n_fock: int) -> float:
    """Unitarity defect of the truncated displacement on its lower half.

    The worst column-norm deficit over levels n < n_fock/2; columns near the
    truncation edge always leak, so the meaningful defect is measured on the
    levels a caller would actually populate.
    """
    d = displacement(alpha, n_fock)
    deficits = 1.0 - np.linalg.norm(d[:, : max(1, n_fock // 2)], axis=0) ** 2
    return float(np.max(deficits))


def eig_hermitian(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, orthonormal eigenvector columns). Raises
    SymmetryViolationError if the input fails the Hermiticity check.
    """
    h = require_hermitian(matrix)
    return np.linalg.eigh(h)


class StepPropagator:
    """exp(-i H dt) for a fixed Hermitian H, reusable across many states.

    The assembled matrix is polished to the nearest unitary so that repeated
    application accumulates no systematic norm or energy drift.
    """

    def __init__(self, hamiltonian: np.ndarray, dt: float):
        if not np.isfinite(dt):
            raise InvalidParameterError("time step must be finite")
        w, v = eig_hermitian(hamiltonian)
        self.dt = float(dt)
        u = (v * np.exp(-1j * w * self.dt)) @ v.conj().T
        eye = np.eye(u.shape[0])
        for _ in range(2):
            u = 0.5 * u @ (3.0 * eye - u.conj().T @ u)
        self._u = u

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self._u @ np.asarray(psi, dtype=complex)


def propagate_step(hamiltonian: np.ndarray, dt: float, psi: StateVector) -> StateVector:
    """One exact-exponential step exp(-i H dt) |psi>."""
    out = StepPropagator(hamiltonian, dt).apply(psi.amplitudes)
    return StateVector(out, psi.basis_tag)
