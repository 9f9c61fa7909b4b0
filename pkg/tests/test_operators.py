import numpy as np
import pytest

from rabisweep.errors import (
    InvalidParameterError,
    InvalidTruncationError,
    SymmetryViolationError,
)
from rabisweep.operators import (
    SIGMA_X,
    SIGMA_Z,
    StateVector,
    StepPropagator,
    annihilation,
    creation,
    displacement,
    displacement_truncation_defect,
    eig_hermitian,
    hermiticity_defect,
    kron,
    number_operator,
    propagate_step,
)

RNG = np.random.default_rng(20240811)


def random_hermitian(dim, rng=RNG):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (m + m.conj().T)


class TestAnnihilation:
    def test_two_level(self):
        assert np.array_equal(annihilation(2), np.array([[0, 1], [0, 0]], dtype=complex))

    def test_superdiagonal(self):
        a = annihilation(4)
        assert np.allclose(np.diag(a, k=1), np.sqrt([1.0, 2.0, 3.0]))
        assert np.count_nonzero(a - np.diag(np.diag(a, 1), 1)) == 0

    def test_commutator_edge_defect(self):
        # [a, a^dag] = I except for the corner entry, the truncation signature.
        for n in (4, 9, 17):
            a = annihilation(n)
            comm = a @ a.conj().T - a.conj().T @ a
            expected = np.eye(n, dtype=complex)
            expected[n - 1, n - 1] = -(n - 1)
            assert np.allclose(comm, expected, atol=1e-12)

    def test_rejects_small_truncation(self):
        with pytest.raises(InvalidTruncationError):
            annihilation(1)


class TestKron:
    def test_identity(self):
        assert np.allclose(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_sigma_z_block(self):
        got = kron(SIGMA_Z, np.eye(2))
        assert np.allclose(np.diag(got), [1, 1, -1, -1])

    def test_mixed_product_rule(self):
        # (A x B)(C x D) = (AC) x (BD), both sides assembled independently.
        for _ in range(5):
            a, c = RNG.normal(size=(2, 2, 2)) + 1j * RNG.normal(size=(2, 2, 2))
            b, d = RNG.normal(size=(2, 3, 3)) + 1j * RNG.normal(size=(2, 3, 3))
            lhs = kron(a, b) @ kron(c, d)
            rhs = kron(a @ c, b @ d)
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_rejects_nonsquare(self):
        with pytest.raises(InvalidParameterError):
            kron(np.ones((2, 3)), np.eye(2))


class TestDisplacement:
    def test_zero_is_identity(self):
        assert np.array_equal(displacement(0.0, 7), np.eye(7))

    def test_vacuum_column_is_coherent_state(self):
        # |<n|D(1)|0>|^2 = e^-1 / n!
        d = displacement(1.0, 40)
        got = np.abs(d[:6, 0]) ** 2
        want = np.exp(-1.0) / np.array([1, 1, 2, 6, 24, 120], dtype=float)
        assert np.allclose(got, want, atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
    def test_inverse_product_on_retained_levels(self, alpha):
        # D(a) D(-a) acts as the identity on well-truncated levels (n <= 3)
        # once N >= 10 (|a|^2 + 1); the bound comes from a truncation scan.
        n_fock = int(10 * (alpha**2 + 1))
        prod = displacement(alpha, n_fock) @ displacement(-alpha, n_fock)
        window = prod[:4, :4] - np.eye(n_fock)[:4, :4]
        assert np.max(np.abs(window)) <= 1e-8

    def test_unitarity_defect_shrinks_with_truncation(self):
        for alpha in (0.5, 1.0, 2.0, 3.0):
            defects = [
                displacement_truncation_defect(alpha, int(np.ceil(s * (alpha**2 + 1))))
                for s in (6, 10, 14, 18)
            ]
            assert all(b < a for a, b in zip(defects, defects[1:])), (alpha, defects)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidParameterError):
            displacement(np.inf, 8)


class TestEigHermitian:
    def test_diagonal(self):
        vals, _ = eig_hermitian(np.diag([3.0, -1.0, 2.0]).astype(complex))
        assert np.allclose(vals, [-1.0, 2.0, 3.0])

    def test_sigma_x(self):
        vals, _ = eig_hermitian(SIGMA_X)
        assert np.allclose(vals, [-1.0, 1.0])

    def test_decoupled_qubit_oscillator_spectrum(self):
        # H = -(delta/2) sx + omega n at g = 0: eigenvalues m*omega -/+ delta/2.
        delta, omega, n_fock = 3.7, 1.0, 12
        h = kron(-0.5 * delta * SIGMA_X, np.eye(n_fock)) + kron(
            np.eye(2), omega * number_operator(n_fock)
        )
        vals, _ = eig_hermitian(h)
        expected = np.sort(
            [m * omega + s * delta / 2 for m in range(n_fock) for s in (-1, 1)]
        )
        assert np.allclose(vals, expected, atol=1e-10)

    def test_residuals_and_orthonormality(self):
        h = random_hermitian(40)
        vals, vecs = eig_hermitian(h)
        scale = np.linalg.norm(h)
        for k in range(40):
            assert np.linalg.norm(h @ vecs[:, k] - vals[k] * vecs[:, k]) <= 1e-10 * scale
        assert np.max(np.abs(vecs.conj().T @ vecs - np.eye(40))) <= 1e-10

    def test_reconstruction(self):
        h = random_hermitian(60)
        vals, vecs = eig_hermitian(h)
        back = (vecs * vals) @ vecs.conj().T
        assert np.linalg.norm(back - h) <= 1e-9 * np.linalg.norm(h)

    def test_rejects_non_hermitian(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        assert hermiticity_defect(m) > 0.1
        with pytest.raises(SymmetryViolationError):
            eig_hermitian(m)


def _rk4_reference(h, dt, psi, n_sub=400):
    """Independent fixed-step integrator of i d/dt psi = H psi."""
    y = psi.astype(complex).copy()
    step = dt / n_sub

    def f(v):
        return -1j * (h @ v)

    for _ in range(n_sub):
        k1 = f(y)
        k2 = f(y + 0.5 * step * k1)
        k3 = f(y + 0.5 * step * k2)
        k4 = f(y + step * k3)
        y = y + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


class TestPropagateStep:
    def test_zero_hamiltonian(self):
        psi = StateVector(np.array([0.6, 0.8j]))
        out = propagate_step(np.zeros((2, 2), dtype=complex), 0.37, psi)
        assert np.allclose(out.amplitudes, psi.amplitudes)

    def test_diagonal_phases(self):
        energies = np.array([0.5, -1.0, 2.0])
        h = np.diag(energies).astype(complex)
        amp = np.array([0.5, 0.5, 1 / np.sqrt(2)], dtype=complex)
        out = propagate_step(h, 0.9, StateVector(amp))
        assert np.allclose(out.amplitudes, amp * np.exp(-1j * energies * 0.9))
        assert np.allclose(np.abs(out.amplitudes) ** 2, np.abs(amp) ** 2)

    def test_rabi_flop(self):
        delta = 1.3
        h = -0.5 * delta * SIGMA_X
        up = StateVector(np.array([1.0, 0.0], dtype=complex))
        out = propagate_step(h, np.pi / delta, up)
        assert abs(out.amplitudes[0]) < 1e-12
        assert abs(abs(out.amplitudes[1]) - 1.0) < 1e-12

    def test_matches_independent_integrator(self):
        h = random_hermitian(8)
        psi = RNG.normal(size=8) + 1j * RNG.normal(size=8)
        psi /= np.linalg.norm(psi)
        got = propagate_step(h, 0.21, StateVector(psi)).amplitudes
        ref = _rk4_reference(h, 0.21, psi)
        assert np.linalg.norm(got - ref) < 1e-9

    def test_unitarity_per_step(self):
        for dim in (3, 8, 21):
            h = random_hermitian(dim)
            psi = RNG.normal(size=dim) + 1j * RNG.normal(size=dim)
            psi /= np.linalg.norm(psi)
            out = propagate_step(h, 1.7, StateVector(psi))
            assert abs(np.linalg.norm(out.amplitudes) - 1.0) <= 1e-12

    def test_energy_conservation_long_run(self):
        h = random_hermitian(4)
        prop = StepPropagator(h, 0.05)
        psi = RNG.normal(size=4) + 1j * RNG.normal(size=4)
        psi /= np.linalg.norm(psi)
        e0 = np.vdot(psi, h @ psi).real
        for _ in range(100_000):
            psi = prop.apply(psi)
        e1 = np.vdot(psi, h @ psi).real
        assert abs(e1 - e0) <= 1e-9 * np.linalg.norm(h)
        # accumulated drift stays far below the per-trajectory budget
        assert abs(np.linalg.norm(psi) - 1.0) <= 1e-10


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidParameterError):
            StateVector(np.array([1.0, 1.0]))

    def test_rejects_unknown_tag(self):
        with pytest.raises(InvalidParameterError):
            StateVector(np.array([1.0, 0.0]), "mystery")

    def test_creation_is_adjoint(self):
        assert np.allclose(creation(6), annihilation(6).conj().T)
