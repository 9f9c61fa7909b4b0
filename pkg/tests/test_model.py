import numpy as np
import pytest

from rabisweep.errors import (
    InsufficientTruncationError,
    InvalidParameterError,
    ResourceLimitError,
)
from rabisweep.model import (
    EVEN_SECTOR,
    ODD_SECTOR,
    BasisLabel,
    Mode,
    MultiModeParams,
    QrmParams,
    build_multimode,
    build_qrm,
    critical_delta,
    default_n_fock,
    displaced_state,
    normal_state,
    parity_operator,
    parity_projector,
    parity_sector_basis,
    scheme_basis,
    superradiant_state,
)
from rabisweep.operators import eig_hermitian, hermiticity_defect

RNG = np.random.default_rng(7)


def sector_spectrum(p, sector):
    basis, _ = parity_sector_basis(p, sector)
    h = build_qrm(p)
    return np.linalg.eigvalsh(basis.conj().T @ h @ basis)


class TestParams:
    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            QrmParams(1.0, 0.0, -1.0, 0.5, 8)
        with pytest.raises(InvalidParameterError):
            QrmParams(1.0, 0.0, 1.0, 0.5, 1)
        with pytest.raises(InvalidParameterError):
            QrmParams(np.nan, 0.0, 1.0, 0.5, 8)

    def test_ratios(self):
        p = QrmParams(3.0, 0.0, 2.0, 1.0, 8)
        assert p.g_over_omega == 0.5
        assert p.delta_over_omega == 1.5

    def test_default_truncation(self):
        assert default_n_fock(0.1, 1.0) == 32
        assert default_n_fock(2.0, 1.0) == 50
        p = QrmParams.with_default_truncation(1.0, 0.0, 1.0, 5.0)
        assert p.n_fock == 260


class TestBuildQrm:
    def test_decoupled_spectrum(self):
        p = QrmParams(2.4, 0.0, 1.0, 0.0, 16)
        vals, _ = eig_hermitian(build_qrm(p))
        expected = np.sort([m + s * 1.2 for m in range(16) for s in (-1, 1)])
        assert np.allclose(vals, expected, atol=1e-10)

    @pytest.mark.parametrize("gow", [0.8, 1.5, 2.0])
    def test_zero_gap_ground_energy(self, gow):
        nf = int(10 * (gow**2 + 1))
        p = QrmParams(0.0, 0.0, 1.0, gow, nf)
        vals = np.linalg.eigvalsh(build_qrm(p))
        assert abs(vals[0] - (-(gow**2))) < 1e-8

    def test_zero_gap_ground_matches_doublet_state(self):
        p = QrmParams(0.0, 0.0, 1.0, 1.5, 40)
        # Within the even-parity block the ground state is unique.
        basis, _ = parity_sector_basis(p, EVEN_SECTOR)
        hb = basis.conj().T @ build_qrm(p) @ basis
        _, vecs = eig_hermitian(hb)
        ground = basis @ vecs[:, 0]
        target = superradiant_state(p, "+", 0).amplitudes
        assert abs(np.vdot(ground, target)) ** 2 >= 1.0 - 1e-6

    def test_hermiticity(self):
        for _ in range(4):
            p = QrmParams(
                float(RNG.uniform(0, 5)),
                float(RNG.uniform(-2, 2)),
                1.0,
                float(RNG.uniform(0, 2)),
                24,
            )
            assert hermiticity_defect(build_qrm(p)) <= 1e-12


class TestParity:
    def test_involution_and_hermitian(self):
        p = QrmParams(1.0, 0.0, 1.0, 0.7, 12)
        par = parity_operator(p)
        assert np.max(np.abs(par @ par - np.eye(p.dim))) <= 1e-12
        assert hermiticity_defect(par) <= 1e-12

    def test_commutes_with_unbiased_hamiltonian(self):
        for _ in range(5):
            p = QrmParams(
                float(RNG.uniform(0.1, 4)), 0.0, float(RNG.uniform(0.5, 2)),
                float(RNG.uniform(0, 2)), 16,
            )
            h = build_qrm(p)
            par = parity_operator(p)
            comm = h @ par - par @ h
            assert np.linalg.norm(comm) <= 1e-10 * np.linalg.norm(h)

    def test_bias_breaks_parity(self):
        p = QrmParams(1.0, 0.8, 1.0, 0.5, 12)
        h = build_qrm(p)
        par = parity_operator(p)
        assert np.linalg.norm(h @ par - par @ h) > 0.1 * abs(p.epsilon)

    def test_projector_idempotent_and_rank(self):
        p = QrmParams(1.0, 0.0, 1.0, 0.5, 10)
        for sector in (EVEN_SECTOR, ODD_SECTOR):
            proj, labels = parity_projector(p, sector)
            assert np.max(np.abs(proj @ proj - proj)) <= 1e-12
            assert abs(np.trace(proj).real - p.n_fock) <= 1e-10
            assert len(labels) == p.n_fock

    def test_even_sector_enumeration(self):
        p = QrmParams(1.0, 0.0, 1.0, 0.5, 6)
        _, labels = parity_projector(p, EVEN_SECTOR)
        got = [(lab.qubit, lab.photons) for lab in labels[:4]]
        assert got == [("right", 0), ("left", 1), ("right", 2), ("left", 3)]

    def test_sector_spectra_interleave_to_full_spectrum(self):
        p = QrmParams(1.7, 0.0, 1.0, 0.9, 14)
        full = np.linalg.eigvalsh(build_qrm(p))
        merged = np.sort(
            np.concatenate([sector_spectrum(p, EVEN_SECTOR), sector_spectrum(p, ODD_SECTOR)])
        )
        assert np.allclose(full, merged, atol=1e-10)

    def test_block_structure(self):
        p = QrmParams(2.0, 0.0, 1.0, 1.1, 12)
        h = build_qrm(p)
        plus, _ = parity_sector_basis(p, EVEN_SECTOR)
        minus, _ = parity_sector_basis(p, ODD_SECTOR)
        off = minus.conj().T @ h @ plus
        assert np.max(np.abs(off)) <= 1e-12 * np.linalg.norm(h)


class TestStates:
    def test_displaced_reduces_to_bare_at_zero_coupling(self):
        p = QrmParams(1.0, 0.0, 1.0, 0.0, 8)
        for n in (0, 2):
            got = displaced_state(p, "up", n).amplitudes
            bare = np.zeros(16, dtype=complex)
            bare[n] = 1.0
            assert np.allclose(got, bare)

    def test_doublet_states_orthonormal(self):
        p = QrmParams(0.0, 0.0, 1.0, 2.0, 64)
        states = [
            superradiant_state(p, q, n).amplitudes for q in ("+", "-") for n in range(4)
        ]
        gram = np.array([[np.vdot(a, b) for b in states] for a in states])
        assert np.max(np.abs(gram - np.eye(8))) <= 1e-10

    def test_doublet_is_zero_gap_eigenstate(self):
        gow = 1.4
        p = QrmParams(0.0, 0.0, 1.0, gow, 40)
        h = build_qrm(p)
        psi = superradiant_state(p, "+", 0).amplitudes
        assert np.linalg.norm(h @ psi - (-(gow**2)) * psi) <= 1e-9

    def test_scheme_gram_matrices(self):
        p = QrmParams(1.0, 0.0, 1.0, 2.0, 50)
        for scheme, tol in (("bare", 1e-10), ("normal", 1e-10),
                            ("superradiant", 1e-8), ("displaced", 1e-8)):
            cols, labels = scheme_basis(p, scheme)
            assert len(labels) == p.dim
            gram = cols.conj().T @ cols
            assert np.max(np.abs(gram - np.eye(p.dim))) <= tol, scheme

    def test_truncation_tail_guard(self):
        p = QrmParams(0.0, 0.0, 1.0, 3.0, 12)
        with pytest.raises(InsufficientTruncationError):
            displaced_state(p, "up", 0)

    def test_normal_state_layout(self):
        p = QrmParams(1.0, 0.0, 1.0, 0.5, 4)
        amp = normal_state(p, "left", 1).amplitudes
        s = 1 / np.sqrt(2)
        expected = np.zeros(8, dtype=complex)
        expected[1] = s      # |up, 1>
        expected[5] = -s     # |down, 1>
        assert np.allclose(amp, expected)


class TestMultimode:
    def test_single_mode_matches_qrm(self):
        p1 = QrmParams(1.3, 0.4, 1.0, 0.6, 10)
        mm = MultiModeParams(1.3, (Mode(1.0, 0.6, 10),))
        assert np.allclose(build_multimode(mm, epsilon=0.4), build_qrm(p1))

    def test_decoupled_two_mode_spectrum(self):
        delta = 1.9
        mm = MultiModeParams(delta, (Mode(1.0, 0.0, 4), Mode(2.3, 0.0, 3)))
        vals = np.linalg.eigvalsh(build_multimode(mm))
        expected = np.sort(
            [
                s * delta / 2 + n1 * 1.0 + n2 * 2.3
                for s in (-1, 1)
                for n1 in range(4)
                for n2 in range(3)
            ]
        )
        assert np.allclose(vals, expected, atol=1e-10)

    def test_zero_gap_ground_energy(self):
        mm = MultiModeParams(0.0, (Mode(1.0, 0.5, 16), Mode(2.0, 0.8, 16)))
        vals = np.linalg.eigvalsh(build_multimode(mm))
        expected = -(0.5**2 / 1.0 + 0.8**2 / 2.0)
        assert abs(vals[0] - expected) < 1e-8

    def test_dimension_cap(self):
        mm = MultiModeParams(1.0, (Mode(1.0, 0.1, 64), Mode(1.5, 0.1, 64)))
        with pytest.raises(ResourceLimitError):
            build_multimode(mm)


class TestCriticalDelta:
    def test_values(self):
        assert critical_delta(0.0, 1.0) == 0.0
        assert critical_delta(1.0, 1.0) == 4.0
        assert critical_delta(20.0, 1.0) == 1600.0

    def test_minimum_sector_gap_sits_near_it(self):
        # At strong coupling the smallest even-sector gap localizes within 20%
        # of the semiclassical value.
        gow = 5.0
        p = QrmParams(0.0, 0.0, 1.0, gow, 260)
        dc = critical_delta(gow, 1.0)
        deltas = np.linspace(0.5 * dc, 1.5 * dc, 41)
        basis, _ = parity_sector_basis(p, EVEN_SECTOR)
        gaps = []
        for d in deltas:
            h = basis.conj().T @ build_qrm(QrmParams(d, 0.0, 1.0, gow, 260)) @ basis
            vals = np.linalg.eigvalsh(h)
            gaps.append(vals[1] - vals[0])
        at_min = deltas[int(np.argmin(gaps))]
        assert abs(at_min - dc) <= 0.2 * dc


class TestBasisLabel:
    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            BasisLabel("normal", "up", 0)
        with pytest.raises(InvalidParameterError):
            BasisLabel("bare", "up", -1)
        assert str(BasisLabel("displaced", "up", (1, 0))) == "(up,1;0)"
