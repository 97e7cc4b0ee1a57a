import numpy as np
import pytest

from qdsps.algebra import (
    HilbertSpace,
    check_density_matrix,
    dagger,
    destroy,
    eig_hermitian,
    expectation,
    kron,
    lindblad,
    number,
)

rng = np.random.default_rng(42)


def random_hermitian(d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (x + x.conj().T)


def random_density(d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = x @ x.conj().T
    return r / np.trace(r)


SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SP = np.array([[0, 0], [1, 0]], dtype=complex)  # |x><g| with basis (g, x)


class TestHilbertSpace:
    def test_total_dim(self):
        assert HilbertSpace((2, 3)).total_dim == 6
        assert HilbertSpace((4, 3)).total_dim == 12

    def test_invalid_dims(self):
        with pytest.raises(ValueError):
            HilbertSpace((0, 3))
        with pytest.raises(ValueError):
            HilbertSpace(())

    def test_embed_ordering(self):
        # QD factor is the major index: sigma_x (x) I maps |g,0> to |x,0>.
        space = HilbertSpace((2, 2))
        op = space.embed(SX, 0)
        ket = space.basis_state(0, 0)
        out = op @ ket
        assert np.allclose(out, space.basis_state(1, 0))

    def test_basis_state_range(self):
        space = HilbertSpace((2, 3))
        with pytest.raises(ValueError):
            space.basis_state(2, 0)


class TestKron:
    def test_identity(self):
        assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_number_product_eigenvalue(self):
        # sigma+ sigma- (x) a^dag a applied to |x, 1> has eigenvalue 1.
        space = HilbertSpace((2, 2))
        op = kron(SP @ SP.conj().T, number(2))
        ket = space.basis_state(1, 1)
        assert np.allclose(op @ ket, ket)

    def test_associative_on_integers(self):
        a = rng.integers(-3, 4, size=(2, 2)).astype(complex)
        b = rng.integers(-3, 4, size=(3, 3)).astype(complex)
        c = rng.integers(-3, 4, size=(2, 2)).astype(complex)
        assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


class TestEig:
    def test_sigma_z(self):
        eig = eig_hermitian(SZ)
        assert np.allclose(eig.eigenvalues, [-1.0, 1.0])

    def test_driven_two_level_splitting(self):
        omega, delta = 0.7, 0.4
        h = 0.5 * omega * SX + delta * np.diag([0.0, 1.0])
        eig = eig_hermitian(h)
        rabi = np.hypot(omega, delta)
        expected = np.array([(delta - rabi) / 2, (delta + rabi) / 2])
        assert np.allclose(eig.eigenvalues, expected)
        assert np.isclose(eig.eigenvalues[1] - eig.eigenvalues[0], rabi)

    def test_zero_matrix(self):
        eig = eig_hermitian(np.zeros((3, 3), dtype=complex))
        assert np.allclose(eig.eigenvalues, 0.0)
        assert np.allclose(eig.eigenvectors @ eig.eigenvectors.conj().T, np.eye(3))

    @pytest.mark.parametrize("dim", [2, 5, 12, 23, 40])
    def test_reconstruction_and_unitarity(self, dim):
        h = random_hermitian(dim)
        eig = eig_hermitian(h)
        scale = np.max(np.abs(h))
        assert np.max(np.abs(eig.reconstruct() - h)) < 1e-10 * scale
        vhv = eig.eigenvectors.conj().T @ eig.eigenvectors
        assert np.max(np.abs(vhv - np.eye(dim))) < 1e-10
        assert np.all(np.diff(eig.eigenvalues) >= -1e-12)

    def test_phase_convention_deterministic(self):
        h = random_hermitian(6)
        v1 = eig_hermitian(h).eigenvectors
        v2 = eig_hermitian(h.copy()).eigenvectors
        assert np.array_equal(v1, v2)
        lead = np.abs(v1).argmax(axis=0)
        lead_vals = v1[lead, np.arange(6)]
        assert np.all(lead_vals.real > 0)
        assert np.max(np.abs(lead_vals.imag)) < 1e-12

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="not Hermitian"):
            eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


class TestLindblad:
    def test_cavity_decay_by_hand(self):
        # A = sqrt(kappa) a on a two-dimensional Fock space, rho = |1><1|.
        kappa = 0.3
        a = np.sqrt(kappa) * destroy(2)
        rho = np.diag([0.0, 1.0]).astype(complex)
        expected = 2 * kappa * np.diag([1.0, -1.0])
        assert np.allclose(lindblad(a, rho), expected)

    def test_zero_state(self):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        assert np.allclose(lindblad(a, np.zeros((4, 4))), 0.0)

    @pytest.mark.parametrize("dim", [2, 6, 17])
    def test_traceless(self, dim):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = random_density(dim)
        out = lindblad(a, rho)
        bound = 1e-12 * np.linalg.norm(a) ** 2 * np.linalg.norm(rho)
        assert abs(np.trace(out)) < max(bound, 1e-14)


class TestExpectation:
    def test_identity(self):
        rho = random_density(5)
        assert np.isclose(expectation(np.eye(5), rho), 1.0)

    def test_photon_number(self):
        rho = np.diag([0.0, 1.0, 0.0]).astype(complex)
        assert np.isclose(expectation(number(3), rho), 1.0)

    def test_mixed_population(self):
        rho = 0.5 * np.eye(2, dtype=complex)
        n_op = SP @ SP.conj().T
        assert np.isclose(expectation(n_op, rho), 0.5)

    def test_real_for_hermitian_pair(self):
        a = random_hermitian(7)
        rho = random_density(7)
        assert abs(expectation(a, rho).imag) < 1e-10


def test_double_dagger_exact():
    a = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    assert np.array_equal(dagger(dagger(a)), a)


def test_density_matrix_checks():
    good = random_density(4)
    assert check_density_matrix(good) == []
    bad_trace = 2.0 * good
    assert any("trace" in p for p in check_density_matrix(bad_trace))
    bad_herm = good + 1e-6 * 1j * np.eye(4)
    assert any("hermiticity" in p for p in check_density_matrix(bad_herm))
    negative = np.diag([1.1, -0.1, 0.0, 0.0]).astype(complex)
    assert any("negative" in p for p in check_density_matrix(negative))
