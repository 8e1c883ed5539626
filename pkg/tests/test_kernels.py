import numpy as np
import pytest

from cpdeflate.kernels import (
    dominant_triplet,
    fix_phase,
    full_svd,
    hermitian_eig_max,
    nkp_decompose,
    pinv,
)
from cpdeflate.rank1 import build_gram
from cpdeflate.tensors import random_tensor


def random_matrix(shape, seed, field="real"):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal(shape)
    if field == "complex":
        m = m + 1j * rng.standard_normal(shape)
    return m


class TestDominantTriplet:
    def test_diagonal(self):
        trip = dominant_triplet(np.diag([3.0, 1.0]))
        assert trip.sigma == pytest.approx(3.0, abs=1e-10)
        assert abs(trip.u[0]) == pytest.approx(1.0, abs=1e-8)
        assert abs(trip.v[0]) == pytest.approx(1.0, abs=1e-8)

    def test_rank_one_matrix(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        trip = dominant_triplet(np.outer(a, b.conj()))
        assert trip.sigma == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b), rel=1e-10)
        assert abs(np.vdot(trip.u, a / np.linalg.norm(a))) == pytest.approx(1.0, abs=1e-8)
        assert abs(np.vdot(trip.v, b / np.linalg.norm(b))) == pytest.approx(1.0, abs=1e-8)

    def test_matches_full_svd_on_random(self):
        m = random_matrix((4, 6), seed=1)
        trip = dominant_triplet(m)
        _, s, _ = full_svd(m)
        assert abs(trip.sigma - s[0]) <= 1e-8 * s[0]

    def test_sigma_brackets_invariant(self):
        for seed in range(8):
            m = random_matrix((5, 7), seed=seed, field="complex")
            trip = dominant_triplet(m, tol=1e-10)
            s1 = full_svd(m)[1][0]
            assert trip.sigma <= s1 + 1e-8 * s1
            assert trip.sigma >= s1 * (1.0 - 10 * 1e-10) or not trip.converged

    def test_deterministic(self):
        m = random_matrix((5, 5), seed=2)
        a = dominant_triplet(m)
        b = dominant_triplet(m)
        assert np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v) and a.sigma == b.sigma

    def test_zero_matrix_raises(self):
        with pytest.raises(ValueError):
            dominant_triplet(np.zeros((3, 3)))

    def test_nonconvergence_flag(self):
        # close top singular values force many power iterations
        m = np.diag([1.0, 1.0 - 1e-12, 0.5])
        trip = dominant_triplet(m, max_iter=3, tol=1e-14)
        assert not trip.converged
        assert trip.sigma <= 1.0 + 1e-9


class TestFullSVD:
    def test_identity(self):
        _, s, _ = full_svd(np.eye(4))
        assert np.allclose(s, 1.0)

    def test_zero(self):
        _, s, _ = full_svd(np.zeros((3, 2)))
        assert np.allclose(s, 0.0)

    def test_hilbert_sigma_vs_extended_precision(self):
        import mpmath

        n = 4
        h = np.array([[1.0 / (i + j + 1) for j in range(n)] for i in range(n)])
        with mpmath.workdps(60):
            hm = mpmath.matrix(n, n)
            for i in range(n):
                for j in range(n):
                    hm[i, j] = mpmath.mpf(1) / (i + j + 1)
            eigvals = mpmath.mp.eigsy(hm.T * hm, eigvals_only=True)
            expected = float(mpmath.sqrt(max(eigvals)))
        _, s, _ = full_svd(h)
        assert abs(s[0] - expected) <= 1e-10

    def test_reconstruction_and_ordering(self):
        m = random_matrix((6, 4), seed=3, field="complex")
        u, s, vh = full_svd(m)
        assert np.linalg.norm(m - (u * s) @ vh) <= 1e-9 * np.linalg.norm(m)
        assert np.all(np.diff(s) <= 0)


class TestPinv:
    def test_identity(self):
        assert np.allclose(pinv(np.eye(3)), np.eye(3), atol=1e-12)

    def test_singular_diagonal(self):
        assert np.allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-12)

    def test_full_rank_matches_inverse(self):
        m = random_matrix((5, 5), seed=4)
        x = np.linalg.solve(m, np.eye(5))
        assert np.linalg.norm(pinv(m) - x) <= 1e-9 * np.linalg.norm(x)

    @pytest.mark.parametrize("seed", range(5))
    def test_penrose_identities_rank_deficient(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
        p = pinv(m)
        scale = np.linalg.norm(m)
        assert np.linalg.norm(m @ p @ m - m) <= 1e-8 * scale
        assert np.linalg.norm(p @ m @ p - p) <= 1e-8 * np.linalg.norm(p)
        assert np.linalg.norm((m @ p).conj().T - m @ p) <= 1e-8
        assert np.linalg.norm((p @ m).conj().T - p @ m) <= 1e-8


class TestHermitianEigMax:
    def test_largest_signed_not_modulus(self):
        pair = hermitian_eig_max(np.diag([-5.0, 2.0]))
        assert pair.value == pytest.approx(2.0)
        assert abs(pair.vector[1]) == pytest.approx(1.0)

    def test_rank_one_projector(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        x /= np.linalg.norm(x)
        pair = hermitian_eig_max(np.outer(x, x.conj()))
        assert pair.value == pytest.approx(1.0, abs=1e-10)
        assert abs(np.vdot(pair.vector, x)) == pytest.approx(1.0, abs=1e-10)

    def test_random_hermitian_residual_and_probe(self):
        m = random_matrix((6, 6), seed=6, field="complex")
        h = (m + m.conj().T) / 2
        pair = hermitian_eig_max(h)
        assert np.linalg.norm(h @ pair.vector - pair.value * pair.vector) <= 1e-8 * np.linalg.norm(h)
        rng = np.random.default_rng(7)
        best = -np.inf
        for _ in range(10_000):
            z = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            z /= np.linalg.norm(z)
            best = max(best, float(np.vdot(z, h @ z).real))
        assert pair.value >= best - 1e-6

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            hermitian_eig_max(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestNKP:
    @staticmethod
    def random_hermitian(n, seed, field="complex"):
        m = random_matrix((n, n), seed=seed, field=field)
        return (m + m.conj().T) / 2

    def test_single_kron_term_recovered(self):
        p = self.random_hermitian(3, 8)
        q = self.random_hermitian(4, 9)
        m = np.kron(q, p)
        ks = nkp_decompose(m, 3, 4)
        assert ks.kronecker_rank == 1
        assert np.linalg.norm(ks.reconstruct() - m) <= 1e-10 * np.linalg.norm(m)

    def test_identity_matrix(self):
        m = np.eye(6, dtype=complex)
        ks = nkp_decompose(m, 2, 3)
        assert ks.kronecker_rank == 1
        assert np.linalg.norm(ks.reconstruct() - m) <= 1e-12 * np.linalg.norm(m)

    @pytest.mark.parametrize("field", ["real", "complex"])
    def test_gram_matrix_reconstruction(self, field):
        t = random_tensor((3, 3, 3), field=field, seed=10)
        m = build_gram(t)
        ks = nkp_decompose(m, 3, 3)
        assert ks.kronecker_rank <= 9
        assert np.linalg.norm(ks.reconstruct() - m) <= 1e-9 * np.linalg.norm(m)

    def test_factors_are_hermitian(self):
        t = random_tensor((2, 4, 3), field="complex", seed=11)
        ks = nkp_decompose(build_gram(t), 2, 4)
        for p, q in zip(ks.p_terms, ks.q_terms):
            assert np.linalg.norm(p - p.conj().T) <= 1e-10 * max(np.linalg.norm(p), 1e-300)
            assert np.linalg.norm(q - q.conj().T) <= 1e-10 * max(np.linalg.norm(q), 1e-300)

    @pytest.mark.parametrize("field", ["real", "complex"])
    def test_quadratic_form_identity(self, field):
        # the contract the coupled-eigenvalue method relies on:
        # z^H M z == sum_r (y^H conj(Q_r) y)(x^H P_r x) for z = conj(y) kron x
        rng = np.random.default_rng(12)
        t = random_tensor((3, 4, 2), field=field, seed=13)
        m = build_gram(t)
        ks = nkp_decompose(m, 3, 4)
        for _ in range(10):
            x = rng.standard_normal(3) + (1j * rng.standard_normal(3) if field == "complex" else 0.0)
            y = rng.standard_normal(4) + (1j * rng.standard_normal(4) if field == "complex" else 0.0)
            x = x / np.linalg.norm(x)
            y = y / np.linalg.norm(y)
            z = np.kron(y.conj(), x)
            lhs = np.vdot(z, m @ z).real
            rhs = sum(
                (np.vdot(y, q.conj() @ y) * np.vdot(x, p @ x)).real
                for p, q in zip(ks.p_terms, ks.q_terms)
            )
            assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            nkp_decompose(np.eye(6), 2, 2)

    def test_non_hermitian_rejected(self):
        m = np.zeros((4, 4))
        m[0, 1] = 1.0
        with pytest.raises(ValueError):
            nkp_decompose(m, 2, 2)

    def test_zero_matrix(self):
        ks = nkp_decompose(np.zeros((6, 6)), 2, 3)
        assert ks.kronecker_rank == 0
        assert np.linalg.norm(ks.reconstruct()) == 0.0


class TestFixPhase:
    def test_largest_component_real_positive(self):
        v = np.array([0.1 + 0.2j, -0.9j, 0.3])
        w = fix_phase(v)
        j = np.argmax(np.abs(w))
        assert w[j].imag == pytest.approx(0.0, abs=1e-15)
        assert w[j].real > 0
        assert np.linalg.norm(w) == pytest.approx(np.linalg.norm(v))
