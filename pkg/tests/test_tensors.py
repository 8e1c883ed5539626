import math

import numpy as np
import pytest

from cpdeflate.rank1 import residual, seroap
from cpdeflate.tensors import (
    add_noise,
    angle_between,
    cp_reconstruct,
    fold,
    hadamard,
    inner,
    khatri_rao,
    kr_chain,
    kronecker,
    load_tensor,
    norm,
    outer,
    random_cp,
    random_tensor,
    save_tensor,
    unfold,
    unvec,
    vec,
)

APPENDIX_T1 = np.array(
    [
        [1, -1, 0, 1, 3, 1j, 0, 1],
        [0, 1, -1j, 1, 1, 0, 2, -2j],
    ],
    dtype=complex,
)


def kolda_unfold_oracle(t, mode):
    """Index-arithmetic unfolding: explicit loop over every entry."""
    t = np.asarray(t)
    shape = t.shape
    rest = [j for j in range(t.ndim) if j != mode]
    out = np.zeros((shape[mode], int(np.prod([shape[j] for j in rest]))), dtype=t.dtype)
    for idx in np.ndindex(*shape):
        col = 0
        stride = 1
        for j in rest:
            col += idx[j] * stride
            stride *= shape[j]
        out[idx[mode], col] = t[idx]
    return out


class TestUnfoldFold:
    def test_appendix_mode0_unfolding_is_published_matrix(self, appendix_tensor):
        assert np.array_equal(unfold(appendix_tensor, 0), APPENDIX_T1)

    def test_zero_tensor_unfolds_to_zero_matrix(self):
        assert np.array_equal(unfold(np.zeros((2, 3, 4)), 0), np.zeros((2, 12)))

    @pytest.mark.parametrize("mode", [0, 1, 2])
    def test_round_trip_exact(self, mode):
        t = random_tensor((3, 4, 5), seed=11)
        assert np.array_equal(fold(unfold(t, mode), mode, t.shape), t)

    def test_all_modes_match_index_oracle(self, appendix_tensor):
        for mode in range(4):
            assert np.array_equal(
                unfold(appendix_tensor, mode), kolda_unfold_oracle(appendix_tensor, mode)
            )

    def test_fold_of_appendix_unfolding_mode1_matches_oracle(self, appendix_tensor):
        t = fold(APPENDIX_T1, 0, (2, 2, 2, 2))
        assert np.array_equal(unfold(t, 1), kolda_unfold_oracle(appendix_tensor, 1))

    def test_fold_degenerate_vector(self):
        t = fold(np.array([[1.0], [2.0]]), 0, (2,))
        assert t.shape == (2,)
        assert np.array_equal(t, [1.0, 2.0])

    def test_mode_out_of_range(self):
        with pytest.raises(ValueError):
            unfold(np.zeros((2, 2)), 2)
        with pytest.raises(ValueError):
            fold(np.zeros((2, 2)), 3, (2, 2))

    def test_fold_shape_mismatch(self):
        with pytest.raises(ValueError):
            fold(np.zeros((2, 5)), 0, (2, 3, 2))


class TestVecUnvec:
    def test_vec_stacks_columns(self):
        assert np.array_equal(vec(np.array([[1, 3], [2, 4]])), [1, 2, 3, 4])

    def test_round_trip(self):
        m = random_tensor((3, 5), seed=2)
        assert np.array_equal(unvec(vec(m), 3, 5), m)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            unvec(np.zeros(7), 2, 3)

    def test_vec_of_outer_is_kron(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal(4)
        b = rng.standard_normal(3)
        assert np.allclose(vec(np.outer(a, b)), np.kron(b, a), atol=1e-14)


class TestInnerNormAngle:
    def test_inner_all_ones(self):
        t = np.ones((2, 2, 2))
        assert inner(t, t) == 8

    def test_inner_zero(self):
        t = random_tensor((2, 2, 2), seed=1)
        assert inner(t, np.zeros((2, 2, 2))) == 0

    def test_inner_matches_double_loop_oracle(self):
        t = random_tensor((2, 2, 2), field="complex", seed=5)
        u = random_tensor((2, 2, 2), field="complex", seed=6)
        acc = 0.0
        for idx in np.ndindex(2, 2, 2):
            acc += t[idx] * np.conj(u[idx])
        assert abs(inner(t, u) - acc) <= 1e-12 * abs(acc)

    def test_inner_shape_mismatch(self):
        with pytest.raises(ValueError):
            inner(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_norm_squared_is_real_self_inner(self):
        t = random_tensor((3, 4), field="complex", seed=7)
        assert abs(norm(t) ** 2 - inner(t, t).real) <= 1e-12 * norm(t) ** 2

    def test_norm_equals_unfolding_column_norms(self):
        t = random_tensor((3, 4, 5), field="complex", seed=8)
        for mode in range(3):
            m = unfold(t, mode)
            total = np.sum(np.linalg.norm(m, axis=0) ** 2)
            assert abs(norm(t) ** 2 - total) <= 1e-12 * total

    def test_angle_orthogonal(self):
        t = np.zeros((2, 2, 2))
        u = np.zeros((2, 2, 2))
        t[0, 0, 0] = 1.0
        u[1, 1, 1] = 1.0
        assert angle_between(t, u) == pytest.approx(math.pi / 2)

    def test_angle_ignores_scaling_and_sign(self):
        t = random_tensor((2, 3, 2), seed=9)
        assert angle_between(t, -2.0 * t) == pytest.approx(0.0, abs=1e-7)

    def test_angle_matches_extended_precision_oracle(self):
        import mpmath

        t = random_tensor((2, 2, 2), seed=10)
        u = random_tensor((2, 2, 2), seed=11)
        with mpmath.workdps(50):
            tf = [mpmath.mpf(float(x)) for x in t.reshape(-1)]
            uf = [mpmath.mpf(float(x)) for x in u.reshape(-1)]
            dot = mpmath.fsum(a * b for a, b in zip(tf, uf))
            nt = mpmath.sqrt(mpmath.fsum(a * a for a in tf))
            nu = mpmath.sqrt(mpmath.fsum(a * a for a in uf))
            expected = float(mpmath.acos(abs(dot) / (nt * nu)))
        assert angle_between(t, u) == pytest.approx(expected, abs=1e-12)

    def test_angle_symmetric_and_scale_invariant(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            t = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
            u = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
            a = angle_between(t, u)
            assert angle_between(u, t) == pytest.approx(a, abs=1e-12)
            z = complex(rng.standard_normal(), rng.standard_normal())
            assert angle_between(z * t, u) == pytest.approx(a, abs=1e-9)
            assert 0.0 <= a <= math.pi / 2

    def test_angle_zero_norm_raises(self):
        with pytest.raises(ValueError):
            angle_between(np.zeros((2, 2)), np.ones((2, 2)))


class TestProducts:
    def test_kron_identity(self):
        assert np.array_equal(kronecker(np.eye(2), np.eye(2)), np.eye(4))

    def test_khatri_rao_single_columns(self):
        a = np.array([[1.0], [2.0]])
        b = np.array([[3.0], [4.0]])
        assert np.array_equal(khatri_rao(a, b), np.kron(a, b))

    def test_khatri_rao_column_count_mismatch(self):
        with pytest.raises(ValueError):
            khatri_rao(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_hadamard_ones(self):
        a = random_tensor((3, 3), seed=1)
        assert np.array_equal(hadamard(a, np.ones((3, 3))), a)

    def test_hadamard_shape_mismatch(self):
        with pytest.raises(ValueError):
            hadamard(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_outer_basis_vectors(self):
        e = np.array([1.0, 0.0])
        t = outer([e, e, e])
        expected = np.zeros((2, 2, 2))
        expected[0, 0, 0] = 1.0
        assert np.array_equal(t, expected)

    def test_outer_inner_factorizes(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            us = [rng.standard_normal(3) + 1j * rng.standard_normal(3) for _ in range(3)]
            vs = [rng.standard_normal(3) + 1j * rng.standard_normal(3) for _ in range(3)]
            us = [u / np.linalg.norm(u) for u in us]
            vs = [v / np.linalg.norm(v) for v in vs]
            lhs = inner(outer(us), outer(vs))
            rhs = np.prod([np.vdot(v, u) for u, v in zip(us, vs)])
            assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300)


class TestCPReconstruct:
    def test_rank1_equals_outer(self):
        rng = np.random.default_rng(14)
        cols = [rng.standard_normal((s, 1)) for s in (2, 3, 4)]
        t = cp_reconstruct(cols)
        assert np.allclose(t, outer([c[:, 0] for c in cols]), atol=1e-14)

    def test_unfolding_identity_vs_independent_sum(self):
        factors, t = random_cp((4, 3, 5), 3, seed=15)
        # independent construction: explicit sum of outer products
        direct = sum(outer([f[:, r] for f in factors]) for r in range(3))
        assert norm(t - direct) <= 1e-12 * norm(direct)
        for mode in range(3):
            lhs = unfold(t, mode)
            rhs = factors[mode] @ kr_chain(factors, skip=mode).T
            assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(lhs)

    def test_rank_mismatch(self):
        with pytest.raises(ValueError):
            cp_reconstruct([np.zeros((2, 2)), np.zeros((2, 3))])


class TestRandom:
    def test_same_seed_same_tensor(self):
        a = random_tensor((3, 3, 3), field="complex", seed=42)
        b = random_tensor((3, 3, 3), field="complex", seed=42)
        assert np.array_equal(a, b)

    def test_uniform_mean_law_of_large_numbers(self):
        x = random_tensor((10000,), seed=0)
        assert abs(float(x.mean())) <= 0.05

    def test_uniform_range(self):
        x = random_tensor((1000,), seed=1)
        assert np.all(np.abs(x) <= 1.0)

    def test_random_cp_rank1_is_exactly_rank_one(self):
        _, t = random_cp((3, 3, 3), 1, field="complex", seed=3)
        assert residual(t, seroap(t)) <= 1e-10

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            random_tensor((0, 2), seed=0)
        with pytest.raises(ValueError):
            random_tensor((2, 2), field="quaternion", seed=0)
        with pytest.raises(ValueError):
            random_cp((2, 2), 0, seed=0)


class TestAddNoise:
    def test_infinite_snr_returns_unchanged(self):
        t = random_tensor((3, 3), seed=4)
        assert np.array_equal(add_noise(t, math.inf, seed=5), t)

    @pytest.mark.parametrize("field", ["real", "complex"])
    @pytest.mark.parametrize("snr", [40.0, 17.3, 0.0])
    def test_snr_is_exact_by_construction(self, field, snr):
        t = random_tensor((4, 4, 4), field=field, seed=6)
        noisy = add_noise(t, snr, seed=7)
        measured = 10.0 * math.log10(norm(t) ** 2 / norm(noisy - t) ** 2)
        assert measured == pytest.approx(snr, abs=1e-9)

    def test_noise_ratio_algebra_at_40db(self):
        # 10 log10(||T||^2/||N||^2) = 40  =>  ||N||/||T|| = 10^(-2)
        _, t = random_cp((5, 5, 5), 3, seed=8)
        noisy = add_noise(t, 40.0, seed=9)
        assert norm(noisy - t) / norm(t) == pytest.approx(1e-2, abs=1e-9)

    def test_noise_ratio_algebra_at_20db(self):
        _, t = random_cp((5, 5, 5), 3, seed=10)
        noisy = add_noise(t, 20.0, seed=11)
        assert norm(noisy - t) / norm(t) == pytest.approx(1e-1, abs=1e-9)

    def test_zero_tensor_rejected(self):
        with pytest.raises(ValueError):
            add_noise(np.zeros((2, 2)), 10.0, seed=0)


class TestTextFormat:
    @pytest.mark.parametrize("field", ["real", "complex"])
    def test_round_trip(self, tmp_path, field):
        t = random_tensor((2, 3, 2), field=field, seed=12)
        p = tmp_path / "t.tensor"
        save_tensor(t, p)
        assert np.array_equal(load_tensor(p), t)

    def test_header_format(self, tmp_path, appendix_tensor):
        p = tmp_path / "a.tensor"
        save_tensor(appendix_tensor, p)
        header = p.read_text().splitlines()[0]
        assert header == "shape: 2 2 2 2 field: complex"

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "bad.tensor"
        p.write_text("shape 2 2\n1\n")
        with pytest.raises(ValueError):
            load_tensor(p)
