import numpy as np
import pytest

from besmlab import linalg
from besmlab.errors import (
    IndexOutOfRangeError,
    NotPSDError,
    NotSymmetricError,
    SingularInputError,
)


def cofactor_det(x):
    """Test-side oracle: recursive cofactor expansion along the first row."""
    n = x.shape[0]
    if n == 1:
        return x[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(x, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * x[0, j] * cofactor_det(minor)
    return total


class TestDet:
    def test_identity(self):
        for d in range(1, 7):
            assert linalg.det(np.eye(d)) == 1.0

    def test_diagonal(self):
        assert linalg.det(np.diag([2.0, 3.0])) == 6.0

    def test_d4_against_cofactor_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            x = rng.standard_normal((4, 4))
            expected = cofactor_det(x)
            assert linalg.det(x) == pytest.approx(expected, rel=1e-12)

    def test_d3_closed_form_matches_oracle(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((3, 3))
        assert linalg.det(x) == pytest.approx(cofactor_det(x), rel=1e-13)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            linalg.det(np.ones((2, 3)))


class TestAdjugate:
    def test_identity(self):
        assert np.array_equal(linalg.adjugate(np.eye(3)), np.eye(3))

    def test_2x2_formula(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(linalg.adjugate(x), [[4.0, -2.0], [-3.0, 1.0]])

    def test_vanishes_at_corank_two(self):
        # adj x = 0 exactly when rank <= d - 2
        for d in (3, 4, 5):
            x = np.diag(np.r_[np.ones(d - 2), 0.0, 0.0])
            assert np.all(linalg.adjugate(x) == 0.0)

    def test_fundamental_identity(self):
        rng = np.random.default_rng(9)
        for d in (2, 3, 4, 5):
            for _ in range(20):
                x = rng.standard_normal((d, d))
                lhs = x @ linalg.adjugate(x)
                err = np.linalg.norm(lhs - linalg.det(x) * np.eye(d))
                assert err <= 1e-8 * (1.0 + np.linalg.norm(x) ** d)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(10)
        xs = rng.standard_normal((40, 3, 3))
        batch = linalg.batch_adjugate(xs)
        for i in range(40):
            assert np.allclose(batch[i], linalg.adjugate(xs[i]), atol=1e-12)


class TestGramSchmidt:
    def test_identity(self):
        f = linalg.gram_schmidt_qr(np.eye(3))
        assert np.array_equal(f.q, np.eye(3))
        assert np.array_equal(f.r, np.eye(3))

    def test_triangular_fixed_point(self):
        rng = np.random.default_rng(11)
        t = np.triu(rng.standard_normal((4, 4)))
        np.fill_diagonal(t, np.abs(np.diag(t)) + 0.5)
        f = linalg.gram_schmidt_qr(t)
        assert np.allclose(f.q, np.eye(4), atol=1e-12)
        assert np.allclose(f.r, t, atol=1e-12)

    def test_roundtrip_random(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            x = rng.standard_normal((3, 3))
            f = linalg.gram_schmidt_qr(x)
            linalg.check_qr_invariants(x, f)

    def test_invariants_bulk(self):
        # scaled-down version of the acceptance sweep
        rng = np.random.default_rng(13)
        for d in range(2, 7):
            xs = rng.standard_normal((2000, d, d))
            q, r = linalg.batch_gram_schmidt_qr(xs)
            eye = np.eye(d)
            ortho = np.linalg.norm(np.swapaxes(q, 1, 2) @ q - eye, axis=(1, 2))
            assert np.all(ortho <= linalg.ORTHO_TOL * d)
            recon = np.linalg.norm(q @ r - xs, axis=(1, 2))
            norms = np.linalg.norm(xs, axis=(1, 2))
            assert np.all(recon <= linalg.RECONSTRUCT_TOL * (1.0 + norms))
            assert np.all(np.einsum("nii->ni", r) > 0.0)
            assert np.all(np.abs(np.tril(r, -1)) == 0.0)

    def test_rejects_singular(self):
        x = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularInputError):
            linalg.gram_schmidt_qr(x)

    def test_agrees_with_lapack_qr(self):
        # unique positive-diagonal QR: classical GS must equal Householder
        rng = np.random.default_rng(14)
        x = rng.standard_normal((5, 5))
        f = linalg.gram_schmidt_qr(x)
        q, r = np.linalg.qr(x)
        signs = np.sign(np.diag(r))
        assert np.allclose(f.q, q * signs[None, :], atol=1e-10)
        assert np.allclose(f.r, r * signs[:, None], atol=1e-10)


class TestSingularValues:
    def test_identity(self):
        assert np.allclose(linalg.singular_values(np.eye(4)), 1.0)

    def test_diagonal_absolute_sorted(self):
        assert np.allclose(linalg.singular_values(np.diag([3.0, -2.0])), [3.0, 2.0])

    def test_char_poly_oracle_3x3(self):
        # sigma_i^2 are the roots of the characteristic cubic of x^T x
        rng = np.random.default_rng(15)
        for _ in range(50):
            x = rng.standard_normal((3, 3))
            a = x.T @ x
            tr = np.trace(a)
            m2 = (
                a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
                + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
                + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
            )
            roots = np.roots([1.0, -tr, m2, -cofactor_det(a)])
            expected = np.sqrt(np.sort(roots.real)[::-1])
            assert np.allclose(linalg.singular_values(x), expected, atol=1e-6)

    def test_against_lapack(self):
        rng = np.random.default_rng(16)
        for d in (2, 3, 4, 5, 6):
            x = rng.standard_normal((d, d))
            assert np.allclose(
                linalg.singular_values(x),
                np.linalg.svd(x, compute_uv=False),
                atol=1e-10,
            )

    def test_norm_and_det_consistency(self):
        rng = np.random.default_rng(17)
        xs = rng.standard_normal((500, 3, 3))
        sigma = linalg.batch_singular_values(xs)
        norms2 = np.sum(xs**2, axis=(1, 2))
        assert np.all(np.abs(np.sum(sigma**2, axis=1) - norms2) <= 1e-8 * norms2)
        dets = np.abs(linalg.batch_det(xs))
        prods = np.prod(sigma, axis=1)
        assert np.all(np.abs(prods - dets) <= 1e-8 * np.maximum(dets, 1e-12))

    def test_lipschitz_perturbation(self):
        # ||sigma(x+v) - sigma(x)|| <= ||v||, no exceptions
        rng = np.random.default_rng(18)
        xs = rng.standard_normal((2000, 3, 3))
        vs = rng.standard_normal((2000, 3, 3)) * rng.uniform(0, 2, (2000, 1, 1))
        s0 = linalg.batch_singular_values(xs)
        s1 = linalg.batch_singular_values(xs + vs)
        moved = np.linalg.norm(s1 - s0, axis=1)
        size = np.linalg.norm(vs, axis=(1, 2))
        assert np.all(moved <= size * (1.0 + 1e-10) + 1e-12)

    def test_rank_deficient(self):
        x = np.diag([2.0, 0.0, 0.0])
        assert np.allclose(linalg.singular_values(x), [2.0, 0.0, 0.0])


class TestElementarySymmetric:
    def test_empty_product_convention(self):
        assert linalg.elementary_symmetric([4.0, 5.0], 0) == 1.0

    def test_hand_value(self):
        assert linalg.elementary_symmetric([1.0, 2.0, 3.0], 2) == pytest.approx(11.0)

    def test_matches_poly_expansion(self):
        # prod (t + s_i) has coefficients p_0 ... p_d
        rng = np.random.default_rng(19)
        for _ in range(20):
            s = rng.uniform(0, 3, 5)
            coeffs = np.poly(-s)  # leading 1, then p_1 ... p_d
            for i in range(6):
                assert linalg.elementary_symmetric(s, i) == pytest.approx(
                    coeffs[i], rel=1e-10, abs=1e-12
                )

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRangeError):
            linalg.elementary_symmetric([1.0, 2.0], 3)
        with pytest.raises(IndexOutOfRangeError):
            linalg.elementary_symmetric([1.0, 2.0], -1)


class TestDistanceToRankStratum:
    def test_exact_rank(self):
        x = np.diag([3.0, 1.0, 0.0])
        assert linalg.distance_to_rank_stratum(x, 2) == pytest.approx(0.0, abs=1e-12)

    def test_identity_to_top_stratum(self):
        assert linalg.distance_to_rank_stratum(np.eye(3), 2) == pytest.approx(1.0)

    def test_hand_value_and_svd_oracle(self):
        x = np.diag([5.0, 3.0, 1.0])
        got = linalg.distance_to_rank_stratum(x, 1)
        assert got == pytest.approx(np.sqrt(10.0), rel=1e-12)
        # Eckart-Young: distance to the nearest rank-1 truncation
        u, s, vt = np.linalg.svd(x)
        s_trunc = s.copy()
        s_trunc[1:] = 0.0
        nearest = (u * s_trunc) @ vt
        assert got == pytest.approx(np.linalg.norm(x - nearest), rel=1e-12)

    def test_random_svd_oracle(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            x = rng.standard_normal((4, 4))
            k = int(rng.integers(0, 4))
            u, s, vt = np.linalg.svd(x)
            s[k:] = 0.0
            nearest = (u * s) @ vt
            assert linalg.distance_to_rank_stratum(x, k) == pytest.approx(
                np.linalg.norm(x - nearest), rel=1e-9, abs=1e-10
            )

    def test_index_error(self):
        with pytest.raises(IndexOutOfRangeError):
            linalg.distance_to_rank_stratum(np.eye(2), 2)


class TestPsdSqrt:
    def test_identity(self):
        assert np.allclose(linalg.psd_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(linalg.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_roundtrip(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            a = rng.standard_normal((4, 4))
            z = a.T @ a
            s = linalg.psd_sqrt(z)
            assert np.allclose(s, s.T)
            err = np.linalg.norm(s @ s - z)
            assert err <= 1e-8 * (1.0 + np.linalg.norm(z))

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetricError):
            linalg.psd_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_not_psd(self):
        with pytest.raises(NotPSDError):
            linalg.psd_sqrt(np.diag([1.0, -1.0]))

    def test_tiny_negative_clamped(self):
        z = np.diag([1.0, -1e-12])
        s = linalg.psd_sqrt(z)
        assert s[1, 1] == 0.0
