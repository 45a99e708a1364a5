import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from besmlab import weights
from besmlab.errors import (
    DivergentIntegralError,
    DomainError,
    SingularWeightError,
    TooFewSamplesError,
)
from besmlab.weights import CubeSpec, WeightSpec


class TestWeight:
    def test_identity_negative_exponent(self):
        assert weights.weight(np.eye(2), WeightSpec(-0.5)) == 1.0

    def test_diag_half_power(self):
        assert weights.weight(np.diag([4.0, 1.0]), WeightSpec(0.5)) == pytest.approx(2.0)

    def test_square_matches_product(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = rng.standard_normal((3, 3))
            d = weights.det(x)
            assert weights.weight(x, WeightSpec(2.0)) == pytest.approx(d * d, rel=1e-12)

    def test_singular_at_negative_exponent(self):
        with pytest.raises(SingularWeightError):
            weights.weight(np.diag([1.0, 0.0]), WeightSpec(-0.5))

    def test_integrable_flag(self):
        assert WeightSpec(-0.5).integrable
        assert not WeightSpec(-1.0).integrable


class TestCubeSpec:
    def test_validation(self):
        with pytest.raises(DomainError):
            CubeSpec(2, {(0, 0): (-0.5, 1.0), (1, 1): (0, 1), (0, 1): (0, 1)})
        with pytest.raises(DomainError):
            CubeSpec.uniform(2, diag=(1.0, 1.0))

    def test_enclosing_half_width(self):
        k0 = CubeSpec.uniform(2)
        assert k0.enclosing_half_width() == pytest.approx(np.sqrt(3.0))


class TestQrCubeIntegral:
    def test_lebesgue_reference_cube(self):
        assert weights.qr_cube_integral(WeightSpec(0.0), CubeSpec.uniform(2)) == 0.5

    def test_hand_quadrature(self):
        cube = CubeSpec(2, {(0, 0): (1, 2), (1, 1): (1, 2), (0, 1): (0, 1)})
        got = weights.qr_cube_integral(WeightSpec(1.0), cube)
        assert got == pytest.approx(7.0 / 2.0, rel=1e-14)

    def test_divergence_at_zero(self):
        with pytest.raises(DivergentIntegralError):
            weights.qr_cube_integral(WeightSpec(-1.0), CubeSpec.uniform(2))

    def test_log_case_away_from_zero(self):
        cube = CubeSpec(1, {(0, 0): (0.5, 2.0)})
        got = weights.qr_cube_integral(WeightSpec(-1.0), cube)
        assert got == pytest.approx(np.log(4.0), rel=1e-14)


class TestTruncatedCubeIntegral:
    def test_d2_alpha_minus_one_closed_form(self):
        # iterated integral in closed form: log(1/eps) - 1 + eps
        for eps in (1e-1, 1e-2, 1e-3):
            got = weights.truncated_cube_integral(-1.0, 2, eps)
            assert got == pytest.approx(np.log(1.0 / eps) - 1.0 + eps, rel=1e-9)

    def test_d2_generic_against_dblquad(self):
        alpha, eps = -1.5, 0.1
        oracle, _ = dblquad(
            lambda t2, t1: t1 ** (alpha + 1.0) * t2**alpha * (t1 * t2 > eps),
            0.0, 1.0, 0.0, 1.0,
        )
        got = weights.truncated_cube_integral(alpha, 2, eps)
        assert got == pytest.approx(oracle, rel=1e-4)

    def test_full_mass_limit(self):
        # as eps -> 0 the truncation converges to the unrestricted integral
        got = weights.truncated_cube_integral(-0.5, 2, 1e-8)
        full = weights.qr_cube_integral(WeightSpec(-0.5), CubeSpec.uniform(2))
        assert got == pytest.approx(full, rel=1e-3)


class TestCalibrateHaarMass:
    def test_d1_exact(self):
        # O(1) = {+-1} has counting mass 2; the region (-1,0) u (0,1) has
        # Lebesgue volume 2 and the closed form is 1
        mu = weights.calibrate_haar_mass(1, seed=3, n_samples=10_000)
        assert mu.value == 2.0
        assert mu.stderr == 0.0

    def test_d2_gaussian_integral_oracle(self):
        # mu(O(2)) = 4 pi from the Gaussian moment factorization
        mu = weights.calibrate_haar_mass(2, seed=3, n_samples=150_000)
        assert abs(mu.value - 4.0 * np.pi) <= 3.0 * mu.stderr

    def test_deterministic(self):
        a = weights.calibrate_haar_mass(2, seed=5, n_samples=20_000)
        b = weights.calibrate_haar_mass(2, seed=5, n_samples=20_000)
        assert a == b

    def test_stderr_scaling(self):
        a = weights.calibrate_haar_mass(2, seed=6, n_samples=50_000)
        b = weights.calibrate_haar_mass(2, seed=7, n_samples=200_000)
        # quadrupling the sample count should roughly halve the error
        assert b.stderr < a.stderr
        assert 0.25 < b.stderr / a.stderr < 0.95

    def test_too_few(self):
        with pytest.raises(TooFewSamplesError):
            weights.calibrate_haar_mass(2, seed=1, n_samples=100)


class TestRadonThresholdProbe:
    @pytest.mark.parametrize("alpha", [0.0, -0.5, 1.0])
    def test_integrable_side(self, alpha):
        rep = weights.radon_threshold_probe(WeightSpec(alpha), 2, seed=11, n_samples=100_000)
        assert rep.passed

    def test_divergent_side(self):
        rep = weights.radon_threshold_probe(WeightSpec(-1.0), 2, seed=11, n_samples=100_000)
        assert rep.passed
        masses = [
            rep.estimates[f"truncated_mass_eps_{e:g}"]["value"]
            for e in weights.TRUNCATION_EPS_GRID
        ]
        assert all(b > a for a, b in zip(masses, masses[1:]))
        assert rep.estimates["growth_factor"]["value"] > 2.0

    def test_reports_reproducible(self):
        a = weights.radon_threshold_probe(WeightSpec(-0.5), 2, seed=2, n_samples=40_000)
        b = weights.radon_threshold_probe(WeightSpec(-0.5), 2, seed=2, n_samples=40_000)
        assert a.canonical_json() == b.canonical_json()


class TestClaim1D:
    def test_equality_at_zero_endpoint(self):
        res = weights.claim_1d_bound(-0.5, 0.0, (0.0, 1.0))
        assert res.lhs == pytest.approx(2.0, abs=1e-12)
        assert res.rhs == pytest.approx(2.0, abs=1e-12)
        assert res.constant == pytest.approx(2.0, abs=1e-14)

    def test_alpha_zero_trivial(self):
        res = weights.claim_1d_bound(0.0, 3.0, (0.5, 2.0))
        assert res.constant == 1.0
        assert res.lhs == pytest.approx(res.rhs, rel=1e-14)

    def test_quad_oracle(self):
        alpha, beta, a, b = -0.9, 3.0, 1.0, 2.0
        res = weights.claim_1d_bound(alpha, beta, (a, b))
        lhs_oracle, _ = quad(lambda t: t ** (alpha + beta), a, b)
        tbeta_oracle, _ = quad(lambda t: t**beta, a, b)
        assert res.lhs == pytest.approx(lhs_oracle, rel=1e-10)
        assert res.rhs == pytest.approx(
            res.constant * tbeta_oracle * b**alpha, rel=1e-10
        )
        assert res.lhs <= res.rhs

    def test_randomized_inequality(self):
        rng = np.random.default_rng(8)
        for _ in range(3000):
            alpha = rng.uniform(-0.999, 0.0)
            beta = rng.uniform(0.0, 5.0)
            a = rng.uniform(0.0, 2.0)
            b = a + rng.uniform(1e-3, 3.0)
            res = weights.claim_1d_bound(alpha, beta, (a, b))
            assert res.lhs <= res.rhs * (1.0 + 1e-12)
            if a > 1e-9:
                assert res.lhs < res.rhs  # equality only at a = 0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            weights.claim_1d_bound(0.5, 0.0, (0.0, 1.0))
        with pytest.raises(DomainError):
            weights.claim_1d_bound(-0.5, -1.0, (0.0, 1.0))
        with pytest.raises(DomainError):
            weights.claim_1d_bound(-0.5, 0.0, (1.0, 0.5))
