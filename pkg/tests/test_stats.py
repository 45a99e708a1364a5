import json

import numpy as np
import pytest
import scipy.stats

from besmlab import stats
from besmlab.errors import DegenerateInputError, TooFewSamplesError


class TestKSOneSample:
    def test_self_consistency_under_null(self):
        # samples drawn from the reference itself: p should look uniform
        low = 0
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            u = rng.random(10_000)
            res = stats.ks_one_sample(u, lambda x: x)
            if res.p_value <= 0.001:
                low += 1
        assert low == 0

    def test_constant_samples(self):
        res = stats.ks_one_sample(np.full(200, 0.5), lambda x: np.asarray(x))
        assert res.statistic >= 0.5
        assert res.p_value < 1e-10

    def test_power_against_shift(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0.3, 1.0, 10_000)
        res = stats.ks_one_sample(x, scipy.stats.norm.cdf)
        assert res.p_value < 1e-6

    def test_matches_scipy_statistic(self):
        rng = np.random.default_rng(4)
        x = rng.normal(0.0, 1.0, 500)
        res = stats.ks_one_sample(x, scipy.stats.norm.cdf)
        ref = scipy.stats.kstest(x, "norm")
        assert res.statistic == pytest.approx(ref.statistic, rel=1e-12)
        # asymptotic p agrees with scipy's asymp mode
        ref_asymp = scipy.stats.kstest(x, "norm", method="asymp")
        assert res.p_value == pytest.approx(ref_asymp.pvalue, rel=1e-6, abs=1e-8)

    def test_too_few(self):
        with pytest.raises(TooFewSamplesError):
            stats.ks_one_sample(np.arange(10.0), lambda x: x)


class TestKSTwoSample:
    def test_identical_ensembles(self):
        x = np.arange(100.0)
        res = stats.ks_two_sample(x, x)
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_disjoint_supports(self):
        res = stats.ks_two_sample(np.arange(100.0), np.arange(100.0) + 1000.0)
        assert res.statistic == 1.0
        assert res.p_value < 1e-10

    def test_same_law(self):
        rng = np.random.default_rng(5)
        res = stats.ks_two_sample(rng.random(5000), rng.random(5000))
        assert res.p_value > 0.001

    def test_matches_scipy(self):
        rng = np.random.default_rng(6)
        a, b = rng.random(400), rng.random(300)
        res = stats.ks_two_sample(a, b)
        ref = scipy.stats.ks_2samp(a, b, method="asymp")
        assert res.statistic == pytest.approx(ref.statistic, rel=1e-12)

    def test_too_few(self):
        with pytest.raises(TooFewSamplesError):
            stats.ks_two_sample(np.arange(10.0), np.arange(100.0))


class TestKolmogorovSF:
    def test_bounds_and_monotone(self):
        lams = np.linspace(0.05, 3.0, 40)
        vals = [stats.kolmogorov_sf(l) for l in lams]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_against_scipy(self):
        for lam in (0.5, 0.8, 1.0, 1.5, 2.0):
            assert stats.kolmogorov_sf(lam) == pytest.approx(
                scipy.stats.kstwobign.sf(lam), rel=1e-8
            )


class TestLogLogSlope:
    def test_exact_square_law(self):
        xs = np.array([1.0, 2.0, 4.0, 8.0])
        slope, se = stats.loglog_slope(xs, xs**2)
        assert slope == pytest.approx(2.0, abs=1e-12)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_noisy_powerlaw(self):
        rng = np.random.default_rng(7)
        xs = np.logspace(0, 2, 12)
        ys = 3.0 * xs**1.7 * (1.0 + 0.01 * rng.standard_normal(12))
        slope, se = stats.loglog_slope(xs, ys, 0.01 * ys)
        assert abs(slope - 1.7) <= 3.0 * se

    def test_two_points_exact(self):
        slope, se = stats.loglog_slope([1.0, 10.0], [2.0, 200.0])
        assert slope == pytest.approx(2.0, rel=1e-12)
        assert se == 0.0

    def test_degenerate(self):
        with pytest.raises(DegenerateInputError):
            stats.loglog_slope([1.0], [1.0])
        with pytest.raises(DegenerateInputError):
            stats.loglog_slope([1.0, -2.0, 3.0], [1.0, 1.0, 1.0])
        with pytest.raises(DegenerateInputError):
            stats.loglog_slope([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


class TestVerificationReport:
    def make(self, passed=True):
        return stats.VerificationReport(
            verifier_id="demo",
            inputs_digest=stats.digest_inputs(a=1, b="x"),
            estimates={"value": stats.estimate(1.5, 0.1)},
            bound_or_target=2.0,
            tolerance=0.5,
            passed=passed,
            n_samples=100,
            seed=7,
            wall_time=1.234,
        )

    def test_canonical_excludes_wall_time(self):
        r1, r2 = self.make(), self.make()
        r2.wall_time = 99.0
        assert r1.canonical_json() == r2.canonical_json()
        assert r1.digest() == r2.digest()
        assert "wall_time" in r1.to_dict()

    def test_canonical_json_is_stable_bytes(self):
        r = self.make()
        blob = r.canonical_json()
        assert json.loads(blob)["verifier_id"] == "demo"
        assert blob == self.make().canonical_json()

    def test_digest_tracks_content(self):
        r1, r2 = self.make(), self.make(passed=False)
        assert r1.digest() != r2.digest()

    def test_inputs_digest_stable(self):
        assert stats.digest_inputs(x=1, y=[1, 2]) == stats.digest_inputs(y=[1, 2], x=1)
        assert stats.digest_inputs(x=1) != stats.digest_inputs(x=2)
