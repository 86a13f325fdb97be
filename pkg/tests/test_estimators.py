import math

import mpmath
import numpy as np
import pytest

from ccsketch.errors import DegenerateSketchError, DomainError, ParameterError
from ccsketch.estimators import (
    estimate,
    estimate_samples,
    gm_normalizer,
    gm_sym_from_samples,
    hm_from_samples,
    oq_from_samples,
    oq_index,
    gm_from_samples,
)
from ccsketch.sketch import new_sketch, rep_seeds, simulate_projections
from ccsketch.stable import deferred_scale, quantile_constants, variance_factor
from test_stable import abs_moment_quadrature


def samples(alpha, estimator, k, reps, seed=1, f_alpha=1.0):
    kind = "symmetric" if estimator == "sym-gm" else "skewed"
    return simulate_projections([0], [f_alpha ** (1 / alpha)], alpha, kind, k, rep_seeds(seed, reps))


class TestGmNormalizer:
    @pytest.mark.parametrize("alpha,k", [(0.5, 10), (0.95, 50), (1.05, 50), (1.5, 20), (0.989, 1000)])
    def test_against_mpmath(self, alpha, k):
        mpmath.mp.dps = 30
        a, kk = mpmath.mpf(alpha), mpmath.mpf(k)
        kap = a if alpha < 1 else 2 - a
        bracket = (2 / mpmath.pi) * mpmath.sin(mpmath.pi * a / (2 * kk)) * mpmath.gamma(1 - 1 / kk) * mpmath.gamma(a / kk)
        ref = (mpmath.cos(kap * mpmath.pi / (2 * kk)) * bracket) ** kk / mpmath.cos(kap * mpmath.pi / 2)
        assert gm_normalizer(alpha, k).d_gm == pytest.approx(float(ref), rel=1e-12)

    @pytest.mark.parametrize("alpha,k", [(0.6, 5), (0.9, 10), (1.2, 10), (1.6, 4)])
    def test_is_product_moment(self, alpha, k):
        # E prod |Z_j|^(alpha/k) for unit-scale unfactored samples
        ref = abs_moment_quadrature(alpha, 1, alpha / k) ** k
        assert gm_normalizer(alpha, k).d_gm == pytest.approx(ref, rel=1e-8)

    def test_small_k(self):
        with pytest.raises(ParameterError):
            gm_normalizer(0.9, 1)


class TestClosedForms:
    @pytest.mark.parametrize("est", ["gm", "sym-gm"])
    @pytest.mark.parametrize("alpha", [0.8, 1.2])
    def test_scale_equivariance(self, est, alpha):
        x = samples(alpha, est, 30, 1)[0]
        a = estimate_samples(x, alpha, est)
        b = estimate_samples(2 * x, alpha, est)
        assert b == pytest.approx(2**alpha * a, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.95, 1.05])
    def test_oq_constant_samples(self, alpha):
        c = 3.0
        row = quantile_constants(alpha)
        got = oq_from_samples(np.full(40, c), alpha)
        assert got == pytest.approx((c / row.w_alpha) ** alpha / deferred_scale(alpha), rel=1e-13)

    def test_oq_on_unfactored_constants(self):
        # stored samples carry the cos(rho alpha) factor; undo it and the quantile argument is c
        alpha, c = 0.9, 2.5
        stored = np.full(100, c * deferred_scale(alpha) ** (1 / alpha))
        assert oq_from_samples(stored, alpha) == pytest.approx((c / 5.400842) ** 0.9, rel=1e-12)

    def test_oq_index(self):
        assert oq_index(0.101, 100) == 11
        assert oq_index(0.2, 20) == 4
        assert oq_index(0.001, 5) == 1
        assert oq_index(0.999, 5) == 5

    def test_oq_picks_order_statistic(self):
        x = np.arange(1.0, 101.0)[::-1].copy()
        row = quantile_constants(0.9)
        m = oq_index(row.q_star, 100)
        assert oq_from_samples(x, 0.9) == pytest.approx((m / row.w_alpha) ** 0.9 / deferred_scale(0.9))

    def test_hm_constant_samples(self):
        alpha, k = 0.9, 10
        got = hm_from_samples(np.ones(k), alpha)
        assert got == pytest.approx(1 / math.gamma(1 + alpha) * (1 - variance_factor("hm", alpha) / k))

    def test_vectorized_rows(self):
        x = samples(0.95, "gm", 25, 4)
        rows = [gm_from_samples(r, 0.95) for r in x]
        np.testing.assert_allclose(gm_from_samples(x, 0.95), rows, rtol=1e-15)


class TestErrors:
    def test_hm_domain(self):
        with pytest.raises(DomainError):
            hm_from_samples(np.ones(10), 1.05)

    @pytest.mark.parametrize("est", ["gm", "hm", "sym-gm"])
    def test_zero_sample(self, est):
        x = np.ones(10)
        x[3] = 0
        with pytest.raises(DegenerateSketchError):
            estimate_samples(x, 0.9, est)

    def test_empty_sketch(self):
        with pytest.raises(DegenerateSketchError):
            estimate(new_sketch(0.9, "skewed", 10, 1, 5), "gm")

    def test_kind_mismatch(self):
        with pytest.raises(ParameterError):
            estimate(new_sketch(0.9, "symmetric", 10, 1, 5), "gm")
        with pytest.raises(ParameterError):
            estimate(new_sketch(0.9, "skewed", 10, 1, 5), "sym-gm")

    def test_oq_off_grid(self):
        with pytest.raises(ParameterError):
            oq_from_samples(np.ones(10), 0.97)

    def test_unknown(self):
        with pytest.raises(ParameterError):
            estimate_samples(np.ones(10), 0.9, "median")

    def test_estimate_metadata(self):
        s = new_sketch(0.95, "skewed", 50, 2, 10).extend([(1, 5.0)])
        e = estimate(s, "oq")
        assert (e.estimator_kind, e.alpha, e.k) == ("oq", 0.95, 50)
        assert e.predicted_relative_variance == pytest.approx(variance_factor("oq", 0.95) / 50)


@pytest.mark.slow
class TestMonteCarlo:
    @pytest.mark.parametrize("alpha", [0.95, 0.98, 0.989])
    def test_variance_ordering(self, alpha):
        k, reps = 1000, 2000
        mse = {}
        for est in ("oq", "hm", "gm", "sym-gm"):
            x = samples(alpha, est, k, reps, seed=11)
            mse[est] = float(np.mean((estimate_samples(x, alpha, est) - 1) ** 2))
        assert mse["oq"] < mse["hm"] < mse["gm"]
        assert mse["sym-gm"] > 10 * mse["gm"]

    @pytest.mark.parametrize("est,alpha", [("gm", 0.9), ("gm", 1.1), ("hm", 0.9), ("oq", 0.9), ("sym-gm", 1.1)])
    def test_unbiased_with_predicted_variance(self, est, alpha):
        k, reps = 200, 4000
        f = 7.5
        vals = estimate_samples(samples(alpha, est, k, reps, seed=5, f_alpha=f), alpha, est) / f
        v = variance_factor(est, alpha) / k
        assert abs(vals.mean() - 1) < 4 * math.sqrt(v / reps) + (0.01 if est == "oq" else 0)
        assert vals.var() / v == pytest.approx(1, abs=0.12)

    @pytest.mark.parametrize(
        "est,alpha,mean_check",
        [("gm", 0.95, True), ("hm", 0.9, True), ("sym-gm", 1.0, True), ("oq", 0.989, False)],
    )
    def test_spec_examples(self, est, alpha, mean_check):
        reps = 10_000
        if mean_check:
            vals = estimate_samples(samples(alpha, est, 100, reps, seed=31), alpha, est)
            assert abs(vals.mean() - 1) < 3 * vals.std() / math.sqrt(reps)
        k = 1000
        vals = estimate_samples(samples(alpha, est, k, reps, seed=32), alpha, est)
        want = variance_factor(est, alpha) / k
        got = np.mean((vals - 1) ** 2) if est == "oq" else vals.var()
        assert got / want == pytest.approx(1, abs=0.2 if est == "oq" else 0.15)

    def test_nonnegative(self):
        x = samples(1.1, "gm", 50, 200, seed=3)
        for est in ("gm", "oq"):
            assert np.all(estimate_samples(x, 1.1, est) >= 0)
        assert np.all(hm_from_samples(samples(0.8, "hm", 50, 200), 0.8) >= 0)

    @pytest.mark.parametrize("alpha", [0.95, 1.05, 1.1])
    def test_oq_beats_gm_from_k50(self, alpha):
        x = samples(alpha, "gm", 50, 4000, seed=12)
        mse = {e: np.mean((estimate_samples(x, alpha, e) - 1) ** 2) for e in ("gm", "oq")}
        assert mse["oq"] < mse["gm"]

    @pytest.mark.parametrize("est", ["gm", "oq"])
    def test_mse_halves_when_k_doubles(self, est):
        alpha, reps = 0.95, 10_000
        m = [
            float(np.mean((estimate_samples(samples(alpha, est, k, reps, seed=8), alpha, est) - 1) ** 2))
            for k in (200, 400)
        ]
        assert m[0] / m[1] == pytest.approx(2, rel=0.25)
