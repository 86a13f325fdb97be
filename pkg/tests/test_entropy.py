import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccsketch.errors import DomainError, ParameterError, ValidationError
from ccsketch.entropy import (
    SparseVector,
    exact_moment,
    exact_renyi,
    exact_shannon,
    exact_tsallis,
    intrinsic_bias,
    predicted_variance,
    route_values,
    renyi_from_moment,
    select_optimal_alpha,
    shannon_via,
    simulate_moment_estimates,
    tsallis_from_moment,
)
from ccsketch.estimators import MomentEstimate
from ccsketch.harness import DEFAULT_REPS
from ccsketch.sketch import rep_seeds
from ccsketch.stable import OQ_ALPHAS, variance_factor

V123 = SparseVector.from_dense([1, 2, 3])

dense = st.lists(st.integers(0, 1000), min_size=1, max_size=40).filter(lambda xs: sum(xs) > 0)


def moment_estimate(value, alpha, k=100, est="gm"):
    return MomentEstimate(value, est, alpha, k, variance_factor(est, alpha) / k)


class TestSparseVector:
    def test_drops_zeros_and_sorts(self):
        v = SparseVector(10, [7, 2, 5], [1.0, 0.0, 4.0])
        assert v.indices.tolist() == [5, 7] and v.values.tolist() == [4.0, 1.0]
        assert v.f1 == 5.0 and v.nnz == 2

    @pytest.mark.parametrize(
        "idx,val", [([0, 0], [1, 2]), ([-1], [1]), ([10], [1]), ([1], [-2.0]), ([1], [math.inf])]
    )
    def test_invalid(self, idx, val):
        with pytest.raises(ValidationError):
            SparseVector(10, idx, val)

    def test_dense_round_trip(self):
        assert V123.to_dense().tolist() == [1, 2, 3]


class TestExact:
    def test_small_vector(self):
        assert exact_moment(V123, 2) == 14
        assert exact_moment(V123, 1) == 6
        assert exact_shannon(V123) == pytest.approx(1.011404, abs=1e-6)
        assert exact_renyi(V123, 2) == pytest.approx(math.log(36 / 14), rel=1e-14)
        assert exact_renyi(V123, 2) == pytest.approx(0.944462, abs=1e-6)
        assert exact_tsallis(V123, 2) == pytest.approx(0.611111, abs=1e-6)

    def test_uniform(self):
        v = SparseVector.from_dense([5, 5, 5, 5])
        assert exact_shannon(v) == pytest.approx(math.log(4), rel=1e-15)
        assert exact_renyi(v, 0.7) == pytest.approx(math.log(4), rel=1e-14)

    def test_point_mass(self):
        v = SparseVector.from_dense([0, 0, 9, 0])
        assert exact_shannon(v) == 0
        assert exact_renyi(v, 1.3) == pytest.approx(0, abs=1e-15)
        assert exact_tsallis(v, 0.7) == pytest.approx(0, abs=1e-15)

    def test_all_zero(self):
        v = SparseVector.from_dense([0, 0])
        with pytest.raises(DomainError):
            exact_shannon(v)
        with pytest.raises(DomainError):
            exact_renyi(v, 0.9)

    def test_alpha_one_rejected(self):
        with pytest.raises(DomainError):
            exact_renyi(V123, 1.0)
        with pytest.raises(DomainError):
            exact_tsallis(V123, 1.0)

    @given(dense, st.sampled_from([0.5, 0.95, 1.05, 2.0]))
    @settings(max_examples=60, deadline=None)
    def test_plugin_at_exact_moment(self, xs, alpha):
        v = SparseVector.from_dense(xs)
        f = moment_estimate(exact_moment(v, alpha), alpha)
        assert renyi_from_moment(f, v.f1).value == pytest.approx(exact_renyi(v, alpha), rel=1e-12, abs=1e-12)
        assert tsallis_from_moment(f, v.f1).value == pytest.approx(exact_tsallis(v, alpha), rel=1e-12, abs=1e-12)

    @given(dense)
    @settings(max_examples=60, deadline=None)
    def test_bounds(self, xs):
        v = SparseVector.from_dense(xs)
        h = exact_shannon(v)
        assert -1e-12 <= h <= math.log(v.nnz) + 1e-12

    @given(dense)
    @settings(max_examples=40, deadline=None)
    def test_renyi_nonincreasing(self, xs):
        v = SparseVector.from_dense(xs)
        vals = [exact_renyi(v, a) for a in (0.5, 0.9, 0.99, 1.01, 1.1, 2.0)]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))

    def test_limits_at_one(self, zipf_vectors):
        for _, v in zipf_vectors:
            h = exact_shannon(v)
            for a in (0.999, 1.001):
                assert abs(exact_renyi(v, a) - h) / h < 1e-3
                assert abs(exact_tsallis(v, a) - h) / h < 1e-2

    def test_log_base_is_natural(self):
        v = SparseVector.from_dense([1, 1])
        assert exact_shannon(v) == pytest.approx(math.log(2))


class TestPlugIn:
    def test_predicted_variance(self):
        assert predicted_variance("oq", 0.989, 20, "renyi", V123) == pytest.approx(0.2167, abs=1e-4)

    def test_shannon_via_routes(self):
        f = moment_estimate(exact_moment(V123, 0.95), 0.95)
        r = shannon_via(f, V123.f1, "renyi", oracle=V123)
        t = shannon_via(f, V123.f1, "tsallis", oracle=V123)
        assert r.target == "shannon_via_renyi" and t.target == "shannon_via_tsallis"
        assert r.value == pytest.approx(exact_renyi(V123, 0.95))
        assert r.predicted_intrinsic_bias == pytest.approx(exact_renyi(V123, 0.95) - exact_shannon(V123))
        assert t.predicted_intrinsic_bias == pytest.approx(intrinsic_bias(V123, 0.95, "tsallis"))
        assert shannon_via(f, V123.f1, "renyi").predicted_intrinsic_bias is None

    def test_intrinsic_bias_sign(self):
        # Renyi entropy decreases in alpha
        assert intrinsic_bias(V123, 0.9, "renyi") > 0 > intrinsic_bias(V123, 1.1, "renyi")

    def test_bad_route(self):
        f = moment_estimate(1.0, 0.9)
        with pytest.raises(ParameterError):
            shannon_via(f, 6.0, "shannon")

    def test_nonpositive_inputs(self):
        with pytest.raises(DomainError):
            renyi_from_moment(moment_estimate(0.0, 0.9), 6.0)
        with pytest.raises(DomainError):
            tsallis_from_moment(moment_estimate(1.0, 0.9), 0.0)

    def test_variance_grows_near_one(self):
        near = predicted_variance("gm", 0.99, 100, "renyi", V123)
        far = predicted_variance("gm", 0.9, 100, "renyi", V123)
        assert near > far


class TestSelectOptimalAlpha:
    def test_single_point_grid(self, zipf_vectors):
        v = zipf_vectors[0][1]
        best, curve = select_optimal_alpha(v, 20, "oq", "renyi", [0.98], 100, seed=1)
        assert best == 0.98 and len(curve) == 1

    @pytest.mark.parametrize("grid", [[], [1.0], [0.97], [0.95, 1.5]])
    def test_invalid_grid(self, grid):
        with pytest.raises(ParameterError):
            select_optimal_alpha(V123, 20, "oq", "renyi", grid, 100, seed=1)

    def test_few_reps(self):
        with pytest.raises(ParameterError):
            select_optimal_alpha(V123, 20, "gm", "renyi", [0.9], 10, seed=1)

    def test_deterministic(self, zipf_vectors):
        v = zipf_vectors[1][1]
        a = select_optimal_alpha(v, 50, "gm", "tsallis", [0.9, 0.95, 1.05], 200, seed=3)
        b = select_optimal_alpha(v, 50, "gm", "tsallis", [0.9, 0.95, 1.05], 200, seed=3)
        assert a == b
        assert a[0] == min(a[1], key=lambda p: p[1])[0]


@pytest.fixture(scope="module")
def k1000_estimates(zipf_vectors):
    """10^4 Renyi and Tsallis estimates per (estimator, alpha) at k = 1000."""
    v = zipf_vectors[1][1]
    k, reps = 1000, 10_000
    seeds = rep_seeds(21, reps)
    out = {}
    for alpha in (0.95, 1.05):
        for est in ("gm", "hm", "oq", "sym-gm"):
            if est == "hm" and alpha > 1:
                continue
            f = simulate_moment_estimates(v, alpha, est, k, seeds)
            for route in ("renyi", "tsallis"):
                out[est, alpha, route] = route_values(f, v.f1, alpha, route)
    return v, k, out


@pytest.mark.slow
class TestMonteCarlo:
    def test_delta_method_variance(self, k1000_estimates):
        v, k, ests = k1000_estimates
        for (est, alpha, route), vals in ests.items():
            want = predicted_variance(est, alpha, k, route, v)
            assert np.var(vals) / want == pytest.approx(1, abs=0.2), (est, alpha, route)

    @pytest.mark.parametrize("reps", [DEFAULT_REPS, 10_000])
    def test_bias_decomposes(self, k1000_estimates, reps):
        # oq's order-statistic bias is O(1/k) and becomes resolvable at 10^4 reps
        v, k, ests = k1000_estimates
        h = exact_shannon(v)
        for (est, alpha, route), vals in ests.items():
            if reps > DEFAULT_REPS and est == "oq":
                continue
            vals = vals[:reps]
            se = np.std(vals) / math.sqrt(vals.size)
            err = vals.mean() - h
            assert abs(err - intrinsic_bias(v, alpha, route)) < 3 * se, (est, alpha, route)

    @pytest.mark.parametrize("alpha", [0.989, 1.011])
    @pytest.mark.parametrize("route", ["renyi", "tsallis"])
    def test_near_one_error_is_variance(self, zipf_vectors, alpha, route):
        v = zipf_vectors[0][1]
        k, reps = 20, 1000
        h = exact_shannon(v)
        f = simulate_moment_estimates(v, alpha, "oq", k, rep_seeds(13, reps))
        vals = route_values(f, v.f1, alpha, route)
        sd = math.sqrt(predicted_variance("oq", alpha, k, route, v))
        assert abs(intrinsic_bias(v, alpha, route)) < sd
        assert abs(vals.mean() - h) < sd
        assert np.var(vals) / sd**2 == pytest.approx(1, abs=0.3)

    def test_point_mass_routes(self):
        v = SparseVector.from_dense([0, 5, 0])
        for alpha in (0.8, 1.2):
            f = moment_estimate(exact_moment(v, alpha), alpha)
            for route in ("renyi", "tsallis"):
                assert shannon_via(f, v.f1, route).value == pytest.approx(0, abs=1e-12)

    def test_optimal_alpha_near_one_for_oq(self, zipf_vectors):
        v = zipf_vectors[1][1]
        best, _ = select_optimal_alpha(v, 100, "oq", "renyi", OQ_ALPHAS, 300, seed=9)
        assert best in (0.989, 1.011)

    def test_sym_gm_optimal_alpha_away_from_one(self, zipf_vectors):
        v = zipf_vectors[1][1]
        best, _ = select_optimal_alpha(v, 100, "sym-gm", "renyi", OQ_ALPHAS, 300, seed=9)
        assert abs(best - 1) > 0.011 + 1e-12
