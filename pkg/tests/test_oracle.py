import numpy as np
import pytest

from conftest import well_separated_gaussian
from lowrank_sure import (
    DegenerateSpectrum,
    FdConfig,
    InvalidInput,
    ReducedRank,
    SoftThreshold,
    apply_estimator,
    covariance_df,
    divergence,
    estimate,
    finite_difference_divergence,
    finite_difference_divergences,
    svd_decompose,
)


class TestFiniteDifference:
    def test_identity(self, rng):
        Y = well_separated_gaussian(rng, 5, 3, 1e-2)
        assert finite_difference_divergence(SoftThreshold(0.0), Y) == pytest.approx(15.0, abs=1e-6)

    def test_zero(self, rng):
        Y = well_separated_gaussian(rng, 5, 3, 1e-2)
        assert finite_difference_divergence(ReducedRank(0), Y) == 0.0

    def test_rank_one_diag(self):
        val = finite_difference_divergence(ReducedRank(1), np.diag([2.0, 1.0]), FdConfig(1e-5))
        assert val == pytest.approx(11 / 3, abs=1e-4)

    def test_linear_map_trace(self, rng):
        p, q = 4, 3
        A = rng.standard_normal((p * q, p * q))

        def linear(Y):
            return (A @ Y.reshape(-1)).reshape(p, q)

        Y = rng.standard_normal((p, q))
        assert finite_difference_divergence(linear, Y) == pytest.approx(np.trace(A), abs=1e-6)

    def test_second_order_convergence(self, rng):
        Y = np.zeros((4, 3))
        Y[:3] = np.diag([5.0, 3.0, 1.5])
        Y += 0.2 * rng.standard_normal((4, 3))
        exact = divergence(svd_decompose(Y), ReducedRank(1))
        errs = [abs(finite_difference_divergence(ReducedRank(1), Y, FdConfig(h)) - exact) for h in (2e-2, 1e-2)]
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)

    def test_batch_matches_single(self, rng):
        Y = well_separated_gaussian(rng, 4, 3, 1e-2)
        ests = [ReducedRank(1), SoftThreshold(0.3)]
        batch = finite_difference_divergences(ests, Y)
        assert list(batch) == [finite_difference_divergence(e, Y) for e in ests]

    def test_degenerate_point_reports_coordinate(self):
        with pytest.raises(DegenerateSpectrum) as info:
            finite_difference_divergence(ReducedRank(1), np.eye(3))
        assert info.value.coordinate is not None

    def test_step_validation(self):
        with pytest.raises(InvalidInput):
            FdConfig(0.0)
        with pytest.raises(InvalidInput):
            finite_difference_divergence(ReducedRank(1), 1e4 * np.diag([2.0, 1.0]), FdConfig(1e-9))


class TestCovarianceDf:
    def _replicates(self, rng, est, B=400, p=4, q=3):
        out = []
        for _ in range(B):
            Y = rng.standard_normal((p, q))
            out.append((Y, estimate(Y, est)))
        return out

    def test_identity_estimator(self, rng):
        reps = self._replicates(rng, SoftThreshold(0.0))
        val = covariance_df(reps, np.zeros((4, 3)), 1.0)
        assert val == pytest.approx(np.mean([np.sum(Y * Y) for Y, _ in reps]), rel=1e-12)
        # E||Y||^2 = 12, sd of the mean is sqrt(24 / 400).
        assert abs(val - 12.0) < 4 * np.sqrt(24 / 400)

    def test_zero_estimator(self, rng):
        reps = [(Y, np.zeros_like(Y)) for Y, _ in self._replicates(rng, ReducedRank(0), B=10)]
        assert covariance_df(reps, np.zeros((4, 3)), 1.0) == 0.0

    def test_sigma2_scaling(self, rng):
        reps = self._replicates(rng, ReducedRank(1), B=20)
        mu = np.zeros((4, 3))
        assert covariance_df(reps, mu, 2.0) == pytest.approx(covariance_df(reps, mu, 1.0) / 2.0, rel=1e-14)

    def test_linear_in_estimator(self, rng):
        reps = []
        for _ in range(50):
            Y = rng.standard_normal((5, 3))
            f = svd_decompose(Y)
            reps.append((Y, apply_estimator(f, ReducedRank(1)), apply_estimator(f, SoftThreshold(0.5))))
        mu = np.zeros((5, 3))
        a, b = 1.5, -0.25
        combo = covariance_df([(Y, a * m + b * n) for Y, m, n in reps], mu, 1.0)
        parts = a * covariance_df([(Y, m) for Y, m, _ in reps], mu, 1.0) + b * covariance_df([(Y, n) for Y, _, n in reps], mu, 1.0)
        assert combo == pytest.approx(parts, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInput):
            covariance_df([(np.zeros((3, 2)), np.zeros((3, 2)))], np.zeros((2, 2)), 1.0)
        with pytest.raises(InvalidInput):
            covariance_df([], np.zeros((2, 2)), 1.0)
