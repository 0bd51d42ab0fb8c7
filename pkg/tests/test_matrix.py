import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowrank_sure import (
    DistinctnessReport,
    InvalidInput,
    MatrixObs,
    SvdFactors,
    check_distinct,
    frobenius_norm_sq,
    read_matrix_csv,
    svd_decompose,
    write_matrix_csv,
)


class TestMatrixObs:
    def test_rejects_wide(self):
        with pytest.raises(InvalidInput):
            MatrixObs(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInput):
            MatrixObs(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_rejects_negative_sigma2(self):
        with pytest.raises(InvalidInput):
            MatrixObs(np.eye(2), sigma2=-1.0)

    def test_is_read_only_copy(self):
        a = np.eye(3)
        obs = MatrixObs(a, 2.0)
        a[0, 0] = 5.0
        assert obs.entries[0, 0] == 1.0
        with pytest.raises(ValueError):
            obs.entries[0, 0] = 3.0
        assert (obs.p, obs.q, obs.sigma2) == (3, 3, 2.0)


class TestSvdDecompose:
    def test_identity(self):
        f = svd_decompose(np.eye(2))
        np.testing.assert_allclose(f.d, [1.0, 1.0])

    def test_diagonal(self):
        f = svd_decompose(np.diag([3.0, 2.0]))
        np.testing.assert_allclose(f.d, [3.0, 2.0])
        np.testing.assert_allclose(np.abs(f.U), np.eye(2), atol=1e-15)
        np.testing.assert_allclose(np.abs(f.V), np.eye(2), atol=1e-15)

    def test_random_reconstruction(self):
        Y = np.random.default_rng(5).standard_normal((5, 4))
        f = svd_decompose(MatrixObs(Y))
        assert np.linalg.norm(Y - f.reconstruct()) / np.linalg.norm(Y) < 1e-10
        assert f.U.shape == (5, 4) and f.V.shape == (4, 4)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 4), st.integers(0, 2**32 - 1))
    def test_invariants(self, q, extra, seed):
        Y = np.random.default_rng(seed).standard_normal((q + extra, q))
        f = svd_decompose(Y)
        assert np.all(np.diff(f.d) <= 0) and np.all(f.d >= 0)
        np.testing.assert_allclose(f.U.T @ f.U, np.eye(q), atol=1e-10)
        np.testing.assert_allclose(f.V.T @ f.V, np.eye(q), atol=1e-10)
        assert np.linalg.norm(Y - f.reconstruct()) <= 1e-8 * np.linalg.norm(Y)

    def test_sign_flip_preserves_reconstruction(self, rng):
        Y = rng.standard_normal((6, 4))
        f = svd_decompose(Y)
        g = f.with_signs([1, -1, -1, 1])
        np.testing.assert_allclose(g.reconstruct(), f.reconstruct(), atol=1e-12)


class TestFrobenius:
    @pytest.mark.parametrize("A, expected", [(np.zeros((3, 2)), 0.0), (np.eye(2), 2.0), ([[1, 2], [3, 4]], 30.0)])
    def test_values(self, A, expected):
        assert frobenius_norm_sq(A) == expected


class TestCheckDistinct:
    def _factors(self, d):
        q = len(d)
        return SvdFactors(np.eye(q), np.array(d, dtype=float), np.eye(q), 1e-8)

    def test_distinct(self):
        assert check_distinct(self._factors([3, 2, 1])).distinct

    def test_exact_tie(self):
        rep = check_distinct(self._factors([2, 2, 1]))
        assert not rep.distinct and rep.min_relative_gap == 0.0

    def test_gap_below_tolerance(self):
        assert not check_distinct(self._factors([1, 1 - 1e-12, 0.5])).distinct

    def test_zero_last_value_allowed(self):
        rep = check_distinct(self._factors([2, 1, 0]))
        assert isinstance(rep, DistinctnessReport) and rep.distinct

    def test_single_value(self):
        assert check_distinct(self._factors([4.0])).distinct


class TestCsv:
    def test_round_trip(self, rng, tmp_path):
        A = rng.standard_normal((4, 3))
        path = tmp_path / "m.csv"
        write_matrix_csv(A, path, header="test matrix")
        np.testing.assert_array_equal(read_matrix_csv(path), A)

    def test_header_and_blank_lines(self):
        text = "# a header\n1,2\n\n3,4\n"
        np.testing.assert_array_equal(read_matrix_csv(io.StringIO(text)), [[1, 2], [3, 4]])

    @pytest.mark.parametrize("text", ["1,2\n3\n", "1,x\n", "", "# only header\n", "1,inf\n"])
    def test_bad_input(self, text):
        with pytest.raises(InvalidInput):
            read_matrix_csv(io.StringIO(text))
