import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialsdr.exceptions import (
    DuplicatePointsError,
    IsolatedPointError,
    NonPositiveDecayError,
    SingularFilterError,
)
from spatialsdr.geometry import (
    Coordinates,
    DistanceMatrix,
    exp_correlation,
    max_min_distance,
    neighbor_weights,
    pairwise_distances,
    spatial_filter,
)


def coords(*pts):
    return Coordinates(np.array(pts, dtype=float))


class TestPairwiseDistances:
    def test_3_4_5_triangle(self):
        d = pairwise_distances(coords((0, 0), (3, 4)))
        assert d.dist[0, 1] == pytest.approx(5.0)

    def test_duplicate_points_rejected(self):
        with pytest.raises(DuplicatePointsError):
            pairwise_distances(coords((0, 0), (0, 0)))

    def test_collinear_matrix(self):
        d = pairwise_distances(coords((0, 0), (0, 1), (0, 3)))
        expected = np.array([[0, 1, 3], [1, 0, 2], [3, 2, 0]], dtype=float)
        np.testing.assert_allclose(d.dist, expected)

    def test_diagonal_zero_and_symmetric(self):
        rng = np.random.default_rng(1)
        d = pairwise_distances(Coordinates(rng.uniform(size=(30, 2))))
        assert np.all(np.diag(d.dist) == 0.0)
        np.testing.assert_array_equal(d.dist, d.dist.T)


class TestExpCorrelation:
    def test_zero_distance_gives_one(self):
        d = pairwise_distances(coords((0, 0), (1, 0)))
        h = exp_correlation(d, 2.0)
        assert np.all(np.diag(h.matrix) == 1.0)

    def test_direct_exponential_value(self):
        d = pairwise_distances(coords((0, 0), (2, 0)))
        h = exp_correlation(d, 0.1)
        assert h.matrix[0, 1] == pytest.approx(np.exp(-0.2), abs=1e-9)
        assert h.matrix[0, 1] == pytest.approx(0.818731, abs=1e-6)

    def test_collinear_eigenvalues_positive(self):
        # oracle: eigendecomposition of the hand-built 3x3 matrix
        d = pairwise_distances(coords((0, 0), (0, 1), (0, 3)))
        h = exp_correlation(d, 1.0)
        hand = np.exp(-1.0 * d.dist)
        assert np.all(np.linalg.eigvalsh(hand) > 0)
        np.testing.assert_allclose(h.matrix, hand)
        assert np.all(h.eigvals > 0)

    def test_nonpositive_decay_rejected(self):
        d = pairwise_distances(coords((0, 0), (1, 0)))
        for bad in (0.0, -1.0):
            with pytest.raises(NonPositiveDecayError):
                exp_correlation(d, bad)

    @given(st.floats(0.05, 5.0), st.floats(1.1, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_monotone_in_decay(self, lam, factor):
        d = pairwise_distances(coords((0, 0), (0.7, 0.2), (1.4, 1.1), (0.1, 0.9)))
        h1 = exp_correlation(d, lam).matrix
        h2 = exp_correlation(d, lam * factor).matrix
        off = ~np.eye(4, dtype=bool)
        assert np.all(h2[off] <= h1[off] + 1e-15)


class TestMaxMinDistance:
    def test_collinear_example(self):
        d = pairwise_distances(coords((0, 0), (0, 1), (0, 3)))
        # per-point nearest-neighbor distances are {1, 1, 2}
        assert max_min_distance(d) == pytest.approx(2.0)

    def test_two_points(self):
        d = pairwise_distances(coords((0, 0), (3, 4)))
        assert max_min_distance(d) == pytest.approx(5.0)

    def test_regular_unit_grid_brute_force(self):
        pts = [(i, j) for i in range(4) for j in range(4)]
        d = pairwise_distances(coords(*pts))
        brute = max(
            min(
                np.hypot(a[0] - b[0], a[1] - b[1])
                for jdx, b in enumerate(pts)
                if jdx != idx
            )
            for idx, a in enumerate(pts)
        )
        assert brute == pytest.approx(1.0)
        assert max_min_distance(d) == pytest.approx(brute)


class TestNeighborWeights:
    def test_three_point_example(self):
        d = pairwise_distances(coords((0, 0), (0, 1), (0, 3)))
        w = neighbor_weights(d, 2.0).matrix
        np.testing.assert_allclose(w.sum(axis=0), [1.0, 1.0, 1.0], atol=1e-12)
        assert w[1, 0] == pytest.approx(1.0)
        assert w[0, 1] == pytest.approx(0.5)
        assert w[2, 1] == pytest.approx(0.5)
        assert w[1, 2] == pytest.approx(1.0)
        assert w[0, 0] == w[1, 1] == w[2, 2] == 0.0
        assert w[0, 2] == w[2, 0] == 0.0

    def test_two_point_symmetry(self):
        d = pairwise_distances(coords((0, 0), (1, 0)))
        np.testing.assert_allclose(
            neighbor_weights(d, 1.0).matrix, [[0, 1], [1, 0]]
        )

    def test_isolated_point(self):
        d = pairwise_distances(coords((0, 0), (0, 1), (0, 3)))
        with pytest.raises(IsolatedPointError):
            neighbor_weights(d, 0.5)

    def test_threshold_is_inclusive(self):
        d = pairwise_distances(coords((0, 0), (2, 0)))
        w = neighbor_weights(d, 2.0)  # distance exactly at the threshold
        assert w.matrix[0, 1] == 1.0

    def test_max_min_distance_is_smallest_safe_threshold(self):
        rng = np.random.default_rng(7)
        d = pairwise_distances(Coordinates(rng.uniform(size=(12, 2))))
        dmax = max_min_distance(d)
        neighbor_weights(d, dmax)  # must not raise
        with pytest.raises(IsolatedPointError):
            neighbor_weights(d, dmax * (1 - 1e-9))

    @given(st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_column_sums_exactly_one(self, seed):
        rng = np.random.default_rng(seed)
        d = pairwise_distances(Coordinates(rng.uniform(size=(15, 2))))
        w = neighbor_weights(d, max_min_distance(d) * 1.5)
        np.testing.assert_allclose(w.matrix.sum(axis=0), 1.0, atol=1e-12)
        assert np.all(w.matrix >= 0.0)


class TestSpatialFilter:
    def test_zero_coef_is_identity(self):
        d = pairwise_distances(coords((0, 0), (1, 0)))
        w = neighbor_weights(d, 1.0)
        np.testing.assert_array_equal(spatial_filter(w, 0.0).matrix, np.eye(2))

    def test_two_by_two_arithmetic(self):
        d = pairwise_distances(coords((0, 0), (1, 0)))
        w = neighbor_weights(d, 1.0)
        filt = spatial_filter(w, 0.8)
        np.testing.assert_allclose(filt.matrix, [[1.0, -0.8], [-0.8, 1.0]])
        assert np.exp(filt.log_abs_det) == pytest.approx(0.36)

    def test_singular_filter_detected(self):
        d = pairwise_distances(coords((0, 0), (1, 0)))
        w = neighbor_weights(d, 1.0)
        with pytest.raises(SingularFilterError):
            spatial_filter(w, 1.0)
