"""Whitening transforms and profile fits for the three error models."""

import numpy as np
import pytest
import scipy.linalg as sla

from spatialsdr.basis import BasisSpec
from spatialsdr.exceptions import EmptyGridError, InputError
from spatialsdr.geometry import (
    Coordinates,
    exp_correlation,
    max_min_distance,
    neighbor_weights,
    pairwise_distances,
    spatial_filter,
)
from spatialsdr.pfc import fit_independent, whiten_center
from spatialsdr.sem import fit_sem, whiten_sem
from spatialsdr.sscm import default_decay_grid, fit_sscm, whiten_sscm

from conftest import random_sample, span_distance


def three_point_geometry():
    coords = Coordinates(np.array([[0.0, 0.0], [0.0, 1.0], [0.0, 3.0]]))
    return coords, pairwise_distances(coords)


class TestWhitenSscm:
    def test_identity_correlation_is_plain_centering(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((6, 2))
        f = rng.standard_normal((6, 1))
        coords = Coordinates(rng.uniform(0, 10, size=(6, 2)))
        corr = exp_correlation(pairwise_distances(coords), 200.0)
        np.testing.assert_allclose(corr.matrix, np.eye(6), atol=1e-12)
        wd = whiten_sscm(x, f, corr)
        np.testing.assert_allclose(wd.x_bar, x - x.mean(axis=0), atol=1e-10)

    def test_annihilates_constant_vector(self):
        rng = np.random.default_rng(1)
        coords = Coordinates(rng.uniform(size=(8, 2)))
        corr = exp_correlation(pairwise_distances(coords), 1.5)
        ones = np.ones((8, 1))
        wd = whiten_sscm(ones, np.arange(8.0)[:, None] - 3.5, corr)
        np.testing.assert_allclose(wd.x_bar, 0.0, atol=1e-10)

    def test_matches_dense_matrix_oracle(self):
        _, dist = three_point_geometry()
        corr = exp_correlation(dist, 1.0)
        rng = np.random.default_rng(2)
        x = rng.standard_normal((3, 1))
        h = corr.matrix
        h_inv = np.linalg.inv(h)
        ones = np.ones((3, 1))
        hc = np.eye(3) - (ones @ ones.T @ h_inv) / (ones.T @ h_inv @ ones).item()
        oracle = np.real(sla.sqrtm(h_inv)) @ hc @ x
        wd = whiten_sscm(x, x[:, :1], corr)
        np.testing.assert_allclose(wd.x_bar, oracle, atol=1e-9)


class TestWhitenSem:
    def test_zero_coef_is_plain_centering(self):
        coords, dist = three_point_geometry()
        w = neighbor_weights(dist, 2.0)
        filt = spatial_filter(w, 0.0)
        rng = np.random.default_rng(3)
        x = rng.standard_normal((3, 1))
        wd = whiten_sem(x, x[:, :1], filt)
        np.testing.assert_allclose(wd.x_bar, x - x.mean(axis=0), atol=1e-12)

    def test_annihilates_constant_vector(self):
        coords, dist = three_point_geometry()
        filt = spatial_filter(neighbor_weights(dist, 2.0), 0.6)
        wd = whiten_sem(np.ones((3, 1)), np.arange(3.0)[:, None] - 1.0, filt)
        np.testing.assert_allclose(wd.x_bar, 0.0, atol=1e-12)

    def test_matches_dense_matrix_oracle(self):
        coords, dist = three_point_geometry()
        w = neighbor_weights(dist, 2.0)
        filt = spatial_filter(w, 0.5)
        rng = np.random.default_rng(4)
        x = rng.standard_normal((3, 1))
        wt = filt.matrix
        m = wt.T @ wt
        ones = np.ones((3, 1))
        wc = np.eye(3) - (ones @ ones.T @ m) / (ones.T @ m @ ones).item()
        oracle = wt @ wc @ x
        wd = whiten_sem(x, x[:, :1], filt)
        np.testing.assert_allclose(wd.x_bar, oracle, atol=1e-12)


class TestFitSscm:
    def test_singleton_grid(self):
        sample = random_sample(50, 4, seed=1)
        fit = fit_sscm(sample, BasisSpec("polynomial", 2), 1, decay_grid=[0.7])
        assert fit.decay == 0.7
        assert len(fit.grid) == 1

    def test_argmax_over_grid(self):
        sample = random_sample(60, 4, seed=2)
        fit = fit_sscm(
            sample, BasisSpec("polynomial", 2), 1, decay_grid=[0.3, 1.0, 3.0]
        )
        lls = [ll for _, ll in fit.grid]
        assert fit.loglik == max(lls)
        assert all(np.isfinite(ll) for ll in lls)

    def test_identity_fit_reproduces_independent(self):
        sample = random_sample(80, 5, seed=3)
        spec = BasisSpec("polynomial", 2)
        f_id = fit_sscm(sample, spec, 2, identity=True)
        f_ind = fit_independent(sample, spec, 2)
        assert f_id.loglik == pytest.approx(f_ind.loglik, abs=1e-8)
        np.testing.assert_allclose(f_id.mu, f_ind.mu, atol=1e-8)
        np.testing.assert_allclose(f_id.est.coef, f_ind.est.coef, atol=1e-8)
        np.testing.assert_allclose(
            f_id.est.resid_cov, f_ind.est.resid_cov, atol=1e-8
        )
        assert span_distance(f_id.est.a, f_ind.est.a) < 1e-8

    def test_identity_mu_is_mean_adjusted(self):
        sample = random_sample(40, 3, seed=4)
        fit = fit_sscm(sample, BasisSpec("polynomial", 2), 1, identity=True)
        # centered features make the adjustment vanish: mu = column means
        np.testing.assert_allclose(fit.mu, sample.x.mean(axis=0), atol=1e-10)

    def test_empty_grid(self):
        sample = random_sample(30, 3, seed=5)
        with pytest.raises(EmptyGridError):
            fit_sscm(sample, BasisSpec("polynomial", 2), 1, decay_grid=[])

    def test_reduce_at_mu_is_zero(self):
        sample = random_sample(40, 3, seed=6)
        fit = fit_sscm(sample, BasisSpec("polynomial", 2), 1, decay_grid=[1.0])
        np.testing.assert_allclose(fit.reduce(fit.mu), 0.0, atol=1e-10)

    def test_reduce_d1_matches_dot_product(self):
        sample = random_sample(40, 3, seed=7)
        fit = fit_sscm(sample, BasisSpec("polynomial", 2), 1, decay_grid=[1.0])
        dirs = np.linalg.solve(fit.est.resid_cov, fit.est.a)
        x_new = np.random.default_rng(0).standard_normal(3)
        oracle = ((x_new - fit.mu) @ dirs).item()
        assert fit.reduce(x_new)[0] == pytest.approx(oracle, abs=1e-12)

    def test_default_grid_spans_median_scale(self):
        sample = random_sample(40, 3, seed=8)
        dist = pairwise_distances(sample.coords)
        grid = default_decay_grid(dist)
        tri = dist.dist[np.triu_indices(dist.n, k=1)]
        m = np.median(tri)
        assert grid[0] == pytest.approx(0.1 / m)
        assert grid[-1] == pytest.approx(10.0 / m)
        assert len(grid) == 20


class TestFitSem:
    def test_zero_grid_collapses_to_independent(self):
        sample = random_sample(80, 5, seed=9)
        spec = BasisSpec("polynomial", 2)
        f_sem = fit_sem(sample, spec, 2, lag_grid=[0.0])
        f_ind = fit_independent(sample, spec, 2)
        assert f_sem.loglik == pytest.approx(f_ind.loglik, abs=1e-8)
        np.testing.assert_allclose(f_sem.mu, f_ind.mu, atol=1e-8)
        np.testing.assert_allclose(f_sem.est.coef, f_ind.est.coef, atol=1e-8)
        np.testing.assert_allclose(
            f_sem.est.resid_cov, f_ind.est.resid_cov, atol=1e-8
        )
        assert span_distance(f_sem.est.a, f_ind.est.a) < 1e-8

    def test_argmax_and_finite_profile(self):
        sample = random_sample(60, 4, seed=10)
        fit = fit_sem(sample, BasisSpec("polynomial", 2), 1)
        lls = [ll for _, ll in fit.grid]
        assert len(lls) == 39
        assert all(np.isfinite(ll) for ll in lls)
        assert fit.loglik == max(lls)

    def test_grid_reported_in_ascending_order(self):
        sample = random_sample(40, 3, seed=11)
        fit = fit_sem(sample, BasisSpec("polynomial", 2), 1, lag_grid=[0.4, -0.4, 0.0])
        assert [c for c, _ in fit.grid] == [-0.4, 0.0, 0.4]

    def test_grid_outside_unit_interval_rejected(self):
        sample = random_sample(40, 3, seed=12)
        with pytest.raises(InputError):
            fit_sem(sample, BasisSpec("polynomial", 2), 1, lag_grid=[1.0])

    def test_reduce_d2_matches_dense_oracle(self):
        sample = random_sample(60, 4, seed=13)
        fit = fit_sem(sample, BasisSpec("polynomial", 2), 2, lag_grid=[0.3])
        x_new = np.random.default_rng(1).standard_normal((5, 4))
        dirs = np.linalg.solve(fit.est.resid_cov, fit.est.a)
        oracle = (x_new - fit.mu) @ dirs
        np.testing.assert_allclose(fit.reduce(x_new), oracle, atol=1e-12)

    def test_mu_uses_filter_weights(self):
        sample = random_sample(40, 3, seed=14)
        fit = fit_sem(sample, BasisSpec("polynomial", 2), 1, lag_grid=[0.5])
        w = neighbor_weights(
            pairwise_distances(sample.coords),
            max_min_distance(pairwise_distances(sample.coords)),
        )
        wt = np.eye(40) - 0.5 * w.matrix
        m = wt.T @ wt
        ones = np.ones(40)
        from spatialsdr.basis import build_f

        f_fit = build_f(sample.y, BasisSpec("polynomial", 2)).fit_matrix
        oracle = (
            (sample.x.T - fit.est.coef @ f_fit.T) @ m @ ones
            / (ones @ m @ ones).item()
        )
        np.testing.assert_allclose(fit.mu, oracle, atol=1e-10)


class TestWhitenCenter:
    def test_centering(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal((20, 3))
        f = rng.standard_normal((20, 2))
        wd = whiten_center(x, f)
        np.testing.assert_allclose(wd.x_bar.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(wd.f_bar.mean(axis=0), 0.0, atol=1e-12)
        assert wd.tag == "identity-centering"
