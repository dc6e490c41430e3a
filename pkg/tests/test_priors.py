import numpy as np
import pytest

from boxvel.exceptions import FitError
from boxvel.experiment import reference_prior
from boxvel.geometry import GroundPoint, Velocity2D, back_project, bbox_reference_point
from boxvel.priors import (
    LocationBounds,
    PriorModel,
    fit_gaussian,
    fit_priors,
    polyfit,
    sample_scenario,
    sample_velocity,
)
from boxvel.synth import GenConfig, generate_dataset


class TestPolyfit:
    def test_exact_quadratic(self):
        xs = np.array([-2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
        ys = 2 * xs**2 + 3 * xs + 1
        coeffs = polyfit(xs, ys, 2)
        assert np.allclose(coeffs, [2, 3, 1], atol=1e-9)

    def test_pinhole_size_model_in_inv_z(self, cam):
        zs = np.arange(10.0, 100.0, 10.0)
        hs = cam.f * 1.6 / zs
        coeffs = polyfit(1.0 / zs, hs, 1)
        assert coeffs[0] == pytest.approx(cam.f * 1.6, abs=1e-6)
        assert coeffs[1] == pytest.approx(0.0, abs=1e-6)

    def test_degree_zero_is_mean(self):
        ys = [1.0, 2.0, 6.0]
        coeffs = polyfit([0.0, 1.0, 2.0], ys, 0)
        assert coeffs[0] == pytest.approx(np.mean(ys))

    def test_too_few_distinct_points(self):
        with pytest.raises(FitError):
            polyfit([1.0, 1.0, 1.0], [2.0, 2.0, 2.0], 1)

    def test_residual_never_beats_higher_degree(self):
        rng = np.random.default_rng(7)
        xs = np.linspace(0, 5, 30)
        ys = np.sin(xs) + rng.normal(0, 0.1, xs.size)
        prev = np.inf
        for degree in range(4):
            coeffs = polyfit(xs, ys, degree)
            resid = np.sum((np.polyval(coeffs, xs) - ys) ** 2)
            assert resid <= prev + 1e-12
            prev = resid


class TestFitGaussian:
    def test_two_point_hand_computation(self):
        mean, cov = fit_gaussian([Velocity2D(1, 2), Velocity2D(3, 4)])
        assert np.allclose(mean, [2, 3])
        assert np.allclose(cov, [[2, 2], [2, 2]])

    def test_identical_samples_zero_cov(self):
        mean, cov = fit_gaussian([Velocity2D(1, -1)] * 5)
        assert np.allclose(cov, 0.0)

    def test_single_sample_rejected(self):
        with pytest.raises(FitError):
            fit_gaussian([Velocity2D(1, 2)])

    def test_monte_carlo_self_consistency(self):
        rng = np.random.default_rng(11)
        true_mean = np.array([0.3, -1.0])
        true_cov = np.array([[1.5, 0.4], [0.4, 4.0]])
        draws = rng.multivariate_normal(true_mean, true_cov, size=100_000)
        mean, cov = fit_gaussian([Velocity2D(*d) for d in draws])
        assert np.allclose(mean, true_mean, atol=0.02)
        assert np.allclose(cov, true_cov, rtol=0.02)


def mild_prior(cam):
    """Prior whose scenarios essentially never hit the frustum/bound filters,
    so generation introduces no selection bias."""
    seeds = [GroundPoint(x, z) for z in (30.0, 40.0, 50.0, 60.0) for x in (-3.0, 0.0, 3.0)]
    return PriorModel(seed_points=seeds,
                      h_poly=[cam.f * 1.6, 0.0], w_poly=[cam.f * 1.9, 0.0],
                      basis="inv_z", vel_mean=[0.0, 0.0],
                      vel_cov=np.diag([0.8**2, 1.5**2]))


class TestFitPriors:
    def test_round_trip_through_generator(self, cam):
        prior = mild_prior(cam)
        samples, skipped = generate_dataset(cam, prior, GenConfig(n_samples=500, seed=5))
        assert skipped == 0
        fitted = fit_priors(samples, cam)
        assert np.allclose(fitted.vel_mean, prior.vel_mean, atol=0.1)
        for z in np.linspace(10, 80, 15):
            assert fitted.box_height(z) == pytest.approx(prior.box_height(z), rel=0.05)
            assert fitted.box_width(z) == pytest.approx(prior.box_width(z), rel=0.05)

    def test_seeds_are_first_box_ground_points(self, cam, prior):
        samples, _ = generate_dataset(cam, prior, GenConfig(n_samples=20, seed=6))
        fitted = fit_priors(samples, cam)
        for s, seed in zip(samples, fitted.seed_points):
            gp = back_project(cam, bbox_reference_point(cam, s.track.boxes[0]))
            assert seed.X == pytest.approx(gp.X)
            assert seed.Z == pytest.approx(gp.Z)

    def test_single_sample_rejected(self, cam, prior, clean_samples):
        with pytest.raises(FitError):
            fit_priors(clean_samples[:1], cam)

    def test_empty_input_rejected(self, cam):
        with pytest.raises(FitError):
            fit_priors([], cam)

    def test_refit_approximately_idempotent(self, cam, prior):
        samples, _ = generate_dataset(cam, prior, GenConfig(n_samples=500, seed=8))
        first = fit_priors(samples, cam)
        samples2, _ = generate_dataset(cam, first, GenConfig(n_samples=500, seed=9))
        second = fit_priors(samples2, cam)
        assert np.allclose(second.vel_mean, first.vel_mean, atol=0.3)


class TestSampleScenario:
    def test_degenerate_prior_single_seed(self, cam):
        pm = PriorModel(seed_points=[GroundPoint(2.0, 30.0)],
                        h_poly=[cam.f * 1.6, 0.0], w_poly=[cam.f * 1.9, 0.0],
                        basis="inv_z", vel_mean=[0.5, -2.0], vel_cov=np.zeros((2, 2)))
        rng = np.random.default_rng(3)
        for _ in range(10):
            seed, vel, h_m, w_m = sample_scenario(pm, cam, rng, jitter_x=0, jitter_z=0)
            assert (seed.X, seed.Z) == (2.0, 30.0)
            assert (vel.Vx, vel.Vz) == pytest.approx((0.5, -2.0), abs=1e-6)
            assert h_m == pytest.approx(1.6)
            assert w_m == pytest.approx(1.9)

    def test_sizes_clamped_to_physical_bands(self, cam):
        pm = PriorModel(seed_points=[GroundPoint(0.0, 30.0)],
                        h_poly=[cam.f * 5.0, 0.0], w_poly=[cam.f * 0.1, 0.0],
                        basis="inv_z", vel_mean=[0, 0], vel_cov=np.zeros((2, 2)))
        _, _, h_m, w_m = sample_scenario(pm, cam, np.random.default_rng(0))
        assert h_m == 2.5
        assert w_m == 1.5

    def test_velocity_mean_recovered(self, prior, cam):
        rng = np.random.default_rng(21)
        draws = np.array([sample_scenario(prior, cam, rng)[1].as_array() for _ in range(10_000)])
        se = np.sqrt(np.diag(prior.vel_cov) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - prior.vel_mean) < 3 * se)

    def test_cholesky_sampling_covariance(self):
        pm = PriorModel(seed_points=[GroundPoint(0.0, 30.0)],
                        h_poly=[1600.0, 0.0], w_poly=[1900.0, 0.0], basis="inv_z",
                        vel_mean=[0.2, -0.5], vel_cov=[[1.44, 0.5], [0.5, 9.0]])
        rng = np.random.default_rng(4)
        draws = np.array([sample_velocity(pm, rng).as_array() for _ in range(100_000)])
        emp = np.cov(draws, rowvar=False)
        assert np.allclose(emp, pm.vel_cov, rtol=0.03)

    def test_jitter_truncated_to_bounds(self, cam):
        bounds = LocationBounds()
        pm = PriorModel(seed_points=[GroundPoint(9.0, 5.0)],
                        h_poly=[cam.f * 1.6, 0.0], w_poly=[cam.f * 1.9, 0.0],
                        basis="inv_z", vel_mean=[0, 0], vel_cov=np.zeros((2, 2)),
                        bounds=bounds)
        rng = np.random.default_rng(5)
        for _ in range(200):
            seed, _, _, _ = sample_scenario(pm, cam, rng)
            assert bounds.contains(seed)


class TestSerialization:
    def test_json_round_trip(self, prior, tmp_path):
        path = tmp_path / "prior.json"
        prior.save(path)
        loaded = PriorModel.load(path)
        assert np.allclose(loaded.vel_mean, prior.vel_mean)
        assert np.allclose(loaded.vel_cov, prior.vel_cov)
        assert np.allclose(loaded.h_poly, prior.h_poly)
        assert loaded.basis == prior.basis
        assert len(loaded.seed_points) == len(prior.seed_points)

    def test_predicted_sizes_within_physical_bands(self, cam, prior):
        # fitted pixel sizes imply vehicle extents inside the plausible bands
        samples, _ = generate_dataset(cam, prior, GenConfig(n_samples=300, seed=13))
        fitted = fit_priors(samples, cam)
        for z in np.linspace(10, 90, 20):
            h_m = fitted.box_height(z) * z / cam.f
            w_m = fitted.box_width(z) * z / cam.f
            assert 1.3 - 0.05 <= h_m <= 2.5 + 0.05
            assert 1.5 - 0.05 <= w_m <= 3.0 + 0.05
