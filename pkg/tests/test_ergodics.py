"""Tests for ensemble statistics, decay fitting, and the rate formula."""

import numpy as np
import pytest
from scipy import optimize

from _oracles import synthetic_decay, uniform_sphere
from fiberlay import (
    ConfigError,
    InsufficientSignal,
    ObservableSeries,
    RateParams,
    SimConfig,
    collect_ensemble,
    fit_decay,
    hypocoercivity_rate,
    mixing_series,
    optimal_sigma,
    series_from_ensemble,
    stationarity_audit,
)
from fiberlay import ergodics, potential

RADIAL_2 = potential.builtin_radial_quadratic(2)


def _synthetic_series(lam, prefactor, target=0.0, **kwargs):
    times, means, stderrs = synthetic_decay(lam, prefactor, **kwargs)
    cfg = SimConfig(d=2, sigma=1.0, n_steps=times.size - 1)
    return ObservableSeries(
        times=times, means=means + target, stderrs=stderrs,
        observable="synthetic", n_paths=200, config=cfg, target=target,
    )


def _invariant_ensemble(n_paths, n_records, seed, shift=0.0):
    """Fake records drawn exactly from the invariant law of the radial
    quadratic: xi ~ N(0, I/2) and v uniform on the circle, independent."""
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 10.0, n_records)
    xi = rng.normal(scale=np.sqrt(0.5), size=(n_paths, n_records, 2)) + shift
    v = uniform_sphere(rng, n_paths * n_records, 2).reshape(n_paths, n_records, 2)
    return times, xi, v


class TestObservables:
    def test_factory_tags_and_values(self):
        xi = np.array([[1.0, 2.0], [3.0, -1.0]])
        v = np.array([[0.0, 1.0], [1.0, 0.0]])
        cases = [
            (ergodics.position_component(0), "xi_1", [1.0, 3.0]),
            (ergodics.position_square(1), "xi_2^2", [4.0, 1.0]),
            (ergodics.radius_square(), "|xi|^2", [5.0, 10.0]),
            (ergodics.direction_component(1), "v_2", [1.0, 0.0]),
            (ergodics.direction_product(0, 0), "v_1v_1", [0.0, 1.0]),
            (ergodics.alignment(), "xi.v", [2.0, 3.0]),
        ]
        for obs, tag, want in cases:
            assert obs.tag == tag
            np.testing.assert_allclose(obs(xi, v), want)


class TestMixingSeries:
    CFG = dict(d=2, sigma=1.0, n_steps=400, dt=1e-3, seed=5, record_stride=20)

    def test_deterministic_start_statistics(self):
        series = mixing_series(
            SimConfig(**self.CFG), RADIAL_2, ergodics.direction_component(0), 150
        )
        assert series.means[0] == 1.0  # every path starts at v = e_1
        assert series.stderrs[0] == 0.0
        assert series.stderrs[-1] > 0.0
        assert series.n_paths == 150
        assert abs(series.target) < 1e-10  # odd moment of the uniform circle
        assert series.observable == "v_1"

    def test_requires_mu_convention(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=10)  # drift_scale 1 != 1/2
        with pytest.raises(ConfigError, match="drift_scale"):
            mixing_series(cfg, potential.builtin_radial_quadratic(3),
                          ergodics.direction_component(0), 150)

    def test_requires_enough_paths(self):
        with pytest.raises(ConfigError, match="paths"):
            mixing_series(SimConfig(**self.CFG), RADIAL_2,
                          ergodics.direction_component(0), 50)

    def test_matches_series_from_ensemble(self):
        cfg = SimConfig(**self.CFG)
        obs = ergodics.position_square(0)
        streamed = mixing_series(cfg, RADIAL_2, obs, 120)
        ens = collect_ensemble(cfg, RADIAL_2, 120)
        stacked = series_from_ensemble(ens, obs, cfg, RADIAL_2)
        np.testing.assert_allclose(stacked.means, streamed.means, atol=1e-12)
        np.testing.assert_allclose(stacked.stderrs, streamed.stderrs, atol=1e-12)
        assert stacked.target == streamed.target
        assert stacked.n_paths == streamed.n_paths

    def test_collect_ensemble_embeds_local_records(self):
        cfg = SimConfig(d=2, sigma=1.0, n_steps=100, dt=1e-3, seed=2,
                        scheme="local-euler", record_stride=10)
        times, xi, v = collect_ensemble(cfg, RADIAL_2, 3)
        assert xi.shape == (3, 11, 2) and v.shape == (3, 11, 2)
        np.testing.assert_allclose(np.linalg.norm(v, axis=-1), 1.0, atol=1e-14)

    def test_series_needs_min_paths(self):
        cfg = SimConfig(d=2, sigma=1.0, n_steps=10)
        with pytest.raises(ConfigError):
            ObservableSeries(times=np.zeros(1), means=np.zeros(1),
                             stderrs=np.zeros(1), observable="x",
                             n_paths=10, config=cfg)

    def test_deviation_needs_target(self):
        cfg = SimConfig(d=2, sigma=1.0, n_steps=10)
        series = ObservableSeries(times=np.zeros(1), means=np.ones(1),
                                  stderrs=np.zeros(1), observable="x",
                                  n_paths=100, config=cfg)
        with pytest.raises(ConfigError):
            series.deviation()


class TestStationarityAudit:
    def test_invariant_samples_pass(self):
        ens = _invariant_ensemble(400, 11, seed=31)
        report = stationarity_audit(ens, RADIAL_2, burn_in=0.5)
        assert report.passed
        assert report.max_abs_z <= 4.0
        assert report.flagged == ()
        by_name = {c.name: c for c in report.checks}
        assert by_name["E[xi_1xi_1]"].target == pytest.approx(0.5, abs=1e-8)
        assert by_name["E[v_1v_1]"].target == pytest.approx(0.5, abs=1e-10)
        assert by_name["E[xi.v]"].target == pytest.approx(0.0, abs=1e-10)

    def test_shifted_samples_fail(self):
        ens = _invariant_ensemble(400, 11, seed=31, shift=0.5)
        report = stationarity_audit(ens, RADIAL_2, burn_in=0.5)
        assert not report.passed
        assert "E[xi_1]" in report.flagged
        assert report.max_abs_z > 10.0

    def test_to_dict_round_trip(self):
        ens = _invariant_ensemble(400, 11, seed=31)
        d = stationarity_audit(ens, RADIAL_2).to_dict()
        assert set(d) == {"n_paths", "burn_in", "passed", "max_abs_z",
                          "flagged", "checks"}
        assert d["passed"] is True
        assert {c["name"] for c in d["checks"]} >= {"E[xi_1]", "E[v_2v_2]", "E[xi.v]"}

    def test_burn_in_validation(self):
        ens = _invariant_ensemble(400, 11, seed=31)
        with pytest.raises(ConfigError):
            stationarity_audit(ens, RADIAL_2, burn_in=1.0)

    def test_needs_min_paths(self):
        ens = _invariant_ensemble(50, 11, seed=31)
        with pytest.raises(ConfigError):
            stationarity_audit(ens, RADIAL_2)


class TestFitDecay:
    @pytest.mark.parametrize("lam", [0.1, 1.0, 5.0])
    def test_recovers_rate(self, lam):
        series = _synthetic_series(lam, 0.7)
        fit = fit_decay(series, target=0.0)
        assert fit.lambda_hat == pytest.approx(lam, rel=0.05)
        assert fit.prefactor == pytest.approx(0.7, rel=0.05)
        assert fit.r_squared > 0.99
        assert not fit.flagged
        assert not fit.oscillatory
        assert fit.n_points >= 10

    def test_oscillatory_envelope(self):
        # damped oscillation: the fit must switch to the peak envelope and
        # recover the envelope rate, not the slope through the zero dips
        times = np.arange(0.0, 12.0 + 1e-9, 0.2)
        means = 2.0 * np.exp(-0.5 * times) * np.cos(1.2 * times)
        series = ObservableSeries(
            times=times, means=means,
            stderrs=np.full(times.size, 1e-4),
            observable="xi_1", n_paths=200,
            config=SimConfig(d=2, sigma=1.0, n_steps=times.size - 1, dt=0.2),
        )
        fit = fit_decay(series, target=0.0)
        assert fit.oscillatory
        assert fit.lambda_hat == pytest.approx(0.5, rel=0.1)
        assert fit.r_squared > 0.99
        assert not fit.flagged
        assert 3 <= fit.n_points <= 8

    def test_recovers_rate_with_offset_target(self):
        series = _synthetic_series(1.0, 0.7, target=0.25)
        fit = fit_decay(series, target=0.25)
        assert fit.lambda_hat == pytest.approx(1.0, rel=0.05)

    def test_window_excludes_noise_floor(self):
        # with a high floor the usable window ends where the signal sinks
        # below 3 SE, well before the last sample
        series = _synthetic_series(1.0, 0.7, floor=1e-3)
        fit = fit_decay(series, target=0.0)
        assert fit.window[1] < 6.0 < series.times[-1]

    def test_insufficient_signal(self):
        cfg = SimConfig(d=2, sigma=1.0, n_steps=10)
        series = ObservableSeries(
            times=np.linspace(0, 5, 40), means=np.zeros(40),
            stderrs=np.full(40, 1e-3), observable="x", n_paths=100, config=cfg,
        )
        with pytest.raises(InsufficientSignal):
            fit_decay(series, target=0.0)

    def test_non_decaying_series_flagged(self):
        cfg = SimConfig(d=2, sigma=1.0, n_steps=10)
        series = ObservableSeries(
            times=np.linspace(0, 5, 40), means=np.full(40, 0.5),
            stderrs=np.full(40, 1e-4), observable="x", n_paths=100, config=cfg,
        )
        fit = fit_decay(series, target=0.0)
        assert fit.flagged
        assert fit.lambda_hat == 0.0


class TestRateFormula:
    P = RateParams(eta=2.0, sigma=1.5, K1=0.8, K2=1.2, K3=0.5)

    def test_hand_evaluated_value(self):
        # eta/(1+eta) = 2/3, sigma^2 = 2.25: 2/3 * 1.8 / (1 + 2.7 + 2.53125)
        assert hypocoercivity_rate(self.P) == pytest.approx(
            0.19257773319959878, abs=1e-12
        )

    def test_optimal_sigma_is_numeric_argmax(self):
        def negated(s):
            return -hypocoercivity_rate(
                RateParams(eta=2.0, sigma=s, K1=0.8, K2=1.2, K3=0.5)
            )

        res = optimize.minimize_scalar(negated, bounds=(1e-3, 10.0),
                                       method="bounded",
                                       options={"xatol": 1e-10})
        assert optimal_sigma(self.P) == pytest.approx(res.x, abs=1e-6)
        assert optimal_sigma(self.P) == pytest.approx(0.5 ** -0.25, abs=1e-15)

    def test_value_at_optimum(self):
        star = RateParams(eta=2.0, sigma=optimal_sigma(self.P),
                          K1=0.8, K2=1.2, K3=0.5)
        closed = (2.0 / 3.0) * 0.8 / (1.2 + 2.0 * np.sqrt(0.5))
        assert hypocoercivity_rate(star) == pytest.approx(closed, abs=1e-12)

    def test_vanishing_limits(self):
        for s in (1e-8, 1e8):
            p = RateParams(eta=2.0, sigma=s, K1=0.8, K2=1.2, K3=0.5)
            assert hypocoercivity_rate(p) < 1e-10

    def test_monotone_in_eta(self):
        rates = [
            hypocoercivity_rate(RateParams(eta=e, sigma=1.0, K1=1.0, K2=1.0, K3=1.0))
            for e in (0.1, 0.5, 1.0, 5.0, 50.0)
        ]
        assert rates == sorted(rates)

    @pytest.mark.parametrize("kwargs", [
        {"eta": 0.0}, {"sigma": -1.0}, {"K1": 0.0}, {"K3": -2.0},
        {"d": 3}, {"Lambda": 2.0}, {"d": 1, "Lambda": 2.0},
    ])
    def test_params_validation(self, kwargs):
        base = {"eta": 1.0, "sigma": 1.0, "K1": 1.0, "K2": 1.0, "K3": 1.0}
        with pytest.raises(ConfigError):
            RateParams(**{**base, **kwargs})

    def test_params_with_dimension_info(self):
        p = RateParams(eta=1.0, sigma=1.0, K1=1.0, K2=1.0, K3=1.0,
                       d=2, Lambda=4.0)
        assert p.d == 2 and p.Lambda == 4.0
