"""Tests for the path integrators: stepping, ensembles, noise, Picard."""

import numpy as np
import pytest

from fiberlay import (
    SCHEME_LOCAL,
    AngleState,
    ChartExit,
    ConfigError,
    FiberState,
    SimConfig,
    StepFailure,
    default_init,
    picard_solve_2d,
    run_ensemble,
    simulate,
    step_embedded,
    step_local,
    wiener_path,
)
from fiberlay import geometry, potential

ZERO_2 = potential.builtin_zero(2)
ZERO_3 = potential.builtin_zero(3)
RADIAL_2 = potential.builtin_radial_quadratic(2)
RADIAL_3 = potential.builtin_radial_quadratic(3)


def _collect_paths(cfg, pot, n_paths, **kwargs):
    """Run an ensemble and return the stacked (xi, w) record arrays."""
    xi_blocks, w_blocks = [], []

    def collector(times, path_start, xi, w, events):
        xi_blocks.append((path_start, xi.copy()))
        w_blocks.append(w.copy())

    times, events = run_ensemble(cfg, pot, n_paths, collectors=[collector], **kwargs)
    order = np.argsort([s for s, _ in xi_blocks])
    xi = np.concatenate([xi_blocks[i][1] for i in order])
    w = np.concatenate([w_blocks[i] for i in order])
    return times, xi, w, events


class _NanBeyondRadius:
    """Duck-typed potential whose gradient turns NaN outside a small ball.

    Satisfies the stepping-kernel contract (``grad``, ``value``,
    ``is_quadratic_diagonal``) so a path that wanders past the radius hits a
    non-finite state at a predictable step.
    """

    dim = 2
    is_quadratic_diagonal = False

    @staticmethod
    def value(x):
        return np.zeros(np.asarray(x).shape[:-1])

    @staticmethod
    def grad(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        g[np.linalg.norm(x, axis=-1) > 0.1] = np.nan
        return g


class TestConfig:
    def test_derived_quantities(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=600, dt=0.05, record_stride=3)
        assert cfg.horizon == pytest.approx(30.0)
        assert cfg.n_records == 201

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"d": 1},
            {"sigma": -0.1},
            {"dt": 0.0},
            {"n_steps": 0},
            {"scheme": "heun"},
            {"record_stride": 7},  # does not divide n_steps
            {"drift_scale": 0.7},
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        base = {"d": 2, "sigma": 1.0, "n_steps": 100}
        with pytest.raises(ConfigError):
            SimConfig(**{**base, **kwargs})

    def test_accepts_scaled_drift_convention(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=10, drift_scale=0.5)
        assert cfg.drift_scale == 0.5


class TestStates:
    def test_fiber_state_renormalizes(self):
        s = FiberState(xi=[1.0, 2.0], v=[0.6 + 1e-8, 0.8])
        assert np.linalg.norm(s.v) == pytest.approx(1.0, abs=1e-15)
        assert s.dim == 2

    def test_fiber_state_dimension_mismatch(self):
        with pytest.raises(ValueError):
            FiberState(xi=[1.0, 2.0, 3.0], v=[1.0, 0.0])

    def test_angle_state_dimension_mismatch(self):
        with pytest.raises(ValueError):
            AngleState(xi=[1.0, 2.0, 3.0, 4.0], theta=[0.3, 1.2])

    def test_default_init_matches_scheme(self):
        emb = default_init(SimConfig(d=3, sigma=1.0, n_steps=1))
        assert isinstance(emb, FiberState)
        np.testing.assert_array_equal(emb.v, [1.0, 0.0, 0.0])
        loc = default_init(SimConfig(d=3, sigma=1.0, n_steps=1, scheme=SCHEME_LOCAL))
        assert isinstance(loc, AngleState)
        np.testing.assert_allclose(
            geometry.embed_angles(loc.theta).v, [1.0, 0.0, 0.0], atol=1e-15
        )


class TestSingleSteps:
    def test_free_flight_embedded(self):
        cfg = SimConfig(d=2, sigma=0.0, n_steps=1, dt=0.01)
        state = FiberState(xi=[0.5, -1.0], v=[0.6, 0.8])
        for _ in range(50):
            state = step_embedded(state, np.zeros(2), cfg, ZERO_2)
        np.testing.assert_allclose(
            state.xi, [0.5 + 0.5 * 0.6, -1.0 + 0.5 * 0.8], atol=1e-14
        )
        np.testing.assert_allclose(state.v, [0.6, 0.8], atol=1e-15)

    def test_free_flight_local(self):
        cfg = SimConfig(d=3, sigma=0.0, n_steps=1, dt=0.01, scheme=SCHEME_LOCAL)
        theta0 = np.array([0.9, 1.1])
        state = AngleState(xi=np.zeros(3), theta=theta0)
        for _ in range(50):
            state = step_local(state, np.zeros(2), cfg, ZERO_3)
        # zero drift and zero noise leave the angles alone; xi advances
        # along the embedded direction
        np.testing.assert_allclose(state.theta, theta0, atol=1e-15)
        np.testing.assert_allclose(
            state.xi, 0.5 * geometry.embed_angles(theta0).v, atol=1e-14
        )

    def test_midpoint_position_update(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=1, dt=1e-3)
        rng = np.random.default_rng(5)
        w = rng.normal(size=3)
        state = FiberState(xi=[0.3, -0.2, 0.1], v=w / np.linalg.norm(w))
        for _ in range(20):
            dw = rng.normal(size=3) * np.sqrt(cfg.dt)
            new = step_embedded(state, dw, cfg, RADIAL_3)
            np.testing.assert_allclose(
                new.xi - state.xi, cfg.dt * 0.5 * (state.v + new.v), atol=1e-16
            )
            state = new

    def test_unit_norm_with_noise(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=1, dt=1e-3)
        rng = np.random.default_rng(11)
        state = FiberState(xi=np.zeros(3), v=[0.0, 0.0, 1.0])
        for _ in range(500):
            state = step_embedded(state, rng.normal(size=3) * np.sqrt(cfg.dt), cfg, RADIAL_3)
            assert abs(np.linalg.norm(state.v) - 1.0) < 1e-13

    def test_wrong_increment_size(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=1)
        with pytest.raises(ValueError):
            step_embedded(FiberState(np.zeros(3), [1.0, 0, 0]), np.zeros(2), cfg, ZERO_3)
        with pytest.raises(ValueError):
            step_local(
                AngleState(np.zeros(3), [0.5, 1.0]),
                np.zeros(3),
                SimConfig(d=3, sigma=1.0, n_steps=1, scheme=SCHEME_LOCAL),
                ZERO_3,
            )

    def test_chart_exit_raised_near_pole(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=1, dt=1e-3, scheme=SCHEME_LOCAL)
        state = AngleState(xi=np.zeros(3), theta=[1.0, 0.05])
        with pytest.raises(ChartExit) as exc:
            step_local(state, np.array([0.0, -5.0]), cfg, ZERO_3)
        assert exc.value.j == 2
        attempted = exc.value.theta_j
        assert not (geometry.TOL_POLE < attempted < np.pi - geometry.TOL_POLE)

    def test_azimuth_wraps(self):
        cfg = SimConfig(d=2, sigma=1.0, n_steps=1, dt=1e-3, scheme=SCHEME_LOCAL)
        state = AngleState(xi=np.zeros(2), theta=[6.28])
        new = step_local(state, np.array([5.0]), cfg, ZERO_2)
        assert 0.0 <= new.theta[0] < 2.0 * np.pi


class TestSimulate:
    CFG = dict(d=2, sigma=1.0, n_steps=400, dt=1e-3, seed=42)

    def test_deterministic(self):
        a = simulate(SimConfig(**self.CFG), RADIAL_2)
        b = simulate(SimConfig(**self.CFG), RADIAL_2)
        assert a.error is None
        np.testing.assert_array_equal(a.xi, b.xi)
        np.testing.assert_array_equal(a.v, b.v)

    def test_seed_changes_path(self):
        a = simulate(SimConfig(**self.CFG), RADIAL_2)
        b = simulate(SimConfig(**{**self.CFG, "seed": 43}), RADIAL_2)
        assert not np.array_equal(a.xi, b.xi)

    def test_record_stride_subsamples(self):
        fine = simulate(SimConfig(**self.CFG), RADIAL_2)
        coarse = simulate(SimConfig(**self.CFG, record_stride=8), RADIAL_2)
        np.testing.assert_array_equal(coarse.xi, fine.xi[::8])
        np.testing.assert_array_equal(coarse.v, fine.v[::8])
        np.testing.assert_array_equal(coarse.times, fine.times[::8])

    def test_time_grid(self):
        traj = simulate(SimConfig(d=2, sigma=0.5, n_steps=10, dt=0.25), ZERO_2)
        np.testing.assert_allclose(traj.times, 0.25 * np.arange(11))
        assert traj.n_records == 11

    def test_init_forms_agree(self):
        cfg = SimConfig(**self.CFG)
        # theta = 0 embeds exactly to e_1, so all three runs agree bitwise
        xi0, v0 = np.array([0.2, -0.4]), np.array([1.0, 0.0])
        a = simulate(cfg, RADIAL_2, init=(xi0, v0))
        b = simulate(cfg, RADIAL_2, init=FiberState(xi=xi0, v=v0))
        c = simulate(cfg, RADIAL_2, init=AngleState(xi=xi0, theta=[0.0]))
        np.testing.assert_array_equal(a.xi, b.xi)
        np.testing.assert_array_equal(a.xi, c.xi)

    def test_init_cross_chart(self):
        cfg = SimConfig(**self.CFG, scheme=SCHEME_LOCAL)
        v0 = geometry.UnitVector([0.6, 0.8]).v
        a = simulate(cfg, RADIAL_2, init=FiberState(xi=np.zeros(2), v=v0))
        theta0 = geometry.angles_from_point(v0).theta
        b = simulate(cfg, RADIAL_2, init=AngleState(xi=np.zeros(2), theta=theta0))
        np.testing.assert_array_equal(a.xi, b.xi)

    def test_init_dimension_mismatch(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=10)
        with pytest.raises(ConfigError):
            simulate(cfg, RADIAL_3, init=(np.zeros(2), np.array([1.0, 0.0])))

    def test_unit_speed_and_norm_margins(self):
        cfg = SimConfig(d=3, sigma=1.0, n_steps=10_000, dt=1e-3, seed=7)
        traj = simulate(cfg, RADIAL_3)
        assert traj.error is None
        norms = np.linalg.norm(traj.v, axis=-1)
        assert np.max(np.abs(norms - 1.0)) < 1e-12
        steps = np.linalg.norm(np.diff(traj.xi, axis=0), axis=-1)
        assert np.max(steps) <= cfg.dt * (1.0 + 1e-12)

    def test_partial_trajectory_on_failure(self):
        # straight flight from the origin crosses the NaN radius 0.1 near
        # step 100 (the exact step depends on float accumulation of dt)
        cfg = SimConfig(d=2, sigma=0.0, n_steps=400, dt=1e-3)
        traj = simulate(cfg, _NanBeyondRadius())
        assert traj.error is not None and "non-finite" in traj.error
        assert 95 <= traj.xi.shape[0] <= 105
        assert np.all(np.isfinite(traj.xi)) and np.all(np.isfinite(traj.v))
        assert traj.times.shape[0] == traj.xi.shape[0]

    def test_ensemble_raises_on_failure(self):
        cfg = SimConfig(d=2, sigma=0.0, n_steps=400, dt=1e-3)
        with pytest.raises(StepFailure):
            run_ensemble(cfg, _NanBeyondRadius(), 4)


class TestEnsemble:
    CFG = dict(d=2, sigma=1.0, n_steps=250, dt=1e-3, seed=9, record_stride=5)

    def test_path_zero_matches_simulate(self):
        cfg = SimConfig(**self.CFG)
        times, xi, w, _ = _collect_paths(cfg, RADIAL_2, 3)
        single = simulate(cfg, RADIAL_2)
        np.testing.assert_array_equal(xi[0], single.xi)
        np.testing.assert_array_equal(w[0], single.v)
        np.testing.assert_array_equal(times, single.times)
        assert not np.array_equal(xi[1], xi[0])
        assert not np.array_equal(xi[2], xi[1])

    def test_chunking_invariance(self):
        cfg = SimConfig(**self.CFG)
        _, xi_a, w_a, _ = _collect_paths(cfg, RADIAL_2, 7, chunk_paths=2)
        _, xi_b, w_b, _ = _collect_paths(cfg, RADIAL_2, 7, chunk_paths=7)
        np.testing.assert_array_equal(xi_a, xi_b)
        np.testing.assert_array_equal(w_a, w_b)

    def test_thread_invariance(self):
        cfg = SimConfig(**self.CFG)
        _, xi_a, _, _ = _collect_paths(cfg, RADIAL_2, 6, chunk_paths=2, threads=1)
        _, xi_b, _, _ = _collect_paths(cfg, RADIAL_2, 6, chunk_paths=2, threads=3)
        np.testing.assert_array_equal(xi_a, xi_b)

    def test_collectors_run_in_path_order(self):
        starts = []

        def collector(times, path_start, xi, w, events):
            starts.append(path_start)

        run_ensemble(SimConfig(**self.CFG), RADIAL_2, 9,
                     collectors=[collector], chunk_paths=2, threads=3)
        assert starts == [0, 2, 4, 6, 8]

    def test_needs_positive_path_count(self):
        with pytest.raises(ConfigError):
            run_ensemble(SimConfig(**self.CFG), RADIAL_2, 0)

    def test_pole_events_logged_and_survived(self):
        cfg = SimConfig(d=3, sigma=2.0, n_steps=20_000, dt=1e-3, seed=17,
                        scheme=SCHEME_LOCAL, record_stride=10)
        traj = simulate(cfg, RADIAL_3)
        assert traj.error is None
        assert len(traj.events) > 0
        for ev in traj.events:
            assert ev.path == 0
            assert 0 <= ev.step < cfg.n_steps
            assert ev.angle_index == 2
            assert not (geometry.TOL_POLE < ev.theta < np.pi - geometry.TOL_POLE)
        # the recorded angles themselves never leave the valid chart band
        interior = traj.theta[:, 1:]
        assert np.all(interior > geometry.TOL_POLE)
        assert np.all(interior < np.pi - geometry.TOL_POLE)
        assert np.all(np.isfinite(traj.xi))


class TestWienerPath:
    def test_reproducible(self):
        a = wiener_path(seed=3, dims=2, dt=0.01, n=50)
        b = wiener_path(seed=3, dims=2, dt=0.01, n=50)
        np.testing.assert_array_equal(a.increments, b.increments)
        c = wiener_path(seed=4, dims=2, dt=0.01, n=50)
        assert not np.array_equal(a.increments, c.increments)

    def test_increment_statistics(self):
        path = wiener_path(seed=0, dims=2, dt=0.01, n=20_000)
        var = path.increments.var(axis=0)
        np.testing.assert_allclose(var, 0.01, rtol=0.05)
        assert np.all(np.abs(path.increments.mean(axis=0)) < 3 * np.sqrt(0.01 / 20_000))

    def test_cumulative_and_times(self):
        path = wiener_path(seed=1, dims=3, dt=0.5, n=8)
        w = path.cumulative()
        assert w.shape == (9, 3)
        np.testing.assert_array_equal(w[0], np.zeros(3))
        np.testing.assert_allclose(np.diff(w, axis=0), path.increments, atol=1e-16)
        np.testing.assert_allclose(path.times, 0.5 * np.arange(9))

    def test_increments_frozen(self):
        path = wiener_path(seed=1, dims=1, dt=0.1, n=4)
        assert not path.increments.flags.writeable

    @pytest.mark.parametrize("kwargs", [{"dt": 0.0}, {"dims": 0}, {"n": 0}])
    def test_validation(self, kwargs):
        base = {"seed": 0, "dims": 1, "dt": 0.1, "n": 10}
        with pytest.raises(ConfigError):
            wiener_path(**{**base, **kwargs})


class TestPicard:
    @staticmethod
    def _psi(x):
        return -RADIAL_2.grad(x)

    def test_gap_decay(self):
        path = wiener_path(seed=3, dims=1, dt=1e-3, n=1000)
        res = picard_solve_2d(self._psi, path, x0=(0.5, 0.0, 0.3), n_iter=18)
        assert res.gaps.shape == (18,)
        assert np.all(res.gaps > 0)
        assert np.all(res.gaps[2:] < res.gaps[1:-1])
        assert res.gaps[-1] < 1e-12
        # contraction ratios shrink, the signature of factorial decay;
        # individual ratios are noisy, so compare geometric means
        ratios = res.gaps[1:] / res.gaps[:-1]
        early = np.exp(np.mean(np.log(ratios[1:5])))
        late = np.exp(np.mean(np.log(ratios[9:13])))
        assert late < 0.7 * early

    def test_matches_euler_reference(self):
        from _oracles import euler_reference_2d

        path = wiener_path(seed=8, dims=1, dt=2e-4, n=5000)
        res = picard_solve_2d(self._psi, path, x0=(0.5, 0.0, 0.3), n_iter=20)
        ref = euler_reference_2d(self._psi, path.times, path.increments[:, 0],
                                 (0.5, 0.0, 0.3))
        gap = np.max(np.abs(res.states[:, :2] - ref[:, :2]))
        assert gap < 5e-3

    def test_zero_field_is_free_flight(self):
        path = wiener_path(seed=2, dims=1, dt=1e-3, n=200)
        res = picard_solve_2d(lambda x: np.zeros_like(x), path,
                              x0=(0.0, 0.0, 0.3), n_iter=8, sigma=0.0)
        t = path.times
        np.testing.assert_allclose(res.states[:, 0], t * np.cos(0.3), atol=1e-12)
        np.testing.assert_allclose(res.states[:, 1], t * np.sin(0.3), atol=1e-12)
        np.testing.assert_allclose(res.states[:, 2], 0.3, atol=1e-15)

    def test_needs_scalar_noise(self):
        path = wiener_path(seed=0, dims=2, dt=1e-3, n=10)
        with pytest.raises(ValueError):
            picard_solve_2d(self._psi, path, x0=(0.0, 0.0, 0.0))
