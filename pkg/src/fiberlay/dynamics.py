"""Time stepping of the fiber lay-down process, in both formulations.

The process is the pair (xi_t, v_t) on R^d x S^{d-1}:

    d xi = v dt,
    d v  = -kappa (I - v v^T) grad Phi(xi) dt + sigma (I - v v^T) o dW   (Stratonovich),

integrated either in the embedding ("embedded-heun-projected": Stratonovich
Heun predictor-corrector plus renormalization, midpoint rule for xi) or in
spherical chart coordinates ("local-euler": Euler-Maruyama on the chart-form
drift, which already contains the geometric cot correction).  The drift
scale kappa is 1 by default; the ergodic diagnostics use kappa = 1/(d-1),
the convention under which exp(-Phi) dxi (x) nu is invariant.

Also here: reproducible Wiener paths, deterministic seeded ensembles
(embarrassingly parallel, per-path seeds derived from the master seed), and
the pathwise Picard-iteration solver used to validate the d=2 dynamics
against a fixed Brownian path.

Usage::

    from fiberlay import dynamics, potential

    pot = potential.builtin_radial_quadratic(2)
    cfg = dynamics.SimConfig(d=2, sigma=0.5, n_steps=20_000, seed=42)
    traj = dynamics.simulate(cfg, pot)
    traj.to_csv("trajectory.csv")
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import ChartExit, ConfigError, PoleSingularity, StepFailure
from .geometry import TOL_POLE, SphericalAngles, UnitVector, _embed, angles_from_point
from .potential import PotentialSpec

__all__ = [
    "FiberState",
    "AngleState",
    "SimConfig",
    "WienerPath",
    "Trajectory",
    "ChartExitEvent",
    "PicardResult",
    "step_embedded",
    "step_local",
    "simulate",
    "run_ensemble",
    "wiener_path",
    "picard_solve_2d",
    "default_init",
]

SCHEME_EMBEDDED = "embedded-heun-projected"
SCHEME_LOCAL = "local-euler"


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberState:
    """Global-chart state: position xi in R^d, direction v on S^{d-1}."""

    xi: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float).reshape(-1)
        v = UnitVector(self.v).v  # validates and renormalizes
        if xi.size != v.size:
            raise ValueError("xi and v must have the same dimension")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.xi.size


@dataclass(frozen=True)
class AngleState:
    """Local-chart state: position xi in R^d, chart angles theta."""

    xi: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float).reshape(-1)
        theta = SphericalAngles(self.theta).theta  # validates
        if xi.size != theta.size + 1:
            raise ValueError("xi must have dimension len(theta) + 1")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "theta", theta)

    @property
    def dim(self) -> int:
        return self.xi.size


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``dt * n_steps`` is the horizon T; ``record_stride`` must divide
    ``n_steps``; ``drift_scale`` must be 1 (plain convention) or 1/(d-1)
    (the convention under which exp(-Phi) dxi (x) nu is invariant — for
    d = 2 the two coincide).
    """

    d: int
    sigma: float
    n_steps: int
    dt: float = 1e-3
    seed: int = 0
    scheme: str = SCHEME_EMBEDDED
    drift_scale: float = 1.0
    record_stride: int = 1

    def __post_init__(self):
        if self.d < 2:
            raise ConfigError("d must be >= 2")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")
        if self.scheme not in (SCHEME_EMBEDDED, SCHEME_LOCAL):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.record_stride < 1 or self.n_steps % self.record_stride != 0:
            raise ConfigError("record_stride must be >= 1 and divide n_steps")
        allowed = (1.0, 1.0 / (self.d - 1))
        if not any(abs(self.drift_scale - k) <= 1e-12 for k in allowed):
            raise ConfigError("drift_scale must be 1 or 1/(d-1)")

    @property
    def horizon(self) -> float:
        """Final time T = dt * n_steps."""
        return self.dt * self.n_steps

    @property
    def n_records(self) -> int:
        """Number of recorded states, including the initial one."""
        return self.n_steps // self.record_stride + 1


@dataclass(frozen=True)
class WienerPath:
    """Pre-drawn Brownian increments, reproducible from the seed.

    ``increments[k]`` is W_{t_{k+1}} - W_{t_k} with variance dt per
    component; identical (seed, dims, dt, n) give bit-identical arrays.
    """

    seed: int
    dims: int
    dt: float
    increments: np.ndarray

    @property
    def n(self) -> int:
        return self.increments.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n + 1)

    def cumulative(self) -> np.ndarray:
        """Path values W at the grid times (starting from 0), shape (n+1, dims)."""
        out = np.zeros((self.n + 1, self.dims))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out


@dataclass(frozen=True)
class ChartExitEvent:
    """A local-coordinate path left the chart and took a global-chart detour."""

    path: int
    step: int
    angle_index: int  # 1-based j of the offending angle
    theta: float  # the attempted (rejected) angle value


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of one path.

    ``v`` is filled for the embedded scheme, ``theta`` for the local scheme.
    ``error`` is None for a clean run; a failed run carries the failure
    message and the records gathered before the failure.
    """

    times: np.ndarray
    xi: np.ndarray
    config: SimConfig
    scheme: str
    v: np.ndarray | None = None
    theta: np.ndarray | None = None
    events: tuple[ChartExitEvent, ...] = ()
    error: str | None = None

    @property
    def n_records(self) -> int:
        return self.times.size

    def directions(self) -> np.ndarray:
        """Unit directions at the records, embedding theta when needed."""
        if self.v is not None:
            return self.v
        return _embed(self.theta)

    def to_csv(self, path_or_file) -> None:
        """Write the trajectory in the versioned CSV format."""
        from ._formats import write_trajectory_csv

        write_trajectory_csv(self, path_or_file)


# ---------------------------------------------------------------------------
# single steps (the public one-step operations; ensembles use the block kernels)
# ---------------------------------------------------------------------------


def step_embedded(state: FiberState, dW, cfg: SimConfig, pot: PotentialSpec) -> FiberState:
    """One projected Stratonovich-Heun step of the embedded formulation.

    The v-update is a Heun predictor-corrector for drift
    -kappa (I - v v^T) grad Phi and diffusion sigma (I - v v^T), followed by
    renormalization; xi advances by the midpoint rule
    xi + dt (v_old + v_new)/2, so |xi_t - xi_s| <= t - s holds exactly.
    """
    xi = state.xi.copy().reshape(1, -1)
    v = state.v.copy().reshape(1, -1)
    incr = np.asarray(dW, dtype=float).reshape(1, 1, -1)
    if incr.shape[2] != cfg.d:
        raise ValueError("dW must have d components")
    no_rec = np.empty(0, dtype=np.int64)
    empty = np.empty((1, 0, cfg.d))
    kernels._ref.embedded_block(
        xi, v, incr, cfg.dt, cfg.sigma, cfg.drift_scale, pot.grad,
        0, no_rec, empty, empty, 0,
    )
    return FiberState(xi=xi[0], v=v[0])


def step_local(state: AngleState, dW, cfg: SimConfig, pot: PotentialSpec) -> AngleState:
    """One Euler-Maruyama step of the chart-coordinate formulation.

    The drift is the chart-form drift (potential term scaled by kappa, plus
    the geometric cot correction); theta_1 wraps modulo 2*pi.

    Raises
    ------
    ChartExit
        If an interior angle lands within pole tolerance of {0, pi}.
    """
    d = cfg.d
    xi = state.xi.copy().reshape(1, -1)
    th = state.theta.copy().reshape(1, -1)
    incr = np.asarray(dW, dtype=float).reshape(1, 1, -1)
    if incr.shape[2] != d - 1:
        raise ValueError("dW must have d - 1 components")

    def refuse(_p, _xi, _th, _step, j, theta_j):
        raise ChartExit(j, theta_j)

    no_rec = np.empty(0, dtype=np.int64)
    kernels._ref.local_block(
        xi, th, incr, cfg.dt, cfg.sigma, cfg.drift_scale, pot.grad,
        0, no_rec, np.empty((1, 0, d)), np.empty((1, 0, d - 1)), 0,
        TOL_POLE, refuse,
    )
    return AngleState(xi=xi[0], theta=th[0])


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


def default_init(cfg: SimConfig) -> FiberState | AngleState:
    """Default start: xi = 0, direction e_1 (in the scheme's chart)."""
    xi = np.zeros(cfg.d)
    if cfg.scheme == SCHEME_EMBEDDED:
        v = np.zeros(cfg.d)
        v[0] = 1.0
        return FiberState(xi=xi, v=v)
    theta = np.full(cfg.d - 1, math.pi / 2.0)
    theta[0] = 0.0
    return AngleState(xi=xi, theta=theta)


def _resolve_init(cfg: SimConfig, init) -> tuple[np.ndarray, np.ndarray]:
    """Return (xi0, w0) where w0 is v or theta according to the scheme."""
    if init is None:
        init = default_init(cfg)
    if isinstance(init, tuple):
        xi0, w0 = init
        if cfg.scheme == SCHEME_EMBEDDED:
            init = FiberState(xi=xi0, v=w0)
        else:
            init = AngleState(xi=xi0, theta=w0)
    if cfg.scheme == SCHEME_EMBEDDED and isinstance(init, AngleState):
        init = FiberState(xi=init.xi, v=_embed(init.theta))
    elif cfg.scheme == SCHEME_LOCAL and isinstance(init, FiberState):
        init = AngleState(xi=init.xi, theta=angles_from_point(init.v).theta)
    if init.dim != cfg.d:
        raise ConfigError(f"init has dimension {init.dim}, config wants {cfg.d}")
    w0 = init.v if isinstance(init, FiberState) else init.theta
    return init.xi.copy(), w0.copy()


def _heun_step_single(xi, v, dw, dt, sigma, kappa, grad):
    """One embedded Heun step for a single path (used by the pole fallback)."""
    xi2 = xi.reshape(1, -1).copy()
    v2 = v.reshape(1, -1).copy()
    kernels._ref.embedded_block(
        xi2, v2, dw.reshape(1, 1, -1), dt, sigma, kappa, grad,
        0, np.empty(0, dtype=np.int64), np.empty((1, 0, xi.size)),
        np.empty((1, 0, xi.size)), 0,
    )
    return xi2[0], v2[0]


@dataclass
class _ChunkResult:
    path_start: int
    xi: np.ndarray  # (p, m, d), truncated on failure
    w: np.ndarray  # directions (p, m, d) or angles (p, m, d-1)
    events: list
    error: str | None = None
    fail_step: int | None = None


def _run_chunk(
    cfg: SimConfig,
    pot: PotentialSpec,
    backend,
    xi0: np.ndarray,
    w0: np.ndarray,
    path_start: int,
    n_chunk: int,
    block_steps: int,
) -> _ChunkResult:
    d = cfg.d
    local = cfg.scheme == SCHEME_LOCAL
    k = d - 1 if local else d
    m = cfg.n_records
    sqrt_dt = math.sqrt(cfg.dt)

    xi = np.tile(xi0, (n_chunk, 1))
    w = np.tile(w0, (n_chunk, 1))
    rec_xi = np.empty((n_chunk, m, d))
    rec_w = np.empty((n_chunk, m, k))
    rec_xi[:, 0] = xi
    rec_w[:, 0] = w
    gens = [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence((cfg.seed, p))))
        for p in range(path_start, path_start + n_chunk)
    ]
    events: list[ChartExitEvent] = []

    def pole_fallback(p_local, xi_row, th_row, global_step, j, theta_j):
        events.append(
            ChartExitEvent(
                path=path_start + p_local, step=global_step,
                angle_index=j, theta=theta_j,
            )
        )
        rng = gens[p_local]
        v_row = _embed(th_row)
        for _ in range(64):
            dw = rng.standard_normal(d) * sqrt_dt
            xi_new, v_new = _heun_step_single(
                xi_row, v_row, dw, cfg.dt, cfg.sigma, cfg.drift_scale, pot.grad
            )
            try:
                th_new = angles_from_point(v_new).theta.copy()
            except PoleSingularity:
                continue  # re-take the same step with fresh noise
            return xi_new, th_new
        raise StepFailure(global_step, "pole fallback kept landing at a pole")

    rec_base = 1
    s0 = 0
    try:
        while s0 < cfg.n_steps:
            nb = min(block_steps, cfg.n_steps - s0)
            incr = np.empty((n_chunk, nb, k))
            for i, g in enumerate(gens):
                incr[i] = g.standard_normal((nb, k))
            incr *= sqrt_dt
            first = (cfg.record_stride - 1 - (s0 % cfg.record_stride)) % cfg.record_stride
            offsets = np.arange(first, nb, cfg.record_stride, dtype=np.int64)
            if local:
                backend.local_block(
                    xi, w, incr, cfg.dt, cfg.sigma, cfg.drift_scale, s0,
                    offsets, rec_xi, rec_w, rec_base, TOL_POLE, pole_fallback,
                )
            else:
                backend.embedded_block(
                    xi, w, incr, cfg.dt, cfg.sigma, cfg.drift_scale, s0,
                    offsets, rec_xi, rec_w, rec_base,
                )
            rec_base += offsets.size
            s0 += nb
    except StepFailure as err:
        # initial record + one record per completed step divisible by the stride
        done = 1 + err.step // cfg.record_stride
        return _ChunkResult(
            path_start, rec_xi[:, :done], rec_w[:, :done], events,
            error=str(err), fail_step=err.step,
        )
    return _ChunkResult(path_start, rec_xi, rec_w, events)


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("FIBERLAY_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def run_ensemble(
    cfg: SimConfig,
    pot: PotentialSpec,
    n_paths: int,
    init=None,
    collectors: Sequence[Callable] = (),
    chunk_paths: int | None = None,
    block_steps: int = 2048,
    threads: int | None = None,
) -> tuple[np.ndarray, list[ChartExitEvent]]:
    """Run a seeded ensemble, streaming recorded chunks to collectors.

    Paths are independent; path p uses the generator seeded from
    (cfg.seed, p), so results are reproducible for a fixed configuration and
    invariant to chunking.  Each collector is called, in increasing path
    order, as ``collector(times, path_start, xi_block, w_block, events)``
    where ``xi_block`` has shape (p, m, d) and ``w_block`` holds directions
    (embedded scheme) or angles (local scheme).

    Chunks may be computed by up to FIBERLAY_THREADS workers (``threads``
    overrides); collectors always run serially in deterministic order.

    Returns
    -------
    (times, events)
        Recorded times and all chart-exit events.

    Raises
    ------
    StepFailure
        If any path produces a non-finite state (no partial results).
    """
    if n_paths < 1:
        raise ConfigError("n_paths must be >= 1")
    xi0, w0 = _resolve_init(cfg, init)
    backend = kernels.select_backend(pot)
    m = cfg.n_records
    if chunk_paths is None:
        # keep a chunk's record buffers near ~64 MB
        per_path = m * (2 * cfg.d) * 8
        chunk_paths = int(min(1024, max(1, 64e6 // max(per_path, 1))))
    times = cfg.dt * cfg.record_stride * np.arange(m)
    starts = list(range(0, n_paths, chunk_paths))

    def compute(start):
        return _run_chunk(
            cfg, pot, backend, xi0, w0, start,
            min(chunk_paths, n_paths - start), block_steps,
        )

    all_events: list[ChartExitEvent] = []

    def consume(chunk: _ChunkResult):
        if chunk.error is not None:
            raise StepFailure(chunk.fail_step, chunk.error)
        all_events.extend(chunk.events)
        for c in collectors:
            c(times, chunk.path_start, chunk.xi, chunk.w, chunk.events)

    n_workers = _thread_count(threads)
    if n_workers <= 1 or len(starts) == 1:
        for start in starts:
            consume(compute(start))
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for chunk in pool.map(compute, starts):
                consume(chunk)
    return times, all_events


def simulate(cfg: SimConfig, pot: PotentialSpec, init=None) -> Trajectory:
    """Integrate a single trajectory; deterministic given the configuration.

    Records every ``record_stride`` steps (the initial state included).  On
    a non-finite state the partial trajectory is returned with the failure
    message in ``Trajectory.error``.
    """
    xi0, w0 = _resolve_init(cfg, init)
    backend = kernels.select_backend(pot)
    chunk = _run_chunk(cfg, pot, backend, xi0, w0, 0, 1, 4096)
    m = chunk.xi.shape[1]
    times = cfg.dt * cfg.record_stride * np.arange(m)
    local = cfg.scheme == SCHEME_LOCAL
    return Trajectory(
        times=times,
        xi=chunk.xi[0],
        v=None if local else chunk.w[0],
        theta=chunk.w[0] if local else None,
        config=cfg,
        scheme=cfg.scheme,
        events=tuple(chunk.events),
        error=chunk.error,
    )


# ---------------------------------------------------------------------------
# Wiener paths and the Picard validation solver
# ---------------------------------------------------------------------------


def wiener_path(seed: int, dims: int, dt: float, n: int) -> WienerPath:
    """Draw a reproducible Brownian increment array (variance dt each)."""
    if dt <= 0:
        raise ConfigError("dt must be > 0")
    if dims < 1 or n < 1:
        raise ConfigError("dims and n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    incr = rng.standard_normal((n, dims)) * math.sqrt(dt)
    incr.setflags(write=False)
    return WienerPath(seed=seed, dims=dims, dt=dt, increments=incr)


@dataclass(frozen=True)
class PicardResult:
    """Output of :func:`picard_solve_2d`.

    ``gaps[i]`` is D^{(i+1)} = max_t |X^{(i+1)} - X^{(i)}|; successive ratios
    fall off factorially for locally Lipschitz fields.
    """

    times: np.ndarray
    states: np.ndarray  # (n+1, 3): xi_1, xi_2, alpha
    gaps: np.ndarray
    n_iter: int


def picard_solve_2d(
    psi,
    path: WienerPath,
    x0,
    n_iter: int = 30,
    sigma: float = 1.0,
) -> PicardResult:
    """Picard iteration for the planar dynamics along a fixed Brownian path.

    Iterates X^{(n+1)}(t) = x0 + int_0^t b(X^{(n)}(s)) ds + (0, 0, sigma W_t)
    on the path's time grid (trapezoid quadrature for the integral), where
    the state is x = (xi_1, xi_2, alpha) and

        b(xi, alpha) = (cos alpha, sin alpha, psi(xi) . (-sin alpha, cos alpha)).

    Parameters
    ----------
    psi : callable
        Vectorized planar field, (n, 2) -> (n, 2) (e.g. -grad Phi).
    path : WienerPath
        One-dimensional driving noise; defines the grid.
    x0 : array_like (3,)
        Initial state (xi_1, xi_2, alpha).
    n_iter : int
        Number of Picard iterations.
    sigma : float
        Noise amplitude in front of W.
    """
    if path.dims != 1:
        raise ValueError("picard_solve_2d needs a one-dimensional Wiener path")
    x0 = np.asarray(x0, dtype=float).reshape(3)
    times = path.times
    w = path.cumulative()[:, 0]
    noise = np.zeros((times.size, 3))
    noise[:, 2] = sigma * w

    def b(states: np.ndarray) -> np.ndarray:
        al = states[:, 2]
        c, s = np.cos(al), np.sin(al)
        p = np.asarray(psi(states[:, :2]), dtype=float)
        return np.stack([c, s, -p[:, 0] * s + p[:, 1] * c], axis=-1)

    states = np.tile(x0, (times.size, 1))
    gaps = []
    for _ in range(n_iter):
        bx = b(states)
        integral = np.zeros_like(states)
        np.cumsum(0.5 * path.dt * (bx[:-1] + bx[1:]), axis=0, out=integral[1:])
        new = x0 + integral + noise
        gaps.append(float(np.max(np.linalg.norm(new - states, axis=1))))
        states = new
    return PicardResult(times=times, states=states, gaps=np.asarray(gaps), n_iter=n_iter)
