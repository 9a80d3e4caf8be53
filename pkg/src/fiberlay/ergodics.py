"""Ergodicity diagnostics and the hypocoercive decay-rate calculator.

Three empirical questions about the simulated process are answered here,
each against targets produced by an independent oracle (quadrature or
closed form — never the simulator itself):

* mixing: does the ensemble mean E[f(X_t)] from a deterministic start
  converge to the invariant-measure average of f? (:func:`mixing_series`)
* stationarity: do post-burn-in empirical moments match the invariant
  measure mu = e^{-Phi} dxi (x) nu? (:func:`stationarity_audit`)
* decay rate: at what empirical exponential rate does the deviation from
  the target die, and what does the guaranteed-rate formula

      lambda = eta/(1+eta) * K1 sigma^2 / (1 + K2 sigma^2 + K3 sigma^4)

  evaluate to? (:func:`fit_decay`, :func:`hypocoercivity_rate`)

The fitted rate ``lambda_hat`` is an observed decay rate; the formula's
``lambda`` is a guaranteed lower bound given constants K1-K3 that depend
on the potential but have no computable recipe — they remain user inputs,
which :func:`rate_constants_report` documents alongside the sub-constants
that ARE computable.

All ensemble runs use the drift scale kappa = 1/(d-1), the convention
under which mu is invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import SCHEME_LOCAL, SimConfig, run_ensemble
from .errors import ConfigError, InsufficientSignal
from .geometry import _embed
from .operators import ProductQuadrature, coercivity_constants, mu_drift_scale, product_quadrature
from .potential import PotentialSpec

__all__ = [
    "Observable",
    "ObservableSeries",
    "DecayFit",
    "RateParams",
    "StationarityReport",
    "collect_ensemble",
    "mixing_series",
    "stationarity_audit",
    "fit_decay",
    "hypocoercivity_rate",
    "rate_constants_report",
    "position_component",
    "position_square",
    "radius_square",
    "direction_component",
    "direction_product",
    "alignment",
]

MIN_PATHS = 100


# ---------------------------------------------------------------------------
# observables (polynomials of degree <= 2, so targets are quadrature-exact)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Observable:
    """A tagged scalar observable f(xi, v), batched over the leading axis."""

    tag: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, xi: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.fn(xi, v)


def position_component(i: int) -> Observable:
    return Observable(f"xi_{i + 1}", lambda xi, v: xi[..., i])


def position_square(i: int) -> Observable:
    return Observable(f"xi_{i + 1}^2", lambda xi, v: xi[..., i] ** 2)


def radius_square() -> Observable:
    return Observable("|xi|^2", lambda xi, v: np.sum(xi**2, axis=-1))


def direction_component(i: int) -> Observable:
    return Observable(f"v_{i + 1}", lambda xi, v: v[..., i])


def direction_product(i: int, j: int) -> Observable:
    return Observable(f"v_{i + 1}v_{j + 1}", lambda xi, v: v[..., i] * v[..., j])


def alignment() -> Observable:
    return Observable("xi.v", lambda xi, v: np.sum(xi * v, axis=-1))


def _as_observable(f) -> Observable:
    if isinstance(f, Observable):
        return f
    return Observable(getattr(f, "__name__", "f"), f)


def _require_mu_convention(cfg: SimConfig):
    if abs(cfg.drift_scale - mu_drift_scale(cfg.d)) > 1e-12:
        raise ConfigError(
            "ergodic diagnostics need drift_scale = 1/(d-1), the convention "
            f"under which e^(-Phi) dxi (x) nu is invariant; got {cfg.drift_scale}"
        )


# ---------------------------------------------------------------------------
# ensemble collection and the mixing series
# ---------------------------------------------------------------------------


def collect_ensemble(cfg: SimConfig, pot: PotentialSpec, n_paths: int,
                     init=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run an ensemble and stack its records: (times, xi, v).

    ``xi`` and ``v`` have shape (n_paths, n_records, d); local-chart angles
    are embedded to unit directions so downstream statistics are chart-free.
    """
    xi_parts: list[np.ndarray] = []
    v_parts: list[np.ndarray] = []
    local = cfg.scheme == SCHEME_LOCAL

    def collect(times, start, xi, w, events):
        xi_parts.append(xi.copy())
        v_parts.append(_embed(w.reshape(-1, w.shape[-1])).reshape(xi.shape)
                       if local else w.copy())

    times, _ = run_ensemble(cfg, pot, n_paths, init=init, collectors=[collect])
    return times, np.concatenate(xi_parts), np.concatenate(v_parts)


@dataclass(frozen=True)
class ObservableSeries:
    """Ensemble mean of one observable along time, with standard errors.

    ``stderrs`` is the across-path sample standard deviation over
    sqrt(n_paths); the deterministic start makes it zero at t = 0.
    ``target`` is the invariant-measure average from the quadrature oracle.
    """

    times: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    observable: str
    n_paths: int
    config: SimConfig
    target: float | None = None

    def __post_init__(self):
        if self.n_paths < MIN_PATHS:
            raise ConfigError(f"need at least {MIN_PATHS} paths for standard errors")

    def deviation(self) -> np.ndarray:
        """|mean - target| along time (needs a target)."""
        if self.target is None:
            raise ConfigError("series carries no target")
        return np.abs(self.means - self.target)

    def to_csv(self, path_or_file) -> None:
        from ._formats import write_series_csv

        write_series_csv(self, path_or_file)


def mixing_series(cfg: SimConfig, pot: PotentialSpec, f, n_paths: int,
                  init=None, quad: ProductQuadrature | None = None) -> ObservableSeries:
    """Ensemble mean of f along time from a deterministic start.

    The comparison target int f dmu is computed by quadrature (built from
    ``pot`` when not supplied).  Streaming reduction: nothing is stored per
    path beyond running first and second moments.
    """
    obs = _as_observable(f)
    _require_mu_convention(cfg)
    if n_paths < MIN_PATHS:
        raise ConfigError(f"need at least {MIN_PATHS} paths")
    m = cfg.n_records
    s1 = np.zeros(m)
    s2 = np.zeros(m)
    local = cfg.scheme == SCHEME_LOCAL

    def collect(times, start, xi, w, events):
        nonlocal s1, s2
        v = (_embed(w.reshape(-1, w.shape[-1])).reshape(xi.shape)
             if local else w)
        vals = obs(xi, v)  # (paths, records)
        s1 += vals.sum(axis=0)
        s2 += (vals * vals).sum(axis=0)

    times, _ = run_ensemble(cfg, pot, n_paths, init=init, collectors=[collect])
    means = s1 / n_paths
    var = np.maximum(s2 / n_paths - means**2, 0.0) * n_paths / (n_paths - 1)
    stderrs = np.sqrt(var / n_paths)
    if quad is None:
        quad = product_quadrature(pot)
    target = quad.integrate(obs(quad.nodes_xi, quad.nodes_v))
    return ObservableSeries(
        times=times, means=means, stderrs=stderrs, observable=obs.tag,
        n_paths=n_paths, config=cfg, target=target,
    )


def series_from_ensemble(ensemble, f, cfg: SimConfig, pot: PotentialSpec,
                         quad: ProductQuadrature | None = None) -> ObservableSeries:
    """Observable series from an already-collected ensemble.

    Same statistics as :func:`mixing_series`, but reusing the stacked
    records of :func:`collect_ensemble`, so several observables (and the
    stationarity audit) can share one simulation.
    """
    obs = _as_observable(f)
    _require_mu_convention(cfg)
    times, xi, v = ensemble
    vals = obs(xi, v)  # (paths, records)
    n = vals.shape[0]
    means = vals.mean(axis=0)
    stderrs = vals.std(axis=0, ddof=1) / math.sqrt(n)
    if quad is None:
        quad = product_quadrature(pot)
    target = quad.integrate(obs(quad.nodes_xi, quad.nodes_v))
    return ObservableSeries(
        times=times, means=means, stderrs=stderrs, observable=obs.tag,
        n_paths=n, config=cfg, target=target,
    )


# ---------------------------------------------------------------------------
# stationarity audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentCheck:
    """One audited moment: estimate vs oracle target with its z-score."""

    name: str
    estimate: float
    target: float
    stderr: float
    z: float


@dataclass(frozen=True)
class StationarityReport:
    """Post-burn-in moment comparison against the invariant measure.

    Standard errors come from per-path time averages (paths are
    independent; records along one path are not), and ``flagged`` lists
    the moment names with |z| > 4.
    """

    checks: tuple[MomentCheck, ...]
    n_paths: int
    burn_in: float
    flagged: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "flagged",
            tuple(c.name for c in self.checks if abs(c.z) > 4.0),
        )

    @property
    def passed(self) -> bool:
        return not self.flagged

    @property
    def max_abs_z(self) -> float:
        return max(abs(c.z) for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "burn_in": self.burn_in,
            "passed": self.passed,
            "max_abs_z": self.max_abs_z,
            "flagged": list(self.flagged),
            "checks": [vars(c) for c in self.checks],
        }


def stationarity_audit(ensemble, pot: PotentialSpec, burn_in: float = 0.5,
                       quad: ProductQuadrature | None = None) -> StationarityReport:
    """Audit an ensemble's late-time moments against mu-targets.

    ``ensemble`` is the (times, xi, v) triple from :func:`collect_ensemble`
    with arrays of shape (n_paths, n_records, d).  The audited moments are
    E[xi_i], E[xi_i xi_j], E[v_i], E[v_i v_j] and E[xi . v]; targets come
    from the quadrature oracle.  Each moment is reduced to one time-average
    per path before the cross-path mean and standard error, so z-scores are
    not inflated by in-path correlation.
    """
    times, xi, v = ensemble
    if not 0.0 <= burn_in < 1.0:
        raise ConfigError("burn_in must be in [0, 1)")
    n_paths, m, d = xi.shape
    if n_paths < MIN_PATHS:
        raise ConfigError(f"need at least {MIN_PATHS} paths")
    keep = times >= burn_in * times[-1]
    xi_k, v_k = xi[:, keep], v[:, keep]
    if quad is None:
        quad = product_quadrature(pot)
    qxi, qv, qw = quad.nodes_xi, quad.nodes_v, quad.weights

    checks: list[MomentCheck] = []

    def add(name, samples, target):
        # samples: (n_paths, n_kept) -> one time average per path
        per_path = samples.mean(axis=1)
        est = float(per_path.mean())
        se = float(per_path.std(ddof=1) / math.sqrt(n_paths))
        if se > 0:
            z = (est - target) / se
        else:
            z = 0.0 if est == target else math.copysign(math.inf, est - target)
        checks.append(MomentCheck(name, est, float(target), se, float(z)))

    for i in range(d):
        add(f"E[xi_{i + 1}]", xi_k[..., i], qw @ qxi[:, i])
        add(f"E[v_{i + 1}]", v_k[..., i], qw @ qv[:, i])
    for i in range(d):
        for j in range(i, d):
            add(f"E[xi_{i + 1}xi_{j + 1}]", xi_k[..., i] * xi_k[..., j],
                qw @ (qxi[:, i] * qxi[:, j]))
            add(f"E[v_{i + 1}v_{j + 1}]", v_k[..., i] * v_k[..., j],
                qw @ (qv[:, i] * qv[:, j]))
    add("E[xi.v]", np.sum(xi_k * v_k, axis=-1), qw @ np.sum(qxi * qv, axis=-1))
    return StationarityReport(checks=tuple(checks), n_paths=n_paths, burn_in=burn_in)


# ---------------------------------------------------------------------------
# decay fitting and the rate formula
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential fit |E f(X_t) - target| ~ prefactor e^{-lambda_hat t}.

    The fit runs on the log deviation, restricted to points at least three
    standard errors above the noise floor.  A deviation that changes sign
    while above the floor marks an oscillatory (spiralling) relaxation; the
    log of such a signal is not close to a line near its zero crossings, so
    the fit then runs on the local maxima of the deviation — the decay
    envelope — and ``oscillatory`` is set.  ``flagged`` marks fits that
    should not be trusted (r^2 < 0.8, or a non-decaying slope — in which
    case ``lambda_hat`` is clamped to 0 with the raw slope in ``slope``).
    """

    lambda_hat: float
    prefactor: float
    r_squared: float
    window: tuple[float, float]
    n_points: int
    slope: float
    flagged: bool
    oscillatory: bool = False


def fit_decay(series: ObservableSeries, target: float) -> DecayFit:
    """Fit the exponential decay rate of a series toward its target.

    Raises
    ------
    InsufficientSignal
        If fewer than 10 points stand 3 standard errors above the noise
        floor (e.g. a series that starts at the target and stays there).
    """
    signed = series.means - target
    dev = np.abs(signed)
    usable = (dev >= 3.0 * series.stderrs) & (dev > 0.0)
    if int(usable.sum()) < 10:
        raise InsufficientSignal(
            f"only {int(usable.sum())} points rise 3 SE above the noise floor"
        )
    flips = int(np.sum(np.diff(np.sign(signed[usable])) != 0))
    oscillatory = flips >= 2
    if oscillatory:
        # spiralling relaxation: fit the envelope through the peaks of the
        # rectified deviation (clear of the log's dives at zero crossings)
        interior = (dev[1:-1] >= dev[:-2]) & (dev[1:-1] >= dev[2:])
        peak = np.zeros_like(usable)
        peak[1:-1] = interior
        peak[0] = dev[0] >= dev[1]
        peak &= usable
        if int(peak.sum()) >= 3:
            usable = peak
        else:
            oscillatory = False
    t = series.times[usable]
    y = np.log(dev[usable])
    slope, intercept = np.polyfit(t, y, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    lam = -float(slope)
    return DecayFit(
        lambda_hat=max(lam, 0.0),
        prefactor=float(np.exp(intercept)),
        r_squared=r2,
        window=(float(t[0]), float(t[-1])),
        n_points=int(usable.sum()),
        slope=float(slope),
        flagged=(r2 < 0.8) or (lam <= 0.0),
        oscillatory=oscillatory,
    )


@dataclass(frozen=True)
class RateParams:
    """Inputs of the guaranteed-rate formula; all strictly positive.

    K1, K2 and K3 depend only on the potential but are not numerically
    constructed here (no computable recipe backs them); d and Lambda are
    optional and enable the coercivity sub-constant report.
    """

    eta: float
    sigma: float
    K1: float
    K2: float
    K3: float
    d: int | None = None
    Lambda: float | None = None

    def __post_init__(self):
        for name in ("eta", "sigma", "K1", "K2", "K3"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if (self.d is None) != (self.Lambda is None):
            raise ConfigError("give both d and Lambda or neither")
        if self.d is not None and (self.d < 2 or self.Lambda <= 0):
            raise ConfigError("d must be >= 2 and Lambda > 0")


def hypocoercivity_rate(p: RateParams) -> float:
    """Evaluate lambda = eta/(1+eta) * K1 sigma^2 / (1 + K2 sigma^2 + K3 sigma^4).

    Strictly increasing in eta; vanishes in both the sigma -> 0 and
    sigma -> infinity limits; maximal over sigma at sigma* = K3^(-1/4),
    where it equals eta/(1+eta) * K1 / (K2 + 2 sqrt(K3)).
    """
    s2 = p.sigma * p.sigma
    return (p.eta / (1.0 + p.eta)) * p.K1 * s2 / (1.0 + p.K2 * s2 + p.K3 * s2 * s2)


def optimal_sigma(p: RateParams) -> float:
    """The noise level sigma* = K3^(-1/4) maximizing the rate formula."""
    return p.K3 ** (-0.25)


def rate_constants_report(d: int, sigma: float, Lambda: float, eta: float) -> dict:
    """The computable constants around the rate formula, as a plain dict.

    Emits the microscopic ((d-1) sigma^2/2), macroscopic (Lambda/d) and
    projected (Lambda/(d+Lambda)) coercivity constants plus the eta factor,
    and records explicitly that K1-K3 are NOT determined by these: they
    absorb unquantified elliptic-regularity bounds and stay user inputs.
    """
    if eta <= 0:
        raise ConfigError("eta must be > 0")
    cc = coercivity_constants(d, sigma, Lambda)
    return {
        "d": d,
        "sigma": sigma,
        "Lambda": Lambda,
        "eta": eta,
        "eta_factor": eta / (1.0 + eta),
        "microscopic": cc.microscopic,
        "macroscopic": cc.macroscopic,
        "projected_bound": cc.projected_bound,
        "note": (
            "K1, K2, K3 depend only on the potential but are not numerically "
            "specified by the theory (they absorb non-constructive "
            "elliptic-regularity bounds); they remain user inputs."
        ),
    }
