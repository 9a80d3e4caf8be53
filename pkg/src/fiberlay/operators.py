"""The generator, its adjoint, and the structural identities between them.

The Kolmogorov (backward) operator of the fiber lay-down process is

    L^K f = v . grad_xi f - kappa (I - v v^T) grad Phi . grad_v f
            + (sigma^2/2) Lap_S f,

acting on observables f(xi, v) with v on the unit sphere.  Its adjoint in
the flat L^2(dxi (x) dnu) — the Fokker-Planck operator driving densities —
picks up the spherical divergence of the drift field:

    L^FP f = -v . grad_xi f + kappa (I - v v^T) grad Phi . grad_v f
             - (d-1) kappa (grad Phi . v) f + (sigma^2/2) Lap_S f,

so that L^FP annihilates the stationary density exp(-(d-1) kappa Phi) for
every drift scale kappa.  (Writing the multiplication term without its
(d-1) kappa factor — as compact presentations of the operator sometimes
do — makes the stationarity identity hold only at kappa = 1/(d-1); the
adjoint computation fixes the coefficient, and the stationarity check in
this module pins that reading.)

Under kappa = 1/(d-1) the invariant measure is mu = e^{-Phi} dxi (x) nu,
and in L^2(mu) the generator splits as L^K = -A + S with

    S = (sigma^2/2) Lap_S              (symmetric, <= 0),
    A = -v . grad_xi + grad_S V . grad_v,   V = kappa grad Phi . v
                                        (antisymmetric),

which is the structure the checks in this module verify by quadrature:
stationarity, mu-invariance of the mean, the symmetric/antisymmetric
split, the conjugation intertwining L^K with L^FP, and the precursor of
the bounded-auxiliary-operator identity used by the hypocoercive rate
estimate.  All checks report defect magnitudes; none asserts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, MissingDerivatives
from .galerkin import estimate_gap_2d  # re-exported: spectral-gap estimate
from .geometry import ScalarField, SphereQuadrature, laplace_beltrami, sphere_quadrature
from .potential import PotentialSpec

__all__ = [
    "TestFunction",
    "ProductQuadrature",
    "CoercivityConstants",
    "SymmetrySplitDefects",
    "product_quadrature",
    "mu_drift_scale",
    "apply_kolmogorov",
    "apply_fokker_planck",
    "apply_symmetric_part",
    "apply_antisymmetric_part",
    "check_invariance",
    "check_symmetry_split",
    "check_conjugation",
    "coercivity_constants",
    "bs_identity_check",
    "bump_observable",
    "estimate_gap_2d",
]

_VALIDATE_SEED = 0x7E57
_FD_STEP = 1e-6


def mu_drift_scale(d: int) -> float:
    """The drift scale kappa = 1/(d-1) that makes e^{-Phi} dxi (x) nu invariant."""
    return 1.0 / (d - 1)


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """A smooth observable f(xi, v) with analytic derivatives.

    All callables are batched: ``value(xi, v) -> (n,)`` for ``xi, v`` of
    shape (n, d); ``grad_xi``/``grad_v`` return (n, d); ``hess_v`` (and the
    optional ``hess_xi``) return (n, d, d).  ``grad_v`` and ``hess_v`` are
    gradients of the ambient extension of f — the operators project them
    onto the sphere where needed.

    Construction cross-checks every provided derivative against central
    finite differences at a few random points (relative tolerance 1e-5);
    pass ``validate=False`` for functions correct by construction.

    ``support`` is a free-form decay tag ("gaussian-decay", "compact:3.5",
    ...) used only for documentation: quadrature-based checks assume the
    function is negligible outside the quadrature domain.
    """

    dim: int
    value: Callable
    grad_xi: Callable | None = None
    grad_v: Callable | None = None
    hess_v: Callable | None = None
    hess_xi: Callable | None = None
    support: str = "gaussian-decay"
    validate: bool = True

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        if self.validate:
            self._check_derivatives()

    def _check_derivatives(self):
        rng = np.random.Generator(np.random.PCG64(_VALIDATE_SEED))
        n, d, h = 8, self.dim, _FD_STEP
        xi = rng.normal(scale=1.5, size=(n, d))
        v = rng.normal(size=(n, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)

        def fd(fun, base, which):
            cols = []
            for i in range(d):
                e = np.zeros(d)
                e[i] = h
                if which == "xi":
                    hi, lo = fun(base + e, v), fun(base - e, v)
                else:
                    hi, lo = fun(xi, base + e), fun(xi, base - e)
                cols.append((np.asarray(hi) - np.asarray(lo)) / (2 * h))
            return np.stack(cols, axis=-1)

        pairs = []
        if self.grad_xi is not None:
            pairs.append((self.grad_xi(xi, v), fd(self.value, xi, "xi"), "grad_xi"))
        if self.grad_v is not None:
            pairs.append((self.grad_v(xi, v), fd(self.value, v, "v"), "grad_v"))
        if self.hess_v is not None and self.grad_v is not None:
            pairs.append((self.hess_v(xi, v), fd(self.grad_v, v, "v"), "hess_v"))
        for analytic, numeric, name in pairs:
            scale = max(float(np.max(np.abs(numeric))), 1.0)
            err = float(np.max(np.abs(np.asarray(analytic) - numeric)))
            if err > 1e-5 * scale:
                raise ConfigError(
                    f"TestFunction.{name} disagrees with finite differences "
                    f"(max err {err:.2e}, scale {scale:.2e})"
                )

    def _need(self, *names: str):
        for name in names:
            if getattr(self, name) is None:
                raise MissingDerivatives(f"TestFunction lacks {name}")


def bump_observable(
    d: int,
    center=None,
    width: float = 1.0,
    const: float = 0.0,
    linear=None,
    quad_pair=None,
) -> TestFunction:
    """Gaussian bump in xi times a low-degree polynomial in v.

        f(xi, v) = exp(-|xi - c|^2 / (2 w^2)) * (a + u.v + (p.v)(q.v))

    with all derivatives analytic; the default (a=0, u=e_1, no quadratic
    part) is the bump-times-cos-angle observable at d = 2.  Handy as a
    smooth, Gaussian-decaying test function for the quadrature checks.
    """
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if linear is None:
        u = np.zeros(d)
        u[0] = 1.0
    else:
        u = np.asarray(linear, dtype=float)
    if quad_pair is None:
        p = q = np.zeros(d)
    else:
        p, q = (np.asarray(x, dtype=float) for x in quad_pair)
    w2 = width * width

    def bump(xi):
        return np.exp(-np.sum((xi - c) ** 2, axis=-1) / (2 * w2))

    def poly(v):
        return const + v @ u + (v @ p) * (v @ q)

    def value(xi, v):
        return bump(xi) * poly(v)

    def grad_xi(xi, v):
        return (-(xi - c) / w2) * (bump(xi) * poly(v))[..., None]

    def grad_v(xi, v):
        gv = u + (v @ q)[..., None] * p + (v @ p)[..., None] * q
        return bump(xi)[..., None] * gv

    def hess_v(xi, v):
        pq = np.outer(p, q)
        return bump(xi)[..., None, None] * (pq + pq.T)

    def hess_xi(xi, v):
        y = (xi - c) / w2
        yy = y[..., :, None] * y[..., None, :]
        b = (bump(xi) * poly(v))[..., None, None]
        return b * (yy - np.eye(d) / w2)

    return TestFunction(
        dim=d, value=value, grad_xi=grad_xi, grad_v=grad_v,
        hess_v=hess_v, hess_xi=hess_xi,
        support=f"gaussian-decay:width={width}",
    )


# ---------------------------------------------------------------------------
# product quadrature on R^d x S^{d-1}
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductQuadrature:
    """Quadrature for integrals over R^d x S^{d-1}.

    The xi factor integrates against the normalized Gibbs weight
    e^{-Phi}/Z ("gibbs" kind: tensor Gauss-Legendre on a box for d = 2,
    self-normalized importance sampling for d >= 3) or against plain
    Lebesgue measure on the box ("flat" kind, d = 2 only); the sphere
    factor is a :class:`~fiberlay.geometry.SphereQuadrature` against the
    normalized uniform measure.  Gibbs weights sum to 1 by construction.
    """

    pot: PotentialSpec | None
    xi_nodes: np.ndarray
    xi_weights: np.ndarray
    sphere: SphereQuadrature
    weight_kind: str
    xi_size: int
    sphere_size: int
    radius: float
    seed: int

    def __post_init__(self):
        if self.weight_kind not in ("gibbs", "flat"):
            raise ConfigError(f"unknown weight kind {self.weight_kind!r}")
        if self.weight_kind == "gibbs":
            total = float(self.xi_weights.sum())
            if abs(total - 1.0) > 1e-10:
                raise ConfigError(f"gibbs weights sum to {total}, not 1")

    @property
    def dim(self) -> int:
        return self.xi_nodes.shape[1]

    @cached_property
    def nodes_xi(self) -> np.ndarray:
        """xi coordinate of every combined node, shape (N, d)."""
        return np.repeat(self.xi_nodes, self.sphere.nodes.shape[0], axis=0)

    @cached_property
    def nodes_v(self) -> np.ndarray:
        """v coordinate of every combined node, shape (N, d)."""
        return np.tile(self.sphere.nodes, (self.xi_nodes.shape[0], 1))

    @cached_property
    def weights(self) -> np.ndarray:
        """Combined weights, shape (N,)."""
        return np.multiply.outer(self.xi_weights, self.sphere.weights).ravel()

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum of values given at the combined nodes."""
        return float(self.weights @ np.asarray(values))

    def inner(self, f_values: np.ndarray, g_values: np.ndarray) -> float:
        """<f, g> under the quadrature measure."""
        return float(self.weights @ (np.asarray(f_values) * np.asarray(g_values)))

    def expectation(self, f: TestFunction) -> float:
        return self.integrate(f.value(self.nodes_xi, self.nodes_v))

    def refine(self, factor: int = 2) -> "ProductQuadrature":
        """A finer rule of the same construction (per-axis sizes x factor;
        Monte-Carlo sample counts x factor^2, halving the standard error)."""
        xi_size = self.xi_size * (factor if self.dim <= 2 else factor * factor)
        return product_quadrature(
            self.pot, xi_size=xi_size, sphere_size=self.sphere_size * factor,
            radius=self.radius, weight=self.weight_kind, seed=self.seed,
        )


def product_quadrature(
    pot: PotentialSpec | None,
    xi_size: int = 64,
    sphere_size: int = 64,
    radius: float | None = None,
    weight: str = "gibbs",
    seed: int = 1234,
) -> ProductQuadrature:
    """Build the product rule for a potential.

    Parameters
    ----------
    pot : PotentialSpec or None
        Potential defining the Gibbs weight (None only for ``weight="flat"``
        with an explicit radius).
    xi_size : int
        Nodes per axis (tensor Gauss-Legendre, d = 2) or total samples
        (Monte-Carlo, d >= 3).
    sphere_size : int
        Size parameter of the sphere rule.
    radius : float, optional
        Half-width R of the integration box [-R, R]^d.  The default leaves
        Gibbs tail mass below 1e-8 (R = 4.5 for the radial quadratic,
        scaled by the smallest quadratic coefficient otherwise).
    weight : {"gibbs", "flat"}
        Measure for the xi factor.
    seed : int
        Seed for Monte-Carlo node draws (deterministic rules ignore it).
    """
    if weight == "flat":
        if radius is None:
            raise ConfigError("flat quadrature needs an explicit radius")
        d = 2 if pot is None else pot.dim
        if d != 2:
            raise ConfigError("flat quadrature is implemented for d = 2 only")
        x, w = leggauss(xi_size)
        x, w = radius * x, radius * w
        nodes = np.stack(
            [g.ravel() for g in np.meshgrid(x, x, indexing="ij")], axis=-1
        )
        wts = np.multiply.outer(w, w).ravel()
    else:
        if pot is None:
            raise ConfigError("gibbs quadrature needs a potential")
        d = pot.dim
        if radius is None:
            a_min = min(pot.coeffs) if pot.is_quadratic_diagonal else 1.0
            radius = 4.5 / math.sqrt(max(a_min, 1e-12)) if a_min > 0 else 4.5
        if d == 2:
            x, w = leggauss(xi_size)
            x, w = radius * x, radius * w
            nodes = np.stack(
                [g.ravel() for g in np.meshgrid(x, x, indexing="ij")], axis=-1
            )
            wts = np.multiply.outer(w, w).ravel() * np.exp(-pot.value(nodes))
            wts /= wts.sum()
        else:
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
            if pot.is_quadratic_diagonal and np.all(np.asarray(pot.coeffs) > 0):
                # exact sampling from the Gaussian e^{-sum a_i x_i^2}
                scale = 1.0 / np.sqrt(2.0 * np.asarray(pot.coeffs, dtype=float))
                nodes = rng.normal(size=(xi_size, d)) * scale
                wts = np.full(xi_size, 1.0 / xi_size)
            else:
                # self-normalized importance sampling, wide Gaussian proposal
                s = radius / 3.0
                nodes = rng.normal(scale=s, size=(xi_size, d))
                log_q = -np.sum(nodes**2, axis=1) / (2 * s * s)
                wts = np.exp(-pot.value(nodes) - log_q)
                wts /= wts.sum()
    sphere = sphere_quadrature(d, sphere_size, seed=seed)
    return ProductQuadrature(
        pot=pot, xi_nodes=nodes, xi_weights=wts, sphere=sphere,
        weight_kind=weight, xi_size=xi_size, sphere_size=sphere_size,
        radius=float(radius), seed=seed,
    )


# ---------------------------------------------------------------------------
# the operators
# ---------------------------------------------------------------------------


def _as_batch(xi, v):
    xi = np.asarray(xi, dtype=float)
    v = np.asarray(v, dtype=float)
    single = xi.ndim == 1
    return np.atleast_2d(xi), np.atleast_2d(v), single


def _sphere_laplacian(f: TestFunction, xi, v) -> np.ndarray:
    """Lap_S of f(xi, .) at v, through the generic geometry machinery."""
    field = ScalarField(
        value=lambda vv: f.value(xi, vv),
        grad=lambda vv: f.grad_v(xi, vv),
        hess=lambda vv: f.hess_v(xi, vv),
    )
    return np.atleast_1d(laplace_beltrami(field, v))


def _projected_drift(pot: PotentialSpec, xi, v) -> np.ndarray:
    """(I - v v^T) grad Phi(xi), batched."""
    g = np.atleast_2d(pot.grad(xi))
    return g - np.sum(v * g, axis=-1, keepdims=True) * v


def apply_kolmogorov(f: TestFunction, xi, v, sigma: float, pot: PotentialSpec,
                     kappa: float = 1.0):
    """Evaluate the generator L^K f at (xi, v); batched over leading axis.

        L^K f = v . grad_xi f - kappa (I - v v^T) grad Phi . grad_v f
                + (sigma^2/2) Lap_S f

    A function without v-derivatives must pass explicit zero callables;
    omitted derivatives raise MissingDerivatives rather than being assumed
    absent.
    """
    f._need("grad_xi", "grad_v", "hess_v")
    xi, v, single = _as_batch(xi, v)
    out = np.sum(v * f.grad_xi(xi, v), axis=-1)
    out -= kappa * np.sum(_projected_drift(pot, xi, v) * f.grad_v(xi, v), axis=-1)
    out = out + 0.5 * sigma * sigma * _sphere_laplacian(f, xi, v)
    return float(out[0]) if single else out


def apply_fokker_planck(f: TestFunction, xi, v, sigma: float, pot: PotentialSpec,
                        kappa: float = 1.0):
    """Evaluate the flat-L^2 adjoint L^FP f at (xi, v); batched.

        L^FP f = -v . grad_xi f + kappa (I - v v^T) grad Phi . grad_v f
                 - (d-1) kappa (grad Phi . v) f + (sigma^2/2) Lap_S f

    The multiplication term is the spherical divergence of the drift
    field, which is what makes exp(-(d-1) kappa Phi) stationary for every
    kappa (see the module docstring for the sign-convention discussion).
    """
    f._need("grad_xi", "grad_v", "hess_v")
    xi, v, single = _as_batch(xi, v)
    d = xi.shape[1]
    grad_phi = np.atleast_2d(pot.grad(xi))
    out = -np.sum(v * f.grad_xi(xi, v), axis=-1)
    out += kappa * np.sum(_projected_drift(pot, xi, v) * f.grad_v(xi, v), axis=-1)
    out -= (d - 1) * kappa * np.sum(grad_phi * v, axis=-1) * f.value(xi, v)
    out = out + 0.5 * sigma * sigma * _sphere_laplacian(f, xi, v)
    return float(out[0]) if single else out


def apply_symmetric_part(f: TestFunction, xi, v, sigma: float):
    """S f = (sigma^2/2) Lap_S f — the symmetric, negative part of L^K."""
    f._need("grad_v", "hess_v")
    xi, v, single = _as_batch(xi, v)
    out = 0.5 * sigma * sigma * _sphere_laplacian(f, xi, v)
    return float(out[0]) if single else out


def apply_antisymmetric_part(f: TestFunction, xi, v, pot: PotentialSpec,
                             kappa: float | None = None):
    """A f = -v . grad_xi f + grad_S(kappa grad Phi . v) . grad_v f.

    Antisymmetric in L^2(mu) at the mu-convention kappa = 1/(d-1), which is
    the default; L^K = -A + S.
    """
    f._need("grad_xi", "grad_v")
    xi, v, single = _as_batch(xi, v)
    if kappa is None:
        kappa = mu_drift_scale(xi.shape[1])
    out = -np.sum(v * f.grad_xi(xi, v), axis=-1)
    out += kappa * np.sum(_projected_drift(pot, xi, v) * f.grad_v(xi, v), axis=-1)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# structural checks (all return defect magnitudes)
# ---------------------------------------------------------------------------


def check_invariance(f: TestFunction, quad: ProductQuadrature, sigma: float,
                     pot: PotentialSpec) -> float:
    """Quadrature value of int L^K f dmu; zero for the exact integral.

    Uses the mu-convention kappa = 1/(d-1).  The magnitude is the test
    statistic: it decreases under quadrature refinement for any smooth f
    that decays inside the quadrature domain.
    """
    if quad.weight_kind != "gibbs":
        raise ConfigError("check_invariance needs a gibbs-weighted quadrature")
    kappa = mu_drift_scale(quad.dim)
    lf = apply_kolmogorov(f, quad.nodes_xi, quad.nodes_v, sigma, pot, kappa)
    return quad.integrate(lf)


class SymmetrySplitDefects(NamedTuple):
    """Quadrature defects of the L^K = -A + S split in L^2(mu)."""

    s_defect: float  # <Sg,h> - <g,Sh>
    a_defect: float  # <Ag,h> + <g,Ah>


def check_symmetry_split(g: TestFunction, h: TestFunction,
                         quad: ProductQuadrature, sigma: float,
                         pot: PotentialSpec) -> SymmetrySplitDefects:
    """Symmetry defect of S and antisymmetry defect of A in L^2(mu).

    Both vanish for the exact integrals at kappa = 1/(d-1); the returned
    quadrature residuals converge to zero under refinement.
    """
    if quad.weight_kind != "gibbs":
        raise ConfigError("check_symmetry_split needs a gibbs-weighted quadrature")
    xi, v = quad.nodes_xi, quad.nodes_v
    kappa = mu_drift_scale(quad.dim)
    gv, hv = g.value(xi, v), h.value(xi, v)
    s_defect = quad.inner(apply_symmetric_part(g, xi, v, sigma), hv) - quad.inner(
        gv, apply_symmetric_part(h, xi, v, sigma)
    )
    a_defect = quad.inner(apply_antisymmetric_part(g, xi, v, pot, kappa), hv) + quad.inner(
        gv, apply_antisymmetric_part(h, xi, v, pot, kappa)
    )
    return SymmetrySplitDefects(s_defect=s_defect, a_defect=a_defect)


def _reflected_unweighted(h: TestFunction, pot: PotentialSpec) -> TestFunction:
    """The function g(xi, v) = e^{Phi(xi)} h(xi, -v), derivatives by chain rule."""

    def value(xi, v):
        return np.exp(pot.value(xi)) * h.value(xi, -v)

    def grad_xi(xi, v):
        e = np.exp(pot.value(xi))[..., None]
        g = np.atleast_2d(pot.grad(xi))
        return e * (g * h.value(xi, -v)[..., None] + h.grad_xi(xi, -v))

    def grad_v(xi, v):
        return -np.exp(pot.value(xi))[..., None] * h.grad_v(xi, -v)

    def hess_v(xi, v):
        return np.exp(pot.value(xi))[..., None, None] * h.hess_v(xi, -v)

    return TestFunction(
        dim=h.dim, value=value, grad_xi=grad_xi, grad_v=grad_v,
        hess_v=hess_v, support=h.support, validate=False,
    )


def check_conjugation(h: TestFunction, points, sigma: float,
                      pot: PotentialSpec) -> float:
    """Max pointwise defect of the intertwining T L^K T^{-1} = L^FP.

    T maps h(xi, v) to e^{-Phi(xi)} h(xi, -v); the identity holds at the
    mu-convention kappa = 1/(d-1).  ``points`` is a pair (xi, v) of arrays
    of sample points.  The defect is invariant under shifting Phi by a
    constant (the e^{+-Phi} factors cancel).
    """
    h._need("grad_xi", "grad_v", "hess_v")
    xi, v = (np.atleast_2d(np.asarray(x, dtype=float)) for x in points)
    kappa = mu_drift_scale(xi.shape[1])
    g = _reflected_unweighted(h, pot)
    lhs = np.exp(-pot.value(xi)) * np.atleast_1d(
        apply_kolmogorov(g, xi, -v, sigma, pot, kappa)
    )
    rhs = np.atleast_1d(apply_fokker_planck(h, xi, v, sigma, pot, kappa))
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class CoercivityConstants:
    """The three computable constants feeding the hypocoercive rate.

    microscopic : (d-1) sigma^2 / 2, the sphere Poincare constant scaling
        the bound -<Sg, g> >= microscopic * ||(I-Pi)g||^2.
    macroscopic : Lambda / d, the xi-marginal spectral gap over the sphere
        moment factor, scaling ||grad rho|| control.
    projected_bound : Lambda / (d + Lambda), the lower bound on the
        projected form <B A Pi g, g> on mean-zero functions.
    """

    microscopic: float
    macroscopic: float
    projected_bound: float


def coercivity_constants(d: int, sigma: float, Lambda: float) -> CoercivityConstants:
    """Compute ((d-1) sigma^2/2, Lambda/d, Lambda/(d+Lambda)); inputs > 0."""
    if d < 2:
        raise ConfigError("d must be >= 2")
    if sigma <= 0 or Lambda <= 0:
        raise ConfigError("sigma and Lambda must be > 0")
    return CoercivityConstants(
        microscopic=0.5 * (d - 1) * sigma * sigma,
        macroscopic=Lambda / d,
        projected_bound=Lambda / (d + Lambda),
    )


def bs_identity_check(g: TestFunction, quad: ProductQuadrature, sigma: float,
                      d: int | None = None) -> float:
    """Max pointwise defect of S(A Pi g) = -(d-1)(sigma^2/2) (A Pi g).

    Pi g = int g dnu =: rho(xi) and A Pi g = -v . grad rho(xi) are built by
    sphere quadrature from g's xi-derivatives; the spherical Laplacian on
    the left is evaluated through the generic finite-difference route of
    :func:`~fiberlay.geometry.laplace_beltrami`, so the check genuinely
    exercises the eigenvalue -(d-1) of Lap_S on linear functions rather
    than an algebraic cancellation.
    """
    g._need("grad_xi")
    if d is None:
        d = quad.dim
    elif d != quad.dim:
        raise ConfigError(f"d={d} does not match the quadrature dimension {quad.dim}")
    n_xi, n_s = quad.xi_nodes.shape[0], quad.sphere.nodes.shape[0]
    xi, v, sw = quad.nodes_xi, quad.nodes_v, quad.sphere.weights
    # grad rho at each xi node: integrate grad_xi g over the sphere factor
    grad_rho = np.einsum(
        "xsd,s->xd", g.grad_xi(xi, v).reshape(n_xi, n_s, d), sw
    )
    z = np.repeat(grad_rho, n_s, axis=0)  # per combined node
    a_pi_g = -np.sum(v * z, axis=-1)
    field = ScalarField(value=lambda vv: -np.sum(vv * z, axis=-1))
    # wide FD step: the probed function is linear in v, so the stencil has
    # no truncation error and a wide step suppresses second-difference
    # roundoff (~eps/h^2) far below the pointwise tolerance
    lap = laplace_beltrami(field, v, allow_fd=True, fd_step=1e-2)
    defect = 0.5 * sigma * sigma * (lap + (d - 1) * a_pi_g)
    return float(np.max(np.abs(defect)))
