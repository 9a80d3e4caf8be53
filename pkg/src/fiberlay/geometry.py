"""Differential geometry on the unit sphere S^{d-1} embedded in R^d.

Spherical coordinate charts, tangential calculus (gradient and
Laplace-Beltrami operator, in both ambient and local-coordinate form),
quadrature rules for the normalized surface measure, numerical Lie brackets,
and the bracket-rank test for hypoellipticity of the fiber lay-down dynamics.

Conventions
-----------
The ambient dimension is d >= 2 and the sphere is S^{d-1}, so the coordinate
functions v_i are Laplace-Beltrami eigenfunctions with eigenvalue -(d-1) and
the quadratic moment of the uniform measure is ``int (Bv, v) dnu =
trace(B)/d``.  (Texts that work on S^d embedded in R^{d+1} state these with d
in place of d-1; keep the shift in mind when comparing constants.)

Angles are written theta_1, ..., theta_{d-1} (1-based) in formulas, matching
the chart recursion

    tau_1(theta_1) = (cos theta_1, sin theta_1),
    tau_k(theta_1..theta_k) = (tau_{k-1} * sin theta_k, cos theta_k),

and are stored 0-based, i.e. ``theta[j - 1]`` holds theta_j.  theta_1 is
2*pi-periodic; theta_j for j >= 2 lives strictly inside (0, pi).

Usage::

    from fiberlay import geometry

    ang = geometry.SphericalAngles([0.3, 1.2])
    v = geometry.embed_angles(ang)              # point on S^2
    geometry.angles_from_point(v)               # round trip
    quad = geometry.sphere_quadrature(3, 64)
    geometry.gauss_moment(np.eye(3), quad)      # -> 1.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    MissingDerivatives,
    NumericalInconsistency,
    PoleSingularity,
)

__all__ = [
    "TOL_POLE",
    "TOL_UNIT",
    "SphericalAngles",
    "UnitVector",
    "SphereQuadrature",
    "ScalarField",
    "embed_angles",
    "angles_from_point",
    "metric_factor",
    "metric_factors",
    "log_density_derivative",
    "chart_jacobian",
    "sphere_grad_linear",
    "sphere_grad_local_coeffs",
    "laplace_beltrami",
    "laplace_beltrami_local",
    "gauss_moment",
    "sphere_quadrature",
    "lie_bracket",
    "hormander_rank",
]

#: Pole exclusion tolerance on sin(theta_j), j >= 2.  Charts refuse points
#: closer to a pole than this; the metric factors are ill-conditioned there.
TOL_POLE = 1e-8

#: Tolerance on | |v|^2 - 1 | maintained by every constructor and
#: projecting operation.
TOL_UNIT = 1e-12


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SphericalAngles:
    """Chart coordinates theta = (theta_1, ..., theta_{d-1}) on S^{d-1}.

    theta_1 is stored reduced modulo 2*pi; theta_j for j >= 2 must lie
    strictly inside (0, pi), at least ``TOL_POLE`` away from the poles
    (measured through sin(theta_j)).

    Parameters
    ----------
    theta : array_like, shape (d-1,)
        Angle values; d >= 2.
    """

    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, copy=True).reshape(-1)
        if theta.size < 1:
            raise ValueError("need at least one angle (d >= 2)")
        if not np.all(np.isfinite(theta)):
            raise ValueError("angles must be finite")
        theta[0] = theta[0] % (2.0 * math.pi)
        for j in range(1, theta.size):
            if not (0.0 < theta[j] < math.pi) or math.sin(theta[j]) <= TOL_POLE:
                raise PoleSingularity(j + 1, theta[j])
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def dim(self) -> int:
        """Ambient dimension d."""
        return self.theta.size + 1


@dataclass(frozen=True)
class UnitVector:
    """A point v on S^{d-1}, kept unit to machine precision.

    The constructor accepts vectors within 1e-6 of unit length (anything
    further off is almost certainly a bug upstream) and renormalizes, so
    ``| |v|^2 - 1 | <= TOL_UNIT`` always holds afterwards.
    """

    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float, copy=True).reshape(-1)
        if v.size < 2:
            raise ValueError("ambient dimension must be >= 2")
        if not np.all(np.isfinite(v)):
            raise ValueError("components must be finite")
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > 1e-6:
            raise ValueError(f"|v| = {nrm!r} is too far from 1 to renormalize")
        v /= nrm
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.v.size


@dataclass(frozen=True)
class SphereQuadrature:
    """Quadrature rule for the normalized surface measure nu on S^{d-1}.

    Attributes
    ----------
    nodes : ndarray, shape (n, d)
        Unit vectors.
    weights : ndarray, shape (n,)
        Nonnegative weights summing to 1 (nu is a probability measure).
    kind : str
        "uniform" (S^1), "product" (S^2) or "monte-carlo" (any d).
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 2 or weights.shape != (nodes.shape[0],):
            raise ValueError("nodes must be (n, d) with matching weights (n,)")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum of per-node values."""
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class ScalarField:
    """A scalar function on R^d with optional analytic derivatives.

    All callables are vectorized: they accept points of shape (..., d) and
    return shapes (...), (..., d) and (..., d, d) respectively.  Missing
    derivatives are filled by central finite differences on demand where the
    consumer allows it.
    """

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray], np.ndarray] | None = None


def _as_angle_array(theta) -> np.ndarray:
    if isinstance(theta, SphericalAngles):
        return theta.theta
    arr = np.asarray(theta, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("theta must be a 1-d array of d-1 angles")
    return arr


def _as_point_array(v) -> np.ndarray:
    if isinstance(v, UnitVector):
        return v.v
    return np.asarray(v, dtype=float)


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------


def embed_angles(theta) -> UnitVector:
    """Map chart coordinates to the corresponding point on S^{d-1}.

    Evaluates the recursion tau_1 = (cos theta_1, sin theta_1),
    tau_k = (tau_{k-1} sin theta_k, cos theta_k).

    Parameters
    ----------
    theta : SphericalAngles or array_like, shape (d-1,)

    Returns
    -------
    UnitVector
    """
    return UnitVector(_embed(_as_angle_array(theta)))


def _embed(theta: np.ndarray) -> np.ndarray:
    """Batched chart map; theta (..., d-1) -> points (..., d)."""
    theta = np.asarray(theta, dtype=float)
    t1 = theta[..., 0]
    v = np.stack([np.cos(t1), np.sin(t1)], axis=-1)
    for j in range(1, theta.shape[-1]):
        tj = theta[..., j]
        v = np.concatenate(
            [v * np.sin(tj)[..., None], np.cos(tj)[..., None]], axis=-1
        )
    return v


def angles_from_point(v) -> SphericalAngles:
    """Invert the chart map on S^{d-1} minus the poles.

    Satisfies ``embed_angles(angles_from_point(v)) == v`` to 1e-10 away from
    the pole-tolerance region.  Accuracy degrades like eps/sin^2(theta_j) as
    a pole is approached, which is why points inside the tolerance region are
    rejected instead.

    Raises
    ------
    PoleSingularity
        If any recovered theta_j (j >= 2) has sin(theta_j) <= TOL_POLE.
    """
    w = _as_point_array(v).copy()
    if w.ndim != 1 or w.size < 2:
        raise ValueError("v must be a vector in R^d, d >= 2")
    d = w.size
    theta = np.empty(d - 1)
    for j in range(d - 1, 1, -1):  # recover theta_j, j = d-1 .. 2 (1-based)
        c = float(np.clip(w[j], -1.0, 1.0))
        theta[j - 1] = math.acos(c)
        s = math.sqrt(max(0.0, 1.0 - c * c))
        if s <= TOL_POLE:
            raise PoleSingularity(j, theta[j - 1])
        w = w[:j] / s
    theta[0] = math.atan2(w[1], w[0]) % (2.0 * math.pi)
    return SphericalAngles(theta)


def metric_factor(theta, j: int) -> float:
    """Inverse length of the j-th chart tangent, G_j = prod_{i>j} 1/sin(theta_i).

    ``j`` is 1-based as in the chart formulas; the product runs over
    i = j+1, ..., d-1 and is empty (= 1) for j = d-1.
    """
    arr = _as_angle_array(theta)
    if not 1 <= j <= arr.size:
        raise ValueError(f"j must be in 1..{arr.size}, got {j}")
    return float(np.prod(1.0 / np.sin(arr[j:])))


def metric_factors(theta) -> np.ndarray:
    """All metric factors (G_1, ..., G_{d-1}) in one pass."""
    arr = _as_angle_array(theta)
    out = np.empty(arr.size)
    out[-1] = 1.0
    for j in range(arr.size - 2, -1, -1):
        out[j] = out[j + 1] / math.sin(arr[j + 1])
    return out


def log_density_derivative(theta, j: int) -> float:
    """d/dtheta_j of log of the chart volume density: (j-1) * cot(theta_j).

    ``j`` is 1-based; j = 1 gives 0 (theta_1 does not enter the density).
    """
    arr = _as_angle_array(theta)
    if not 1 <= j <= arr.size:
        raise ValueError(f"j must be in 1..{arr.size}, got {j}")
    if j == 1:
        return 0.0
    return (j - 1) / math.tan(arr[j - 1])


def chart_jacobian(theta) -> np.ndarray:
    """Chart Jacobian with columns dtau/dtheta_j, shape (d, d-1).

    Column norms are 1/G_j; the normalized columns are the orthonormal
    tangent frame n_j used by :func:`sphere_grad_local_coeffs`.
    """
    return _chart_jacobian(_as_angle_array(theta))


def _chart_jacobian(theta: np.ndarray) -> np.ndarray:
    """Batched Jacobian; theta (..., d-1) -> (..., d, d-1)."""
    theta = np.asarray(theta, dtype=float)
    t1 = theta[..., 0]
    tau = np.stack([np.cos(t1), np.sin(t1)], axis=-1)  # (..., 2)
    jac = np.stack([-np.sin(t1), np.cos(t1)], axis=-1)[..., :, None]  # (...,2,1)
    for j in range(1, theta.shape[-1]):
        s = np.sin(theta[..., j])[..., None]
        c = np.cos(theta[..., j])[..., None]
        # existing columns pick up the sin factor; one new column appears
        top = np.concatenate([jac * s[..., None], (tau * c)[..., :, None]], axis=-1)
        bottom = np.concatenate(
            [np.zeros(jac.shape[:-2] + (1, jac.shape[-1])), -s[..., None, :]], axis=-1
        )
        jac = np.concatenate([top, bottom], axis=-2)
        tau = np.concatenate([tau * s, c], axis=-1)
    return jac


# ---------------------------------------------------------------------------
# tangential calculus
# ---------------------------------------------------------------------------


def sphere_grad_linear(z, v) -> np.ndarray:
    """Tangential gradient of the linear function w -> (z, w) at v.

    Returns the projection (I - v v^T) z, orthogonal to v.  Batched: ``z``
    and ``v`` may have shape (..., d).
    """
    z = np.asarray(z, dtype=float)
    v = _as_point_array(v)
    return z - np.sum(v * z, axis=-1, keepdims=True) * v


def sphere_grad_local_coeffs(z, theta) -> np.ndarray:
    """Local-frame coefficients of the tangential gradient of w -> (z, w).

    Returns c_j = G_j * (z, n_j) for j = 1..d-1, where n_j is the unit
    tangent along theta_j.  Pushing the coefficients through the chart,
    ``chart_jacobian(theta) @ c``, reproduces
    ``sphere_grad_linear(z, embed_angles(theta))``.
    """
    arr = _as_angle_array(theta)
    z = np.asarray(z, dtype=float)
    jac = _chart_jacobian(arr)
    g = metric_factors(arr)
    return g**2 * (jac.T @ z)


def _fd_grad(value, x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient of a vectorized scalar function."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    eye = np.eye(d)
    out = np.empty(x.shape)
    for i in range(d):
        out[..., i] = (value(x + h * eye[i]) - value(x - h * eye[i])) / (2 * h)
    return out


def _fd_hess(value, x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Hessian of a vectorized scalar function."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    eye = np.eye(d)
    out = np.empty(x.shape + (d,))
    f0 = value(x)
    for i in range(d):
        out[..., i, i] = (
            value(x + h * eye[i]) - 2 * f0 + value(x - h * eye[i])
        ) / (h * h)
        for k in range(i + 1, d):
            mixed = (
                value(x + h * (eye[i] + eye[k]))
                - value(x + h * (eye[i] - eye[k]))
                - value(x - h * (eye[i] - eye[k]))
                + value(x - h * (eye[i] + eye[k]))
            ) / (4 * h * h)
            out[..., i, k] = mixed
            out[..., k, i] = mixed
    return out


def laplace_beltrami(
    f: ScalarField,
    v,
    allow_fd: bool = True,
    fd_step: float = 1e-5,
    self_check: bool = True,
) -> float | np.ndarray:
    """Laplace-Beltrami operator on S^{d-1} applied to the ambient extension of f.

    Evaluates the closed form

        Delta_S f(v) = trace(P H P) - (d - 1) * (v, grad f),   P = I - v v^T,

    from the Euclidean gradient and Hessian of f.  As a self-check the same
    quantity is recomputed by composing the tangent fields V_j = P e_j
    (Delta_S = sum_j V_j(V_j f), which expands to
    trace(P H P) - trace(P) (v, grad f) - (P v, grad f) without using
    |v| = 1); the two routes must agree to 1e-8 relative.

    Parameters
    ----------
    f : ScalarField
        Needs ``grad`` and ``hess``; missing ones are filled by central
        differences when ``allow_fd`` is true.
    v : UnitVector or ndarray (..., d)
        Evaluation point(s) on the sphere.

    Returns
    -------
    float or ndarray
        Scalar for a single point, array of shape (...) for batches.

    Raises
    ------
    MissingDerivatives
        If derivative data is absent and ``allow_fd`` is false.
    NumericalInconsistency
        If the two evaluation routes disagree beyond tolerance.
    """
    pt = _as_point_array(v)
    single = pt.ndim == 1
    w = pt[None, :] if single else pt
    d = w.shape[-1]

    if f.grad is not None:
        grad = np.asarray(f.grad(w), dtype=float)
    elif allow_fd:
        grad = _fd_grad(f.value, w, fd_step)
    else:
        raise MissingDerivatives("f lacks a gradient and finite differences are off")
    if f.hess is not None:
        hess = np.asarray(f.hess(w), dtype=float)
    elif allow_fd:
        hess = _fd_hess(f.value, w, fd_step)
    else:
        raise MissingDerivatives("f lacks a Hessian and finite differences are off")

    vg = np.sum(w * grad, axis=-1)
    hv = np.einsum("...ij,...j->...i", hess, w)
    vhv = np.sum(w * hv, axis=-1)
    trace_h = np.einsum("...ii->...", hess)
    # trace(P H P) = trace(H) - 2 v^T H v + |v|^2 v^T H v; |v| = 1 on-sphere
    trace_php = trace_h - 2.0 * vhv + np.sum(w * w, axis=-1) * vhv
    closed = trace_php - (d - 1) * vg

    if self_check:
        # independent route: compose the d tangent fields V_j = (I - vv^T) e_j,
        # which expands without ever using |v| = 1.  Built from the explicit
        # projector so the Hessian contraction does not share code with the
        # closed form above.
        proj = np.eye(d) - w[..., :, None] * w[..., None, :]
        fields = (
            np.einsum("...ij,...jk,...ki->...", proj, hess, proj)
            - np.einsum("...ii->...", proj) * vg
            - np.einsum("...ij,...j,...i->...", proj, w, grad)
        )
        scale = 1.0 + np.abs(closed) + np.abs(trace_h) + np.linalg.norm(grad, axis=-1)
        bad = np.abs(closed - fields) > 1e-8 * scale
        if np.any(bad):
            raise NumericalInconsistency(
                "closed-form and field-composition Laplace-Beltrami disagree: "
                f"max defect {float(np.max(np.abs(closed - fields)))!r}"
            )
    return float(closed[0]) if single else closed


def laplace_beltrami_local(theta, grad_theta, hess_diag_theta) -> float:
    """Laplace-Beltrami operator in chart coordinates.

    Evaluates

        sum_j G_j^2 * d^2f/dtheta_j^2  +  sum_j G_j^2 (j-1) cot(theta_j) * df/dtheta_j

    from the first and (diagonal) second theta-derivatives of f at theta.
    Agrees with :func:`laplace_beltrami` through the chart.

    Parameters
    ----------
    theta : SphericalAngles or array_like (d-1,)
    grad_theta : array_like (d-1,)
        Values df/dtheta_j at theta.
    hess_diag_theta : array_like (d-1,)
        Values d^2f/dtheta_j^2 at theta.
    """
    arr = _as_angle_array(theta)
    g2 = metric_factors(arr) ** 2
    grad_theta = np.asarray(grad_theta, dtype=float)
    hess_diag_theta = np.asarray(hess_diag_theta, dtype=float)
    j = np.arange(1, arr.size + 1)
    cot = np.zeros(arr.size)
    cot[1:] = 1.0 / np.tan(arr[1:])
    return float(np.sum(g2 * hess_diag_theta) + np.sum(g2 * (j - 1) * cot * grad_theta))


# ---------------------------------------------------------------------------
# quadrature and moments
# ---------------------------------------------------------------------------


def sphere_quadrature(d: int, size, kind: str | None = None, seed: int = 1234) -> SphereQuadrature:
    """Build a quadrature rule for the normalized surface measure on S^{d-1}.

    Parameters
    ----------
    d : int
        Ambient dimension, d >= 2.
    size : int or tuple
        Number of nodes.  For the S^2 product rule a pair
        (n_uniform, n_legendre) is accepted; a single int n means (n, n).
    kind : str, optional
        "uniform" (d=2), "product" (d=3) or "monte-carlo" (any d).  Default:
        the deterministic rule for d in {2, 3}, Monte-Carlo otherwise.
    seed : int
        Seed for the Monte-Carlo rule (fixed default keeps rules
        reproducible).

    Notes
    -----
    The uniform rule on S^1 integrates trigonometric polynomials of degree
    < n exactly; the S^2 product rule is exact for polynomial integrands of
    matching degree; the Monte-Carlo rule (normalized standard Gaussians,
    equal weights) is exact in expectation only — consumers should use
    standard-error bands.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if kind is None:
        kind = {2: "uniform", 3: "product"}.get(d, "monte-carlo")

    if kind == "uniform":
        if d != 2:
            raise ValueError("uniform rule is for S^1 (d = 2)")
        n = int(size)
        if n <= 0:
            raise ValueError("unsupported size <= 0")
        ang = 2.0 * math.pi * np.arange(n) / n
        nodes = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        weights = np.full(n, 1.0 / n)
    elif kind == "product":
        if d != 3:
            raise ValueError("product rule is for S^2 (d = 3)")
        if isinstance(size, (tuple, list)):
            n_phi, n_leg = int(size[0]), int(size[1])
        else:
            n_phi = n_leg = int(size)
        if n_phi <= 0 or n_leg <= 0:
            raise ValueError("unsupported size <= 0")
        phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
        x, w = np.polynomial.legendre.leggauss(n_leg)  # cos(theta_2) in [-1, 1]
        s = np.sqrt(1.0 - x**2)
        nodes = np.empty((n_phi * n_leg, 3))
        nodes[:, 0] = np.outer(np.cos(phi), s).ravel()
        nodes[:, 1] = np.outer(np.sin(phi), s).ravel()
        nodes[:, 2] = np.outer(np.ones(n_phi), x).ravel()
        weights = np.outer(np.full(n_phi, 1.0 / n_phi), w / 2.0).ravel()
    elif kind == "monte-carlo":
        n = int(size)
        if n <= 0:
            raise ValueError("unsupported size <= 0")
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n, d))
        nodes = g / np.linalg.norm(g, axis=1, keepdims=True)
        weights = np.full(n, 1.0 / n)
    else:
        raise ValueError(f"unknown quadrature kind {kind!r}")
    return SphereQuadrature(nodes=nodes, weights=weights, kind=kind)


def gauss_moment(B, quad: SphereQuadrature) -> float:
    """Quadrature estimate of the quadratic moment int (B v, v) dnu.

    The exact value on S^{d-1} is trace(B)/d; deterministic rules reproduce
    it to machine precision, the Monte-Carlo rule up to sampling error.
    """
    B = np.asarray(B, dtype=float)
    vals = np.einsum("ni,ij,nj->n", quad.nodes, B, quad.nodes)
    return quad.integrate(vals)


# ---------------------------------------------------------------------------
# Lie brackets and the bracket-rank test
# ---------------------------------------------------------------------------


def lie_bracket(A, B, p, h: float = 1e-5) -> np.ndarray:
    """Numerical Lie bracket [A, B](p) = (DB) A - (DA) B via central differences.

    Directional derivatives are taken along the normalized field values with
    step ``h``, giving O(h^2) accuracy.

    Parameters
    ----------
    A, B : callable
        Vector fields R^m -> R^m.
    p : array_like, shape (m,)
    h : float
        Finite-difference step.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(A(p), dtype=float)
    b = np.asarray(B(p), dtype=float)

    def _jvp(field, direction):
        nrm = float(np.linalg.norm(direction))
        if nrm == 0.0:
            return np.zeros_like(p)
        u = direction / nrm
        return (
            np.asarray(field(p + h * u), dtype=float)
            - np.asarray(field(p - h * u), dtype=float)
        ) * (nrm / (2.0 * h))

    return _jvp(B, a) - _jvp(A, b)


def hormander_rank(
    xi,
    v,
    sigma: float,
    potential,
    kappa: float = 1.0,
    h_inner: float = 1e-4,
    h_outer: float = 1e-3,
    sv_threshold: float = 1e-6,
) -> int:
    """Numerical rank of the bracket-generated span of the dynamics' vector fields.

    Works on the time-extended state space R^{1+2d} with coordinates
    (t, xi, v), the direction part extended smoothly off the sphere through
    the ambient projector P(v) = I - v v^T.  The spanning set is

        T = d/dt + v . grad_xi - kappa P(v) grad(Phi) . grad_v   (drift + time),
        N_j = sigma P(v) e_j . grad_v,          j = 1..d   (noise fields),
        [N_j, T]  and  sum_j [N_j, [N_j, T]]               (brackets),

    evaluated numerically via :func:`lie_bracket` (step ``h_inner`` for the
    first brackets, ``h_outer`` for the outer layer of the double bracket).
    The rank is the number of singular values above
    ``sv_threshold * sigma_max``.  For the fiber lay-down dynamics it equals
    2d at every point with sigma > 0: one time direction, d position
    directions, d-1 tangent direction dims.

    Parameters
    ----------
    xi : array_like (d,)
    v : UnitVector or array_like (d,)
    sigma : float, > 0
    potential : PotentialSpec
        Only ``grad`` is used.
    kappa : float
        Drift scale multiplying grad(Phi); the rank is insensitive to it.
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    xi = np.asarray(xi, dtype=float)
    vv = _as_point_array(v)
    d = xi.size
    grad = potential.grad
    p0 = np.concatenate([[0.0], xi, vv])

    def drift(p):
        x, w = p[1 : 1 + d], p[1 + d :]
        gp = np.asarray(grad(x), dtype=float)
        proj = gp - np.dot(w, gp) * w
        out = np.empty(1 + 2 * d)
        out[0] = 1.0
        out[1 : 1 + d] = w
        out[1 + d :] = -kappa * proj
        return out

    def noise(j):
        def field(p):
            w = p[1 + d :]
            out = np.zeros(1 + 2 * d)
            out[1 + d :] = sigma * (np.eye(d)[j] - w[j] * w)
            return out

        return field

    vectors = [drift(p0)]
    noise_fields = [noise(j) for j in range(d)]
    for nj in noise_fields:
        vectors.append(nj(p0))
    for nj in noise_fields:
        vectors.append(lie_bracket(nj, drift, p0, h=h_inner))
    double = np.zeros(1 + 2 * d)
    for nj in noise_fields:
        inner = lambda q, nj=nj: lie_bracket(nj, drift, q, h=h_inner)
        double += lie_bracket(nj, inner, p0, h=h_outer)
    vectors.append(double)

    s = np.linalg.svd(np.asarray(vectors), compute_uv=False)
    return int(np.sum(s > sv_threshold * s[0]))
