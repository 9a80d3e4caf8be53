"""Confining potentials and numerical audits of the standing hypotheses.

A :class:`PotentialSpec` bundles Phi with its analytic gradient and Hessian
plus the metadata the diagnostics need (normalization of exp(-Phi), spectral
gap of the weighted measure when known).  The audits check, numerically, the
hypotheses the convergence theory rests on: integrability/normalization of
exp(-Phi) and the pointwise Hessian growth bound
|hess Phi| <= C (1 + |grad Phi|).

Usage::

    from fiberlay import potential

    pot = potential.builtin_radial_quadratic(2)     # Phi = |xi|^2
    pot.value(np.zeros(2))                          # 0.0
    est = potential.audit_H2(pot)                   # ~ pi
    c = potential.audit_H4(pot, sample)             # 2.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonIntegrable

__all__ = [
    "PotentialSpec",
    "NormalizationEstimate",
    "builtin_radial_quadratic",
    "builtin_anisotropic_quadratic",
    "builtin_zero",
    "make_custom",
    "audit_H2",
    "audit_H4",
]


@dataclass(frozen=True)
class PotentialSpec:
    """A smooth potential Phi: R^d -> R with analytic derivatives.

    All callables are vectorized over leading axes: ``value`` maps (..., d)
    to (...), ``grad`` to (..., d) and ``hess`` to (..., d, d).

    Attributes
    ----------
    dim : int
        Ambient dimension d.
    value, grad, hess : callable
    family : str
        "quadratic-diagonal", "radial-quadratic" or "custom".
    coeffs : ndarray or None
        Diagonal coefficients a for the quadratic families
        (Phi = sum a_i xi_i^2); None for custom potentials.
    normalization_known : float or None
        int exp(-Phi) dxi when known in closed form.
    poincare_constant_known : float or None
        Spectral gap Lambda of the measure exp(-Phi) dxi when known.  For
        the quadratic-diagonal family this is 2 * min(a_i): per coordinate
        the weighted generator -u'' + 2 a x u' has gap 2a, and the smallest
        coordinate gap wins.
    smooth_attested : bool
        Smoothness is trusted, not verified; built-ins set this, custom
        potentials carry the caller's attestation.
    """

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    family: str = "custom"
    coeffs: np.ndarray | None = None
    normalization_known: float | None = None
    poincare_constant_known: float | None = None
    smooth_attested: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.coeffs is not None:
            c = np.asarray(self.coeffs, dtype=float)
            c.setflags(write=False)
            object.__setattr__(self, "coeffs", c)
        _smoke_test_gradient(self)

    @property
    def is_quadratic_diagonal(self) -> bool:
        """True when grad Phi = 2 a (.) for a stored diagonal a >= 0."""
        return self.coeffs is not None


def _smoke_test_gradient(pot: PotentialSpec, n: int = 8, tol: float = 1e-5) -> None:
    """Check grad against central differences of value on a random sample."""
    rng = np.random.default_rng(0xF1BE)
    x = rng.normal(scale=1.5, size=(n, pot.dim))
    g = np.asarray(pot.grad(x), dtype=float)
    h = 1e-5
    fd = np.empty_like(g)
    for i in range(pot.dim):
        e = np.zeros(pot.dim)
        e[i] = h
        fd[:, i] = (pot.value(x + e) - pot.value(x - e)) / (2 * h)
    scale = 1.0 + np.abs(g)
    if np.max(np.abs(g - fd) / scale) > tol:
        raise ValueError(
            "potential gradient disagrees with finite differences of value"
        )


def _quadratic_diagonal(a: np.ndarray, family: str) -> PotentialSpec:
    a = np.asarray(a, dtype=float)
    d = a.size

    def value(x):
        x = np.asarray(x, dtype=float)
        return np.sum(a * x * x, axis=-1)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * a * x

    def hess(x):
        x = np.asarray(x, dtype=float)
        h = np.zeros(x.shape + (d,))
        idx = np.arange(d)
        h[..., idx, idx] = 2.0 * a
        return h

    if np.all(a > 0):
        normalization = float(np.prod(np.sqrt(math.pi / a)))
        gap = float(2.0 * np.min(a))
    else:
        normalization = None
        gap = None
    return PotentialSpec(
        dim=d,
        value=value,
        grad=grad,
        hess=hess,
        family=family,
        coeffs=a,
        normalization_known=normalization,
        poincare_constant_known=gap,
        smooth_attested=True,
    )


def builtin_radial_quadratic(d: int) -> PotentialSpec:
    """The radial quadratic potential Phi(xi) = |xi|^2 in dimension d.

    grad Phi = 2 xi, hess Phi = 2 I.  The weighted measure exp(-|xi|^2) dxi
    is a product Gaussian with variance 1/2 per coordinate, normalization
    pi^{d/2} and spectral gap Lambda = 2 (gap = 1/variance per coordinate).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    return _quadratic_diagonal(np.ones(d), "radial-quadratic")


def builtin_anisotropic_quadratic(a) -> PotentialSpec:
    """Diagonal quadratic potential Phi(xi) = sum_i a_i xi_i^2, all a_i > 0.

    Spectral gap Lambda = 2 * min(a_i).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise ValueError("a must be a vector of length d >= 2")
    if np.any(a <= 0):
        raise ValueError("all coefficients must be positive")
    return _quadratic_diagonal(a, "quadratic-diagonal")


def builtin_zero(d: int) -> PotentialSpec:
    """The zero potential (free dynamics); not integrable, no gap metadata."""
    if d < 2:
        raise ValueError("d must be >= 2")
    return _quadratic_diagonal(np.zeros(d), "quadratic-diagonal")


def make_custom(
    dim: int,
    value,
    grad,
    hess,
    normalization_known: float | None = None,
    poincare_constant_known: float | None = None,
    smooth_attested: bool = False,
) -> PotentialSpec:
    """Wrap user-supplied callables as a PotentialSpec (gradient smoke-tested)."""
    return PotentialSpec(
        dim=dim,
        value=value,
        grad=grad,
        hess=hess,
        family="custom",
        normalization_known=normalization_known,
        poincare_constant_known=poincare_constant_known,
        smooth_attested=smooth_attested,
    )


@dataclass(frozen=True)
class NormalizationEstimate:
    """Estimated int exp(-Phi) dxi with a crude error indicator."""

    value: float
    error: float
    method: str

    def __float__(self) -> float:
        return self.value


def audit_H2(
    pot: PotentialSpec,
    method: str | None = None,
    budget: int = 200_000,
    radius: float | None = None,
) -> NormalizationEstimate:
    """Estimate the normalization int exp(-Phi) dxi and test integrability.

    A tensor Gauss-Legendre grid is used for d <= 3, Gaussian importance
    sampling otherwise.  The estimate is computed on nested boxes (or
    proposal scales); if enlarging the domain keeps growing the estimate the
    tail test fails and :class:`NonIntegrable` is raised.  Diagnostics divide
    by this constant instead of requiring Phi to be pre-normalized.

    Parameters
    ----------
    pot : PotentialSpec
    method : {"grid", "importance"}, optional
        Default: "grid" for d <= 3, "importance" above.
    budget : int
        Total node / sample budget.
    radius : float, optional
        Half-width of the largest box (grid) or largest proposal std
        (importance).  Default 6.0, scaled by the potential's coefficients
        when available.

    Returns
    -------
    NormalizationEstimate

    Raises
    ------
    NonIntegrable
        When the nested-domain estimates keep growing (e.g. Phi = 0).
    """
    d = pot.dim
    if method is None:
        method = "grid" if d <= 3 else "importance"
    if radius is None:
        if pot.coeffs is not None and np.all(np.asarray(pot.coeffs) > 0):
            radius = 6.0 / math.sqrt(float(np.min(pot.coeffs)))
        else:
            radius = 6.0

    if method == "grid":
        n = max(8, int(round(budget ** (1.0 / d))))
        estimates = []
        for r in (radius / 2.0, 3.0 * radius / 4.0, radius):
            x, w = np.polynomial.legendre.leggauss(n)
            pts_1d = r * x
            w_1d = r * w
            grids = np.meshgrid(*([pts_1d] * d), indexing="ij")
            pts = np.stack([g.ravel() for g in grids], axis=-1)
            wts = w_1d
            for _ in range(d - 1):
                wts = np.multiply.outer(wts, w_1d)
            estimates.append(float(np.sum(wts.ravel() * np.exp(-pot.value(pts)))))
        i1, i2, i3 = estimates
        # converged if the largest enlargement changed almost nothing
        if abs(i3 - i2) > 1e-3 * abs(i3) + 1e-12:
            raise NonIntegrable(
                f"exp(-Phi) tail keeps accumulating mass: {estimates!r}"
            )
        return NormalizationEstimate(value=i3, error=abs(i3 - i2), method="grid")

    if method == "importance":
        rng = np.random.default_rng(0x5EED)
        estimates = []
        for s in (radius / 3.0, radius / 2.0, radius):
            x = rng.normal(scale=s, size=(budget, d))
            log_q = (
                -0.5 * np.sum((x / s) ** 2, axis=-1)
                - d * math.log(s * math.sqrt(2 * math.pi))
            )
            w = np.exp(-pot.value(x) - log_q)
            estimates.append((float(np.mean(w)), float(np.std(w) / math.sqrt(budget))))
        (v2, _), (v3, e3) = estimates[-2], estimates[-1]
        if abs(v3 - v2) > max(6.0 * e3, 1e-2 * abs(v3)):
            raise NonIntegrable(
                f"exp(-Phi) importance estimates do not stabilize: {estimates!r}"
            )
        return NormalizationEstimate(value=v3, error=e3, method="importance")

    raise ValueError(f"unknown method {method!r}")


def audit_H4(pot: PotentialSpec, sample) -> float:
    """Smallest C with |hess Phi(xi)|_2 <= C (1 + |grad Phi(xi)|) on the sample.

    The Hessian is measured in operator norm.  The ratio is examined on
    radius shells of the sample: if the per-shell maxima keep growing
    monotonically through the outermost shells the bound looks unattainable
    and ``inf`` is returned; otherwise the sample maximum is reported.  The
    unboundedness flag is a heuristic (it can clear once a larger sample
    reveals the ratio's turnover); within the non-flagged regime the report
    is monotone under sample growth.
    """
    pts = np.asarray(sample, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.size == 0:
        raise ValueError("sample must be nonempty")
    h = np.asarray(pot.hess(pts), dtype=float)
    g = np.asarray(pot.grad(pts), dtype=float)
    hnorm = np.linalg.norm(h, ord=2, axis=(-2, -1))
    ratio = hnorm / (1.0 + np.linalg.norm(g, axis=-1))

    r = np.linalg.norm(pts, axis=-1)
    order = np.argsort(r)
    n_shells = min(4, pts.shape[0])
    shells = np.array_split(order, n_shells)
    maxima = np.array([ratio[idx].max() for idx in shells if idx.size > 0])
    if maxima.size >= 3:
        growth = maxima[1:] / np.maximum(maxima[:-1], 1e-300)
        if np.all(growth > 1.0 + 1e-3):
            return math.inf
    return float(ratio.max())
