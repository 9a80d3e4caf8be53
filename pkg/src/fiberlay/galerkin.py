"""Galerkin spectral-gap estimate for the planar process.

For d = 2, a quadratic-diagonal potential Phi = a1 x1^2 + a2 x2^2 and the
drift scale kappa = 1 (= 1/(d-1)), the generator in the angle chart
v = (cos a, sin a) reads

    L = cos a d/dx1 + sin a d/dx2
        + (2 a1 x1 sin a - 2 a2 x2 cos a) d/da + (sigma^2/2) d^2/da^2,

and the invariant measure is mu = (e^{-Phi} dx / Z) (x) (da / 2 pi).  This
module assembles the matrix of L on the mu-orthonormal tensor basis

    {Hermite functions of the Gaussian xi-marginal}^(x)2  (x)  {Fourier modes},

computes its spectrum (dense eigensolve; bases stay small), and reports the
spectral gap = -max Re(nonzero spectrum).  Every 1-D matrix element is an
exact integral: differentiation lowers Hermite degree (stays in the span),
coordinate multiplication is tridiagonal, and the trig product formulas
give the Fourier elements, with the lone same-slot composition (sin/cos
times d/da) exact because d/da maps the span into itself.  The constant
mode spans the kernel; the gap is read off the complement.

The gap estimate is a numerical observable, not a theorem-backed constant:
its value must be reproducible and stable under basis growth, which
:func:`stable_gap_2d` enforces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BasisTooSmall, ConfigError
from .potential import PotentialSpec

__all__ = ["GapEstimate", "estimate_gap_2d", "stable_gap_2d"]


@dataclass(frozen=True)
class GapEstimate:
    """Spectral gap of the discretized generator.

    ``gap`` is -max Re over the nonzero spectrum; ``leading`` is the
    eigenvalue attaining it; ``kernel_residual`` is the norm of the
    discretized L applied to the constant function (zero up to roundoff).
    """

    gap: float
    leading: complex
    basis: tuple[int, int]
    n_modes: int
    kernel_residual: float

    def __float__(self) -> float:
        return self.gap


def _hermite_derivative(n: int, a: float) -> np.ndarray:
    """Matrix of d/dx on the first n orthonormal Hermite functions of
    the weight sqrt(a/pi) e^{-a x^2}: lowers degree, d phi_m = sqrt(2am) phi_{m-1}."""
    m = np.arange(1, n)
    out = np.zeros((n, n))
    out[m - 1, m] = np.sqrt(2.0 * a * m)
    return out


def _hermite_coordinate(n: int, a: float) -> np.ndarray:
    """Matrix of multiplication by x on the same basis (exact, tridiagonal)."""
    m = np.arange(n - 1)
    out = np.zeros((n, n))
    off = np.sqrt((m + 1) / (2.0 * a))
    out[m + 1, m] = off
    out[m, m + 1] = off
    return out


def _fourier_matrices(nf: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """1-D Fourier-side matrices on [1, sqrt2 cos a, sqrt2 sin a, ...].

    Returns (C, S, D, D2): multiplication by cos a and sin a, d/da, d^2/da^2,
    all exact matrix elements in the orthonormal basis of da/(2 pi).
    """
    if nf < 3 or nf % 2 == 0:
        raise ConfigError("n_fourier must be odd and >= 3 (constant + cos/sin pairs)")
    n_pairs = (nf - 1) // 2
    cos_i = lambda k: 2 * k - 1  # index of sqrt2 cos(k a)
    sin_i = lambda k: 2 * k  # index of sqrt2 sin(k a)
    C = np.zeros((nf, nf))
    S = np.zeros((nf, nf))
    D = np.zeros((nf, nf))
    D2 = np.zeros((nf, nf))
    inv_sqrt2 = 1.0 / math.sqrt(2.0)

    C[cos_i(1), 0] = C[0, cos_i(1)] = inv_sqrt2
    S[sin_i(1), 0] = S[0, sin_i(1)] = inv_sqrt2
    for k in range(1, n_pairs + 1):
        D[sin_i(k), cos_i(k)] = -k
        D[cos_i(k), sin_i(k)] = k
        D2[cos_i(k), cos_i(k)] = D2[sin_i(k), sin_i(k)] = -k * k
        if k + 1 <= n_pairs:
            # cos a cos ka, cos a sin ka, sin a cos ka, sin a sin ka
            C[cos_i(k + 1), cos_i(k)] = C[cos_i(k), cos_i(k + 1)] = 0.5
            C[sin_i(k + 1), sin_i(k)] = C[sin_i(k), sin_i(k + 1)] = 0.5
            S[sin_i(k + 1), cos_i(k)] = S[cos_i(k), sin_i(k + 1)] = 0.5
            S[cos_i(k + 1), sin_i(k)] = S[sin_i(k), cos_i(k + 1)] = -0.5
    return C, S, D, D2


def assemble_generator_2d(pot: PotentialSpec, sigma: float,
                          basis: tuple[int, int]) -> np.ndarray:
    """Exact Galerkin matrix of L on the tensor basis; shape (N, N) with
    N = n_hermite^2 * n_fourier, basis index (m1, m2, k) lexicographic."""
    if pot.dim != 2:
        raise ConfigError("the Galerkin estimate is implemented for d = 2")
    if not pot.is_quadratic_diagonal or min(pot.coeffs) <= 0:
        raise ConfigError(
            "the Galerkin basis needs a confining quadratic-diagonal potential"
        )
    if sigma <= 0:
        raise ConfigError("sigma must be > 0")
    nh, nf = basis
    if nh < 2 or nf < 3:
        raise BasisTooSmall(f"basis {basis} cannot represent the transport terms")
    a1, a2 = (float(c) for c in pot.coeffs)
    C, S, D, D2 = _fourier_matrices(nf)
    ih = np.eye(nh)

    def kron3(A, B, F):
        return np.kron(np.kron(A, B), F)

    M = kron3(_hermite_derivative(nh, a1), ih, C)
    M += kron3(ih, _hermite_derivative(nh, a2), S)
    M += 2.0 * a1 * kron3(_hermite_coordinate(nh, a1), ih, S @ D)
    M -= 2.0 * a2 * kron3(ih, _hermite_coordinate(nh, a2), C @ D)
    M += 0.5 * sigma * sigma * kron3(ih, ih, D2)
    return M


def estimate_gap_2d(pot: PotentialSpec, sigma: float,
                    basis: tuple[int, int] = (12, 13)) -> GapEstimate:
    """Spectral gap of the planar generator by dense Galerkin eigensolve.

    Parameters
    ----------
    pot : PotentialSpec
        Confining quadratic-diagonal planar potential.
    sigma : float
        Noise amplitude (> 0).
    basis : (n_hermite, n_fourier)
        Modes per xi axis and Fourier size (odd: constant + cos/sin pairs).

    Returns
    -------
    GapEstimate
        With ``gap`` = -max Re over the spectrum excluding the constant
        mode's zero.  The estimate is only trustworthy once stable under
        basis growth — see :func:`stable_gap_2d`.
    """
    M = assemble_generator_2d(pot, sigma, basis)
    kernel_residual = float(
        max(np.linalg.norm(M[:, 0]), np.linalg.norm(M[0, :]))
    )
    # the constant mode decouples exactly (zero column and row); the rest of
    # the spectrum is the submatrix without it
    eigs = scipy.linalg.eigvals(M[1:, 1:])
    top = int(np.argmax(eigs.real))
    return GapEstimate(
        gap=float(-eigs.real[top]),
        leading=complex(eigs[top]),
        basis=(int(basis[0]), int(basis[1])),
        n_modes=M.shape[0],
        kernel_residual=kernel_residual,
    )


def stable_gap_2d(pot: PotentialSpec, sigma: float,
                  basis: tuple[int, int] = (8, 9),
                  grown: tuple[int, int] | None = None,
                  rtol: float = 0.05) -> GapEstimate:
    """Gap estimate validated by basis growth.

    Computes the gap at ``basis`` and at ``grown`` (default: half again as
    many modes per factor, Fourier kept odd) and returns the finer result.

    Raises
    ------
    BasisTooSmall
        If the two estimates differ by more than ``rtol`` relative to the
        finer one — the basis has not resolved the leading eigenvalue.
    """
    if grown is None:
        grown = (basis[0] + basis[0] // 2, basis[1] + 2 * (basis[1] // 4) + 2)
        if grown[1] % 2 == 0:
            grown = (grown[0], grown[1] + 1)
    coarse = estimate_gap_2d(pot, sigma, basis)
    fine = estimate_gap_2d(pot, sigma, grown)
    if fine.gap <= 0 or abs(coarse.gap - fine.gap) > rtol * abs(fine.gap):
        raise BasisTooSmall(
            f"gap estimate not stable: {coarse.gap:.6g} at {basis} vs "
            f"{fine.gap:.6g} at {grown}"
        )
    return fine
