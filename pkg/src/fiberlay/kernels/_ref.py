"""Reference (pure numpy) stepping kernels, vectorized over paths.

Both kernels advance a chunk of paths through one block of time steps,
mutating the state arrays in place and snapshotting into the record buffers
at the requested step offsets.  The compiled backend in ``_native`` mirrors
these semantics exactly (same inputs, same Wiener-increment consumption);
only the floating-point summation order may differ, so cross-backend
comparisons are tolerance-based, not bitwise.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import StepFailure
from ..geometry import _chart_jacobian, _embed

__all__ = ["embedded_block", "local_block"]


def _tangent(v: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Rowwise tangential projection (I - v v^T) z for stacked vectors."""
    return z - np.sum(v * z, axis=-1, keepdims=True) * v


def embedded_block(
    xi: np.ndarray,
    v: np.ndarray,
    incr: np.ndarray,
    dt: float,
    sigma: float,
    kappa: float,
    grad,
    start_step: int,
    record_offsets: np.ndarray,
    rec_xi: np.ndarray,
    rec_v: np.ndarray,
    rec_base: int,
) -> None:
    """Advance a chunk through one block with the projected Heun scheme.

    Parameters
    ----------
    xi, v : ndarray (P, d)
        State arrays, updated in place; |v| = 1 is restored every step.
    incr : ndarray (P, B, d)
        Wiener increments for the block, already scaled to variance dt.
    grad : callable
        Vectorized gradient of the potential, (P, d) -> (P, d).
    start_step : int
        Global index of the first step in the block (for error reporting).
    record_offsets : int ndarray
        Sorted local step offsets b after which to snapshot the state.
    rec_xi, rec_v : ndarray (P, m, d)
        Record buffers; snapshot r of this block lands at ``rec_base + r``.
    """
    n_steps = incr.shape[1]
    half_dt = 0.5 * dt
    r = 0
    for b in range(n_steps):
        dw = incr[:, b, :]
        a0 = -kappa * _tangent(v, grad(xi))
        noise0 = _tangent(v, dw)
        xi_pred = xi + dt * v
        v_pred = v + dt * a0 + sigma * noise0
        a1 = -kappa * _tangent(v_pred, grad(xi_pred))
        v_half = v + half_dt * (a0 + a1) + 0.5 * sigma * (noise0 + _tangent(v_pred, dw))
        nrm = np.linalg.norm(v_half, axis=-1, keepdims=True)
        if not np.all(np.isfinite(v_half)) or np.any(nrm < 0.5):
            raise StepFailure(start_step + b)
        v_new = v_half / nrm
        xi += half_dt * (v + v_new)
        v[...] = v_new
        if r < record_offsets.size and record_offsets[r] == b:
            rec_xi[:, rec_base + r] = xi
            rec_v[:, rec_base + r] = v
            r += 1


def local_block(
    xi: np.ndarray,
    th: np.ndarray,
    incr: np.ndarray,
    dt: float,
    sigma: float,
    kappa: float,
    grad,
    start_step: int,
    record_offsets: np.ndarray,
    rec_xi: np.ndarray,
    rec_th: np.ndarray,
    rec_base: int,
    pole_tol: float,
    pole_fallback,
) -> None:
    """Advance a chunk through one block with the chart Euler-Maruyama scheme.

    The drift is the chart-form drift including the geometric cot term
    (kappa scales only the potential part); theta_1 is wrapped modulo 2*pi.
    Paths whose interior angles leave the chart are handed to
    ``pole_fallback(p, xi_row, th_row, global_step, j, theta_j)`` — with the
    pre-step state, the offending 1-based angle index and its attempted
    value — which performs the global-chart detour for that single path and
    returns the replacement (xi_row, th_row).

    Other arguments as in :func:`embedded_block`, with ``th``/``rec_th`` of
    width d-1 in place of ``v``/``rec_v``.
    """
    n_steps = incr.shape[1]
    n_paths, k = th.shape
    two_pi = 2.0 * math.pi
    jw = np.arange(1, k, dtype=float)  # (j - 1) for interior angles j = 2..d-1
    r = 0
    for b in range(n_steps):
        dw = incr[:, b, :]
        v = _embed(th)
        jac = _chart_jacobian(th)
        g_factors = np.ones((n_paths, k))
        for j in range(k - 2, -1, -1):
            g_factors[:, j] = g_factors[:, j + 1] / np.sin(th[:, j + 1])
        g2 = g_factors * g_factors
        drift = -kappa * g2 * np.einsum("pdk,pd->pk", jac, grad(xi))
        if k > 1:
            drift[:, 1:] += 0.5 * sigma * sigma * g2[:, 1:] * jw / np.tan(th[:, 1:])
        th_new = th + dt * drift + sigma * g_factors * dw
        th_new[:, 0] %= two_pi
        xi_new = xi + dt * v
        if k > 1:
            dist = np.minimum(th_new[:, 1:], math.pi - th_new[:, 1:])
            bad = ~np.all(dist > pole_tol, axis=1)
            for p in np.nonzero(bad)[0]:
                j = int(np.argmin(dist[p])) + 2  # 1-based offending angle
                xi_new[p], th_new[p] = pole_fallback(
                    int(p), xi[p].copy(), th[p].copy(), start_step + b,
                    j, float(th_new[p, j - 1]),
                )
        if not (np.all(np.isfinite(th_new)) and np.all(np.isfinite(xi_new))):
            raise StepFailure(start_step + b)
        xi[...] = xi_new
        th[...] = th_new
        if r < record_offsets.size and record_offsets[r] == b:
            rec_xi[:, rec_base + r] = xi
            rec_th[:, rec_base + r] = th
            r += 1
