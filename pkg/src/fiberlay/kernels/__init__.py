"""Stepping-kernel backends.

Two interchangeable implementations of the block-stepping kernels exist:

``_ref``
    Pure numpy, vectorized over paths.  Handles any potential through its
    vectorized ``grad`` callable.
``_native``
    Cython, per-path scalar loops.  Specialized to the diagonal-quadratic
    potential family (grad Phi = 2 a xi, a >= 0 elementwise, a = 0 meaning
    free flight); built optionally at install time.

Selection happens per run via :func:`select_backend`: the compiled kernel is
used when it is importable, the potential is diagonal-quadratic, and the
environment does not say otherwise.  Set ``FIBERLAY_KERNELS=python`` to force
the reference backend or ``FIBERLAY_KERNELS=native`` to require the compiled
one (import error if missing).

Both backends consume identical Wiener-increment arrays in identical order,
so a given (seed, config, potential) triple yields the same path statistics;
only floating-point summation order differs between them, so cross-backend
checks are tolerance-based rather than bitwise.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

from . import _ref

try:  # pragma: no cover - depends on the build environment
    from . import _native
except ImportError:  # pragma: no cover
    _native = None

__all__ = ["HAVE_COMPILED", "USING_COMPILED", "select_backend", "backend_name"]

#: True when the compiled extension imported successfully.
HAVE_COMPILED = _native is not None

_mode = os.environ.get("FIBERLAY_KERNELS", "auto").lower()
if _mode not in {"auto", "python", "native"}:
    warnings.warn(
        f"FIBERLAY_KERNELS={_mode!r} not recognized; using 'auto'", stacklevel=1
    )
    _mode = "auto"
if _mode == "native" and not HAVE_COMPILED:
    raise ImportError(
        "FIBERLAY_KERNELS=native but the compiled kernel extension is not available"
    )

#: True when the compiled extension may be selected at all.
USING_COMPILED = HAVE_COMPILED and _mode != "python"


class _PythonBackend:
    """Reference backend bound to a potential's vectorized gradient."""

    name = "python"

    def __init__(self, pot):
        self._grad = pot.grad

    def embedded_block(self, xi, v, incr, dt, sigma, kappa, start_step,
                       record_offsets, rec_xi, rec_v, rec_base):
        _ref.embedded_block(xi, v, incr, dt, sigma, kappa, self._grad,
                            start_step, record_offsets, rec_xi, rec_v, rec_base)

    def local_block(self, xi, th, incr, dt, sigma, kappa, start_step,
                    record_offsets, rec_xi, rec_th, rec_base, pole_tol,
                    pole_fallback):
        _ref.local_block(xi, th, incr, dt, sigma, kappa, self._grad,
                         start_step, record_offsets, rec_xi, rec_th, rec_base,
                         pole_tol, pole_fallback)


class _NativeBackend:
    """Compiled backend for diagonal-quadratic potentials."""

    name = "native"

    def __init__(self, pot):
        self._a = np.ascontiguousarray(pot.coeffs, dtype=np.float64)

    def embedded_block(self, xi, v, incr, dt, sigma, kappa, start_step,
                       record_offsets, rec_xi, rec_v, rec_base):
        from ..errors import StepFailure

        offsets = np.ascontiguousarray(record_offsets, dtype=np.int64)
        for p in range(xi.shape[0]):
            bad = _native.embedded_path(
                xi[p], v[p], np.ascontiguousarray(incr[p]), dt, sigma, kappa,
                self._a, offsets, rec_xi[p], rec_v[p], rec_base,
            )
            if bad >= 0:
                raise StepFailure(start_step + bad)

    def local_block(self, xi, th, incr, dt, sigma, kappa, start_step,
                    record_offsets, rec_xi, rec_th, rec_base, pole_tol,
                    pole_fallback):
        from ..errors import StepFailure

        offsets = np.ascontiguousarray(record_offsets, dtype=np.int64)
        n_steps = incr.shape[1]
        for p in range(xi.shape[0]):
            incr_p = np.ascontiguousarray(incr[p])
            b_start = 0
            while b_start < n_steps:
                status, b, j, theta = _native.local_path(
                    xi[p], th[p], incr_p, dt, sigma, kappa, self._a, pole_tol,
                    offsets, rec_xi[p], rec_th[p], rec_base, b_start,
                )
                if status == 0:
                    break
                if status == 2:
                    raise StepFailure(start_step + b)
                # pole exit before executing local step b: detour through the
                # global chart for this path, record if b is a record step,
                # then resume after b
                xi[p], th[p] = pole_fallback(p, xi[p].copy(), th[p].copy(),
                                             start_step + b, j, theta)
                r = int(np.searchsorted(offsets, b))
                if r < offsets.size and offsets[r] == b:
                    rec_xi[p, rec_base + r] = xi[p]
                    rec_th[p, rec_base + r] = th[p]
                b_start = b + 1


def select_backend(pot, scheme: str | None = None):
    """Pick the stepping backend for a potential (and optionally a scheme)."""
    if USING_COMPILED and getattr(pot, "is_quadratic_diagonal", False):
        return _NativeBackend(pot)
    return _PythonBackend(pot)


def backend_name(pot=None) -> str:
    """Name of the backend :func:`select_backend` would pick."""
    if pot is None:
        return "native" if USING_COMPILED else "python"
    return select_backend(pot).name
