"""Versioned on-disk formats: CSV for series/trajectories, JSON for reports.

Every file starts with the line ``# fiberlay-format v1``.  Writers are
deterministic — no timestamps, sorted JSON keys, fixed "\\n" newlines,
floats at 17 significant digits — so a rerun with the same seed produces
byte-identical artifacts, and a manifest round-trips exactly.
"""

from __future__ import annotations

import json
import os
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigError

if TYPE_CHECKING:  # pragma: no cover
    from .dynamics import Trajectory
    from .ergodics import ObservableSeries

__all__ = [
    "FORMAT_HEADER",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_series_csv",
    "write_manifest",
    "load_manifest",
    "load_config_file",
]

FORMAT_HEADER = "# fiberlay-format v1"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


class _Sink:
    """Open a path for deterministic text output, or pass a file through."""

    def __init__(self, path_or_file):
        self._own = isinstance(path_or_file, (str, os.PathLike))
        self.f = (
            open(path_or_file, "w", newline="\n") if self._own else path_or_file
        )

    def __enter__(self):
        return self.f

    def __exit__(self, *exc):
        if self._own:
            self.f.close()
        return False


def write_trajectory_csv(traj: "Trajectory", path_or_file) -> None:
    """Write one trajectory; columns depend on the chart it was recorded in.

    Global chart: ``t, xi_1..xi_d, v_1..v_d``; local chart:
    ``t, xi_1..xi_d, theta_1..theta_{d-1}``.
    """
    d = traj.xi.shape[1]
    if traj.v is not None:
        w, w_cols = traj.v, [f"v_{i}" for i in range(1, d + 1)]
    else:
        w, w_cols = traj.theta, [f"theta_{i}" for i in range(1, d)]
    cols = ["t"] + [f"xi_{i}" for i in range(1, d + 1)] + w_cols
    with _Sink(path_or_file) as f:
        f.write(FORMAT_HEADER + "\n")
        f.write(",".join(cols) + "\n")
        for t, xi_row, w_row in zip(traj.times, traj.xi, w):
            vals = [t, *xi_row, *w_row]
            f.write(",".join(_fmt(v) for v in vals) + "\n")


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a trajectory CSV back; returns (column names, data array)."""
    with open(path, "r", newline="\n") as f:
        header = f.readline().rstrip("\n")
        if header != FORMAT_HEADER:
            raise ConfigError(f"{path}: unrecognized format header {header!r}")
        cols = f.readline().rstrip("\n").split(",")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    return cols, data


def write_series_csv(series: "ObservableSeries", path_or_file) -> None:
    """Write an observable series as ``t, mean, stderr`` rows."""
    with _Sink(path_or_file) as f:
        f.write(FORMAT_HEADER + "\n")
        f.write(f"# observable: {series.observable}\n")
        f.write(f"# n_paths: {series.n_paths}\n")
        f.write("t,mean,stderr\n")
        for t, m, s in zip(series.times, series.means, series.stderrs):
            f.write(f"{_fmt(t)},{_fmt(m)},{_fmt(s)}\n")


def _json_dump(obj: dict, path_or_file) -> None:
    with _Sink(path_or_file) as f:
        f.write(FORMAT_HEADER + "\n")
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def write_report_json(report: dict, path_or_file) -> None:
    """Write a machine-readable report (header line + canonical JSON)."""
    _json_dump(report, path_or_file)


def write_manifest(path_or_file, *, command: str, config: dict,
                   code_version: str, outputs: list[str]) -> None:
    """Write the run manifest: everything needed to reproduce bit-exactly.

    The manifest deliberately records no timestamps or host details, so the
    file itself is reproducible too.
    """
    _json_dump(
        {
            "format": "fiberlay-manifest v1",
            "command": command,
            "config": config,
            "code_version": code_version,
            "outputs": sorted(outputs),
        },
        path_or_file,
    )


def _json_load(path) -> dict:
    with open(path, "r") as f:
        first = f.readline().rstrip("\n")
        if first != FORMAT_HEADER:
            raise ConfigError(f"{path}: unrecognized format header {first!r}")
        return json.load(f)


def load_manifest(path) -> dict:
    """Read a manifest back (for ``--from-manifest`` reruns)."""
    m = _json_load(path)
    if m.get("format") != "fiberlay-manifest v1":
        raise ConfigError(f"{path}: not a manifest file")
    return m


def load_config_file(path) -> dict:
    """Read a JSON config file (plain object, or a manifest's config block).

    Keys mirror the CLI flags; command-line flags override file values.
    """
    with open(path, "r") as f:
        head = f.read(len(FORMAT_HEADER))
        f.seek(0)
        if head == FORMAT_HEADER:
            f.readline()
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config file must hold a JSON object")
    if cfg.get("format") == "fiberlay-manifest v1":
        cfg = cfg["config"]
    return cfg
