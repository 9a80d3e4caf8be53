"""On-disk format round-trips and determinism guarantees."""

import io
import json

import numpy as np
import pytest

from fiberlay import SCHEME_LOCAL, SimConfig, simulate
from fiberlay import _formats, ergodics, potential
from fiberlay.errors import ConfigError

POT = potential.builtin_radial_quadratic(2)


def _traj(scheme=None, d=2):
    kwargs = {"scheme": scheme} if scheme else {}
    cfg = SimConfig(d=d, sigma=1.0, n_steps=40, dt=1e-2, seed=5,
                    record_stride=4, **kwargs)
    return simulate(cfg, potential.builtin_radial_quadratic(d))


class TestTrajectoryCsv:
    def test_embedded_round_trip_is_exact(self, tmp_path):
        traj = _traj()
        path = tmp_path / "traj.csv"
        _formats.write_trajectory_csv(traj, path)
        cols, data = _formats.read_trajectory_csv(path)
        assert cols == ["t", "xi_1", "xi_2", "v_1", "v_2"]
        expected = np.column_stack([traj.times, traj.xi, traj.v])
        # 17 significant digits reproduce every float64 bit-exactly
        np.testing.assert_array_equal(data, expected)

    def test_local_chart_columns(self, tmp_path):
        traj = _traj(scheme=SCHEME_LOCAL, d=3)
        path = tmp_path / "traj.csv"
        _formats.write_trajectory_csv(traj, path)
        cols, data = _formats.read_trajectory_csv(path)
        assert cols == ["t", "xi_1", "xi_2", "xi_3", "theta_1", "theta_2"]
        np.testing.assert_array_equal(data[:, 4:], traj.theta)

    def test_header_line(self):
        buf = io.StringIO()
        _formats.write_trajectory_csv(_traj(), buf)
        assert buf.getvalue().splitlines()[0] == _formats.FORMAT_HEADER

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("t,x\n0,1\n")
        with pytest.raises(ConfigError, match="format header"):
            _formats.read_trajectory_csv(path)


class TestSeriesCsv:
    def test_layout_and_values(self):
        series = ergodics.ObservableSeries(
            observable="xi_1",
            times=np.array([0.0, 0.5, 1.0]),
            means=np.array([1.0, 0.25, 1.0 / 3.0]),
            stderrs=np.array([0.0, 0.01, 0.02]),
            n_paths=200,
            target=0.0,
            config=SimConfig(d=2, sigma=1.0, n_steps=2, dt=0.5),
        )
        buf = io.StringIO()
        _formats.write_series_csv(series, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == _formats.FORMAT_HEADER
        assert lines[1] == "# observable: xi_1"
        assert lines[2] == "# n_paths: 200"
        assert lines[3] == "t,mean,stderr"
        assert lines[4] == "0,1,0"
        # one third survives the decimal round-trip exactly
        assert float(lines[6].split(",")[1]) == 1.0 / 3.0


class TestReportJson:
    def test_deterministic_and_parseable(self, tmp_path):
        report = {"b": 1.5, "a": {"z": [1, 2], "y": "ok"}}
        p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
        _formats.write_report_json(report, p1)
        _formats.write_report_json(report, p2)
        raw = p1.read_text()
        assert raw == p2.read_text()
        body = raw.split("\n", 1)[1]
        assert json.loads(body) == report
        # keys come out sorted, so logically-equal dicts give equal bytes
        buf = io.StringIO()
        _formats.write_report_json({"a": {"y": "ok", "z": [1, 2]}, "b": 1.5},
                                   buf)
        assert buf.getvalue() == raw


class TestManifest:
    CONFIG = {"d": 2, "sigma": 1.0, "seed": 7, "phi": "radial-quadratic"}

    def _write(self, path):
        _formats.write_manifest(
            path,
            command="simulate",
            config=dict(self.CONFIG),
            code_version="0.1.0",
            outputs=["b.csv", "a.csv"],
        )

    def test_round_trip(self, tmp_path):
        path = tmp_path / "manifest.json"
        self._write(path)
        m = _formats.load_manifest(path)
        assert m["command"] == "simulate"
        assert m["config"] == self.CONFIG
        assert m["outputs"] == ["a.csv", "b.csv"]

    def test_byte_identical_rewrites(self, tmp_path):
        p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
        self._write(p1)
        self._write(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_rejects_non_manifest_json(self, tmp_path):
        path = tmp_path / "report.json"
        _formats.write_report_json({"kind": "report"}, path)
        with pytest.raises(ConfigError, match="not a manifest"):
            _formats.load_manifest(path)

    def test_rejects_missing_header(self, tmp_path):
        path = tmp_path / "bare.json"
        path.write_text(json.dumps({"format": "fiberlay-manifest v1"}))
        with pytest.raises(ConfigError, match="format header"):
            _formats.load_manifest(path)


class TestConfigFile:
    def test_plain_json_object(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"d": 3, "sigma": 0.5}')
        assert _formats.load_config_file(path) == {"d": 3, "sigma": 0.5}

    def test_headered_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(_formats.FORMAT_HEADER + '\n{"d": 2}\n')
        assert _formats.load_config_file(path) == {"d": 2}

    def test_manifest_yields_its_config_block(self, tmp_path):
        path = tmp_path / "manifest.json"
        _formats.write_manifest(path, command="simulate",
                                config={"d": 2, "seed": 9},
                                code_version="0.1.0", outputs=[])
        assert _formats.load_config_file(path) == {"d": 2, "seed": 9}

    def test_rejects_non_object(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(ConfigError, match="JSON object"):
            _formats.load_config_file(path)
