"""End-to-end command-line behaviour: exit codes, artifacts, reproducibility."""

import json
import subprocess
import sys

import pytest

from fiberlay import _formats
from fiberlay.cli import FIGURE_SIGMAS, main

RATE_ARGS = ["rate", "--eta", "2", "--sigma", "1.5",
             "--K1", "0.8", "--K2", "1.2", "--K3", "0.5"]


def _read_json(path):
    with open(path) as f:
        assert f.readline().rstrip("\n") == _formats.FORMAT_HEADER
        return json.load(f)


class TestRate:
    def test_report_values(self, capsys):
        assert main(RATE_ARGS) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["lambda"] == pytest.approx(0.19257773319959878, abs=1e-15)
        assert report["sigma_star"] == pytest.approx(0.5 ** -0.25, abs=1e-15)
        assert report["lambda_at_sigma_star"] > report["lambda"]

    def test_out_dir_artifacts(self, tmp_path, capsys):
        out = tmp_path / "rate"
        assert main(RATE_ARGS + ["--out", str(out)]) == 0
        capsys.readouterr()
        assert _read_json(out / "rate.json")["lambda"] > 0
        m = _formats.load_manifest(out / "manifest.json")
        assert m["command"] == "rate"
        assert m["outputs"] == ["rate.json"]

    def test_coercivity_block_needs_dimension(self, capsys):
        assert main(RATE_ARGS + ["--d", "3", "--Lambda", "2.0"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert "coercivity" in report
        assert report["coercivity"]["projected_bound"] > 0
        assert "K1" in report["coercivity"]["note"]

    def test_missing_required_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["rate", "--eta", "2"])
        assert exc.value.code == 2


class TestSimulate:
    BASE = ["simulate", "--T", "2.0", "--dt", "1e-3", "--seed", "7",
            "--record-stride", "10"]

    def _run(self, out, extra=()):
        return main(self.BASE + ["--out", str(out)] + list(extra))

    def test_artifacts_and_determinism(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert self._run(out1) == 0
        assert self._run(out2) == 0
        assert "wrote" in capsys.readouterr().out
        csv1 = (out1 / "trajectory.csv").read_bytes()
        assert csv1 == (out2 / "trajectory.csv").read_bytes()
        cols, data = _formats.read_trajectory_csv(out1 / "trajectory.csv")
        assert cols[0] == "t" and data.shape == (201, 5)

    def test_manifest_rerun_is_byte_identical(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert self._run(out1, ["--sigma", "0.7"]) == 0
        assert main(["simulate", "--config", str(out1 / "manifest.json"),
                     "--out", str(out2)]) == 0
        capsys.readouterr()
        assert (out1 / "trajectory.csv").read_bytes() == \
            (out2 / "trajectory.csv").read_bytes()

    def test_flag_overrides_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"sigma": 0.25, "seed": 9, "T": 2.0}')
        out = tmp_path / "o"
        assert main(["simulate", "--config", str(cfg), "--sigma", "0.5",
                     "--out", str(out)]) == 0
        capsys.readouterr()
        echo = _formats.load_manifest(out / "manifest.json")["config"]
        assert echo["sigma"] == 0.5 and echo["seed"] == 9

    def test_zero_noise_ignores_seed(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert self._run(out1, ["--sigma", "0", "--seed", "1"]) == 0
        assert self._run(out2, ["--sigma", "0", "--seed", "2"]) == 0
        capsys.readouterr()
        assert (out1 / "trajectory.csv").read_bytes() == \
            (out2 / "trajectory.csv").read_bytes()

    @pytest.mark.parametrize("extra,msg", [
        (["--phi", "moebius"], "unknown potential"),
        (["--T", "1.0005"], "not a multiple"),
        (["--phi", "anisotropic-quadratic"], "phi-params"),
        (["--phi", "anisotropic-quadratic", "--phi-params", "1,2,3"],
         "coefficients"),
    ])
    def test_config_errors_exit_2(self, tmp_path, capsys, extra, msg):
        assert self._run(tmp_path / "o", extra) == 2
        assert msg in capsys.readouterr().err


class TestFigures:
    def test_sweep_artifacts(self, tmp_path, capsys):
        out = tmp_path / "figs"
        assert main(["figures", "--T", "2.0", "--dt", "1e-3", "--seed", "3",
                     "--out", str(out)]) == 0
        assert "monotone in sigma: True" in capsys.readouterr().out
        for sig in FIGURE_SIGMAS:
            assert (out / f"fig-sigma-{sig:g}.csv").exists()
        rough = _read_json(out / "roughness.json")["by_sigma"]
        vals = [rough[f"{s:g}"] for s in FIGURE_SIGMAS]
        # from the origin the radial drift stays parallel to v, so the
        # noiseless panel is free flight and its roughness is pure roundoff
        assert vals[0] < 1e-20
        assert all(a < b for a, b in zip(vals, vals[1:]))
        script = (out / "plot.gp").read_text()
        assert script.count("plot '") == len(FIGURE_SIGMAS)
        assert "multiplot" in script

    def test_zero_noise_panel_ignores_seed(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out, seed in ((out1, "1"), (out2, "99")):
            assert main(["figures", "--T", "1.0", "--dt", "1e-3",
                         "--seed", seed, "--out", str(out)]) == 0
        capsys.readouterr()
        assert (out1 / "fig-sigma-0.csv").read_bytes() == \
            (out2 / "fig-sigma-0.csv").read_bytes()

    @pytest.mark.parametrize("extra", [
        ["--d", "4"],
        ["--phi", "zero"],
        ["--scheme", "local-euler"],
        ["--record-stride", "5"],
    ])
    def test_pinned_sweep_rejects_overrides(self, tmp_path, capsys, extra):
        out = tmp_path / "figs"
        assert main(["figures", "--T", "1.0", "--out", str(out)] + extra) == 2
        assert capsys.readouterr().err.startswith("config error")


class TestDiagnose:
    # default T = 20 with burn-in 0.75 leaves the averaging window ~8
    # relaxation times past the deterministic start, so only noise remains
    BASE = ["diagnose", "--n-paths", "300", "--seed", "31"]

    def test_equilibrated_run_passes(self, tmp_path, capsys):
        out = tmp_path / "diag"
        assert main(self.BASE + ["--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "stationarity audit" in stdout and "PASS" in stdout
        for name in ("series-xi_1.csv", "series-xi_12.csv", "series-v_1.csv",
                     "stationarity.json"):
            assert (out / name).exists()
        audit = _read_json(out / "stationarity.json")
        assert audit["passed"] is True
        names = {c["name"] for c in audit["checks"]}
        assert {"E[xi_1]", "E[xi_1xi_1]", "E[v_1v_1]", "E[xi.v]"} <= names

    def test_unequilibrated_window_fails(self, tmp_path, capsys):
        out = tmp_path / "diag"
        code = main(["diagnose", "--T", "2.0", "--dt", "1e-3",
                     "--n-paths", "300", "--seed", "31",
                     "--record-stride", "100", "--burn-in", "0.25",
                     "--out", str(out)])
        assert code == 4
        assert "FAIL" in capsys.readouterr().out
        assert _read_json(out / "stationarity.json")["passed"] is False

    def test_observable_selection(self, tmp_path, capsys):
        out = tmp_path / "diag"
        assert main(self.BASE + ["--out", str(out),
                                 "--observable", "|xi|^2"]) == 0
        capsys.readouterr()
        assert (out / "series-xi2.csv").exists()
        assert not (out / "series-v_1.csv").exists()

    def test_unknown_observable_exits_2(self, tmp_path, capsys):
        out = tmp_path / "diag"
        assert main(self.BASE + ["--out", str(out),
                                 "--observable", "xi_7"]) == 2
        assert "unknown observable" in capsys.readouterr().err


class TestVerify:
    def test_suite_passes_and_reports(self, tmp_path, capsys):
        out = tmp_path / "verify"
        assert main(["verify", "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "all checks passed" in stdout
        report = _read_json(out / "verify-report.json")
        assert report["all_pass"] is True
        names = [c["check_name"] for c in report["checks"]]
        assert len(names) == 18  # several run at more than one dimension
        assert len(set(names)) == 15
        for c in report["checks"]:
            assert c["pass"] is True
            assert set(c) == {"check_name", "parameters", "statistic",
                              "tolerance", "pass"}

    def test_drift_sign_mutation_is_caught(self, tmp_path, capsys):
        out = tmp_path / "verify"
        assert main(["verify", "--out", str(out),
                     "--mutate", "drift-sign"]) == 4
        assert "CHECKS FAILED" in capsys.readouterr().out
        report = _read_json(out / "verify-report.json")
        assert report["all_pass"] is False
        failed = [c["check_name"] for c in report["checks"] if not c["pass"]]
        assert failed == ["ensemble_stationarity"]


class TestEntryPoint:
    def test_module_invocation(self):
        out = subprocess.run(
            [sys.executable, "-m", "fiberlay.cli"] + RATE_ARGS,
            capture_output=True, text=True,
        )
        assert out.returncode == 0
        assert json.loads(out.stdout)["lambda"] > 0

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.strip()
