"""Batch front end: ``fiberlay <subcommand>``.

Subcommands
-----------
simulate
    Integrate one trajectory and write it as CSV with a manifest.
figures
    The four-noise-level sweep (sigma = 0, 0.1, 0.5, 4.0) for d = 2 or 3
    with the radial quadratic potential: per-sigma trajectory CSVs, a
    gnuplot script plotting them, and a roughness report.
verify
    Run the identity/structure suite (geometry, operators, dynamics,
    Galerkin) and emit a JSON report with one record per check.
diagnose
    Ensemble diagnostics: observable mixing series as CSV and the
    stationarity audit as JSON.
rate
    Evaluate the guaranteed-rate formula and its optimal noise level.

Every run writes a ``manifest.json`` (resolved config + code version +
seed) from which the run can be reproduced byte-identically: pass it (or
any JSON config file) via ``--config``; explicit flags override file
values.  Exit codes: 0 ok, 2 config error, 3 runtime failure, 4
verification failure.  ``FIBERLAY_THREADS`` caps ensemble workers and
``FIBERLAY_KERNELS`` (auto | python | native) pins the stepping backend.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, ergodics, geometry, operators, potential
from ._formats import load_config_file, write_manifest, write_report_json
from .dynamics import SCHEME_EMBEDDED, SimConfig, simulate
from .errors import ConfigError, FiberlayError, StepFailure
from .galerkin import estimate_gap_2d
from .kernels import backend_name

FIGURE_SIGMAS = (0.0, 0.1, 0.5, 4.0)

_CONFIG_KEYS = (
    "d", "sigma", "T", "dt", "seed", "scheme", "kappa", "record_stride",
    "phi", "phi_params", "n_paths", "burn_in",
)


def _potential_from_args(args) -> potential.PotentialSpec:
    name = args.phi
    if name == "radial-quadratic":
        return potential.builtin_radial_quadratic(args.d)
    if name == "anisotropic-quadratic":
        if not args.phi_params:
            raise ConfigError("anisotropic-quadratic needs --phi-params a1,a2,...")
        a = [float(x) for x in args.phi_params.split(",")]
        if len(a) != args.d:
            raise ConfigError(f"--phi-params needs {args.d} coefficients")
        return potential.builtin_anisotropic_quadratic(a)
    if name == "zero":
        return potential.builtin_zero(args.d)
    raise ConfigError(f"unknown potential {name!r}")


def _sim_config(args, kappa_default: float | None = None) -> SimConfig:
    n_steps = int(round(args.T / args.dt))
    if n_steps < 1 or abs(n_steps * args.dt - args.T) > 1e-9 * max(args.T, 1.0):
        raise ConfigError(f"T={args.T} is not a multiple of dt={args.dt}")
    kappa = args.kappa
    if kappa is None:
        kappa = 1.0 if kappa_default is None else kappa_default
    return SimConfig(
        d=args.d, sigma=args.sigma, n_steps=n_steps, dt=args.dt,
        seed=args.seed, scheme=args.scheme, drift_scale=kappa,
        record_stride=args.record_stride,
    )


def _config_echo(args, extra: dict | None = None) -> dict:
    echo = {}
    for key in _CONFIG_KEYS:
        if hasattr(args, key) and getattr(args, key) is not None:
            echo[key] = getattr(args, key)
    if extra:
        echo.update(extra)
    return echo


def _emit(args, command: str, outputs: list[str], extra_config: dict | None = None):
    path = os.path.join(args.out, "manifest.json")
    write_manifest(
        path, command=command, config=_config_echo(args, extra_config),
        code_version=__version__, outputs=outputs,
    )
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def simulate_cmd(args) -> int:
    pot = _potential_from_args(args)
    cfg = _sim_config(args)
    traj = simulate(cfg, pot)
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "trajectory.csv")
    traj.to_csv(out_csv)
    _emit(args, "simulate", ["trajectory.csv"])
    if traj.error is not None:
        print(f"step failure: {traj.error} (partial trajectory written)",
              file=sys.stderr)
        return 3
    print(f"wrote {out_csv} ({traj.n_records} records, "
          f"{len(traj.events)} chart exits, backend {backend_name(pot)})")
    return 0


def roughness_statistic(times: np.ndarray, xi: np.ndarray, v: np.ndarray) -> float:
    """Quadratic-variation proxy sum_k |xi_{k+1} - xi_k - v_k dt_k|^2.

    Zero for straight-line motion; grows with the noise level, so it
    orders the figure panels by visual roughness.
    """
    dt = np.diff(times)[:, None]
    resid = xi[1:] - xi[:-1] - v[:-1] * dt
    return float(np.sum(resid * resid))


def _gnuplot_script(d: int, csv_names: list[str]) -> str:
    lines = [
        "# fiberlay-format v1",
        "# gnuplot script for the noise-level sweep; render e.g. with",
        '#   gnuplot -e "set terminal pngcairo size 1200,1000; set output \'figures.png\'" plot.gp',
        "set datafile separator ','",
        "set key off",
        "set multiplot layout 2,2",
    ]
    for sig, name in zip(FIGURE_SIGMAS, csv_names):
        lines.append(f"set title 'sigma = {sig:g}'")
        if d == 2:
            lines.append("set size ratio -1")
            lines.append(f"plot '{name}' skip 2 using 2:3 with lines lw 1")
        else:
            lines.append(f"splot '{name}' skip 2 using 2:3:4 with lines lw 1")
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def figures_cmd(args) -> int:
    if args.d not in (2, 3):
        raise ConfigError("figures are defined for d = 2 or d = 3")
    if args.phi != "radial-quadratic":
        raise ConfigError("the figure sweep uses the radial quadratic potential")
    if args.scheme != SCHEME_EMBEDDED or args.record_stride != 1:
        raise ConfigError("the figure sweep pins the embedded scheme, stride 1")
    pot = _potential_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    csv_names, roughness = [], {}
    for sig in FIGURE_SIGMAS:
        cfg = SimConfig(
            d=args.d, sigma=sig, n_steps=int(round(args.T / args.dt)),
            dt=args.dt, seed=args.seed, scheme=SCHEME_EMBEDDED, record_stride=1,
        )
        traj = simulate(cfg, pot)
        if traj.error is not None:
            print(f"step failure at sigma={sig:g}: {traj.error}", file=sys.stderr)
            return 3
        name = f"fig-sigma-{sig:g}.csv"
        traj.to_csv(os.path.join(args.out, name))
        csv_names.append(name)
        roughness[f"{sig:g}"] = roughness_statistic(traj.times, traj.xi, traj.v)
    with open(os.path.join(args.out, "plot.gp"), "w", newline="\n") as f:
        f.write(_gnuplot_script(args.d, csv_names))
    write_report_json(
        {"statistic": "sum |dxi - v dt|^2", "by_sigma": roughness},
        os.path.join(args.out, "roughness.json"),
    )
    _emit(args, "figures", csv_names + ["plot.gp", "roughness.json"])
    ordered = [roughness[f"{s:g}"] for s in FIGURE_SIGMAS]
    mono = all(a < b for a, b in zip(ordered, ordered[1:]))
    print(f"wrote {len(csv_names)} trajectory CSVs + plot.gp to {args.out} "
          f"(roughness monotone in sigma: {mono})")
    return 0


def rate_cmd(args) -> int:
    p = ergodics.RateParams(
        eta=args.eta, sigma=args.sigma, K1=args.K1, K2=args.K2, K3=args.K3,
        d=args.d, Lambda=args.Lambda,
    )
    report = {
        "lambda": ergodics.hypocoercivity_rate(p),
        "sigma_star": ergodics.optimal_sigma(p),
        "lambda_at_sigma_star": ergodics.hypocoercivity_rate(
            ergodics.RateParams(eta=p.eta, sigma=ergodics.optimal_sigma(p),
                                K1=p.K1, K2=p.K2, K3=p.K3)
        ),
        "params": {"eta": p.eta, "sigma": p.sigma,
                   "K1": p.K1, "K2": p.K2, "K3": p.K3},
    }
    if p.d is not None:
        report["coercivity"] = ergodics.rate_constants_report(
            p.d, p.sigma, p.Lambda, p.eta
        )
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    print()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_report_json(report, os.path.join(args.out, "rate.json"))
        _emit(args, "rate", ["rate.json"],
              {"eta": p.eta, "K1": p.K1, "K2": p.K2, "K3": p.K3,
               "Lambda": p.Lambda})
    return 0


def diagnose_cmd(args) -> int:
    pot = _potential_from_args(args)
    cfg = _sim_config(args, kappa_default=ergodics.mu_drift_scale(args.d))
    os.makedirs(args.out, exist_ok=True)
    quad = operators.product_quadrature(pot)
    tags = args.observable or ["xi_1", "xi_1^2", "v_1"]
    catalogue = {
        "xi_1": ergodics.position_component(0),
        "xi_2": ergodics.position_component(1),
        "xi_1^2": ergodics.position_square(0),
        "|xi|^2": ergodics.radius_square(),
        "v_1": ergodics.direction_component(0),
        "v_1v_1": ergodics.direction_product(0, 0),
        "xi.v": ergodics.alignment(),
    }
    for tag in tags:
        if tag not in catalogue:
            raise ConfigError(
                f"unknown observable {tag!r}; choose from {sorted(catalogue)}"
            )
    ens = ergodics.collect_ensemble(cfg, pot, args.n_paths)
    outputs = []
    for tag in tags:
        series = ergodics.series_from_ensemble(ens, catalogue[tag], cfg, pot,
                                               quad=quad)
        name = "series-" + tag.replace("|", "").replace("^", "").replace(".", "") + ".csv"
        series.to_csv(os.path.join(args.out, name))
        outputs.append(name)
        print(f"{tag}: final mean {series.means[-1]:+.5f} "
              f"(target {series.target:+.5f}, SE {series.stderrs[-1]:.5f})")
    report = ergodics.stationarity_audit(ens, pot, burn_in=args.burn_in, quad=quad)
    write_report_json(report.to_dict(), os.path.join(args.out, "stationarity.json"))
    outputs.append("stationarity.json")
    _emit(args, "diagnose", outputs)
    print(f"stationarity audit: max |z| = {report.max_abs_z:.2f}, "
          f"{'PASS' if report.passed else 'FAIL: ' + ', '.join(report.flagged)}")
    return 0 if report.passed else 4


# ---------------------------------------------------------------------------
# verify: the identity/structure suite
# ---------------------------------------------------------------------------


def _verify_checks(args):
    """Yield (name, parameters, statistic, tolerance, passed) records."""
    rng = np.random.Generator(np.random.PCG64(0xF1B3))

    # -- geometry: sphere eigenfunction identity and chart consistency
    for d in (2, 3):
        v = rng.normal(size=(50, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        coord = geometry.ScalarField(
            value=lambda w: w[..., 0],
            grad=lambda w: np.broadcast_to(np.eye(d)[0], w.shape).copy(),
            hess=lambda w: np.zeros(w.shape + (d,)),
        )
        lap = geometry.laplace_beltrami(coord, v)
        err = float(np.max(np.abs(lap + (d - 1) * v[:, 0])))
        yield ("sphere_eigenfunction", {"d": d}, err, 1e-8, err <= 1e-8)

    th = rng.uniform(0.3, math.pi - 0.3, size=(40, 2))
    th[:, 0] = rng.uniform(0, 2 * math.pi, size=40)
    v3 = np.array([geometry.embed_angles(t).v for t in th])
    z = rng.normal(size=3)
    lin = geometry.ScalarField(
        value=lambda w: w @ z,
        grad=lambda w: np.broadcast_to(z, w.shape).copy(),
        hess=lambda w: np.zeros(w.shape + (3,)),
    )
    amb = geometry.laplace_beltrami(lin, v3)
    loc = np.array([
        geometry.laplace_beltrami_local(
            t, geometry.chart_jacobian(t).T @ z, _chart_hess_diag(z, t)
        )
        for t in th
    ])
    err = float(np.max(np.abs(amb - loc)))
    yield ("local_vs_ambient_laplacian", {"d": 3}, err, 1e-6, err <= 1e-6)

    # -- moment lemma at deterministic rules
    for d in (2, 3):
        quad_s = geometry.sphere_quadrature(d, 48)
        B = rng.normal(size=(d, d))
        got = geometry.gauss_moment(B, quad_s)
        err = abs(got - np.trace(B) / d)
        yield ("gauss_moment_trace", {"d": d}, float(err), 1e-12, err <= 1e-12)

    # -- hypoellipticity: full bracket rank at random states
    pot2 = potential.builtin_radial_quadratic(2)
    ranks = []
    for _ in range(20):
        xi = rng.normal(size=2)
        v = rng.normal(size=2)
        v /= np.linalg.norm(v)
        ranks.append(geometry.hormander_rank(xi, v, 1.0, pot2))
    worst = min(ranks)
    yield ("hormander_rank", {"d": 2, "sigma": 1.0, "points": 20},
           float(worst), 4, worst == 4)

    # -- operators: stationary density, invariance, split, conjugation, BS
    for d in (2, 3):
        potd = potential.builtin_radial_quadratic(d)
        kappa = operators.mu_drift_scale(d)
        c = (d - 1) * kappa
        F = operators.TestFunction(
            dim=d,
            value=lambda xi, v, c=c, p=potd: np.exp(-c * p.value(xi)),
            grad_xi=lambda xi, v, c=c, p=potd: (
                -c * np.exp(-c * p.value(xi))[..., None] * p.grad(xi)
            ),
            grad_v=lambda xi, v: np.zeros_like(v),
            hess_v=lambda xi, v: np.zeros(v.shape + (v.shape[-1],)),
        )
        xi = rng.normal(size=(50, d))
        v = rng.normal(size=(50, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        err = float(np.max(np.abs(
            operators.apply_fokker_planck(F, xi, v, 1.0, potd, kappa)
        )))
        yield ("stationary_density", {"d": d}, err, 1e-8, err <= 1e-8)

    quad = operators.product_quadrature(pot2, xi_size=48, sphere_size=48)
    g = operators.bump_observable(2, center=(0.3, -0.2), width=1.1, const=0.4,
                                  linear=(1.0, 0.5),
                                  quad_pair=((0.7, -0.3), (0.2, 0.9)))
    h = operators.bump_observable(2, center=(-0.5, 0.1), width=0.9, const=-0.2,
                                  linear=(0.3, -0.8),
                                  quad_pair=((0.1, 0.6), (-0.4, 0.2)))
    inv = abs(operators.check_invariance(g, quad, 1.0, pot2))
    yield ("mean_invariance", {"d": 2, "rule": "48x48x48"}, inv, 1e-3, inv <= 1e-3)
    sd = operators.check_symmetry_split(g, h, quad, 1.0, pot2)
    for name, val in (("symmetry_defect", sd.s_defect),
                      ("antisymmetry_defect", sd.a_defect)):
        yield (name, {"d": 2}, abs(val), 1e-3, abs(val) <= 1e-3)
    xi_p = rng.normal(size=(50, 2))
    v_p = rng.normal(size=(50, 2))
    v_p /= np.linalg.norm(v_p, axis=1, keepdims=True)
    conj = operators.check_conjugation(h, (xi_p, v_p), 1.0, pot2)
    yield ("conjugation", {"d": 2, "points": 50}, conj, 1e-6, conj <= 1e-6)
    bs = operators.bs_identity_check(g, quad, 1.0)
    yield ("bs_precursor", {"d": 2}, bs, 1e-6, bs <= 1e-6)

    # -- dynamics: manifold preservation and the speed bound
    cfg = SimConfig(d=3, sigma=1.0, n_steps=5000, dt=1e-3, seed=11)
    pot3 = potential.builtin_radial_quadratic(3)
    traj = simulate(cfg, pot3)
    err = float(np.max(np.abs(np.linalg.norm(traj.v, axis=1) - 1.0)))
    yield ("unit_speed_manifold", {"steps": 5000}, err, 1e-12, err <= 1e-12)
    seg = np.linalg.norm(np.diff(traj.xi, axis=0), axis=1)
    ratio = float(np.max(seg / np.diff(traj.times)))
    yield ("speed_bound", {"steps": 5000}, ratio, 1.0 + 10 * cfg.dt,
           ratio <= 1.0 + 10 * cfg.dt)

    # -- ensemble stationarity (the check the drift-sign mutation must break)
    sim_pot = pot2
    if args.mutate == "drift-sign":
        sim_pot = potential.make_custom(
            dim=2,
            value=lambda x: -pot2.value(x),
            grad=lambda x: -pot2.grad(x),
            hess=lambda x: -pot2.hess(x),
        )
    # T and burn-in give the deterministic start ~5 relaxation times to
    # decay before the averaging window, so the only signal left is noise
    cfg = SimConfig(d=2, sigma=1.0, n_steps=16000, dt=1e-3, seed=23,
                    record_stride=200)
    ens = ergodics.collect_ensemble(cfg, sim_pot, 1500)
    report = ergodics.stationarity_audit(ens, pot2, burn_in=0.75, quad=quad)
    yield ("ensemble_stationarity",
           {"d": 2, "n_paths": 1500, "T": 16.0,
            "mutation": args.mutate or "none"},
           report.max_abs_z, 4.0, report.passed)

    # -- Galerkin: kernel residual and gap positivity at a small basis
    gap = estimate_gap_2d(pot2, 1.0, (6, 7))
    yield ("galerkin_kernel", {"basis": [6, 7]}, gap.kernel_residual, 1e-10,
           gap.kernel_residual <= 1e-10)
    yield ("galerkin_gap_positive", {"basis": [6, 7]}, gap.gap, 0.0, gap.gap > 0)


def _chart_hess_diag(z, theta) -> np.ndarray:
    """Diagonal chart second derivatives of v -> v . z at theta (exact).

    Each embedding component that contains theta_j does so through exactly
    one sine or cosine factor, so d^2/dtheta_j^2 negates it; with 0-based
    angle index j those are components 0..j+1, the rest are independent of
    theta_j.
    """
    tau = geometry.embed_angles(theta).v
    zz = np.asarray(z, dtype=float)
    return np.array(
        [-(zz[: j + 2] @ tau[: j + 2]) for j in range(len(theta))]
    )


def verify_cmd(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    records = []
    all_pass = True
    for name, params, stat, tol, ok in _verify_checks(args):
        records.append({
            "check_name": name, "parameters": params,
            "statistic": stat, "tolerance": tol, "pass": bool(ok),
        })
        all_pass &= bool(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name:26s} "
              f"statistic {stat:.3e}  tolerance {tol:.3e}")
    write_report_json(
        {"all_pass": all_pass, "checks": records},
        os.path.join(args.out, "verify-report.json"),
    )
    _emit(args, "verify", ["verify-report.json"],
          {"mutate": args.mutate} if args.mutate else None)
    print(f"{'all checks passed' if all_pass else 'CHECKS FAILED'} "
          f"({len(records)} checks)")
    return 0 if all_pass else 4


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, T: float, sigma: float = 1.0,
                stride: int = 1):
    p.add_argument("--d", type=int, default=2, help="ambient dimension (>= 2)")
    p.add_argument("--sigma", type=float, default=sigma, help="noise amplitude")
    p.add_argument("--T", type=float, default=T, help="time horizon")
    p.add_argument("--dt", type=float, default=1e-3, help="step size")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--scheme", default=SCHEME_EMBEDDED,
                   help="embedded-heun-projected or local-euler")
    p.add_argument("--kappa", type=float, default=None,
                   help="drift scale (default 1; diagnose defaults to 1/(d-1))")
    p.add_argument("--record-stride", type=int, default=stride,
                   dest="record_stride", help="record every this many steps")
    p.add_argument("--phi", default="radial-quadratic",
                   help="potential: radial-quadratic | anisotropic-quadratic | zero")
    p.add_argument("--phi-params", default=None, dest="phi_params",
                   help="comma-separated coefficients for anisotropic-quadratic")


def build_parser() -> argparse.ArgumentParser:
    return _build_parser()[0]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fiberlay",
        description="Fiber lay-down process: simulation, verification, diagnostics.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="integrate one trajectory to CSV")
    _add_common(p, T=50.0, sigma=0.5)
    p.add_argument("--out", default="fiberlay-out", help="output directory")
    p.add_argument("--config", default=None, help="JSON config file or manifest")
    p.set_defaults(fn=simulate_cmd)

    p = sub.add_parser("figures", help="four-noise-level figure sweep")
    _add_common(p, T=30.0)
    p.add_argument("--out", default="fiberlay-figures", help="output directory")
    p.add_argument("--config", default=None, help="JSON config file or manifest")
    p.set_defaults(fn=figures_cmd)

    p = sub.add_parser("verify", help="run the identity/structure suite")
    p.add_argument("--out", default="fiberlay-verify", help="output directory")
    p.add_argument("--config", default=None, help="JSON config file or manifest")
    p.add_argument("--mutate", choices=["drift-sign"], default=None,
                   help="self-test hook: flip the simulated drift sign; the "
                        "stationarity check must then fail")
    p.set_defaults(fn=verify_cmd)

    p = sub.add_parser("diagnose", help="ensemble mixing and stationarity")
    _add_common(p, T=20.0, stride=100)
    p.add_argument("--out", default="fiberlay-diagnose", help="output directory")
    p.add_argument("--config", default=None, help="JSON config file or manifest")
    p.add_argument("--n-paths", type=int, default=2000, dest="n_paths")
    p.add_argument("--burn-in", type=float, default=0.75, dest="burn_in")
    p.add_argument("--observable", action="append", default=None,
                   help="observable tag (repeatable): xi_1, xi_1^2, |xi|^2, "
                        "v_1, v_1v_1, xi.v")
    p.set_defaults(fn=diagnose_cmd)

    p = sub.add_parser("rate", help="guaranteed-rate formula report")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--K1", type=float, required=True)
    p.add_argument("--K2", type=float, required=True)
    p.add_argument("--K3", type=float, required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--Lambda", type=float, default=None)
    p.add_argument("--out", default=None, help="also write rate.json here")
    p.set_defaults(fn=rate_cmd)
    return parser, sub


def _config_path(argv: list[str]) -> str | None:
    for i, arg in enumerate(argv):
        if arg == "--config":
            return argv[i + 1] if i + 1 < len(argv) else None
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, sub = _build_parser()
    path = _config_path(argv)
    if path is not None:
        # the file supplies defaults for the subcommand's flags; explicit
        # flags are parsed afterwards, so they override the file values
        try:
            file_cfg = load_config_file(path)
        except (OSError, ValueError, KeyError) as err:
            print(f"config error: cannot read {path}: {err}", file=sys.stderr)
            return 2
        except ConfigError as err:
            print(f"config error: {err}", file=sys.stderr)
            return 2
        cmd = next((a for a in argv if not a.startswith("-")), None)
        if cmd in sub.choices:
            dests = {a.dest for a in sub.choices[cmd]._actions}
            sub.choices[cmd].set_defaults(
                **{k: v for k, v in file_cfg.items() if k in dests}
            )
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except StepFailure as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return 3
    except FiberlayError as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
