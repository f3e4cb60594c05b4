"""Command-line front end.

Exit codes: 0 success, 1 oracle disagreement, 2 configuration error,
3 solver or numerical error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config, oracle_lags, stark_pairs
from .diamond import band_model, solve_interface
from .electrolyte import (
    field_correlator_full,
    field_correlator_simplified,
    gouy_chapman_field,
    gouy_chapman_potential,
    debye_kappa,
    white_noise_variance,
)
from .errors import ConfigError, NVElectroError
from .io import read_csv, write_csv, write_json, write_text
from .nv_spin import nu_fluctuation_correlator, ramsey_signal, sensitivity
from .pipeline import (
    PowerLawFit,
    default_cb_grid,
    fit_power_law,
    run_sweep,
    sensitivity_curve,
    stark_sensing_table,
    sweep_point,
)
from .stochastic_oracle import (
    density_correlator_analytic,
    field_correlator_analytic,
    run_simulation,
    simulate_density_correlator,
    simulate_field_correlator,
)

SWEEP_HEADER = ["c_b", "phi0_V", "E_e0_Vpm", "E_nv_Vpm", "transfer", "plateau_V2pm2", "inv_T2star_Hz", "error"]
LAG_HEADER = ["lag_s", "correlator", "stderr"]
ORACLE_SIGMA = 3.0
ORACLE_MAX_FAIL_FRACTION = 0.05


class OracleMismatch(Exception):
    def __init__(self, message: str, files: list[Path]):
        super().__init__(message)
        self.files = files


def _electrolyte_grid(ep, n: int = 240) -> list[float]:
    kappa = debye_kappa(ep)
    return [0.0] + [float(z) for z in np.geomspace(1e-3 / kappa, ep.Delta, n - 1)]


def cmd_profile(cfg: RunConfig, out: Path) -> list[Path]:
    """Potential and field on both sides of the interface."""
    ep, dp = cfg.electrolyte, cfg.diamond
    sol = solve_interface(ep, dp, band_model(dp))
    e_rows = [
        (z, ep.phi_be + gouy_chapman_potential(ep, sol.V0, z), gouy_chapman_field(ep, sol.V0, z))
        for z in _electrolyte_grid(ep)
    ]
    return [
        write_csv(out / "profile_electrolyte.csv", ["z_m", "phi_V", "E_Vpm"], e_rows),
        write_csv(out / "profile_diamond.csv", ["depth_m", "phi_V", "E_Vpm"], sol.profile),
    ]


def _sweep(cfg: RunConfig):
    s = cfg.sweep
    grid = default_cb_grid(s.n_points, s.cb_min, s.cb_max)
    return run_sweep(cfg.electrolyte, cfg.diamond, None, cfg.nv, s.depth, grid, cfg.noise,
                     workers=s.workers or None)


def _sweep_rows(points):
    return [(p.c_b, p.phi0, p.E_e0, p.E_nv, p.transfer, p.plateau, p.inv_T2_star, p.error or "")
            for p in points]


def _fit_summary(fit: PowerLawFit | None, cfg: RunConfig) -> dict:
    return {
        "A": fit.A if fit else None,
        "B": fit.B if fit else None,
        "rms_log_residual": fit.rms_log_residual if fit else None,
        "n_points": fit.n_points if fit else 0,
        "config_sha256": cfg.digest(),
        "version": __version__,
    }


def cmd_sweep(cfg: RunConfig, out: Path) -> list[Path]:
    """1/T2* over a concentration grid, its power-law fit and the Stark table."""
    points = _sweep(cfg)
    failed = [p for p in points if not p.ok]
    for p in failed:
        print(f"warning: c_b={p.c_b:g} failed: {p.error}", file=sys.stderr)
    try:
        fit = fit_power_law(points)
    except NVElectroError as exc:
        print(f"warning: no fit: {exc}", file=sys.stderr)
        fit = None
    summary = _fit_summary(fit, cfg)
    summary["failed_points"] = [p.c_b for p in failed]
    stark = stark_sensing_table(cfg.electrolyte, cfg.diamond, None, cfg.nv, cfg.sweep.depth, stark_pairs(cfg))
    return [
        write_csv(out / "sweep.csv", SWEEP_HEADER, _sweep_rows(points)),
        write_json(out / "sweep_summary.json", summary),
        write_csv(out / "stark.csv",
                  ["c_b_lo", "c_b_hi", "delta_E_Vpm", "delta_shift_Hz", "delta_shift_unprojected_Hz"], stark),
    ]


def _read_sweep(path: Path) -> list[tuple[float, float]]:
    header, rows = read_csv(path)
    ic, iy = header.index("c_b"), header.index("inv_T2star_Hz")
    ie = header.index("error") if "error" in header else None
    pairs = []
    for r in rows:
        if ie is not None and r[ie]:
            continue
        pairs.append((float(r[ic]), float(r[iy])))
    return pairs


def cmd_fit(cfg: RunConfig, out: Path) -> list[Path]:
    """Power-law fit of an existing sweep.csv (runs the sweep if absent)."""
    files = []
    sweep_csv = out / "sweep.csv"
    if sweep_csv.exists():
        data = _read_sweep(sweep_csv)
    else:
        points = _sweep(cfg)
        files.append(write_csv(sweep_csv, SWEEP_HEADER, _sweep_rows(points)))
        data = [(p.c_b, p.inv_T2_star) for p in points if p.ok]
    fit = fit_power_law(data)
    print(f"A={fit.A:.6g} B={fit.B:.6g} rms_log_residual={fit.rms_log_residual:.3g}")
    files.append(write_json(out / "fit.json", _fit_summary(fit, cfg)))
    return files


def cmd_correlator(cfg: RunConfig, out: Path) -> list[Path]:
    """Interface field correlator versus time."""
    ep, c = cfg.electrolyte, cfg.correlator
    sol = solve_interface(ep, cfg.diamond, band_model(cfg.diamond))
    rows = []
    for t in np.geomspace(c.t_min, c.t_max, c.n_points):
        t = float(t)
        rows.append((t, field_correlator_simplified(ep, t), field_correlator_full(ep, sol.V0, t)))
    return [
        write_csv(out / "correlator.csv", ["t_s", "simplified_V2pm2", "full_V2pm2"], rows),
        write_json(out / "correlator_summary.json", {
            "c_b": ep.c_b,
            "V0": sol.V0,
            "plateau_species_factor_1": white_noise_variance(ep, 1),
            "plateau_species_factor_2": white_noise_variance(ep, 2),
        }),
    ]


def cmd_ramsey(cfg: RunConfig, out: Path) -> list[Path]:
    """Ramsey population and phase variance at the configured concentration."""
    ep = cfg.electrolyte
    p = sweep_point(ep, cfg.diamond, band_model(cfg.diamond), cfg.nv, cfg.sweep.depth, ep.c_b, cfg.noise)
    if not p.ok:
        raise NVElectroError(p.error)
    T2 = 1.0 / p.inv_T2_star
    c0 = nu_fluctuation_correlator(cfg.nv, p.transfer, p.plateau)
    r = cfg.ramsey
    rows = []
    for tau in np.linspace(0.0, r.tau_max, r.n_points):
        tau = float(tau)
        rows.append((tau, ramsey_signal(tau, T2, r.psi), 4.0 * math.pi**2 * c0 * tau * tau))
    print(f"T2*={T2:.6g} s at c_b={ep.c_b:g} mol/m^3")
    return [write_csv(out / "ramsey.csv", ["tau_s", "p0", "phase_variance_rad2"], rows)]


def cmd_sensitivity(cfg: RunConfig, out: Path) -> list[Path]:
    """Concentration sensitivity from a power-law calibration."""
    s = cfg.sensitivity
    fit = PowerLawFit(A=s.A, B=s.B, rms_log_residual=math.nan, n_points=0)
    eta = sensitivity(fit, s.c_b, s.tau, cfg.readout)
    print(f"eta={eta:.6g} mol m^-3 Hz^-1/2 at c_b={s.c_b:g} mol/m^3, tau={s.tau:g} s")
    rows = sensitivity_curve(fit, default_cb_grid(s.n_points, s.cb_min, s.cb_max), s.tau, cfg.readout)
    return [write_csv(out / "sensitivity.csv", ["c_b", "eta_mol_m3_rtHz"], rows)]


def oracle_comparison(cfg: RunConfig) -> dict:
    """Run the MC once and compare both correlators with their references."""
    mc = cfg.mc
    lags = oracle_lags(cfg)
    trace = run_simulation(mc)
    bins = (cfg.oracle.bin_a, cfg.oracle.bin_b)
    dens = simulate_density_correlator(mc, lags, bins, trace=trace)
    fld = simulate_field_correlator(mc, lags, trace=trace)
    checks = []
    for kind, pts, ref in (
        ("density", dens, lambda t: density_correlator_analytic(mc, t, bins)),
        ("field", fld, lambda t: field_correlator_analytic(mc, t)),
    ):
        for p in pts:
            expected = ref(p.lag)
            z = (p.value - expected) / p.stderr if p.stderr > 0 else math.inf
            checks.append({"kind": kind, "lag": p.lag, "value": p.value, "stderr": p.stderr,
                           "expected": expected, "z": z})
    n_bad = sum(abs(c["z"]) > ORACLE_SIGMA for c in checks)
    return {"density": dens, "field": fld, "checks": checks, "n_bad": n_bad,
            "fail_fraction": n_bad / len(checks)}


def cmd_oracle(cfg: RunConfig, out: Path) -> list[Path]:
    """Monte Carlo check of the density and field correlators."""
    res = oracle_comparison(cfg)
    files = [
        write_csv(out / "oracle_density.csv", LAG_HEADER, res["density"]),
        write_csv(out / "oracle_field.csv", LAG_HEADER, res["field"]),
        write_json(out / "oracle_summary.json", {
            "checks": res["checks"], "n_bad": res["n_bad"], "fail_fraction": res["fail_fraction"],
            "seed": cfg.mc.seed,
        }),
    ]
    print(f"{res['n_bad']}/{len(res['checks'])} lag points beyond {ORACLE_SIGMA:g} sigma")
    if res["fail_fraction"] > ORACLE_MAX_FAIL_FRACTION:
        raise OracleMismatch(
            f"{res['fail_fraction']:.0%} of lag points disagree beyond {ORACLE_SIGMA:g} sigma", files)
    return files


COMMANDS = {
    "profile": cmd_profile,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "correlator": cmd_correlator,
    "ramsey": cmd_ramsey,
    "sensitivity": cmd_sensitivity,
    "oracle": cmd_oracle,
}


def _write_manifest(cfg: RunConfig, out: Path, command: str, files: list[Path]) -> None:
    write_text(out / "run_config.txt", cfg.echo())
    write_json(out / "manifest.json", {
        "tool": "nvelectro",
        "version": __version__,
        "command": command,
        "seed": cfg.mc.seed,
        "config_sha256": cfg.digest(),
        "config": {k: v for k, v in cfg.items()},
        "files": sorted(f.name for f in files),
    })


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value config file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--seed", type=int, help="Monte Carlo seed")
    parser = argparse.ArgumentParser(prog="nvelectro", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).splitlines()[0])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.config, args.overrides, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        files = COMMANDS[args.command](cfg, args.out)
    except OracleMismatch as exc:
        _write_manifest(cfg, args.out, args.command, exc.files)
        print(f"oracle: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NVElectroError, ValueError, ArithmeticError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    _write_manifest(cfg, args.out, args.command, files)
    return 0


if __name__ == "__main__":
    sys.exit(main())
