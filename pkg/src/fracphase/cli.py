"""Command line interface.

Subcommands::

    fracphase run [--preset NAME] [--config FILE] [--alpha A] [--tau T] [--steps N]
                  [--seed S] [--out DIR] [--corner-origin] [--dealias] [--set KEY=VALUE ...]
    fracphase check-kernel [--alphas ...] [--ns ...] [--tau T]
    fracphase convergence --alpha A [--taus ...]
    fracphase coarsen-fit energy.csv [--window T0 T1]

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 solver
error, 4 memory budget exceeded.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, fracops, initial, io, models
from .config import PRESETS, RunConfig, build_config, config_items
from .errors import BudgetExceeded, ConfigError, FracPhaseError
from .fracops import L1Kernel
from .models import ModelSpec
from .spectral import Grid
from .stepper import SolverSettings, history_bytes, run

log = logging.getLogger("fracphase")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BUDGET = 0, 1, 2, 3, 4


def build_run(cfg: RunConfig):
    """Turn a validated config into ``(grid, spec, kernel, settings, phi0)``."""
    grid = Grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly)
    spec = ModelSpec(cfg.family, cfg.epsilon, cfg.gamma, cfg.S, cfg.potential, cfg.splitting)
    kernel = L1Kernel(cfg.alpha, cfg.tau, max(cfg.n_steps, 1))
    settings = SolverSettings(cfg.tau, cfg.n_steps, cfg.nonlinear_tol, cfg.nonlinear_max_iter, cfg.dealias)
    if cfg.initial == "flower":
        phi0 = initial.initial_flower(grid, cfg.epsilon, cfg.corner_origin)
    elif cfg.initial == "random":
        phi0 = initial.initial_random(grid, cfg.seed, cfg.amplitude)
    else:
        try:
            phi0, _, _ = io.read_snapshot(cfg.initial_path)
        except (OSError, ValueError) as exc:
            raise ConfigError("initial_path", str(exc)) from None
        if phi0.shape != grid.shape:
            raise ConfigError("initial_path", f"snapshot is {phi0.shape}, grid is {grid.shape}")
    return grid, spec, kernel, settings, phi0


def execute(cfg: RunConfig) -> int:
    """Run one simulation and write energy.csv, snapshots and manifest.txt."""
    try:
        cfg.validate()
        grid, spec, kernel, settings, phi0 = build_run(cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)

    warnings = models.stability_warnings(spec)
    manifest = dict(config_items(cfg))
    manifest["lipschitz_L"] = models.lipschitz_bound(spec)
    manifest["S_star"] = models.critical_stabilization(spec)
    manifest["history_bytes"] = history_bytes(grid, cfg.n_steps)
    manifest["warnings"] = " | ".join(warnings) if warnings else "none"
    io.write_manifest(out / "manifest.txt", manifest)

    recorder = io.CsvEnergyObserver(diagnostics.EnergyRecorder(grid, spec, cfg.energy_stride), out / "energy.csv")
    snaps = io.SnapshotWriter(out, cfg.snapshot_stride, cfg.alpha)
    try:
        run(grid, spec, kernel, settings, phi0, [recorder, snaps], cfg.memory_cap_bytes)
    except BudgetExceeded as exc:
        log.error("%s", exc)
        return EXIT_BUDGET
    except FracPhaseError as exc:
        log.error("solver error: %s", exc)
        return EXIT_SOLVER
    finally:
        recorder.close()
    return EXIT_OK


# -- subcommands -------------------------------------------------------------


def _cmd_run(args) -> int:
    overrides = {}
    for item in args.set or ():
        if "=" not in item:
            log.error("config error: --set expects KEY=VALUE, got %r", item)
            return EXIT_CONFIG
        k, v = item.split("=", 1)
        overrides[k.strip()] = v
    for key, val in (("alpha", args.alpha), ("tau", args.tau), ("n_steps", args.steps),
                     ("seed", args.seed), ("output", args.out)):
        if val is not None:
            overrides[key] = val
    if args.corner_origin:
        overrides["corner_origin"] = True
    if args.dealias:
        overrides["dealias"] = True
    preset = args.preset
    if preset is None and args.config is None:
        preset = "ac-flower"
    try:
        cfg = build_config(preset, args.config, overrides)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    return execute(cfg)


def _cmd_check_kernel(args) -> int:
    ok = True
    print(f"{'alpha':>6} {'n':>6} {'min_eig':>22} {'s_n':>22} certified")
    for alpha in args.alphas:
        for n in args.ns:
            lam, s_n, cert = fracops.kernel_form_certificate(alpha, args.tau, n)
            ok &= cert
            print(f"{alpha:6.3g} {n:6d} {lam:22.15e} {s_n:22.15e} {'yes' if cert else 'NO'}")
    return EXIT_OK if ok else EXIT_CHECK


def _cmd_convergence(args) -> int:
    errs = diagnostics.l1_errors(args.alpha, args.taus)
    for tau, e in zip(args.taus, errs):
        print(f"tau = {tau:.6g}  error = {e:.6e}")
    order = diagnostics.l1_convergence_order(args.alpha, args.taus)
    print(f"observed order = {order:.6f}  (expected {2 - args.alpha:.6f})")
    return EXIT_OK


def _cmd_coarsen_fit(args) -> int:
    series = io.read_energy_csv(args.csv)
    if args.window:
        window = tuple(args.window)
    else:
        t = [x for x in series.times if x > 0]
        window = (min(t), max(t)) if t else (0.0, 0.0)
    fit = diagnostics.fit_power_law(series, window)
    print(f"exponent = {fit.exponent:.16g}")
    print(f"prefactor = {fit.prefactor:.16g}")
    print(f"window = {fit.window[0]:.6g} {fit.window[1]:.6g}  points = {fit.n_points}")
    print(f"rms_log_residual = {fit.residual:.6e}")
    return EXIT_OK


def _floats(text: str) -> list[float]:
    vals = []
    for tok in text.replace(",", " ").split():
        if "/" in tok:
            num, den = tok.split("/")
            vals.append(float(num) / float(den))
        else:
            vals.append(float(tok))
    return vals


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracphase", description="Time-fractional phase-field simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation")
    r.add_argument("--config", type=Path)
    r.add_argument("--preset", choices=sorted(PRESETS))
    r.add_argument("--alpha", type=str)
    r.add_argument("--tau", type=str)
    r.add_argument("--steps", type=str)
    r.add_argument("--seed", type=str)
    r.add_argument("--out", type=str)
    r.add_argument("--corner-origin", action="store_true")
    r.add_argument("--dealias", action="store_true")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    r.set_defaults(func=_cmd_run)

    k = sub.add_parser("check-kernel", help="certify positivity of the L1 quadratic form")
    k.add_argument("--alphas", type=_floats, default=[round(0.1 * i, 1) for i in range(1, 10)])
    k.add_argument("--ns", type=lambda s: [int(v) for v in _floats(s)], default=[4, 16, 64])
    k.add_argument("--tau", type=float, default=0.1)
    k.set_defaults(func=_cmd_check_kernel)

    c = sub.add_parser("convergence", help="observed order of the L1 scheme on u = t^2")
    c.add_argument("--alpha", type=float, default=0.5)
    c.add_argument("--taus", type=_floats, default=[1 / 32, 1 / 64, 1 / 128])
    c.set_defaults(func=_cmd_convergence)

    f = sub.add_parser("coarsen-fit", help="fit E ~ C t^p to an energy.csv")
    f.add_argument("csv", type=Path)
    f.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"))
    f.set_defaults(func=_cmd_coarsen_fit)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FracPhaseError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG if isinstance(exc, (ConfigError, ValueError)) else EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
