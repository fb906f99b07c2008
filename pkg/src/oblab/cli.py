"""Batch command-line entry point.

Subcommands: simulate | budget | besov | sweep | relative-energy | kato.
JSON configs in, CSV/JSON reports out; exit codes: 0 ok, 2 config error,
3 numeric failure, 4 unresolvable scale.
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import ConfigError, NumericError, ScaleError
from .geometry import ChannelDomain
from .grid import Grid2

log = logging.getLogger("oblab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_SCALE = 4


def _setup_logging():
    level = os.environ.get("OBL_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _require(cfg, *keys):
    for key in keys:
        if key not in cfg:
            raise ConfigError(f"config is missing required field {key!r}")
    return [cfg[k] for k in keys]


def _grid_from(cfg) -> Grid2:
    g, = _require(cfg, "grid")
    Lx, Ly, nx, ny = _require(g, "Lx", "Ly", "nx", "ny")
    return Grid2(Lx=float(Lx), Ly=float(Ly), nx=int(nx), ny=int(ny))


def _write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _write_manifest(out_dir, config, outputs, timings):
    manifest = {
        "tool": "oblab",
        "version": __version__,
        "config": config,
        "outputs": outputs,
        "timings_seconds": timings,
    }
    path = os.path.join(out_dir, "manifest.json")
    tmp = path + ".tmp"
    _write_text(tmp, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)  # atomic: the manifest appears only when complete


def _load_snapshots(pattern):
    from .fields import read_snapshot
    paths = sorted(globmod.glob(pattern))
    if not paths:
        raise ConfigError(f"no snapshots match {pattern!r}")
    snaps = [read_snapshot(p) for p in paths]
    snaps.sort(key=lambda s: s.t)
    return snaps


def _solver_config(cfg):
    from .solver import SolverConfig
    nu, dt, T, scenario = _require(cfg, "nu", "dt", "T", "scenario")
    return SolverConfig(grid=_grid_from(cfg), nu=float(nu), dt=float(dt),
                        T=float(T), scenario=str(scenario),
                        mode_n=int(cfg.get("mode_n", 1)),
                        forcing=float(cfg.get("forcing", 0.0)),
                        snapshot_every=int(cfg.get("snapshot_every", 0)),
                        snapshot_path=cfg.get("snapshot_path"))


# -- subcommands ------------------------------------------------------------


def cmd_simulate(args):
    from .fields import write_snapshot
    from .solver import run
    cfg = _load_config(args.config)
    t0 = time.time()
    snaps, ledger = run(_solver_config(cfg))
    outputs = []
    for k, snap in enumerate(snaps):
        path = os.path.join(args.out, f"snapshot_{k:05d}.obl")
        write_snapshot(path, snap)
        outputs.append(path)
    ledger_path = os.path.join(args.out, "ledger.csv")
    _write_text(ledger_path, ledger.to_csv())
    outputs.append(ledger_path)
    _write_manifest(args.out, cfg, outputs, {"simulate": time.time() - t0})
    log.info("wrote %d snapshots; energy inequality ok: %s",
             len(snaps), ledger.inequality_ok)


def cmd_budget(args):
    from .budget import BudgetScales, balance_residual
    cfg = _load_config(args.config)
    ell, h, mode = _require(cfg, "ell", "h", "mode")
    snaps = _load_snapshots(args.snapshots)
    nu = float(cfg.get("nu", snaps[0].nu))
    scales = BudgetScales(ell=float(ell), h=float(h), nu=nu,
                          sigma=float(cfg.get("sigma", 1.0 / 3.0)), mode=str(mode))
    t0 = time.time()
    report = balance_residual(snaps, ChannelDomain(snaps[0].grid), scales)
    path = os.path.join(args.out, "budget.csv")
    _write_text(path, report.to_csv())
    _write_manifest(args.out, cfg, [path], {"budget": time.time() - t0})


def cmd_besov(args):
    from .besov import dyadic_offsets, structure_function, table_to_csv
    cfg = _load_config(args.config)
    p, sigma = _require(cfg, "p", "sigma")
    snaps = _load_snapshots(args.snapshots)
    grid = snaps[0].grid
    region = None
    if "interior_margin" in cfg:
        region = ChannelDomain(grid).distance_field() >= float(cfg["interior_margin"])
    offsets = dyadic_offsets(grid, n_octaves=cfg.get("octaves"))
    t0 = time.time()
    tables = [structure_function(s.u, float(p), offsets, region=region, t=s.t)
              for s in snaps]
    path = os.path.join(args.out, "structure_functions.csv")
    _write_text(path, table_to_csv(tables, sigma=float(sigma)))
    _write_manifest(args.out, cfg, [path], {"besov": time.time() - t0})


def cmd_sweep(args):
    from .limits import sweep, sweep_to_csv, verdicts_to_json
    cfg = _load_config(args.config)
    nu_list, sigma = _require(cfg, "nu_list", "sigma")
    t0 = time.time()
    records, verdicts = sweep(
        [float(v) for v in nu_list], float(sigma),
        scenario=str(cfg.get("scenario", "decaying_shear")),
        Lx=float(cfg.get("Lx", 0.25)), Ly=float(cfg.get("Ly", 1.0)),
        nx=int(cfg.get("nx", 16)), T=float(cfg.get("T", 0.1)),
        mode_n=int(cfg.get("mode_n", 1)), workers=args.workers)
    csv_path = os.path.join(args.out, "sweep.csv")
    _write_text(csv_path, sweep_to_csv(records))
    json_path = os.path.join(args.out, "verdicts.json")
    _write_text(json_path, verdicts_to_json(verdicts) + "\n")
    _write_manifest(args.out, cfg, [csv_path, json_path],
                    {"sweep": time.time() - t0})
    if not any(r.resolved for r in records):
        raise ScaleError("no viscosity in the ladder was resolvable")


def cmd_relative_energy(args):
    from .limits import relative_energy
    from .solver import euler_reference, run
    cfg = _load_config(args.config)
    k, = _require(cfg, "profile_mode")
    k = int(k)
    run_cfg = dict(cfg)
    run_cfg.setdefault("scenario", "decaying_shear")
    run_cfg.setdefault("mode_n", 2 * k)
    solver_cfg = _solver_config(run_cfg)
    t0 = time.time()
    snaps, _ = run(solver_cfg)
    grid = solver_cfg.grid
    ref = euler_reference(grid, lambda y: np.sin(2.0 * np.pi * k * y / grid.Ly))
    h = float(cfg["h"]) if "h" in cfg else None
    report = relative_energy(snaps, ref, h=h)
    path = os.path.join(args.out, "relative_energy.csv")
    _write_text(path, report.to_csv())
    _write_manifest(args.out, cfg, [path], {"relative-energy": time.time() - t0})
    log.info("Gronwall bound satisfied: %s", report.bound_ok)


def cmd_kato(args):
    from .limits import kato_dissipation, total_dissipation
    cfg = _load_config(args.config)
    a_values, = _require(cfg, "a_values")
    snaps = _load_snapshots(args.snapshots)
    domain = ChannelDomain(snaps[0].grid)
    t0 = time.time()
    values = kato_dissipation(snaps, domain, [float(a) for a in a_values])
    total = total_dissipation(snaps, domain)
    lines = ["a[L],kato_dissipation[L^4/s^2],total_dissipation[L^4/s^2]"]
    for a, v in zip(a_values, values):
        lines.append(f"{float(a):.12g},{v:.12g},{total:.12g}")
    path = os.path.join(args.out, "kato.csv")
    _write_text(path, "\n".join(lines) + "\n")
    _write_manifest(args.out, cfg, [path], {"kato": time.time() - t0})


COMMANDS = {
    "simulate": cmd_simulate,
    "budget": cmd_budget,
    "besov": cmd_besov,
    "sweep": cmd_sweep,
    "relative-energy": cmd_relative_energy,
    "kato": cmd_kato,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oblab",
        description="Energy-budget laboratory for wall-bounded 2D flow")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--snapshots", default=None,
                       help="glob of OBL1 snapshot files (for post-processing)")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command in ("budget", "besov", "kato") and not args.snapshots:
        print("oblab: this subcommand needs --snapshots", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    try:
        COMMANDS[args.command](args)
    except ScaleError as exc:
        print(f"oblab: unresolvable scale: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except ConfigError as exc:
        print(f"oblab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"oblab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
