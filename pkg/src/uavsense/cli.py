"""Command-line entry point: simulate, maps, overhead, validate."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    SimConfig,
    apply_overrides,
    apply_sweep_value,
    config_from_preset,
    export_maps,
    load_config,
    run_sweep,
    write_manifest,
    write_sweep_csv,
)
from .overhead import overhead_table

DEFAULT_OUTDIR = "uavsense-out"


def _default_outdir() -> str:
    return os.environ.get("UAVSENSE_OUTDIR", DEFAULT_OUTDIR)


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=("paper", "desk"), default="paper",
                        help="named parameter profile")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON config file overriding the preset")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="config override, repeatable")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out", type=str, default=None,
                        help=f"output directory (default ${{UAVSENSE_OUTDIR}} or ./{DEFAULT_OUTDIR})")


def _resolve_config(args) -> SimConfig:
    cfg = config_from_preset(args.preset)
    if args.config is not None:
        cfg = load_config(args.config, base=cfg)
    overrides: dict[str, str] = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        overrides[key.strip()] = value
    cfg = apply_overrides(cfg, overrides)
    if args.seed is not None:
        cfg = apply_overrides(cfg, {"master_seed": str(args.seed)})
    if getattr(args, "trials", None) is not None:
        cfg = apply_overrides(cfg, {"trials": str(args.trials)})
    if getattr(args, "workers", None) is not None:
        cfg = apply_overrides(cfg, {"workers": str(args.workers)})
    cfg.validate()
    return cfg


def _parse_sweep(text: str) -> tuple[str, list[float]]:
    param, sep, values = text.partition("=")
    if not sep or not values:
        raise ConfigError(f"sweep must look like PARAM=v1,v2,..., got {text!r}")
    return param.strip(), [float(v) for v in values.split(",")]


def _cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    outdir = Path(args.out or _default_outdir())
    outdir.mkdir(parents=True, exist_ok=True)
    if args.sweep:
        parameter, values = _parse_sweep(args.sweep)
    else:
        # no sweep requested: a single point at the configured UAV count
        parameter, values = "U", [float(cfg.num_uavs)]
    write_manifest(outdir, cfg, command="simulate",
                   extra={"sweep": {"parameter": parameter, "values": values}})
    # fail fast on bad sweep values before burning trials
    for v in values:
        apply_sweep_value(cfg, parameter, v)
    rows = run_sweep(cfg, parameter, values, progress=_progress)
    csv_path = outdir / "sweep.csv"
    write_sweep_csv(csv_path, rows)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


def _cmd_maps(args) -> int:
    cfg = _resolve_config(args)
    outdir = Path(args.out or _default_outdir())
    write_manifest(outdir, cfg, command="maps", extra={"trial": args.trial})
    written = export_maps(cfg, args.trial, outdir)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_overhead(args) -> int:
    table = overhead_table(args.P, args.U, args.Ms, args.Nc, args.N, args.own_cells)
    print(table)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "overhead.txt").write_text(table + "\n")
    return 0


def _progress(message: str) -> None:
    print(message, flush=True)


def _cmd_validate(args) -> int:
    from . import validation

    failures = 0
    for name, check in validation.CHECKS:
        try:
            check()
            print(f"ok   {name}")
        except Exception as exc:  # noqa: BLE001 - report and continue
            failures += 1
            print(f"FAIL {name}: {exc}")
    print(f"{len(validation.CHECKS) - failures}/{len(validation.CHECKS)} checks passed")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavsense",
        description="Multi-UAV distributed sensing simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run Monte Carlo sweeps, write CSV")
    _add_config_args(p_sim)
    p_sim.add_argument("--sweep", type=str, default=None, metavar="PARAM=V1,V2,...",
                       help="sweep parameter: U, N, h, or d")
    p_sim.set_defaults(func=_cmd_simulate)

    p_maps = sub.add_parser("maps", help="export one trial's RCS maps")
    _add_config_args(p_maps)
    p_maps.add_argument("--trial", type=int, default=0)
    p_maps.set_defaults(func=_cmd_maps)

    p_over = sub.add_parser("overhead", help="print the report-size table")
    p_over.add_argument("--P", type=int, required=True, help="cell count")
    p_over.add_argument("--U", type=int, required=True, help="UAV count")
    p_over.add_argument("--Ms", type=int, required=True, help="OFDM symbols per frame")
    p_over.add_argument("--Nc", type=int, required=True, help="subcarriers")
    p_over.add_argument("--N", type=int, required=True, help="array elements")
    p_over.add_argument("--own-cells", type=int, default=0,
                        help="cells excluded from per-cell reports")
    p_over.add_argument("--out", type=str, default=None)
    p_over.set_defaults(func=_cmd_overhead)

    p_val = sub.add_parser("validate", help="run the built-in invariant checks")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface runtime failures as exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
