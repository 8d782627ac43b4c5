"""Command line for rendering simulator artifacts into figures."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import InputError
from .render import KIND_MAPS, KIND_SWEEP, PlotJob, render


def _expand_inputs(raw: list[str]) -> tuple[str, ...]:
    paths: list[str] = []
    for item in raw:
        p = Path(item)
        if p.is_dir():
            paths.extend(str(q) for q in sorted(p.glob("map_*.txt")))
        else:
            paths.append(item)
    return tuple(paths)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavsense-plots",
                                     description="Render sweep curves and RCS map panels")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--kind", choices=(KIND_SWEEP, KIND_MAPS), required=True)
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="sweep CSV, map files, or a directory of map files")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--log-y", action="store_true", help="logarithmic error axis")
    p.add_argument("--methods", type=str, default=None,
                   help="comma-separated method filter for sweep curves")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    methods = tuple(args.methods.split(",")) if args.methods else None
    try:
        job = PlotJob(
            kind=args.kind,
            inputs=_expand_inputs(args.inputs),
            output=args.out,
            log_y=args.log_y,
            methods=methods,
        )
        out = render(job)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
