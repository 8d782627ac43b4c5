"""Readers for the simulator's text artifacts.

This package talks to the simulator only through its documented file
formats: the sweep CSV (one aggregate row per sweep point, method, and
threshold) and the plain-text RCS map files. Nothing here imports the
simulator.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SWEEP_COLUMNS = (
    "parameter",
    "value",
    "method",
    "grid_kind",
    "theta",
    "trials",
    "mean_error_m",
    "median_error_m",
    "std_error_m",
    "ci95_low_m",
    "ci95_high_m",
    "cell_hit_rate",
)

MAP_HEADER = "# uavsense-rcs-map v1"


class InputError(ValueError):
    """A referenced input file is missing, empty, or malformed."""


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    method: str
    grid_kind: str
    theta: float
    trials: int
    mean: float
    median: float
    std: float
    ci_low: float
    ci_high: float
    hit_rate: float


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"sweep CSV not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"sweep CSV is empty: {path}")
        missing = [c for c in SWEEP_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise InputError(f"{path}: missing columns {', '.join(missing)}")
        rows = [
            SweepRow(
                parameter=r["parameter"],
                value=float(r["value"]),
                method=r["method"],
                grid_kind=r["grid_kind"],
                theta=float(r["theta"]),
                trials=int(r["trials"]),
                mean=float(r["mean_error_m"]),
                median=float(r["median_error_m"]),
                std=float(r["std_error_m"]),
                ci_low=float(r["ci95_low_m"]),
                ci_high=float(r["ci95_high_m"]),
                hit_rate=float(r["cell_hit_rate"]),
            )
            for r in reader
        ]
    if not rows:
        raise InputError(f"sweep CSV holds no data rows: {path}")
    return rows


@dataclass(frozen=True)
class MapFile:
    """One RCS map: cell centers, values, and the observed mask."""

    side_length: float
    divisions: int
    kind: str
    provenance: str
    centers: np.ndarray  # (P, 2)
    values: np.ndarray  # (P,)
    observed: np.ndarray  # (P,) bool

    @property
    def cell_size(self) -> float:
        return self.side_length / self.divisions


def _lattice_centers(side: float, divisions: int, kind: str) -> np.ndarray:
    d = side / divisions
    pts = [
        ((i + 0.5) * d, (j + 0.5) * d)
        for j in range(divisions)
        for i in range(divisions)
    ]
    if kind == "mixed":
        pts += [
            ((i + 1.0) * d, (j + 1.0) * d)
            for j in range(divisions - 1)
            for i in range(divisions - 1)
        ]
    return np.array(pts)


def read_map_file(path: str | Path) -> MapFile:
    path = Path(path)
    if not path.exists():
        raise InputError(f"map file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MAP_HEADER:
        raise InputError(f"{path}: not an RCS map file")
    meta: dict[str, str] = {}
    for token in lines[1].lstrip("# ").split():
        key, _, val = token.partition("=")
        meta[key] = val
    for required in ("side_length", "divisions", "kind"):
        if required not in meta:
            raise InputError(f"{path}: header misses {required}")
    provenance = lines[2].partition("=")[2]
    body = lines[3:]
    try:
        mask_at = body.index("# mask")
    except ValueError:
        raise InputError(f"{path}: mask section missing") from None
    values = np.array([float(v) for row in body[:mask_at] for v in row.split()])
    observed = np.array([v == "1" for row in body[mask_at + 1 :] if row for v in row.split()])
    side = float(meta["side_length"])
    divisions = int(meta["divisions"])
    kind = meta["kind"]
    centers = _lattice_centers(side, divisions, kind)
    expected = len(centers)
    if values.size != expected or observed.size != expected:
        raise InputError(
            f"{path}: expected {expected} cells, found {values.size} values "
            f"and {observed.size} mask entries"
        )
    return MapFile(
        side_length=side,
        divisions=divisions,
        kind=kind,
        provenance=provenance,
        centers=centers,
        values=values,
        observed=observed,
    )
