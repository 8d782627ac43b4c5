"""Figure rendering: sweep curves with CI bands and RCS map panels.

Output is deterministic for fixed inputs: styles and sizes are pinned and
nothing derived from the clock enters the figure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import InputError, MapFile, SweepRow, read_map_file, read_sweep_csv

KIND_SWEEP = "sweep"
KIND_MAPS = "maps"

_METHOD_COLORS = {
    "mimore": "tab:blue",
    "mure": "tab:green",
    "mupe": "tab:orange",
    "benchmark": "tab:red",
}
_THETA_STYLES = {1.0: "-", 0.9: "--"}
_FALLBACK_STYLES = (":", "-.")

_AXIS_LABELS = {
    "U": "number of UAVs",
    "N": "array elements",
    "h": "UAV altitude [m]",
    "d": "cell size [m]",
}


@dataclass(frozen=True)
class PlotJob:
    """One rendering request."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    log_y: bool = False
    methods: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_SWEEP, KIND_MAPS):
            raise InputError(f"unknown figure kind: {self.kind!r}")
        if not self.inputs:
            raise InputError("at least one input file is required")


def render(job: PlotJob) -> Path:
    if job.kind == KIND_SWEEP:
        return _render_sweep(job)
    return _render_maps(job)


def _style_for(theta: float, seen: list[float]) -> str:
    if theta in _THETA_STYLES:
        return _THETA_STYLES[theta]
    if theta not in seen:
        seen.append(theta)
    return _FALLBACK_STYLES[seen.index(theta) % len(_FALLBACK_STYLES)]


def _render_sweep(job: PlotJob) -> Path:
    rows = read_sweep_csv(job.inputs[0])
    if job.methods is not None:
        rows = [r for r in rows if r.method in job.methods]
        if not rows:
            raise InputError(
                f"{job.inputs[0]}: no rows left after method filter {job.methods}"
            )
    parameter = rows[0].parameter
    fig, ax = plt.subplots(figsize=(7.0, 4.6), dpi=120)
    series: dict[tuple[str, float, str], list[SweepRow]] = {}
    for r in rows:
        series.setdefault((r.method, r.theta, r.grid_kind), []).append(r)
    extra_thetas: list[float] = []
    for (method, theta, grid_kind), pts in sorted(series.items()):
        pts = sorted(pts, key=lambda r: r.value)
        x = np.array([p.value for p in pts])
        mean = np.array([p.mean for p in pts])
        lo = np.array([p.ci_low for p in pts])
        hi = np.array([p.ci_high for p in pts])
        color = _METHOD_COLORS.get(method, "tab:gray")
        style = _style_for(theta, extra_thetas)
        label = f"{method}, thr={theta:g}"
        if grid_kind != "mixed":
            label += f" ({grid_kind})"
        ax.plot(x, mean, style, color=color, marker="o", markersize=4, label=label)
        ax.fill_between(x, lo, hi, color=color, alpha=0.15, linewidth=0)
    ax.set_xlabel(_AXIS_LABELS.get(parameter, parameter))
    ax.set_ylabel("mean position error [m]")
    if job.log_y:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return out


def _rasterize(map_file: MapFile, resolution: int = 180) -> np.ndarray:
    """Nearest-center (Voronoi) rasterization of a possibly two-layer map."""
    side = map_file.side_length
    axis = (np.arange(resolution) + 0.5) * side / resolution
    gx, gy = np.meshgrid(axis, axis)
    pixels = np.column_stack([gx.ravel(), gy.ravel()])
    # chunked nearest-neighbor lookup keeps memory flat for fine rasters
    values = np.empty(len(pixels))
    centers = map_file.centers
    for start in range(0, len(pixels), 8192):
        block = pixels[start : start + 8192]
        d2 = (
            (block[:, 0, None] - centers[None, :, 0]) ** 2
            + (block[:, 1, None] - centers[None, :, 1]) ** 2
        )
        values[start : start + 8192] = map_file.values[np.argmin(d2, axis=1)]
    return values.reshape(resolution, resolution)


def _group_maps(maps: list[MapFile]) -> tuple[MapFile | None, list[MapFile], MapFile | None, MapFile | None]:
    benchmark = next((m for m in maps if m.provenance == "benchmark"), None)
    locals_ = sorted(
        (m for m in maps if m.provenance.startswith("local-u")),
        key=lambda m: m.provenance,
    )
    mure = next((m for m in maps if "mure" in m.provenance), None)
    mimore = next((m for m in maps if "mimore" in m.provenance), None)
    return benchmark, locals_, mure, mimore


def _render_maps(job: PlotJob) -> Path:
    maps = [read_map_file(p) for p in job.inputs]
    benchmark, locals_, mure, mimore = _group_maps(maps)
    panels = [m for m in (benchmark, mure, mimore) if m is not None] + locals_
    if not panels:
        raise InputError("no recognizable map files among the inputs")
    vmax = max(float(m.values.max()) for m in panels)
    vmax = vmax if vmax > 0 else 1.0
    side = panels[0].side_length

    fig = plt.figure(figsize=(11.0, 9.0), dpi=110)
    outer = fig.add_gridspec(2, 2, wspace=0.25, hspace=0.3)
    titles = ["(a) monostatic benchmark", "(b) local maps", "(c) fused map average", "(d) central estimate"]

    def show(ax, m: MapFile, title: str) -> None:
        img = _rasterize(m)
        im = ax.imshow(
            img,
            origin="lower",
            extent=(0, side, 0, side),
            vmin=0.0,
            vmax=vmax,
            cmap="viridis",
        )
        ax.set_title(title, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        return im

    image = None
    if benchmark is not None:
        image = show(fig.add_subplot(outer[0, 0]), benchmark, titles[0])
    if locals_:
        cols = int(np.ceil(np.sqrt(len(locals_))))
        rows = int(np.ceil(len(locals_) / cols))
        inner = outer[0, 1].subgridspec(rows, cols, wspace=0.08, hspace=0.12)
        for i, m in enumerate(locals_):
            ax = fig.add_subplot(inner[i // cols, i % cols])
            image = show(ax, m, m.provenance)
    if mure is not None:
        image = show(fig.add_subplot(outer[1, 0]), mure, titles[2])
    if mimore is not None:
        image = show(fig.add_subplot(outer[1, 1]), mimore, titles[3])
    if image is not None:
        fig.colorbar(image, ax=fig.axes, shrink=0.6, label="estimated RCS [m$^2$]")
    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return out
