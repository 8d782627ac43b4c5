"""Monte Carlo harness: per-trial pipeline runs, sweeps, and artifacts.

A trial places the target uniformly in the area, runs the scheduled
campaign, fuses the statistics with every requested method, localizes at
every configured threshold, and reports planar position errors. Sweeps
run independent trial batches per parameter value; every random draw is
tied to (seed, sweep point, trial, slot), so outputs are identical for any
worker count.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .beamforming import BeamformerConfig, BeamformerPair, build_beamformer_table
from .channel import QuadratureConfig, Scene
from .estimation import (
    PhaseReference,
    RcsMap,
    benchmark_map,
    build_phase_references,
    compute_statistics,
    fuse_mimore,
    fuse_mupe,
    fuse_mure,
    local_map_from_stats,
    ridge_ratio,
    write_rcs_map,
)
from .geometry import ArraySpec, build_grid, place_uavs, assign_cells
from .localization import localize
from .protocol import Schedule, build_schedule, run_campaign
from .rng import StreamFactory, substream
from .signal import CLUTTER_CELL_CENTER, ClutterResponse, clutter_response
from .waveform import NoiseSpec, WaveformSpec, dbm_to_watts

METHOD_MIMORE = "mimore"
METHOD_MURE = "mure"
METHOD_MUPE = "mupe"
METHOD_BENCHMARK = "benchmark"
ALL_METHODS = (METHOD_MIMORE, METHOD_MURE, METHOD_MUPE, METHOD_BENCHMARK)

SWEEP_PARAMETERS = ("U", "N", "h", "d")

# substream tags
_STREAM_TARGET = 0
_STREAM_CAMPAIGN = 1
_STREAM_BENCHMARK = 2
_STREAM_BOOTSTRAP = 46061


class ConfigError(ValueError):
    """Invalid configuration input (file, key, or value)."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; defaults follow the reference setup."""

    side_length: float = 50.0
    base_divisions: int = 18
    grid_kind: str = "mixed"
    num_uavs: int = 9
    altitude_m: float = 100.0
    array_elements: int = 16
    carrier_hz: float = 24e9
    bandwidth_hz: float = 200e6
    symbols: int = 16
    subcarriers: int = 64
    tx_power_dbm: float = 30.0
    noise_dbm: float | None = -109.0
    ground_rcs: float = 25.0
    target_rcs: float = 10.0
    doppler_hz: float = 0.0
    pathloss_exponent: float = 2.0
    interference_mode: str = "simplified"
    clutter_fidelity: str = "center-subcarrier"
    clutter_spatial: str = CLUTTER_CELL_CENTER
    quadrature_divisions: int = 4
    trials: int = 200
    master_seed: int = 101
    methods: tuple[str, ...] = ALL_METHODS
    thetas: tuple[float, ...] = (1.0, 0.9)
    workers: int = 1

    def validate(self) -> None:
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ConfigError(f"unknown method: {m!r}")
        for t in self.thetas:
            if not 0.0 < t <= 1.0:
                raise ConfigError(f"threshold must be in (0, 1], got {t}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.base_divisions < 2:
            raise ConfigError("base_divisions must be at least 2")


PRESETS: dict[str, dict] = {
    # reference-scale setup (the full 18-division grid)
    "paper": {},
    # smaller grid for quick desk-scale studies
    "desk": {"base_divisions": 12},
}


def config_from_preset(name: str) -> SimConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset: {name!r} (choose from {sorted(PRESETS)})")
    return SimConfig(**PRESETS[name])


_FIELD_NAMES = {f.name for f in dataclasses.fields(SimConfig)}
_TUPLE_FLOAT_FIELDS = {"thetas"}
_TUPLE_STR_FIELDS = {"methods"}
_INT_FIELDS = {
    "base_divisions",
    "num_uavs",
    "array_elements",
    "symbols",
    "subcarriers",
    "quadrature_divisions",
    "trials",
    "master_seed",
    "workers",
}
_STR_FIELDS = {"grid_kind", "interference_mode", "clutter_fidelity", "clutter_spatial"}
_OPTIONAL_FLOAT_FIELDS = {"noise_dbm"}


def _parse_field(name: str, raw) -> object:
    if name not in _FIELD_NAMES:
        raise ConfigError(f"unknown config key: {name!r}")
    if isinstance(raw, str):
        text = raw.strip()
        if name in _TUPLE_FLOAT_FIELDS:
            return tuple(float(v) for v in text.split(","))
        if name in _TUPLE_STR_FIELDS:
            return tuple(v.strip() for v in text.split(","))
        if name in _INT_FIELDS:
            return int(text)
        if name in _OPTIONAL_FLOAT_FIELDS:
            return None if text.lower() in ("none", "null", "off") else float(text)
        if name in _STR_FIELDS:
            return text
        return float(text)
    if name in _TUPLE_FLOAT_FIELDS:
        return tuple(float(v) for v in raw)
    if name in _TUPLE_STR_FIELDS:
        return tuple(str(v) for v in raw)
    return raw


def load_config(path: str | Path, base: SimConfig | None = None) -> SimConfig:
    """Read a JSON config file; unknown keys are rejected by name."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    cfg = base or SimConfig()
    parsed = {name: _parse_field(name, value) for name, value in data.items()}
    return replace(cfg, **parsed)


def apply_overrides(cfg: SimConfig, overrides: Mapping[str, str]) -> SimConfig:
    """Apply ``key=value`` overrides with the config field types."""
    parsed = {name: _parse_field(name, value) for name, value in overrides.items()}
    return replace(cfg, **parsed)


def _is_square(n: int) -> bool:
    r = math.isqrt(n) if n >= 1 else 0
    return r * r == n


def apply_sweep_value(cfg: SimConfig, parameter: str, value: float) -> SimConfig:
    """Derive the config for one sweep point; invalid values are rejected."""
    if parameter == "U":
        count = int(value)
        if count != 1 and not _is_square(count):
            raise ConfigError(f"UAV count must be 1 or a perfect square, got {count}")
        return replace(cfg, num_uavs=count)
    if parameter == "N":
        elements = int(value)
        if not _is_square(elements):
            raise ConfigError(f"array element count must be a perfect square, got {elements}")
        return replace(cfg, array_elements=elements)
    if parameter == "h":
        if value <= 0:
            raise ConfigError(f"altitude must be positive, got {value}")
        return replace(cfg, altitude_m=float(value))
    if parameter == "d":
        divisions = round(cfg.side_length / float(value))
        if divisions < 2:
            raise ConfigError(f"cell size {value} m exceeds half the area side")
        return replace(cfg, base_divisions=divisions)
    raise ConfigError(f"unknown sweep parameter: {parameter!r} (use one of {SWEEP_PARAMETERS})")


@dataclass
class SimContext:
    """Everything reusable across the trials of one configuration."""

    cfg: SimConfig
    stream_salt: int
    scene: Scene
    noise: NoiseSpec
    quad: QuadratureConfig
    assignment: dict[int, tuple[int, ...]]
    schedule: Schedule | None
    table: dict[tuple[int, int, int], BeamformerPair]
    clutter_table: dict[tuple[int, int, int], ClutterResponse]
    refs: dict[tuple[int, int], PhaseReference]
    bench_scene: Scene | None
    bench_schedule: Schedule | None
    bench_table: dict[tuple[int, int, int], BeamformerPair]
    bench_clutter: dict[tuple[int, int, int], ClutterResponse]


def build_context(cfg: SimConfig, stream_salt: int = 0) -> SimContext:
    """Precompute geometry, beamformers, and clutter couplings for a config.

    None of this depends on the target position, so one context serves all
    trials of a batch.
    """
    cfg.validate()
    grid = build_grid(cfg.side_length, cfg.base_divisions, cfg.grid_kind)
    uavs = place_uavs(cfg.num_uavs, cfg.side_length, cfg.altitude_m)
    array = ArraySpec(cfg.array_elements)
    wave = WaveformSpec(cfg.symbols, cfg.subcarriers, cfg.bandwidth_hz)
    noise = NoiseSpec(0.0) if cfg.noise_dbm is None else NoiseSpec.from_dbm(cfg.noise_dbm)
    quad = QuadratureConfig(cfg.quadrature_divisions, cfg.clutter_fidelity)
    center = np.array([cfg.side_length / 2, cfg.side_length / 2, 0.0])

    def make_scene(scene_uavs) -> Scene:
        return Scene(
            grid=grid,
            uavs=scene_uavs,
            array=array,
            wave=wave,
            target_position=center,
            target_rcs=cfg.target_rcs,
            ground_rcs=cfg.ground_rcs,
            carrier_hz=cfg.carrier_hz,
            tx_power_w=dbm_to_watts(cfg.tx_power_dbm),
            pathloss_exponent=cfg.pathloss_exponent,
            doppler_hz=cfg.doppler_hz,
        )

    scene = make_scene(uavs)
    multi = cfg.num_uavs >= 2 and any(m != METHOD_BENCHMARK for m in cfg.methods)
    assignment = assign_cells(grid, uavs)
    schedule = None
    table: dict = {}
    clutter_table: dict = {}
    refs: dict = {}
    if multi:
        schedule = build_schedule(assignment, grid)
        table = build_beamformer_table(
            scene, assignment, BeamformerConfig(interference_mode=cfg.interference_mode), quad
        )
        clutter_table = {
            key: clutter_response(scene, pair, quad, spatial=cfg.clutter_spatial)
            for key, pair in table.items()
        }
        refs = build_phase_references(scene, assignment)

    bench_scene = None
    bench_schedule = None
    bench_table: dict = {}
    bench_clutter: dict = {}
    if METHOD_BENCHMARK in cfg.methods:
        bench_scene = make_scene(place_uavs(1, cfg.side_length, cfg.altitude_m))
        bench_assignment = {0: tuple(range(grid.cell_count))}
        bench_schedule = build_schedule(bench_assignment, grid, benchmark=True)
        bench_table = build_beamformer_table(
            bench_scene,
            bench_assignment,
            BeamformerConfig(interference_mode=cfg.interference_mode),
            quad,
            benchmark=True,
        )
        bench_clutter = {
            key: clutter_response(bench_scene, pair, quad, spatial=cfg.clutter_spatial)
            for key, pair in bench_table.items()
        }

    return SimContext(
        cfg=cfg,
        stream_salt=stream_salt,
        scene=scene,
        noise=noise,
        quad=quad,
        assignment=assignment,
        schedule=schedule,
        table=table,
        clutter_table=clutter_table,
        refs=refs,
        bench_scene=bench_scene,
        bench_schedule=bench_schedule,
        bench_table=bench_table,
        bench_clutter=bench_clutter,
    )


@dataclass
class TrialResult:
    index: int
    target: np.ndarray
    errors: dict[tuple[str, float], float]
    hits: dict[str, bool]
    ridge: dict[str, float]
    flags: tuple[str, ...] = ()
    maps: dict[str, RcsMap] | None = None
    local_maps: list[RcsMap] | None = None


def _argmax_contains(rcs_map: RcsMap, target: np.ndarray) -> bool:
    cell = rcs_map.argmax_cell()
    center = rcs_map.grid.cells[cell].center
    half = rcs_map.grid.cell_size / 2.0
    return bool(
        abs(target[0] - center[0]) <= half and abs(target[1] - center[1]) <= half
    )


def run_trial(
    ctx: SimContext,
    index: int,
    keep_maps: bool = False,
    target_override: np.ndarray | None = None,
) -> TrialResult:
    """One full pipeline run; deterministic given (seed, salt, index)."""
    cfg = ctx.cfg
    streams = StreamFactory(cfg.master_seed, ctx.stream_salt, index)
    if target_override is None:
        gen = streams.generator(_STREAM_TARGET)
        xy = gen.uniform(0.0, cfg.side_length, size=2)
        target = np.array([xy[0], xy[1], 0.0])
    else:
        target = np.asarray(target_override, dtype=float)
    flags = ("no-target-energy",) if cfg.target_rcs == 0.0 else ()

    maps: dict[str, RcsMap] = {}
    local_maps: list[RcsMap] = []
    multi_requested = [m for m in cfg.methods if m != METHOD_BENCHMARK]
    if multi_requested and ctx.schedule is not None:
        scene = ctx.scene.with_target(target)
        store = run_campaign(
            scene,
            ctx.schedule,
            ctx.table,
            ctx.noise,
            streams.child(_STREAM_CAMPAIGN),
            ctx.quad,
            ctx.clutter_table,
        )
        stats = compute_statistics(store, ctx.refs)
        local_maps = [
            local_map_from_stats(stats, u.id, ctx.refs, scene, ctx.assignment)
            for u in scene.uavs
        ]
        if METHOD_MIMORE in cfg.methods:
            maps[METHOD_MIMORE] = fuse_mimore(stats, ctx.assignment, ctx.refs, scene)
        if METHOD_MURE in cfg.methods:
            maps[METHOD_MURE] = fuse_mure(local_maps)
    if METHOD_BENCHMARK in cfg.methods and ctx.bench_scene is not None:
        bench = benchmark_map(
            ctx.bench_scene.with_target(target),
            ctx.noise,
            streams.child(_STREAM_BENCHMARK),
            ctx.bench_table,
            ctx.bench_clutter,
            ctx.quad,
            ctx.bench_schedule,
        )
        maps[METHOD_BENCHMARK] = bench

    errors: dict[tuple[str, float], float] = {}
    for theta in cfg.thetas:
        for method in cfg.methods:
            if method == METHOD_MUPE:
                if not local_maps:
                    continue
                positions = [localize(m, theta).position for m in local_maps]
                position = fuse_mupe(positions)
            elif method in maps:
                position = localize(maps[method], theta).position
            else:
                continue
            errors[(method, theta)] = float(
                math.hypot(position[0] - target[0], position[1] - target[1])
            )

    hits = {method: _argmax_contains(m, target) for method, m in maps.items()}
    ridge: dict[str, float] = {}
    for method, m in maps.items():
        ridge[method] = ridge_ratio(m, target)
    if local_maps:
        local_ratios = [ridge_ratio(m, target) for m in local_maps]
        finite = [r for r in local_ratios if not math.isnan(r)]
        ridge["best-local"] = max(finite) if finite else float("nan")

    return TrialResult(
        index=index,
        target=target,
        errors=errors,
        hits=hits,
        ridge=ridge,
        flags=flags,
        maps=maps if keep_maps else None,
        local_maps=local_maps if keep_maps else None,
    )


# --- worker-pool plumbing ----------------------------------------------------

_WORKER_CTX: SimContext | None = None
_WORKER_KEEP_MAPS = False


def _worker_init(cfg: SimConfig, stream_salt: int, keep_maps: bool) -> None:
    global _WORKER_CTX, _WORKER_KEEP_MAPS
    _WORKER_CTX = build_context(cfg, stream_salt)
    _WORKER_KEEP_MAPS = keep_maps


def _worker_run(index: int) -> TrialResult:
    assert _WORKER_CTX is not None
    return run_trial(_WORKER_CTX, index, keep_maps=_WORKER_KEEP_MAPS)


def run_batch(
    cfg: SimConfig,
    stream_salt: int = 0,
    trials: int | None = None,
    workers: int | None = None,
    context: SimContext | None = None,
    keep_maps: bool = False,
) -> list[TrialResult]:
    """Run a batch of trials, optionally over a process pool.

    Results depend only on (config, seed, salt); the pool size changes the
    wall time, never the numbers.
    """
    n = cfg.trials if trials is None else trials
    w = cfg.workers if workers is None else workers
    if w <= 1:
        ctx = context or build_context(cfg, stream_salt)
        return [run_trial(ctx, i, keep_maps=keep_maps) for i in range(n)]
    with concurrent.futures.ProcessPoolExecutor(
        max_workers=w, initializer=_worker_init, initargs=(cfg, stream_salt, keep_maps)
    ) as pool:
        chunk = max(1, n // (w * 8))
        return list(pool.map(_worker_run, range(n), chunksize=chunk))


# --- aggregation --------------------------------------------------------------

BOOTSTRAP_RESAMPLES = 1000


@dataclass(frozen=True)
class ErrorStats:
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


def bootstrap_indices(
    n: int, rng: np.random.Generator, resamples: int = BOOTSTRAP_RESAMPLES
) -> np.ndarray:
    return rng.integers(0, n, size=(resamples, n))


def mean_ci(values: np.ndarray, indices: np.ndarray) -> tuple[float, float]:
    """Percentile bootstrap CI of the mean using a shared resample matrix."""
    means = values[indices].mean(axis=1)
    return float(np.percentile(means, 2.5)), float(np.percentile(means, 97.5))


def paired_diff_ci(
    a: np.ndarray, b: np.ndarray, indices: np.ndarray
) -> tuple[float, float]:
    """Bootstrap CI of mean(a - b) with trial pairing preserved."""
    diffs = np.asarray(a) - np.asarray(b)
    means = diffs[indices].mean(axis=1)
    return float(np.percentile(means, 2.5)), float(np.percentile(means, 97.5))


def summarize(
    results: Sequence[TrialResult],
    method: str,
    theta: float,
    parameter: str,
    value: float,
    grid_kind: str,
    indices: np.ndarray,
) -> ErrorStats | None:
    errs = np.array([r.errors[(method, theta)] for r in results if (method, theta) in r.errors])
    if errs.size == 0:
        return None
    hits = [r.hits[method] for r in results if method in r.hits]
    lo, hi = mean_ci(errs, indices)
    return ErrorStats(
        parameter=parameter,
        value=value,
        method=method,
        grid_kind=grid_kind,
        theta=theta,
        trials=int(errs.size),
        mean=float(errs.mean()),
        median=float(np.median(errs)),
        std=float(errs.std(ddof=1)) if errs.size > 1 else 0.0,
        ci_low=lo,
        ci_high=hi,
        hit_rate=float(np.mean(hits)) if hits else float("nan"),
    )


def run_sweep(
    cfg: SimConfig,
    parameter: str,
    values: Sequence[float],
    workers: int | None = None,
    return_trials: bool = False,
    progress=None,
):
    """Independent trial batches per sweep value, aggregated into rows."""
    rows: list[ErrorStats] = []
    per_point: dict[float, list[TrialResult]] = {}
    for i, value in enumerate(values):
        cfg_v = apply_sweep_value(cfg, parameter, value)
        if progress is not None:
            progress(f"sweep {parameter}={value} ({i + 1}/{len(values)})")
        results = run_batch(cfg_v, stream_salt=i + 1, workers=workers)
        per_point[value] = results
        boot_rng = substream(cfg.master_seed, _STREAM_BOOTSTRAP, i + 1)
        indices = bootstrap_indices(cfg_v.trials, boot_rng)
        for method in cfg.methods:
            for theta in cfg.thetas:
                row = summarize(
                    results, method, theta, parameter, value, cfg_v.grid_kind, indices
                )
                if row is not None:
                    rows.append(row)
    if return_trials:
        return rows, per_point
    return rows


CSV_COLUMNS = (
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


def _fmt(x: float) -> str:
    return repr(float(x))


def write_sweep_csv(path: str | Path, rows: Sequence[ErrorStats]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.parameter,
                    _fmt(r.value),
                    r.method,
                    r.grid_kind,
                    _fmt(r.theta),
                    r.trials,
                    _fmt(r.mean),
                    _fmt(r.median),
                    _fmt(r.std),
                    _fmt(r.ci_low),
                    _fmt(r.ci_high),
                    _fmt(r.hit_rate),
                ]
            )


def export_maps(cfg: SimConfig, trial_index: int, outdir: str | Path) -> list[Path]:
    """Write one trial's benchmark, local, and fused maps as text files."""
    needed = {METHOD_MIMORE, METHOD_MURE, METHOD_BENCHMARK}
    methods = tuple(dict.fromkeys(tuple(cfg.methods) + tuple(sorted(needed))))
    cfg = replace(cfg, methods=methods)
    ctx = build_context(cfg)
    result = run_trial(ctx, trial_index, keep_maps=True)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    assert result.maps is not None and result.local_maps is not None
    for m in result.local_maps:
        path = outdir / f"map_trial{trial_index:04d}_{m.provenance}.txt"
        write_rcs_map(path, m)
        written.append(path)
    for tag in (METHOD_BENCHMARK, METHOD_MURE, METHOD_MIMORE):
        if tag in result.maps:
            path = outdir / f"map_trial{trial_index:04d}_{tag}.txt"
            write_rcs_map(path, result.maps[tag])
            written.append(path)
    return written


def config_digest(cfg: SimConfig) -> str:
    canonical = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_manifest(outdir: str | Path, cfg: SimConfig, command: str, extra: dict | None = None) -> Path:
    """Run manifest: config, its hash, and library versions (no timestamps)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": dataclasses.asdict(cfg),
        "config_sha256": config_digest(cfg),
        "versions": {
            "uavsense": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }
    if extra:
        manifest.update(extra)
    path = outdir / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
