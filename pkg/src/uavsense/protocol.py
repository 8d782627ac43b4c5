"""Coordination logic: illumination schedule and campaign execution.

The fusion center assigns each UAV a set of cells, serializes one sensing
slot per cell (ordered by UAV id, then cell index), and appends one
reporting slot per UAV so statistic uploads never collide. Running the
campaign fills a sample store with data-free, clutter-subtracted frames
for every (receiver, cell) combination the half-duplex constraint allows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .channel import QuadratureConfig, Scene
from .rng import StreamFactory
from .signal import ClutterResponse, clutter_response, subtract_known_clutter, synthesize_received
from .waveform import NoiseSpec, SymbolBlock, generate_frame, remove_data
from .beamforming import BeamformerPair


@dataclass(frozen=True)
class Slot:
    """One sensing slot: a UAV illuminates a cell, the listed UAVs listen."""

    time: int
    tx_uav: int
    cell: int
    receivers: tuple[int, ...]


@dataclass(frozen=True)
class ReportSlot:
    """One statistics-upload slot reserved for a single UAV."""

    time: int
    uav: int


@dataclass(frozen=True)
class Schedule:
    slots: tuple[Slot, ...]
    reports: tuple[ReportSlot, ...]
    assignment: dict[int, tuple[int, ...]]
    benchmark: bool = False

    def describe(self) -> str:
        """Human-readable slot listing for inspection."""
        lines = ["time tx cell receivers"]
        for s in self.slots:
            rx = ",".join(str(r) for r in s.receivers) or "-"
            lines.append(f"{s.time:4d} {s.tx_uav:2d} {s.cell:4d} {rx}")
        for r in self.reports:
            lines.append(f"{r.time:4d} {r.uav:2d} report")
        return "\n".join(lines)


def _check_partition(assignment: Mapping[int, tuple[int, ...]], cell_count: int) -> None:
    seen: set[int] = set()
    total = 0
    for cells in assignment.values():
        total += len(cells)
        seen.update(cells)
    if total != len(seen) or seen != set(range(cell_count)):
        raise ValueError("assignment must partition the grid cells")


def build_schedule(
    assignment: Mapping[int, tuple[int, ...]],
    grid,
    benchmark: bool = False,
) -> Schedule:
    """Serialize the campaign: one slot per cell plus one report per UAV.

    In benchmark mode the (single) illuminator also receives its own
    echoes; otherwise receivers are all other UAVs, which is empty for a
    lone non-benchmark UAV.
    """
    _check_partition(assignment, grid.cell_count)
    uav_ids = sorted(assignment.keys())
    slots: list[Slot] = []
    for uid in uav_ids:
        if benchmark:
            receivers: tuple[int, ...] = (uid,)
        else:
            receivers = tuple(r for r in uav_ids if r != uid)
        for cell in sorted(assignment[uid]):
            slots.append(Slot(time=len(slots), tx_uav=uid, cell=cell, receivers=receivers))
    reports = tuple(
        ReportSlot(time=len(slots) + i, uav=uid) for i, uid in enumerate(uav_ids)
    )
    return Schedule(
        slots=tuple(slots),
        reports=reports,
        assignment={u: tuple(sorted(c)) for u, c in assignment.items()},
        benchmark=benchmark,
    )


@dataclass
class SampleStore:
    """Data-free, clutter-subtracted frames keyed by (receiver, cell)."""

    blocks: dict[tuple[int, int], SymbolBlock] = field(default_factory=dict)
    assignment: dict[int, tuple[int, ...]] = field(default_factory=dict)
    benchmark: bool = False

    def check_half_duplex(self) -> None:
        if self.benchmark:
            return
        for (rx, cell) in self.blocks:
            if cell in self.assignment.get(rx, ()):
                raise AssertionError(
                    f"store holds ({rx}, {cell}) although UAV {rx} illuminated it"
                )

    def cells_heard_by(self, rx_uav: int) -> tuple[int, ...]:
        return tuple(sorted(c for (r, c) in self.blocks if r == rx_uav))


def run_campaign(
    scene: Scene,
    schedule: Schedule,
    table: Mapping[tuple[int, int, int], BeamformerPair],
    noise: NoiseSpec,
    streams: StreamFactory,
    quad: QuadratureConfig = QuadratureConfig(),
    clutter_table: Mapping[tuple[int, int, int], ClutterResponse] | None = None,
) -> SampleStore:
    """Execute every sensing slot and collect the processed frames.

    Each slot draws its transmitted frame and per-receiver noise from its
    own substream, so the store is bit-identical however slots are
    distributed over workers. Missing beamformer entries abort the run.
    """
    store = SampleStore(assignment=dict(schedule.assignment), benchmark=schedule.benchmark)
    for index, slot in enumerate(schedule.slots):
        # one substream per slot: the frame first, then receiver noise in
        # receiver order, so any slot-parallel execution stays bit-identical
        slot_rng = streams.generator(index)
        frame = generate_frame(scene.wave, slot_rng)
        for rx in slot.receivers:
            key = (slot.tx_uav, rx, slot.cell)
            try:
                pair = table[key]
            except KeyError:
                raise ValueError(f"no beamformer for (tx, rx, cell) = {key}") from None
            if clutter_table is not None:
                clutter = clutter_table[key]
            else:
                clutter = clutter_response(scene, pair, quad)
            received = synthesize_received(scene, pair, frame, noise, slot_rng, clutter, quad)
            data_free = remove_data(received, frame)
            store.blocks[(rx, slot.cell)] = subtract_known_clutter(data_free, clutter)
    store.check_half_duplex()
    return store
