"""Turning an RCS map into a target position: argmax or weighted average.

On-grid estimation snaps to the center of the strongest observed cell.
Off-grid refinement first normalizes the observed map to [0, 1], keeps the
cells at or above a threshold, and averages their centers weighted by the
normalized values. A threshold of 1 keeps only the strongest cell(s), so
the experiments treat it as the on-grid case.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .estimation import RcsMap

NORMALIZATION_MINMAX = "min-max"


@dataclass(frozen=True)
class LocalizerConfig:
    """Post-processing threshold in (0, 1] applied to a normalized map."""

    threshold: float = 0.9
    normalization: str = NORMALIZATION_MINMAX

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.normalization != NORMALIZATION_MINMAX:
            raise ValueError(f"unknown normalization: {self.normalization!r}")


@dataclass(frozen=True)
class PositionEstimate:
    position: np.ndarray
    method: str
    cell_index: int | None = None


def normalize_map(rcs_map: RcsMap) -> RcsMap:
    """Min-max normalize the observed cells to [0, 1].

    A constant observed map degenerates to all ones; masked cells keep
    their zero value and stay excluded from any later thresholding.
    """
    if not np.any(rcs_map.observed):
        raise ValueError("map has no observed cells")
    obs = rcs_map.observed
    vmin = float(np.min(rcs_map.values[obs]))
    vmax = float(np.max(rcs_map.values[obs]))
    values = np.zeros_like(rcs_map.values)
    if vmax == vmin:
        values[obs] = 1.0
    else:
        values[obs] = (rcs_map.values[obs] - vmin) / (vmax - vmin)
    return RcsMap(
        grid=rcs_map.grid, values=values, observed=obs.copy(), provenance=rcs_map.provenance
    )


def on_grid(rcs_map: RcsMap) -> PositionEstimate:
    """Center of the strongest observed cell, ties to the lowest index."""
    cell = rcs_map.argmax_cell()
    return PositionEstimate(
        position=rcs_map.grid.cells[cell].center.copy(), method="on-grid", cell_index=cell
    )


def off_grid(rcs_map: RcsMap, config: LocalizerConfig) -> PositionEstimate:
    """Value-weighted average of the cell centers above the threshold.

    Expects a normalized map, whose maximum observed value is exactly 1,
    so the selected set is never empty.
    """
    selected = rcs_map.observed & (rcs_map.values >= config.threshold)
    assert np.any(selected), "normalized map must contain its own maximum"
    weights = rcs_map.values[selected]
    centers = rcs_map.grid.centers[selected]
    position = (weights[:, None] * centers).sum(axis=0) / weights.sum()
    position[2] = 0.0
    return PositionEstimate(position=position, method="off-grid", cell_index=None)


def localize(rcs_map: RcsMap, threshold: float) -> PositionEstimate:
    """Standard pipeline: threshold 1 means plain argmax, else normalize + average."""
    if threshold >= 1.0:
        return on_grid(rcs_map)
    return off_grid(normalize_map(rcs_map), LocalizerConfig(threshold=threshold))
