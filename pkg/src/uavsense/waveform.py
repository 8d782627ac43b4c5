"""OFDM frame bookkeeping: waveform parameters, symbol blocks, noise levels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TRANSMITTED = "transmitted"
RECEIVED = "received"
DATA_FREE = "data-free"

# Unit-circle 4-point constellation; unit modulus makes data removal
# exactly noise-variance preserving.
_CONSTELLATION = np.array([1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])


@dataclass(frozen=True)
class WaveformSpec:
    """OFDM frame layout: ``symbols`` x ``subcarriers`` over ``bandwidth_hz``."""

    symbols: int
    subcarriers: int
    bandwidth_hz: float

    def __post_init__(self) -> None:
        if self.symbols < 1 or self.subcarriers < 1:
            raise ValueError("frame must contain at least one symbol and subcarrier")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def subcarrier_spacing_hz(self) -> float:
        return self.bandwidth_hz / self.subcarriers

    @property
    def symbol_duration_s(self) -> float:
        return 1.0 / self.subcarrier_spacing_hz

    @property
    def block_size(self) -> int:
        return self.symbols * self.subcarriers


@dataclass(frozen=True)
class SymbolBlock:
    """One frame of complex symbols, indexed [symbol l, subcarrier k]."""

    values: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise ValueError("symbol block must be a 2-D array")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class NoiseSpec:
    """Complex noise power per received sample, after receive combining."""

    power_w: float
    stream: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.power_w < 0:
            raise ValueError("noise power must be nonnegative")

    @classmethod
    def from_dbm(cls, dbm: float, stream: tuple[int, ...] = ()) -> "NoiseSpec":
        return cls(power_w=dbm_to_watts(dbm), stream=stream)


def generate_frame(wave: WaveformSpec, rng: np.random.Generator) -> SymbolBlock:
    """Draw a frame of unit-modulus symbols, deterministic given the rng state."""
    picks = rng.integers(0, len(_CONSTELLATION), size=(wave.symbols, wave.subcarriers))
    return SymbolBlock(values=_CONSTELLATION[picks], kind=TRANSMITTED)


def remove_data(received: SymbolBlock, transmitted: SymbolBlock) -> SymbolBlock:
    """Divide out the transmitted symbols, leaving the channel response.

    Requires a unit-modulus transmitted frame, which guarantees the noise
    statistics are unchanged by the division.
    """
    if received.values.shape != transmitted.values.shape:
        raise ValueError("received and transmitted blocks differ in shape")
    if transmitted.kind != TRANSMITTED:
        raise ValueError(f"expected a transmitted block, got {transmitted.kind!r}")
    # zero symbols cannot occur with a unit-modulus constellation
    assert float(np.min(np.abs(transmitted.values))) > 1e-6
    return SymbolBlock(values=received.values / transmitted.values, kind=DATA_FREE)
