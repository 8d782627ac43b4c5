"""Counter-derived random substreams for order-independent simulation.

Every random draw in a run is tied to an integer path (seed, stage, slot,
receiver, ...) rather than to a shared stateful generator, so results are
identical regardless of execution order or worker count.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


class StreamFactory:
    """Derives independent generators from an integer path."""

    __slots__ = ("_root",)

    def __init__(self, *path: int) -> None:
        self._root: tuple[int, ...] = tuple(int(p) & _MASK for p in path)

    @property
    def root(self) -> tuple[int, ...]:
        return self._root

    def child(self, *path: int) -> "StreamFactory":
        return StreamFactory(*self._root, *path)

    def generator(self, *path: int) -> np.random.Generator:
        full = self._root + tuple(int(p) & _MASK for p in path)
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(full)))

    def __repr__(self) -> str:  # pragma: no cover
        return f"StreamFactory{self._root}"


def substream(*path: int) -> np.random.Generator:
    """One-shot generator for an integer path."""
    return StreamFactory(*path).generator()
