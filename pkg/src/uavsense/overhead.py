"""Closed-form uplink bit accounting for the fusion-center reports.

Per-UAV payloads: a local RCS map is one 32-bit float per cell (32P bits),
raw statistics are one complex per cell (64P bits), a position estimate is
two floats (64 bits), and a compressive-sensing upload ships every raw
sample (64 * Ms * Nc * N * P bits). The fusion center receives U uploads.
"""

from __future__ import annotations

from dataclasses import dataclass

METHOD_CS = "cs"
METHOD_MIMORE = "mimore"
METHOD_MURE = "mure"
METHOD_MUPE = "mupe"

METHODS = (METHOD_CS, METHOD_MIMORE, METHOD_MURE, METHOD_MUPE)


@dataclass(frozen=True)
class OverheadReport:
    method: str
    tx_bits: int
    rx_bits: int
    cells: int
    uavs: int
    symbols: int
    subcarriers: int
    elements: int


def compute_overhead(
    method: str,
    cells: int,
    uavs: int,
    symbols: int,
    subcarriers: int,
    elements: int,
    own_cells: int = 0,
) -> OverheadReport:
    """Bits sent by one UAV and received by the fusion center.

    ``own_cells`` optionally excludes the reporter's own illuminated cells
    from the per-cell payloads (position reports are unaffected).
    """
    if min(cells, uavs, symbols, subcarriers, elements) < 1:
        raise ValueError("all counts must be positive")
    if not 0 <= own_cells < cells:
        raise ValueError("own_cells must be in [0, cells)")
    reportable = cells - own_cells
    if method == METHOD_MURE:
        tx = 32 * reportable
    elif method == METHOD_MIMORE:
        tx = 64 * reportable
    elif method == METHOD_MUPE:
        tx = 64
    elif method == METHOD_CS:
        tx = 64 * symbols * subcarriers * elements * reportable
    else:
        raise ValueError(f"unknown method: {method!r}")
    return OverheadReport(
        method=method,
        tx_bits=tx,
        rx_bits=uavs * tx,
        cells=cells,
        uavs=uavs,
        symbols=symbols,
        subcarriers=subcarriers,
        elements=elements,
    )


def overhead_table(
    cells: int,
    uavs: int,
    symbols: int,
    subcarriers: int,
    elements: int,
    own_cells: int = 0,
) -> str:
    """Four-method comparison table, exact bits plus rounded kilobits."""
    reports = [
        compute_overhead(m, cells, uavs, symbols, subcarriers, elements, own_cells)
        for m in METHODS
    ]
    header = (
        f"overhead per UAV report (P={cells}, U={uavs}, Ms={symbols}, "
        f"Nc={subcarriers}, N={elements}"
        + (f", own cells excluded={own_cells}" if own_cells else "")
        + ")"
    )
    lines = [header, ""]
    lines.append(f"{'method':<8} {'tx [bits]':>16} {'tx [Kbits]':>12} "
                 f"{'rx [bits]':>18} {'rx [Kbits]':>12}")
    for r in reports:
        lines.append(
            f"{r.method:<8} {r.tx_bits:>16,} {r.tx_bits / 1000:>12.3f} "
            f"{r.rx_bits:>18,} {r.rx_bits / 1000:>12.3f}"
        )
    lines.append("")
    lines.append("counts are exact closed-form bit totals; kilobit columns are rounded.")
    return "\n".join(lines)
