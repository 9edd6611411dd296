"""Closed-form hardware tallies for the construction.

One sheet carries both views: the per-component schedule (main crossbar,
the small switches inside every multiplexer, the fiber delay lines) and
the single-switch totals obtained by merging every switch into one. The
counts are reported as given, not re-derived from per-multiplexer sizing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import queue_capacity


@dataclass(frozen=True)
class CostSheet:
    """Hardware tally for one ``m``.

    ``small_switches`` maps switch size k to the number of k-by-k switches
    used inside the multiplexers. ``combined_fiber_count`` always equals
    ``fiber_count``: merging switches never changes the fiber schedule.
    """

    m: int
    main_switch_size: int
    small_switches: dict[int, int]
    fiber_count: int
    combined_switch_size: int
    combined_fiber_count: int


def _sheet(m: int) -> CostSheet:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    small: dict[int, int] = {}
    small[3] = small.get(3, 0) + 48
    for j in range(3, m):
        small[j + 1] = small.get(j + 1, 0) + 24
    small[m + 1] = small.get(m + 1, 0) + 12
    fibers = 12 * (m * m - 2 * m + 3)
    return CostSheet(
        m=m,
        main_switch_size=32 * m - 14,
        small_switches=small,
        fiber_count=fibers,
        combined_switch_size=12 * m * m + 56 * m - 2,
        combined_fiber_count=fibers,
    )


def component_cost(m: int) -> CostSheet:
    """Cost with one main crossbar plus the per-multiplexer small switches.

    For m in {1, 2} the middle size range is empty and same-size counts
    merge (e.g. m = 2 uses sixty 3x3 switches in total).
    """
    return _sheet(m)


def combined_cost(m: int) -> CostSheet:
    """Cost after merging every switch into one crossbar."""
    return _sheet(m)


def scaling_ratio(m: int) -> float:
    """log2(buffer)**2 over the combined switch size; flat in the limit."""
    sheet = _sheet(m)
    return math.log2(queue_capacity(m)) ** 2 / sheet.combined_switch_size


def cost_table(sheet: CostSheet) -> str:
    """Human-readable table of one cost sheet."""
    lines = [
        f"m                      {sheet.m}",
        f"buffer                 {queue_capacity(sheet.m)}",
        f"main switch            {sheet.main_switch_size}x{sheet.main_switch_size}",
    ]
    for size in sorted(sheet.small_switches):
        lines.append(f"small switches {size}x{size}    {sheet.small_switches[size]:>4}")
    lines.append(f"fiber delay lines      {sheet.fiber_count}")
    lines.append(f"combined switch        {sheet.combined_switch_size}x{sheet.combined_switch_size}")
    lines.append(f"combined fibers        {sheet.combined_fiber_count}")
    return "\n".join(lines)


CSV_HEADER = "m,main_switch,small_switch_size,small_switch_count,fibers,combined_switch,combined_fibers"


def cost_csv(sheet: CostSheet) -> str:
    """CSV rows, one per small-switch size."""
    rows = [CSV_HEADER]
    for size in sorted(sheet.small_switches):
        rows.append(
            f"{sheet.m},{sheet.main_switch_size},{size},{sheet.small_switches[size]},"
            f"{sheet.fiber_count},{sheet.combined_switch_size},{sheet.combined_fiber_count}"
        )
    return "\n".join(rows)
