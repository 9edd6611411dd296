"""Core domain types and sizing rules shared by every other module.

Everything here is a pure function of the single size parameter ``m``:
the system has ``2m - 1`` groups of multiplexers, holds up to
``3 * 2**(m-1) - 2`` packets, and routes each packet by its current
priority rank into the group whose rank interval contains that rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True, slots=True)
class Packet:
    """A fixed-size packet flowing through the system.

    ``priority`` is a 64-bit signed integer, unique among all live packets;
    a larger value means more urgent. ``id`` is an opaque identifier that
    stays stable from arrival to departure or loss.
    """

    id: int
    priority: int
    birth_slot: int = 0


@dataclass(frozen=True, slots=True)
class RankInterval:
    """Inclusive interval of priority ranks (rank 1 = highest priority)."""

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if not 1 <= self.lo <= self.hi:
            raise ValueError(f"invalid rank interval [{self.lo}, {self.hi}]")

    def __contains__(self, rank: int) -> bool:
        return self.lo <= rank <= self.hi

    def __len__(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True, slots=True)
class SystemParams:
    """Derived sizing of the whole construction for a given ``m``."""

    m: int
    group_count: int
    capacity: int
    intervals: tuple[RankInterval, ...]
    group_buffers: tuple[int, ...]


def queue_capacity(m: int) -> int:
    """Buffer size of the emulated priority queue: 3 * 2**(m-1) - 2."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return 3 * 2 ** (m - 1) - 2


def rank_intervals(m: int) -> tuple[RankInterval, ...]:
    """The 2m - 1 consecutive rank intervals, one per multiplexer group.

    Group j covers ranks [2**(j-1), 2**j - 1] for j <= m; the groups above
    m mirror the sizes of the groups below, so the intervals partition
    {1, ..., queue_capacity(m)}.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    top = 3 * 2 ** (m - 1)
    out = [RankInterval(2 ** (j - 1), 2 ** j - 1) for j in range(1, m + 1)]
    for j in range(m + 1, 2 * m):
        out.append(RankInterval(top - 2 ** (2 * m - j), top - 2 ** (2 * m - j - 1) - 1))
    return tuple(out)


def group_buffer_size(g: int, m: int) -> int:
    """Per-multiplexer buffer size of group ``g`` (1-based).

    Group 1 has buffer 1, group j has 2**(j-2) for 2 <= j <= m, and group
    2m - g is sized like group g.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not 1 <= g <= 2 * m - 1:
        raise ValueError(f"group index {g} out of range 1..{2 * m - 1}")
    j = min(g, 2 * m - g)
    return 1 if j == 1 else 2 ** (j - 2)


def system_params(m: int) -> SystemParams:
    """Bundle capacity, intervals, and buffer sizes for ``m``."""
    intervals = rank_intervals(m)
    buffers = tuple(group_buffer_size(g, m) for g in range(1, 2 * m))
    return SystemParams(
        m=m,
        group_count=2 * m - 1,
        capacity=queue_capacity(m),
        intervals=intervals,
        group_buffers=buffers,
    )


def ranks(population: Iterable[Packet]) -> dict[int, int]:
    """Map each packet id to its priority rank (1 = highest priority).

    All priorities must be distinct; a duplicate is a hard fault.
    """
    packets = list(population)
    packets.sort(key=lambda p: p.priority, reverse=True)
    out: dict[int, int] = {}
    prev = None
    for r, pkt in enumerate(packets, start=1):
        if prev is not None and pkt.priority == prev:
            raise ValueError(f"duplicate priority {pkt.priority}")
        prev = pkt.priority
        out[pkt.id] = r
    return out
