"""Slot-stepped n-to-1 FIFO multiplexer.

Two emission timings exist. In ``registered`` mode the slot-t departure
depends only on the end-of-(t-1) state, which is what the construction
needs to break its feedback loop through the switch. In ``cut_through``
mode an arrival may transit in the same slot when nothing is buffered.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, TypeVar

T = TypeVar("T")

REGISTERED = "registered"
CUT_THROUGH = "cut_through"
MODES = (REGISTERED, CUT_THROUGH)


class MuxError(RuntimeError):
    """Raised on a link overcommit (more arrivals in a slot than input links)."""


class Mux:
    """FIFO multiplexer with ``fan_in`` input links and buffer ``capacity``.

    Items are opaque; the multiplexer only orders them. Departures leave in
    arrival order (same-slot arrivals in the order the caller supplies
    them). If an insert would exceed the buffer, the latest-appended items
    spill out as losses, reported latest first, never silently dropped.

    ``emit`` and ``insert`` are the two halves of ``step`` so a caller can
    interleave the emissions and insertions of many multiplexers within the
    same slot; ``emit`` followed by ``insert`` equals a registered ``step``.
    """

    __slots__ = ("fan_in", "capacity", "mode", "fifo", "t")

    def __init__(self, fan_in: int, capacity: int, mode: str = REGISTERED) -> None:
        if fan_in < 1:
            raise ValueError(f"fan_in must be >= 1, got {fan_in}")
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.fan_in = fan_in
        self.capacity = capacity
        self.mode = mode
        self.fifo: deque[T] = deque()
        self.t = 0

    def __len__(self) -> int:
        return len(self.fifo)

    @property
    def occupancy(self) -> int:
        return len(self.fifo)

    def packets(self) -> Iterable[T]:
        """Buffered items, oldest first."""
        return iter(self.fifo)

    def emit(self) -> T | None:
        """Pop and return the FIFO head, or None when empty."""
        return self.fifo.popleft() if self.fifo else None

    def insert(self, arrivals: Iterable[T]) -> list[T]:
        """Append arrivals; return overflow losses (latest appended first)."""
        arrivals = list(arrivals)
        if len(arrivals) > self.fan_in:
            raise MuxError(f"{len(arrivals)} arrivals on a {self.fan_in}-input multiplexer")
        fifo = self.fifo
        fifo.extend(arrivals)
        losses = []
        while len(fifo) > self.capacity:
            losses.append(fifo.pop())
        return losses

    def step(self, arrivals: Iterable[T]) -> tuple[T | None, list[T]]:
        """Advance one slot; return (departure, losses)."""
        arrivals = list(arrivals)
        if len(arrivals) > self.fan_in:
            raise MuxError(f"{len(arrivals)} arrivals on a {self.fan_in}-input multiplexer")
        self.t += 1
        if self.mode == REGISTERED:
            departure = self.emit()
        else:
            if self.fifo:
                departure = self.fifo.popleft()
            elif arrivals:
                departure = arrivals.pop(0)
            else:
                departure = None
        return departure, self.insert(arrivals)
