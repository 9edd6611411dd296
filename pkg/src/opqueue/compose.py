"""4-to-1 multiplexer assembled from three 2-to-1 FIFO multiplexers.

Two front stages each take two of the four external inputs and feed the
single back stage. All three stages share one buffer size. The fronts run
registered and the back runs cut-through, so a packet buffered in a front
stage at the end of slot t-1 can leave the whole unit at slot t; the
unit's external latency and non-idling behavior then match a registered
behavioral 4-to-1, which lets the construction swap one for the other.

Global FIFO order across the two branches is not guaranteed by design;
whether the substitution still emulates exactly is settled empirically by
the harness, never assumed.
"""

from __future__ import annotations

from itertools import chain
from typing import Iterable, TypeVar

from .mux import CUT_THROUGH, REGISTERED, Mux, MuxError

T = TypeVar("T")


class ComposedMux:
    """Drop-in unit with the same emit/insert protocol as a 4-input Mux."""

    __slots__ = ("capacity", "front_a", "front_b", "back", "t", "_spill")

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self.front_a = Mux(2, capacity, REGISTERED)
        self.front_b = Mux(2, capacity, REGISTERED)
        self.back = Mux(2, capacity, CUT_THROUGH)
        self.t = 0
        self._spill: list[T] = []  # back-stage overflow awaiting report

    def __len__(self) -> int:
        return self.occupancy

    @property
    def occupancy(self) -> int:
        return len(self.front_a.fifo) + len(self.front_b.fifo) + len(self.back.fifo)

    def packets(self) -> Iterable[T]:
        """Buffered items across all three stages (per-stage FIFO order)."""
        return chain(self.front_a.fifo, self.front_b.fifo, self.back.fifo)

    def emit(self) -> T | None:
        """Run the internal pipeline for one slot; return the unit's departure.

        Both fronts emit their heads into the back stage, which forwards its
        own head if it has one, else the first front emission cut-through.
        Anything the back stage cannot hold spills into the losses returned
        by the next ``insert`` call.
        """
        inflow = []
        head = self.front_a.emit()
        if head is not None:
            inflow.append(head)
        head = self.front_b.emit()
        if head is not None:
            inflow.append(head)
        if self.back.fifo:
            departure = self.back.fifo.popleft()
        elif inflow:
            departure = inflow.pop(0)
        else:
            departure = None
        self._spill.extend(self.back.insert(inflow))
        return departure

    def insert(self, arrivals: Iterable[T]) -> list[T]:
        """Split arrivals between the fronts, least occupied first (tie: front_a)."""
        arrivals = list(arrivals)
        if len(arrivals) > 4:
            raise MuxError(f"{len(arrivals)} arrivals on a 4-input composed multiplexer")
        losses = self._spill
        self._spill = []
        for item in arrivals:
            if len(self.front_a.fifo) <= len(self.front_b.fifo):
                losses.extend(self.front_a.insert((item,)))
            else:
                losses.extend(self.front_b.insert((item,)))
        return losses

    def step(self, arrivals: Iterable[T]) -> tuple[T | None, list[T]]:
        """Advance one slot; return (departure, losses)."""
        self.t += 1
        departure = self.emit()
        return departure, self.insert(arrivals)
