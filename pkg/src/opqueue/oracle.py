"""Behavioral reference priority queue: the gold model for differential tests.

The reference queue is deliberately "magic" memory: packets live in a
priority-ordered structure, departures and losses are pure rank lookups,
and no internal link or buffer layout is modeled.
"""

from __future__ import annotations

from bisect import insort

from .model import Packet


class ReferenceQueue:
    """Ideal priority queue with a fixed buffer size.

    Each slot accepts at most one arrival and a control bit. A departure
    happens iff control = 1 and there is anything to send (buffered or just
    arriving), and it is always the highest-priority live packet. A loss
    happens iff control = 0, the buffer is already full, and a packet
    arrives; the lowest-priority of the B + 1 live packets is dropped.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.t = 0
        self.arrivals = 0
        self.departures = 0
        self.losses = 0
        self._prios: list[int] = []  # ascending priority order
        self._by_prio: dict[int, Packet] = {}

    def __len__(self) -> int:
        return len(self._prios)

    @property
    def occupancy(self) -> int:
        return len(self._prios)

    def buffered(self) -> list[Packet]:
        """Live packets, lowest priority first."""
        return [self._by_prio[p] for p in self._prios]

    def step(self, arrival: Packet | None, control: int) -> tuple[Packet | None, Packet | None]:
        """Advance one slot; return (departure, loss), either possibly None."""
        self.t += 1
        q_prev = len(self._prios)
        if arrival is not None:
            if arrival.priority in self._by_prio:
                raise ValueError(f"duplicate priority {arrival.priority}")
            self.arrivals += 1
            insort(self._prios, arrival.priority)
            self._by_prio[arrival.priority] = arrival

        departure = loss = None
        if control and self._prios:
            departure = self._by_prio.pop(self._prios.pop())
            self.departures += 1
        elif not control and q_prev == self.capacity and arrival is not None:
            loss = self._by_prio.pop(self._prios.pop(0))
            self.losses += 1
        return departure, loss
