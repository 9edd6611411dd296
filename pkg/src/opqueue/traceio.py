"""Line-oriented trace files: one slot per line, diff-able and replayable.

Format, one event per line::

    <t> <c> <a> [<id> <priority>]

where ``c`` is the control bit, ``a`` is 1 iff a packet arrives this slot,
and the id/priority pair is present exactly when ``a`` is 1. Lines starting
with ``#`` are comments. Slots must be contiguous from 1.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True, slots=True)
class TraceEvent:
    """External stimulus for one slot: optional arrival plus control bit."""

    t: int
    control: int
    arrival: tuple[int, int] | None = None  # (packet id, priority)


class TraceFormatError(ValueError):
    """Malformed trace input; carries the offending 1-based line number."""

    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


def format_event(ev: TraceEvent) -> str:
    if ev.arrival is None:
        return f"{ev.t} {ev.control} 0"
    return f"{ev.t} {ev.control} 1 {ev.arrival[0]} {ev.arrival[1]}"


def parse_trace(lines: Iterable[str]) -> list[TraceEvent]:
    """Parse trace lines, validating slot contiguity and priority uniqueness."""
    events: list[TraceEvent] = []
    seen_priorities: set[int] = set()
    expected_t = 1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) not in (3, 5):
            raise TraceFormatError(lineno, f"expected 3 or 5 fields, got {len(fields)}")
        try:
            t, control, has_arrival = (int(fields[0]), int(fields[1]), int(fields[2]))
        except ValueError:
            raise TraceFormatError(lineno, "t, c, a must be integers") from None
        if t != expected_t:
            raise TraceFormatError(lineno, f"slot {t} out of order, expected {expected_t}")
        if control not in (0, 1):
            raise TraceFormatError(lineno, f"control bit must be 0 or 1, got {control}")
        if has_arrival not in (0, 1):
            raise TraceFormatError(lineno, f"arrival bit must be 0 or 1, got {has_arrival}")
        if has_arrival != (len(fields) == 5):
            raise TraceFormatError(lineno, "id and priority must be present iff a=1")
        arrival = None
        if has_arrival:
            try:
                arrival = (int(fields[3]), int(fields[4]))
            except ValueError:
                raise TraceFormatError(lineno, "id and priority must be integers") from None
            if arrival[1] in seen_priorities:
                raise TraceFormatError(lineno, f"duplicate priority {arrival[1]}")
            seen_priorities.add(arrival[1])
        events.append(TraceEvent(t, control, arrival))
        expected_t += 1
    return events


def read_trace(path: str | os.PathLike) -> list[TraceEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh)


def dump_trace(events: Iterable[TraceEvent]) -> str:
    return "".join(format_event(ev) + "\n" for ev in events)


def write_trace(events: Iterable[TraceEvent], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_trace(events))
