"""Trace generation, differential execution, sweeps, and shrinking.

A differential run drives the construction and the reference queue in
lockstep over one trace and compares the (departure id, loss id) pair at
every slot. The verdict is EXACT only when every slot matched and no
invariant was violated; any construction assertion is downgraded to a
DIVERGENT verdict carrying the failing slot and context. Divergence is
compared on packet identity, not counts.

Sweeps fan a grid of (m, mode, pattern, probabilities, seed) cells out to
a worker pool; each worker regenerates its trace from the seed, so results
are identical to serial execution and reports come back in canonical order.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from .model import Packet, queue_capacity
from .oracle import ReferenceQueue
from .pqueue import BEHAVIORAL, ConstructionError, build
from .traceio import TraceEvent

PATTERNS = ("random", "burst", "fill_drain", "adversarial")
EXACT = "EXACT"
DIVERGENT = "DIVERGENT"

# Default probability grid for sweeps.
SWEEP_P_ARRIVAL = (0.1, 0.5, 0.9, 1.0)
SWEEP_P_CONTROL = (0.0, 0.1, 0.5, 0.9, 1.0)

_PRIORITY_SPAN = 2 ** 60


def gen_trace(
    pattern: str,
    slots: int,
    p_arrival: float = 0.5,
    p_control: float = 0.5,
    seed: int = 0,
    capacity: int | None = None,
) -> list[TraceEvent]:
    """Generate a deterministic stimulus trace.

    Patterns:
      random      -- independent Bernoulli arrival and control bits;
      burst       -- alternating arrival-only and control-only runs;
      fill_drain  -- ``capacity`` arrivals then ``capacity`` departures, cycled;
      adversarial -- fill to capacity, then stay pinned there with arrivals
                     alternating above and below every live priority, the
                     control bit Bernoulli(p_control). This forces the
                     full-buffer departure and loss corners every slot.

    Priorities are drawn widely spaced from a 2**61 range so any relative
    order of a new arrival versus the live packets is reachable; ids count
    up from 1 in arrival order. fill_drain and adversarial (and burst, for
    its run lengths) need ``capacity``.
    """
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}")
    if slots < 0:
        raise ValueError(f"slots must be >= 0, got {slots}")
    if not 0.0 <= p_arrival <= 1.0 or not 0.0 <= p_control <= 1.0:
        raise ValueError("probabilities must be within [0, 1]")
    if pattern in ("fill_drain", "adversarial") and (capacity is None or capacity < 1):
        raise ValueError(f"pattern {pattern!r} needs a positive capacity")

    rng = random.Random(seed)
    used: set[int] = set()
    next_id = 1

    def make_arrival(prio: int) -> tuple[int, int]:
        nonlocal next_id
        used.add(prio)
        arrival = (next_id, prio)
        next_id += 1
        return arrival

    def draw() -> tuple[int, int]:
        while True:
            prio = rng.randrange(-_PRIORITY_SPAN, _PRIORITY_SPAN)
            if prio not in used:
                return make_arrival(prio)

    events: list[TraceEvent] = []
    if pattern == "random":
        for t in range(1, slots + 1):
            arrival = draw() if rng.random() < p_arrival else None
            control = 1 if rng.random() < p_control else 0
            events.append(TraceEvent(t, control, arrival))
    elif pattern == "burst":
        span = max(2, capacity or 8)
        arriving = True
        t = 1
        while t <= slots:
            run = rng.randint(1, span)
            for _ in range(run):
                if t > slots:
                    break
                if arriving:
                    events.append(TraceEvent(t, 0, draw()))
                else:
                    events.append(TraceEvent(t, 1, None))
                t += 1
            arriving = not arriving
    elif pattern == "fill_drain":
        filling = True
        left = capacity
        for t in range(1, slots + 1):
            if filling:
                events.append(TraceEvent(t, 0, draw()))
            else:
                events.append(TraceEvent(t, 1, None))
            left -= 1
            if left == 0:
                filling = not filling
                left = capacity
    else:  # adversarial
        occupancy = 0
        hi = -_PRIORITY_SPAN  # running extremes over every priority issued
        lo = _PRIORITY_SPAN
        above = False
        for t in range(1, slots + 1):
            if occupancy < capacity:
                arrival = draw()
                control = 0
                occupancy += 1
            else:
                # Pinned at capacity: control=1 swaps the departing packet for
                # the arrival, control=0 drops one of the B + 1 live packets.
                above = not above
                prio = hi + rng.randint(1, 2 ** 32) if above else lo - rng.randint(1, 2 ** 32)
                arrival = make_arrival(prio)
                control = 1 if rng.random() < p_control else 0
            hi = max(hi, arrival[1])
            lo = min(lo, arrival[1])
            events.append(TraceEvent(t, control, arrival))
    return events


@dataclass(frozen=True, slots=True)
class SweepCell:
    """One differential-run configuration within a sweep."""

    m: int
    mode: str = BEHAVIORAL
    pattern: str = "random"
    p_arrival: float = 0.5
    p_control: float = 0.5
    seed: int = 0
    slots: int = 1000
    mutation: str | None = None


@dataclass(slots=True)
class VerdictReport:
    """Outcome of one differential run plus its invariant tallies."""

    m: int
    mode: str
    mutation: str | None
    pattern: str
    p_arrival: float
    p_control: float
    seed: int
    slots: int
    verdict: str
    first_divergence: int | None
    expected_departure: int | None
    actual_departure: int | None
    expected_loss: int | None
    actual_loss: int | None
    detail: str | None
    max_group_inflow: int
    max_balance_spread: int
    rank_interval_violations: int
    rank_drift_violations: int
    mux_losses: int
    wall_ms: float

    def key(self) -> tuple:
        return (self.m, self.mode, self.mutation or "", self.pattern,
                self.p_arrival, self.p_control, self.seed)


def differential_run(
    m: int,
    mux_kind: str,
    trace: Sequence[TraceEvent],
    mutation: str | None = None,
    cell: SweepCell | None = None,
) -> VerdictReport:
    """Run construction and reference queue in lockstep over one trace."""
    start = time.perf_counter()
    oracle = ReferenceQueue(queue_capacity(m))
    construction = build(m, mux_kind, mutation)

    verdict = EXACT
    first = exp_d = act_d = exp_l = act_l = None
    detail_msg = None
    for i, ev in enumerate(trace):
        if ev.t != i + 1:
            raise ValueError(f"trace slots must be contiguous from 1, got {ev.t} at index {i}")
        pkt = None
        if ev.arrival is not None:
            pkt = Packet(ev.arrival[0], ev.arrival[1], ev.t)
        odep, oloss = oracle.step(pkt, ev.control)
        odep_id = odep.id if odep is not None else None
        oloss_id = oloss.id if oloss is not None else None
        try:
            rep = construction.step(pkt, ev.control, detail=False)
        except ConstructionError as err:
            verdict = DIVERGENT
            first = ev.t
            exp_d, exp_l = odep_id, oloss_id
            detail_msg = str(err)
            break
        if rep.departure != odep_id or rep.loss != oloss_id:
            verdict = DIVERGENT
            first = ev.t
            exp_d, exp_l = odep_id, oloss_id
            act_d, act_l = rep.departure, rep.loss
            detail_msg = "output mismatch"
            break

    wall_ms = (time.perf_counter() - start) * 1000.0
    if cell is None:
        cell = SweepCell(m=m, mode=mux_kind, pattern="custom", p_arrival=0.0,
                         p_control=0.0, seed=0, slots=len(trace), mutation=mutation)
    return VerdictReport(
        m=cell.m,
        mode=cell.mode,
        mutation=cell.mutation,
        pattern=cell.pattern,
        p_arrival=cell.p_arrival,
        p_control=cell.p_control,
        seed=cell.seed,
        slots=cell.slots,
        verdict=verdict,
        first_divergence=first,
        expected_departure=exp_d,
        actual_departure=act_d,
        expected_loss=exp_l,
        actual_loss=act_l,
        detail=detail_msg,
        max_group_inflow=construction.max_inflow,
        max_balance_spread=construction.max_spread,
        rank_interval_violations=construction.interval_violations,
        rank_drift_violations=construction.drift_violations,
        mux_losses=construction.mux_losses,
        wall_ms=wall_ms,
    )


def cell_trace(cell: SweepCell) -> list[TraceEvent]:
    return gen_trace(
        cell.pattern,
        cell.slots,
        p_arrival=cell.p_arrival,
        p_control=cell.p_control,
        seed=cell.seed,
        capacity=queue_capacity(cell.m),
    )


def run_cell(cell: SweepCell) -> VerdictReport:
    """Generate the cell's trace and run it differentially."""
    return differential_run(cell.m, cell.mode, cell_trace(cell), cell.mutation, cell)


def sweep_cells(
    ms: Sequence[int],
    modes: Sequence[str] = (BEHAVIORAL,),
    seeds: int = 2,
    slots: int = 1000,
    patterns: Sequence[str] = PATTERNS,
    p_arrivals: Sequence[float] = SWEEP_P_ARRIVAL,
    p_controls: Sequence[float] = SWEEP_P_CONTROL,
    mutation: str | None = None,
) -> list[SweepCell]:
    """Build the standard sweep grid, canonically ordered.

    Per (m, mode): the random pattern takes the full probability grid, the
    adversarial pattern takes the control grid, and burst and fill_drain
    ignore the probabilities (their cells are stamped 1.0). With the default
    grids that is 27 cells per seed per (m, mode).
    """
    cells = []
    for m in sorted(ms):
        for mode in modes:
            for pattern in patterns:
                if pattern == "random":
                    combos = [(pa, pc) for pa in p_arrivals for pc in p_controls]
                elif pattern == "adversarial":
                    combos = [(1.0, pc) for pc in p_controls]
                else:
                    combos = [(1.0, 1.0)]
                for pa, pc in combos:
                    for seed in range(seeds):
                        cells.append(SweepCell(
                            m=m, mode=mode, pattern=pattern, p_arrival=pa,
                            p_control=pc, seed=seed, slots=slots, mutation=mutation,
                        ))
    cells.sort(key=lambda c: (c.m, c.mode, c.mutation or "", c.pattern,
                              c.p_arrival, c.p_control, c.seed))
    return cells


def run_sweep(cells: Sequence[SweepCell], workers: int = 1) -> list[VerdictReport]:
    """Run every cell; reports come back sorted by cell key regardless of
    execution order, and parallel results equal serial ones."""
    if workers <= 1 or len(cells) <= 1:
        reports = [run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run_cell, cells, chunksize=4))
    reports.sort(key=VerdictReport.key)
    return reports


def _reslot(events: Sequence[TraceEvent]) -> list[TraceEvent]:
    return [replace(ev, t=i + 1) for i, ev in enumerate(events)]


def shrink(
    trace: Sequence[TraceEvent],
    m: int,
    mux_kind: str,
    mutation: str | None = None,
) -> list[TraceEvent]:
    """Reduce a divergent trace to a 1-minimal one with the same verdict.

    The result still diverges, but removing any single remaining event (with
    slots renumbered) no longer does. Deterministic, hence idempotent on
    already-minimal traces.
    """

    def diverges(events: Sequence[TraceEvent]) -> bool:
        return differential_run(m, mux_kind, _reslot(events), mutation).verdict == DIVERGENT

    report = differential_run(m, mux_kind, _reslot(list(trace)), mutation)
    if report.verdict != DIVERGENT:
        raise ValueError("shrink requires a divergent trace")
    # Everything after the first divergence is irrelevant.
    events = list(trace)[: report.first_divergence]

    chunk = len(events) // 2
    while chunk >= 1:
        i = 0
        while i < len(events):
            candidate = events[:i] + events[i + chunk:]
            if candidate and diverges(candidate):
                events = candidate
            else:
                i += chunk
        chunk //= 2
    # Fixpoint pass for strict 1-minimality.
    changed = True
    while changed:
        changed = False
        for i in range(len(events)):
            candidate = events[:i] + events[i + 1:]
            if candidate and diverges(candidate):
                events = candidate
                changed = True
                break
    return _reslot(events)


CSV_HEADER = ("m,mode,mutation,pattern,p_arrival,p_control,seed,slots,verdict,"
              "first_divergence,max_inflow,max_spread,interval_violations,"
              "drift_violations,mux_losses,wall_ms")


def report_csv(reports: Sequence[VerdictReport]) -> str:
    rows = [CSV_HEADER]
    for r in reports:
        rows.append(
            f"{r.m},{r.mode},{r.mutation or ''},{r.pattern},{r.p_arrival},{r.p_control},"
            f"{r.seed},{r.slots},{r.verdict},"
            f"{'' if r.first_divergence is None else r.first_divergence},"
            f"{r.max_group_inflow},{r.max_balance_spread},{r.rank_interval_violations},"
            f"{r.rank_drift_violations},{r.mux_losses},{r.wall_ms:.1f}"
        )
    return "\n".join(rows)


def report_lines(reports: Sequence[VerdictReport]) -> str:
    """Line-oriented human-readable report with a trailing summary."""
    lines = []
    exact = 0
    for r in reports:
        mark = f" first_divergence={r.first_divergence} [{r.detail}]" if r.verdict != EXACT else ""
        mut = f" mutation={r.mutation}" if r.mutation else ""
        lines.append(
            f"m={r.m} mode={r.mode}{mut} pattern={r.pattern} pa={r.p_arrival} "
            f"pc={r.p_control} seed={r.seed} slots={r.slots} -> {r.verdict}"
            f" inflow<={r.max_group_inflow} spread<={r.max_balance_spread}{mark}"
        )
        exact += r.verdict == EXACT
    lines.append(f"# {exact}/{len(reports)} cells EXACT")
    return "\n".join(lines)
