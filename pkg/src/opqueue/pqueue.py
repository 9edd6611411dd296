"""The multiplexer-group construction: 2m - 1 groups of four 4-to-1 FIFO
multiplexers behind one logical crossbar, stepped slot by slot.

Each slot runs a fixed phase sequence:

1. every non-empty multiplexer emits its FIFO head onto the switch
   (registered timing: emissions depend only on end-of-previous-slot state,
   which breaks the feedback loop through the switch);
2. the external arrival, if any, joins the switch set;
3. if control = 1 and anything is live, the top-ranked packet departs --
   it must be physically on the switch;
4. if control = 0, the system was full, and a packet arrived, the
   bottom-ranked packet is dropped -- it too must be on the switch;
5. the survivors on the switch are re-ranked (ranks are computed after the
   departure and loss are removed) and each is routed to the group whose
   rank interval contains its rank;
6. within a group, packets go one at a time to the least-occupied
   multiplexer (ties to the lowest index), at most four per multiplexer
   per slot;
7. every end-of-slot invariant is audited: no multiplexer loss, per-group
   inflow and source locality, occupancy spread, group capacity, and the
   per-packet rank-interval and rank-drift bounds.

Any violated invariant aborts the step with a replayable state dump; the
harness downgrades such aborts to DIVERGENT verdicts.

``build`` can also plant one of four deliberate faults (see ``MUTATIONS``)
so the verification harness can prove it detects broken variants. Faults
perturb behavior only; the audits always check the true invariants.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass
from typing import Sequence

from .compose import ComposedMux
from .model import Packet, SystemParams, system_params
from .mux import Mux, REGISTERED
from .traceio import TraceEvent

BEHAVIORAL = "behavioral"
COMPOSED = "composed"
MUX_KINDS = (BEHAVIORAL, COMPOSED)

#: Fault injections used by the harness's mutation-sensitivity checks.
MUTATIONS = (
    "shifted_interval",    # move one routing-interval boundary by one rank
    "no_balancing",        # fill multiplexer 0 first instead of balancing
    "pre_removal_ranking", # route by ranks taken before departure/loss removal
    "undersized_buffers",  # every buffer halved (floor 1)
)

EXTERNAL = 0  # source tag for the external input link
MUXES_PER_GROUP = 4
MUX_FAN_IN = 4
GROUP_FAN_IN = MUXES_PER_GROUP * MUX_FAN_IN


class ConstructionError(RuntimeError):
    """An invariant of the construction failed; carries full slot context."""

    def __init__(self, kind: str, slot: int, message: str, context: dict) -> None:
        super().__init__(f"slot {slot}: {kind}: {message}")
        self.kind = kind
        self.slot = slot
        self.context = context


@dataclass(slots=True)
class SlotReport:
    """Per-slot outputs plus routing diagnostics.

    ``group_sources`` and ``mux_occupancies`` are filled only when the step
    runs with ``detail=True``; source tag 0 means the external input link.
    """

    t: int
    departure: int | None
    loss: int | None
    group_inflows: tuple[int, ...]
    max_inflow: int
    group_sources: tuple[tuple[int, ...], ...] | None = None
    mux_occupancies: tuple[tuple[int, ...], ...] | None = None


class Construction:
    """Slot-stepped state machine for one (m, mux_kind, mutation) instance."""

    def __init__(self, m: int, mux_kind: str = BEHAVIORAL, mutation: str | None = None) -> None:
        if mux_kind not in MUX_KINDS:
            raise ValueError(f"unknown mux kind {mux_kind!r}")
        if mutation is not None and mutation not in MUTATIONS:
            raise ValueError(f"unknown mutation {mutation!r}")
        params = system_params(m)
        if mutation == "shifted_interval" and m < 2:
            raise ValueError("shifted_interval needs at least two intervals (m >= 2)")

        self.params: SystemParams = params
        self.mux_kind = mux_kind
        self.mutation = mutation
        self.t = 0

        gc = params.group_count
        cap = params.capacity
        # Routing table: rank -> 1-based group index. A planted interval
        # shift perturbs only this table, never the audited invariants.
        route_lo = [iv.lo for iv in params.intervals]
        route_hi = [iv.hi for iv in params.intervals]
        if mutation == "shifted_interval":
            route_hi[m - 1] -= 1
            route_lo[m] -= 1
        table = [0] * (cap + 1)
        for g in range(gc):
            for r in range(route_lo[g], route_hi[g] + 1):
                table[r] = g + 1
        self._group_of_rank = table

        # Audited per-group rank window: interval widened by buffer - 1 on
        # both sides, since a buffered packet's rank can drift one per slot
        # for at most buffer - 1 slots after entering with an in-interval rank.
        self._lo_allow = [0] + [
            params.intervals[g].lo - (params.group_buffers[g] - 1) for g in range(gc)
        ]
        self._hi_allow = [0] + [
            params.intervals[g].hi + (params.group_buffers[g] - 1) for g in range(gc)
        ]
        self._group_cap = [0] + [
            self._hi_allow[g + 1] - self._lo_allow[g + 1] + 1 for g in range(gc)
        ]

        self._composed = mux_kind == COMPOSED
        self._balanced = mutation != "no_balancing"
        self._pre_removal = mutation == "pre_removal_ranking"
        self._groups: list[list] = []
        for g in range(gc):
            size = params.group_buffers[g]
            if mutation == "undersized_buffers":
                size = max(1, size // 2)
            if self._composed:
                units = [ComposedMux(size) for _ in range(MUXES_PER_GROUP)]
            else:
                units = [Mux(MUX_FAN_IN, size, REGISTERED) for _ in range(MUXES_PER_GROUP)]
            self._groups.append(units)
        # Behavioral fast path: the step loop drives the multiplexer FIFOs
        # directly (same emit/insert semantics as the Mux methods).
        if not self._composed:
            self._group_fifos = [[u.fifo for u in units] for units in self._groups]
            self._flat_fifos = [
                (g + 1, fifo) for g in range(gc) for fifo in self._group_fifos[g]
            ]
            self._cap_each = [units[0].capacity for units in self._groups]

        self._pop: list[int] = []        # live priorities, ascending
        self._id_of: dict[int, int] = {} # priority -> packet id
        self._group_of: dict[int, int] = {}
        self._prev_rank: dict[int, int] = {}

        # Running diagnostics and violation tallies.
        self.max_inflow = 0
        self.max_spread = 0
        self.mux_losses = 0
        self.interval_violations = 0
        self.drift_violations = 0

    @property
    def occupancy(self) -> int:
        return len(self._pop)

    def snapshot(self) -> dict:
        """Replayable state dump, attached to every ConstructionError."""
        groups = []
        for units in self._groups:
            if self._composed:
                groups.append([list(u.packets()) for u in units])
            else:
                groups.append([list(u.fifo) for u in units])
        return {
            "t": self.t,
            "m": self.params.m,
            "mux_kind": self.mux_kind,
            "mutation": self.mutation,
            "occupancy": len(self._pop),
            "live_priorities": list(self._pop),
            "packet_ids": dict(self._id_of),
            "groups": groups,
        }

    def _fail(self, kind: str, message: str) -> None:
        raise ConstructionError(kind, self.t, message, self.snapshot())

    def step(self, arrival: Packet | None, control: int, detail: bool = True) -> SlotReport:
        """Advance one slot; return its SlotReport or raise ConstructionError."""
        self.t = t = self.t + 1
        pop = self._pop
        id_of = self._id_of
        group_of = self._group_of
        groups = self._groups
        composed = self._composed
        cap = self.params.capacity
        gc = self.params.group_count
        q_prev = len(pop)

        # Phase 1: registered emission onto the switch.
        switch: dict[int, int] = {}  # priority -> source group (EXTERNAL = input link)
        if composed:
            for g, units in enumerate(groups, start=1):
                for u in units:
                    prio = u.emit()
                    if prio is not None:
                        switch[prio] = g
        else:
            for g, fifo in self._flat_fifos:
                if fifo:
                    switch[fifo.popleft()] = g

        # Phase 2: the arrival joins the switch set.
        if arrival is not None:
            prio = arrival.priority
            if prio in id_of:
                raise ValueError(f"duplicate priority {prio}")
            id_of[prio] = arrival.id
            insort(pop, prio)
            switch[prio] = EXTERNAL

        stale_rank = None
        if self._pre_removal:
            n = len(pop)
            stale_rank = {p: n - i for i, p in enumerate(pop)}

        # Phase 3: departure, always the top-ranked live packet.
        departure_id = None
        if control and pop:
            top = pop[-1]
            if top not in switch:
                self._fail(
                    "departure_unreachable",
                    f"top-ranked packet {id_of[top]} is buried in a buffer",
                )
            del pop[-1]
            del switch[top]
            departure_id = id_of.pop(top)
            group_of.pop(top, None)
            self._prev_rank.pop(top, None)

        # Phase 4: loss, only when full with no departure request.
        loss_id = None
        if not control and q_prev == cap and arrival is not None:
            bottom = pop[0]
            if bottom not in switch:
                self._fail(
                    "loss_unreachable",
                    f"bottom-ranked packet {id_of[bottom]} is buried in a buffer",
                )
            del pop[0]
            del switch[bottom]
            loss_id = id_of.pop(bottom)
            group_of.pop(bottom, None)
            self._prev_rank.pop(bottom, None)

        n = len(pop)
        if n > cap:
            self._fail("occupancy_exceeded", f"{n} live packets with capacity {cap}")

        # Phase 5: rank the survivors and route the switch set.
        rank_of = stale_rank
        if rank_of is None:
            rank_of = {p: n - i for i, p in enumerate(pop)}
        table = self._group_of_rank
        inflows = [0] * (gc + 1)
        buckets: list[list[int] | None] = [None] * (gc + 1)
        sources: list[set[int]] | None = None
        if detail:
            sources = [set() for _ in range(gc + 1)]
        for p, src in switch.items():
            r = rank_of[p]
            if not 1 <= r <= cap:
                self._fail("unroutable_rank", f"packet {id_of[p]} has routing rank {r}")
            g = table[r]
            if src != EXTERNAL and not g - 1 <= src <= g + 1:
                self._fail(
                    "locality",
                    f"packet {id_of[p]} jumped from group {src} to group {g}",
                )
            inflows[g] += 1
            bucket = buckets[g]
            if bucket is None:
                buckets[g] = [p]
            else:
                bucket.append(p)
            group_of[p] = g
            if sources is not None:
                sources[g].add(src)

        max_inflow = self.max_inflow
        for g in range(1, gc + 1):
            k = inflows[g]
            if k > GROUP_FAN_IN:
                self._fail("collision", f"{k} packets entering group {g} in one slot")
            if k > max_inflow:
                max_inflow = k
        self.max_inflow = max_inflow

        # Phase 6: balance each group's inflow across its four multiplexers.
        balanced = self._balanced
        for g in range(1, gc + 1):
            bucket = buckets[g]
            if bucket is None:
                continue
            if composed:
                units = groups[g - 1]
                occ = [u.occupancy for u in units]
                fifos = cap_each = None
            else:
                fifos = self._group_fifos[g - 1]
                cap_each = self._cap_each[g - 1]
                occ = [len(fifos[0]), len(fifos[1]), len(fifos[2]), len(fifos[3])]
            cnt = [0, 0, 0, 0]
            assigned: list[list[int] | None] = [None, None, None, None]
            for p in bucket:
                if balanced:
                    best = -1
                    best_occ = 0
                    for k in range(MUXES_PER_GROUP):
                        if cnt[k] < MUX_FAN_IN and (best < 0 or occ[k] < best_occ):
                            best = k
                            best_occ = occ[k]
                else:
                    best = -1
                    for k in range(MUXES_PER_GROUP):
                        if cnt[k] < MUX_FAN_IN:
                            best = k
                            break
                if best < 0:
                    self._fail("collision", f"more than {GROUP_FAN_IN} assignments in group {g}")
                occ[best] += 1
                cnt[best] += 1
                if composed:
                    if assigned[best] is None:
                        assigned[best] = [p]
                    else:
                        assigned[best].append(p)
                else:
                    fifo = fifos[best]
                    fifo.append(p)
                    if len(fifo) > cap_each:
                        self.mux_losses += 1
                        dropped = fifo.pop()
                        self._fail(
                            "mux_loss",
                            f"multiplexer {best} of group {g} dropped {id_of[dropped]}",
                        )
            if composed:
                units = groups[g - 1]
                for k in range(MUXES_PER_GROUP):
                    items = assigned[k]
                    if items is None:
                        continue
                    losses = units[k].insert(items)
                    if losses:
                        self.mux_losses += len(losses)
                        self._fail(
                            "mux_loss",
                            f"multiplexer {k} of group {g} dropped "
                            f"{[id_of[p] for p in losses]}",
                        )

        # Phase 7: end-of-slot audit.
        if composed:
            # A composed unit's back stage can spill during emission; units
            # that received no assignment have not surfaced theirs yet.
            for g in range(1, gc + 1):
                for k, u in enumerate(groups[g - 1]):
                    spilled = u.insert(())
                    if spilled:
                        self.mux_losses += len(spilled)
                        self._fail(
                            "mux_loss",
                            f"multiplexer {k} of group {g} dropped "
                            f"{[id_of[p] for p in spilled]}",
                        )

        mux_occupancies = None
        if detail:
            mux_occupancies = []
        max_spread = self.max_spread
        group_cap = self._group_cap
        for g in range(1, gc + 1):
            if composed:
                occ = [u.occupancy for u in groups[g - 1]]
            else:
                fifos = self._group_fifos[g - 1]
                occ = [len(fifos[0]), len(fifos[1]), len(fifos[2]), len(fifos[3])]
            spread = max(occ) - min(occ)
            if spread > max_spread:
                max_spread = spread
            if spread > 1:
                self.max_spread = max_spread
                self._fail("balance_spread", f"group {g} occupancies {occ} differ by {spread}")
            total = occ[0] + occ[1] + occ[2] + occ[3]
            if total > group_cap[g]:
                self._fail(
                    "group_capacity",
                    f"group {g} holds {total} packets, bound {group_cap[g]}",
                )
            if mux_occupancies is not None:
                mux_occupancies.append(tuple(occ))
        self.max_spread = max_spread

        lo_allow = self._lo_allow
        hi_allow = self._hi_allow
        prev_rank = self._prev_rank
        new_prev: dict[int, int] = {}
        i = n
        for p in pop:  # ascending priority, so rank runs n..1
            r = i
            i -= 1
            g = group_of[p]
            if not lo_allow[g] <= r <= hi_allow[g]:
                self.interval_violations += 1
                self._fail(
                    "rank_interval",
                    f"packet {id_of[p]} in group {g} has rank {r}, "
                    f"allowed [{lo_allow[g]}, {hi_allow[g]}]",
                )
            o = prev_rank.get(p)
            if o is not None and not -1 <= r - o <= 1:
                self.drift_violations += 1
                self._fail("rank_drift", f"packet {id_of[p]} rank moved {o} -> {r}")
            new_prev[p] = r
        self._prev_rank = new_prev

        return SlotReport(
            t=t,
            departure=departure_id,
            loss=loss_id,
            group_inflows=tuple(inflows[1:]),
            max_inflow=max_inflow,
            group_sources=(
                tuple(tuple(sorted(s)) for s in sources[1:]) if sources is not None else None
            ),
            mux_occupancies=tuple(mux_occupancies) if mux_occupancies is not None else None,
        )

    def run_trace(self, events: Sequence[TraceEvent], detail: bool = True) -> list[SlotReport]:
        """Fold ``step`` over a trace; propagates any step assertion."""
        reports = []
        for i, ev in enumerate(events):
            if ev.t != i + 1:
                raise ValueError(f"trace slots must be contiguous from 1, got {ev.t} at index {i}")
            pkt = None
            if ev.arrival is not None:
                pkt = Packet(ev.arrival[0], ev.arrival[1], ev.t)
            reports.append(self.step(pkt, ev.control, detail=detail))
        return reports


def build(m: int, mux_kind: str = BEHAVIORAL, mutation: str | None = None) -> Construction:
    """Create an empty construction for ``m`` (2m - 1 groups of four units)."""
    return Construction(m, mux_kind, mutation)
