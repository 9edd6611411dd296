import dataclasses

import pytest

from opqueue.harness import (
    DIVERGENT,
    EXACT,
    SweepCell,
    cell_trace,
    differential_run,
    gen_trace,
    report_csv,
    report_lines,
    run_cell,
    run_sweep,
    shrink,
    sweep_cells,
    _reslot,
)
from opqueue.model import Packet, queue_capacity
from opqueue.oracle import ReferenceQueue
from opqueue.traceio import dump_trace


def test_same_seed_gives_byte_identical_traces():
    a = gen_trace("random", 500, 0.6, 0.4, seed=3)
    b = gen_trace("random", 500, 0.6, 0.4, seed=3)
    assert dump_trace(a) == dump_trace(b)
    c = gen_trace("random", 500, 0.6, 0.4, seed=4)
    assert dump_trace(a) != dump_trace(c)


def test_zero_arrival_probability_means_all_control():
    events = gen_trace("random", 200, 0.0, 1.0, seed=0)
    assert all(ev.arrival is None for ev in events)
    assert all(ev.control == 1 for ev in events)


def test_fill_drain_structure_m3():
    cap = queue_capacity(3)
    events = gen_trace("fill_drain", 2 * cap, seed=0, capacity=cap)
    assert len(events) == 20
    assert all(ev.arrival is not None and ev.control == 0 for ev in events[:cap])
    assert all(ev.arrival is None and ev.control == 1 for ev in events[cap:])


def test_burst_alternates_pure_runs():
    events = gen_trace("burst", 400, seed=5, capacity=10)
    for ev in events:
        assert (ev.arrival is not None and ev.control == 0) or (
            ev.arrival is None and ev.control == 1
        )
    kinds = [ev.arrival is not None for ev in events]
    assert True in kinds and False in kinds


def test_adversarial_pins_occupancy_at_capacity():
    cap = queue_capacity(3)
    events = gen_trace("adversarial", 300, p_control=0.5, seed=2, capacity=cap)
    q = ReferenceQueue(cap)
    for ev in events:
        pkt = Packet(ev.arrival[0], ev.arrival[1], ev.t) if ev.arrival else None
        q.step(pkt, ev.control)
        if ev.t >= cap:
            assert q.occupancy == cap
    # both corner kinds must occur: full+arrival with and without a request
    assert any(ev.control == 1 for ev in events[cap:])
    assert any(ev.control == 0 for ev in events[cap:])


def test_adversarial_alternates_extremes():
    cap = queue_capacity(2)
    events = gen_trace("adversarial", 50, p_control=0.5, seed=1, capacity=cap)
    pinned = [ev.arrival[1] for ev in events[cap:]]
    seen = [ev.arrival[1] for ev in events[:cap]]
    for i, prio in enumerate(pinned):
        if i % 2 == 0:
            assert prio > max(seen)
        else:
            assert prio < min(seen)
        seen.append(prio)


def test_gen_trace_validation():
    with pytest.raises(ValueError):
        gen_trace("waves", 10)
    with pytest.raises(ValueError):
        gen_trace("random", -1)
    with pytest.raises(ValueError):
        gen_trace("random", 10, p_arrival=1.5)
    with pytest.raises(ValueError):
        gen_trace("fill_drain", 10)  # needs capacity
    with pytest.raises(ValueError):
        gen_trace("adversarial", 10)


def test_priorities_globally_unique_across_patterns():
    for pattern in ("random", "burst", "fill_drain", "adversarial"):
        events = gen_trace(pattern, 3000, 0.9, 0.5, seed=8, capacity=10)
        prios = [ev.arrival[1] for ev in events if ev.arrival]
        assert len(prios) == len(set(prios))
        ids = [ev.arrival[0] for ev in events if ev.arrival]
        assert ids == list(range(1, len(ids) + 1))


def test_empty_trace_is_exact_with_zero_tallies():
    rep = differential_run(3, "behavioral", [])
    assert rep.verdict == EXACT
    assert rep.max_group_inflow == 0
    assert rep.max_balance_spread == 0
    assert rep.mux_losses == 0
    assert rep.first_divergence is None


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("pattern", ["random", "burst", "fill_drain", "adversarial"])
def test_behavioral_mode_is_exact(m, pattern):
    trace = gen_trace(pattern, 1500, 0.8, 0.5, seed=13, capacity=queue_capacity(m))
    rep = differential_run(m, "behavioral", trace)
    assert rep.verdict == EXACT, rep.detail
    assert rep.max_group_inflow <= 13


def test_divergence_is_a_verdict_not_an_error():
    cell = SweepCell(m=2, pattern="adversarial", p_arrival=1.0, p_control=0.5,
                     seed=0, slots=500, mutation="no_balancing")
    rep = run_cell(cell)
    assert rep.verdict == DIVERGENT
    assert rep.first_divergence is not None
    assert rep.detail
    assert rep.mutation == "no_balancing"


def test_mutants_are_flagged_divergent():
    for mutation in ("shifted_interval", "no_balancing", "pre_removal_ranking",
                     "undersized_buffers"):
        cells = sweep_cells([4], seeds=1, slots=1500, mutation=mutation)
        assert any(run_cell(c).verdict == DIVERGENT for c in cells), mutation


def test_sweep_grid_shape_and_order():
    cells = sweep_cells([3, 1], seeds=2, slots=100)
    # per m: random 4*5*2 + adversarial 5*2 + burst 2 + fill_drain 2 = 54
    assert len(cells) == 108
    assert cells == sorted(cells, key=lambda c: (c.m, c.mode, c.mutation or "",
                                                 c.pattern, c.p_arrival,
                                                 c.p_control, c.seed))
    assert {c.m for c in cells} == {1, 3}


def test_parallel_sweep_equals_serial():
    cells = sweep_cells([1, 2], seeds=1, slots=300)
    serial = run_sweep(cells, workers=1)
    parallel = run_sweep(cells, workers=2)
    strip = lambda r: {k: v for k, v in dataclasses.asdict(r).items() if k != "wall_ms"}
    assert [strip(r) for r in serial] == [strip(r) for r in parallel]


def test_shrink_produces_minimal_replayable_counterexample():
    cell = SweepCell(m=3, pattern="adversarial", p_arrival=1.0, p_control=0.1,
                     seed=0, slots=2000, mutation="pre_removal_ranking")
    trace = cell_trace(cell)
    small = shrink(trace, 3, "behavioral", "pre_removal_ranking")
    assert 0 < len(small) < len(trace)
    assert differential_run(3, "behavioral", small, "pre_removal_ranking").verdict == DIVERGENT
    for k in range(len(small)):
        candidate = _reslot(small[:k] + small[k + 1:])
        rep = differential_run(3, "behavioral", candidate, "pre_removal_ranking")
        assert rep.verdict == EXACT, f"removing event {k} still diverges"


def test_shrink_is_idempotent():
    cell = SweepCell(m=2, pattern="adversarial", p_arrival=1.0, p_control=0.5,
                     seed=1, slots=800, mutation="no_balancing")
    trace = cell_trace(cell)
    once = shrink(trace, 2, "behavioral", "no_balancing")
    twice = shrink(once, 2, "behavioral", "no_balancing")
    assert once == twice


def test_shrink_rejects_exact_traces():
    trace = gen_trace("random", 100, 0.5, 0.5, seed=0)
    with pytest.raises(ValueError):
        shrink(trace, 2, "behavioral")


def test_report_csv_and_lines():
    reports = run_sweep(sweep_cells([1], seeds=1, slots=100), workers=1)
    csv = report_csv(reports)
    lines = csv.splitlines()
    assert lines[0].startswith("m,mode,mutation,pattern")
    assert len(lines) == len(reports) + 1
    assert all(",EXACT," in row for row in lines[1:])
    text = report_lines(reports)
    assert f"# {len(reports)}/{len(reports)} cells EXACT" in text
