"""HTTP facade over the simulator, verifier, and cost calculator.

The service holds no state between requests: every simulation or sweep is
rebuilt from the request, so identical requests always return identical
bodies (wall-clock fields aside).
"""

from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI, HTTPException

from . import __version__
from .cost import component_cost
from .harness import (
    EXACT,
    differential_run,
    gen_trace,
    run_sweep,
    shrink,
    sweep_cells,
)
from .model import queue_capacity, system_params
from .pqueue import BEHAVIORAL, ConstructionError, build
from .schemas import (
    ArrivalModel,
    CostResponse,
    GenTraceRequest,
    HealthResponse,
    ParamsResponse,
    ShrinkRequest,
    ShrinkResponse,
    SimulateRequest,
    SimulateResponse,
    SimulateSummary,
    SlotReportModel,
    SmallSwitchModel,
    TraceEventModel,
    TraceResponse,
    VerdictModel,
    VerifyRequest,
    VerifyResponse,
    VerifyTraceRequest,
)
from .traceio import TraceEvent


def _to_events(models: list[TraceEventModel]) -> list[TraceEvent]:
    events = []
    for i, ev in enumerate(models):
        if ev.t != i + 1:
            raise HTTPException(422, f"trace slots must be contiguous from 1, got {ev.t} at index {i}")
        arrival = (ev.arrival.id, ev.arrival.priority) if ev.arrival else None
        events.append(TraceEvent(ev.t, ev.control, arrival))
    return events


def _to_models(events: list[TraceEvent]) -> list[TraceEventModel]:
    return [
        TraceEventModel(
            t=ev.t,
            control=ev.control,
            arrival=ArrivalModel(id=ev.arrival[0], priority=ev.arrival[1]) if ev.arrival else None,
        )
        for ev in events
    ]


def create_app() -> FastAPI:
    app = FastAPI(
        title="opqueue",
        version=__version__,
        description="Simulator and differential verifier for a multiplexer-group priority queue",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/params/{m}", response_model=ParamsResponse)
    def params(m: int) -> ParamsResponse:
        if m < 1:
            raise HTTPException(422, "m must be >= 1")
        p = system_params(m)
        return ParamsResponse(
            m=p.m,
            group_count=p.group_count,
            capacity=p.capacity,
            intervals=[[iv.lo, iv.hi] for iv in p.intervals],
            group_buffers=list(p.group_buffers),
        )

    @app.get("/cost/{m}", response_model=CostResponse)
    def cost(m: int) -> CostResponse:
        if m < 1:
            raise HTTPException(422, "m must be >= 1")
        sheet = component_cost(m)
        return CostResponse(
            m=sheet.m,
            main_switch_size=sheet.main_switch_size,
            small_switches=[
                SmallSwitchModel(size=size, count=sheet.small_switches[size])
                for size in sorted(sheet.small_switches)
            ],
            fiber_count=sheet.fiber_count,
            combined_switch_size=sheet.combined_switch_size,
            combined_fiber_count=sheet.combined_fiber_count,
        )

    @app.post("/traces", response_model=TraceResponse)
    def traces(req: GenTraceRequest) -> TraceResponse:
        capacity = queue_capacity(req.m)
        events = gen_trace(
            req.pattern,
            req.slots,
            p_arrival=req.p_arrival,
            p_control=req.p_control,
            seed=req.seed,
            capacity=capacity,
        )
        return TraceResponse(m=req.m, capacity=capacity, events=_to_models(events))

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        events = _to_events(req.events)
        try:
            construction = build(req.m, req.mode, req.mutation)
        except ValueError as err:
            raise HTTPException(422, str(err)) from err
        try:
            reports = construction.run_trace(events, detail=True)
        except ConstructionError as err:
            raise HTTPException(
                409,
                {"error": "invariant violation", "kind": err.kind, "slot": err.slot,
                 "message": str(err)},
            ) from err
        except ValueError as err:
            raise HTTPException(422, str(err)) from err
        models = [
            SlotReportModel(
                t=r.t,
                departure=r.departure,
                loss=r.loss,
                group_inflows=list(r.group_inflows),
                group_sources=[list(s) for s in r.group_sources],
                mux_occupancies=[list(o) for o in r.mux_occupancies],
            )
            for r in reports
        ]
        summary = SimulateSummary(
            slots=len(reports),
            departures=sum(r.departure is not None for r in reports),
            losses=sum(r.loss is not None for r in reports),
            max_group_inflow=construction.max_inflow,
            max_balance_spread=construction.max_spread,
            final_occupancy=construction.occupancy,
        )
        return SimulateResponse(reports=models, summary=summary)

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest) -> VerifyResponse:
        if any(m < 1 for m in req.ms):
            raise HTTPException(422, "every m must be >= 1")
        kwargs = {}
        if req.patterns is not None:
            kwargs["patterns"] = req.patterns
        cells = sweep_cells(
            req.ms,
            modes=(req.mode,),
            seeds=req.seeds,
            slots=req.slots,
            mutation=req.mutation,
            **kwargs,
        )
        try:
            reports = run_sweep(cells, workers=req.workers)
        except ValueError as err:
            raise HTTPException(422, str(err)) from err
        models = [VerdictModel(**asdict(r)) for r in reports]
        behavioral = [r for r in reports if r.mode == BEHAVIORAL]
        return VerifyResponse(
            reports=models,
            all_exact=all(r.verdict == EXACT for r in behavioral),
        )

    @app.post("/verify/trace", response_model=VerdictModel)
    def verify_trace(req: VerifyTraceRequest) -> VerdictModel:
        events = _to_events(req.events)
        try:
            report = differential_run(req.m, req.mode, events, req.mutation)
        except ValueError as err:
            raise HTTPException(422, str(err)) from err
        return VerdictModel(**asdict(report))

    @app.post("/shrink", response_model=ShrinkResponse)
    def shrink_trace(req: ShrinkRequest) -> ShrinkResponse:
        events = _to_events(req.events)
        try:
            reduced = shrink(events, req.m, req.mode, req.mutation)
        except ValueError as err:
            raise HTTPException(422, str(err)) from err
        return ShrinkResponse(events=_to_models(reduced), slots=len(reduced))

    return app


app = create_app()
