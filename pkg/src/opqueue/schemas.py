"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

Pattern = Literal["random", "burst", "fill_drain", "adversarial"]
MuxKind = Literal["behavioral", "composed"]
Mutation = Literal[
    "shifted_interval", "no_balancing", "pre_removal_ranking", "undersized_buffers"
]


class HealthResponse(BaseModel):
    status: str
    version: str


class ArrivalModel(BaseModel):
    id: int
    priority: int


class TraceEventModel(BaseModel):
    t: int = Field(ge=1)
    control: int = Field(ge=0, le=1)
    arrival: ArrivalModel | None = None


class ParamsResponse(BaseModel):
    m: int
    group_count: int
    capacity: int
    intervals: list[list[int]]  # [lo, hi] per group
    group_buffers: list[int]


class SmallSwitchModel(BaseModel):
    size: int
    count: int


class CostResponse(BaseModel):
    m: int
    main_switch_size: int
    small_switches: list[SmallSwitchModel]
    fiber_count: int
    combined_switch_size: int
    combined_fiber_count: int


class GenTraceRequest(BaseModel):
    pattern: Pattern
    m: int = Field(ge=1)
    slots: int = Field(ge=0)
    p_arrival: float = Field(0.5, ge=0.0, le=1.0)
    p_control: float = Field(0.5, ge=0.0, le=1.0)
    seed: int = 0


class TraceResponse(BaseModel):
    m: int
    capacity: int
    events: list[TraceEventModel]


class SimulateRequest(BaseModel):
    m: int = Field(ge=1)
    mode: MuxKind = "behavioral"
    mutation: Mutation | None = None
    events: list[TraceEventModel]


class SlotReportModel(BaseModel):
    t: int
    departure: int | None
    loss: int | None
    group_inflows: list[int]
    group_sources: list[list[int]]
    mux_occupancies: list[list[int]]


class SimulateSummary(BaseModel):
    slots: int
    departures: int
    losses: int
    max_group_inflow: int
    max_balance_spread: int
    final_occupancy: int


class SimulateResponse(BaseModel):
    reports: list[SlotReportModel]
    summary: SimulateSummary


class VerifyRequest(BaseModel):
    ms: list[int]
    mode: MuxKind = "behavioral"
    mutation: Mutation | None = None
    seeds: int = Field(2, ge=1)
    slots: int = Field(1000, ge=0)
    patterns: list[Pattern] | None = None
    workers: int = Field(1, ge=1)


class VerdictModel(BaseModel):
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


class VerifyResponse(BaseModel):
    reports: list[VerdictModel]
    all_exact: bool


class VerifyTraceRequest(BaseModel):
    m: int = Field(ge=1)
    mode: MuxKind = "behavioral"
    mutation: Mutation | None = None
    events: list[TraceEventModel]


class ShrinkRequest(BaseModel):
    m: int = Field(ge=1)
    mode: MuxKind = "behavioral"
    mutation: Mutation | None = None
    events: list[TraceEventModel]


class ShrinkResponse(BaseModel):
    events: list[TraceEventModel]
    slots: int
