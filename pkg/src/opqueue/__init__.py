"""Discrete-time simulator and differential verifier for a priority queue
built from groups of FIFO multiplexers behind a crossbar switch."""

from .model import (
    Packet,
    RankInterval,
    SystemParams,
    group_buffer_size,
    queue_capacity,
    rank_intervals,
    ranks,
    system_params,
)
from .oracle import ReferenceQueue
from .mux import CUT_THROUGH, REGISTERED, Mux, MuxError
from .compose import ComposedMux
from .pqueue import (
    BEHAVIORAL,
    COMPOSED,
    MUTATIONS,
    Construction,
    ConstructionError,
    SlotReport,
    build,
)
from .cost import CostSheet, combined_cost, component_cost
from .traceio import TraceEvent, TraceFormatError, read_trace, write_trace
from .harness import (
    DIVERGENT,
    EXACT,
    SweepCell,
    VerdictReport,
    differential_run,
    gen_trace,
    run_sweep,
    shrink,
    sweep_cells,
)

__version__ = "0.1.0"

__all__ = [
    "Packet", "RankInterval", "SystemParams", "group_buffer_size",
    "queue_capacity", "rank_intervals", "ranks", "system_params",
    "ReferenceQueue",
    "Mux", "MuxError", "REGISTERED", "CUT_THROUGH",
    "ComposedMux",
    "Construction", "ConstructionError", "SlotReport", "build",
    "BEHAVIORAL", "COMPOSED", "MUTATIONS",
    "CostSheet", "combined_cost", "component_cost",
    "TraceEvent", "TraceFormatError", "read_trace", "write_trace",
    "SweepCell", "VerdictReport", "differential_run", "gen_trace",
    "run_sweep", "shrink", "sweep_cells", "EXACT", "DIVERGENT",
    "__version__",
]
