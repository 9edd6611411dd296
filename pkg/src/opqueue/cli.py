"""Command-line client for the service.

Every subcommand talks to the HTTP API: by default the app runs in-process
behind an ASGI test transport, so no server is needed; pass ``--server URL``
to target a live instance instead (start one with ``opqueue serve``). The
client itself only reads/writes local files and formats responses.

Exit status: 0 on success (for ``verify``: every behavioral-mode cell
EXACT), 1 for semantic failures (divergence, service-reported errors),
2 for usage and input-file problems.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .cost import CostSheet, cost_csv, cost_table
from .harness import VerdictReport, report_csv, report_lines
from .model import queue_capacity
from .pqueue import BEHAVIORAL, MUX_KINDS, MUTATIONS
from .traceio import TraceEvent, TraceFormatError, dump_trace, read_trace

PATTERN_CHOICES = ("random", "burst", "fill_drain", "adversarial")


class ClientError(Exception):
    """Request failed; message already includes the server detail."""


class Client:
    """Minimal HTTP client, in-process ASGI unless a server URL is given."""

    def __init__(self, server: str | None) -> None:
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                # This starlette build suggests an httpx successor that is
                # not published; the httpx-backed client works fine.
                warnings.filterwarnings("ignore", message=".*httpx2.*")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def get(self, path: str) -> dict:
        return self._check(self._client.get(path))

    def post(self, path: str, payload: dict) -> dict:
        return self._check(self._client.post(path, json=payload))

    @staticmethod
    def _check(response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise ClientError(f"HTTP {response.status_code}: {detail}")
        return response.json()


def _event_to_json(ev: TraceEvent) -> dict:
    payload: dict = {"t": ev.t, "control": ev.control}
    if ev.arrival is not None:
        payload["arrival"] = {"id": ev.arrival[0], "priority": ev.arrival[1]}
    return payload


def _event_from_json(obj: dict) -> TraceEvent:
    arrival = obj.get("arrival")
    return TraceEvent(
        obj["t"],
        obj["control"],
        (arrival["id"], arrival["priority"]) if arrival else None,
    )


def _write_out(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _verdict_from_json(obj: dict) -> VerdictReport:
    return VerdictReport(**obj)


def _slot_lines(reports: list[dict], summary: dict) -> str:
    lines = []
    for r in reports:
        dep = "-" if r["departure"] is None else str(r["departure"])
        loss = "-" if r["loss"] is None else str(r["loss"])
        inflows = ",".join(str(x) for x in r["group_inflows"])
        lines.append(f"{r['t']} D {dep} L {loss} G {inflows}")
    lines.append("# summary")
    for key in ("slots", "departures", "losses", "max_group_inflow",
                "max_balance_spread", "final_occupancy"):
        lines.append(f"# {key} {summary[key]}")
    return "\n".join(lines) + "\n"


def cmd_gen_trace(args: argparse.Namespace) -> int:
    slots = args.slots
    if slots is None:
        slots = 2 * queue_capacity(args.m) if args.pattern == "fill_drain" else 1000
    client = Client(args.server)
    body = client.post("/traces", {
        "pattern": args.pattern,
        "m": args.m,
        "slots": slots,
        "p_arrival": args.p_arrival,
        "p_control": args.p_control,
        "seed": args.seed,
    })
    events = [_event_from_json(ev) for ev in body["events"]]
    _write_out(dump_trace(events), args.out)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    events = read_trace(args.trace)
    client = Client(args.server)
    body = client.post("/simulate", {
        "m": args.m,
        "mode": args.mode,
        "events": [_event_to_json(ev) for ev in events],
    })
    _write_out(_slot_lines(body["reports"], body["summary"]), args.out)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    client = Client(args.server)
    payload = {
        "ms": args.m,
        "mode": args.mode,
        "seeds": args.seeds,
        "slots": args.slots,
        "workers": args.workers,
    }
    if args.pattern:
        payload["patterns"] = args.pattern
    if args.mutation:
        payload["mutation"] = args.mutation
    body = client.post("/verify", payload)
    reports = [_verdict_from_json(r) for r in body["reports"]]
    text = report_csv(reports) + "\n" if args.format == "csv" else report_lines(reports) + "\n"
    _write_out(text, args.out)
    if args.mode == BEHAVIORAL and not body["all_exact"]:
        print("verification FAILED: divergent behavioral cells", file=sys.stderr)
        return 1
    return 0


def cmd_cost(args: argparse.Namespace) -> int:
    client = Client(args.server)
    body = client.get(f"/cost/{args.m}")
    sheet = CostSheet(
        m=body["m"],
        main_switch_size=body["main_switch_size"],
        small_switches={s["size"]: s["count"] for s in body["small_switches"]},
        fiber_count=body["fiber_count"],
        combined_switch_size=body["combined_switch_size"],
        combined_fiber_count=body["combined_fiber_count"],
    )
    text = cost_csv(sheet) if args.format == "csv" else cost_table(sheet)
    _write_out(text + "\n", args.out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("opqueue.service:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opqueue",
        description="Simulate, verify, and cost a multiplexer-group priority queue.",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", help="generate a stimulus trace file")
    p.add_argument("--pattern", choices=PATTERN_CHOICES, default="random")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--slots", type=int, default=None,
                   help="trace length (default: 1000; fill_drain: one full cycle)")
    p.add_argument("--p-arrival", type=float, default=0.5)
    p.add_argument("--p-control", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("simulate", help="run one trace and write per-slot reports")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--mode", choices=MUX_KINDS, default=BEHAVIORAL)
    p.add_argument("--trace", required=True, help="trace file to replay")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="differential sweep against the reference queue")
    p.add_argument("--m", type=int, action="append", required=True,
                   help="system size; repeat for multiple sizes")
    p.add_argument("--mode", choices=MUX_KINDS, default=BEHAVIORAL)
    p.add_argument("--mutation", choices=MUTATIONS, default=None,
                   help="plant a known fault (verifier self-test)")
    p.add_argument("--seeds", type=int, default=2)
    p.add_argument("--slots", type=int, default=1000)
    p.add_argument("--pattern", choices=PATTERN_CHOICES, action="append", default=None,
                   help="restrict to a pattern; repeat for several")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cost", help="print the hardware cost sheet")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TraceFormatError as err:
        print(f"trace error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"file error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 2
    except ClientError as err:
        print(str(err), file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
