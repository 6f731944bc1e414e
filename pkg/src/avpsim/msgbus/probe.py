"""Standalone RTT probe CLI: ping a peer's echo responder, write a JSON report."""

from __future__ import annotations

import argparse
import json
import uuid
from pathlib import Path

from avpsim.msgbus.rtt import rtt_probe
from avpsim.msgbus.session import connect_retry


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="probe", description="bus round-trip-time probe")
    parser.add_argument("--router", required=True, help="router host:port")
    parser.add_argument("--peer", required=True, help="peer id running an echo responder")
    parser.add_argument("--count", type=int, required=True)
    parser.add_argument("--interval-ms", type=float, required=True)
    parser.add_argument("--out", required=True, help="report JSON path")
    parser.add_argument("--timeout-s", type=float, default=2.0, help="straggler grace period")
    args = parser.parse_args(argv)

    requester = f"probe-{uuid.uuid4().hex[:8]}"
    with connect_retry(args.router, requester) as session:
        stats = rtt_probe(session, args.peer, args.count, args.interval_ms, args.timeout_s)
    report = {"peer": args.peer, "requester": requester, **stats.to_payload()}
    Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    print(
        f"rtt to {args.peer}: {stats.mean_ms:.2f} +/- {stats.std_ms:.2f} ms "
        f"(max {stats.max_ms:.2f} ms, {stats.samples} samples)"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
