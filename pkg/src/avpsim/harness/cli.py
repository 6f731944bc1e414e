"""`avp` command line: run scenarios, replay assertion checks on a tap,
format reports, and serve the panel gateway."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import threading
from pathlib import Path

from avpsim.harness.checks import assert_suite
from avpsim.harness.report import RunReport
from avpsim.harness.runner import run_scenario
from avpsim.harness.scenario import load_scenario
from avpsim.harness.tap import read_tap
from avpsim.msgbus.session import connect_retry
from avpsim.runtime import install_stop_signals
from avpsim.world.lotmap import load_map_file


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.mode:
        scenario.mode = args.mode
    report = run_scenario(
        scenario,
        args.out,
        with_gateway=args.gateway,
        gateway_port=args.gateway_port,
        gateway_static=args.gateway_static,
    )
    for result in report.assertion_results:
        status = "PASS" if result["passed"] else "FAIL"
        detail = f" ({result['detail']})" if result["detail"] else ""
        print(f"{result['name']}: {status}{detail}")
    print(f"final states: {report.final_states}")
    print(f"collisions: {report.collisions}")
    if report.aborted:
        print(f"ABORTED: {report.aborted}", file=sys.stderr)
        return 2
    return 0 if report.all_assertions_passed() else 1


def _cmd_assert(args: argparse.Namespace) -> int:
    entries = read_tap(args.tap)
    spot_ids = None
    if args.map:
        spot_ids = load_map_file(args.map).spot_ids
    results = assert_suite(entries, spot_ids)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def _cmd_report(args: argparse.Namespace) -> int:
    report = RunReport.read(Path(args.in_dir) / "report.json")
    if args.format == "json":
        print(report.to_json())
        return 0
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["section", "name", "value"])
    writer.writerow(["run", "scenario", report.scenario_name])
    writer.writerow(["run", "seed", report.seed])
    writer.writerow(["run", "collisions", report.collisions])
    for ns, state in report.final_states.items():
        writer.writerow(["final-state", ns, state])
    writer.writerow([])
    writer.writerow(["rtt", "peer", "RTT (ms)", "Max RTT (ms)", "Samples"])
    for ns, stats in report.rtt.items():
        writer.writerow(
            ["rtt", ns, f"{stats['mean_ms']:.2f} +/- {stats['std_ms']:.2f}",
             f"{stats['max_ms']:.2f}", stats["samples"]]
        )
    for a in report.assertion_results:
        writer.writerow(["assertion", a["name"], "PASS" if a["passed"] else "FAIL"])
    print(out.getvalue(), end="")
    return 0


def _cmd_gateway(args: argparse.Namespace) -> int:
    from avpsim.harness.gateway import run_gateway

    logging.basicConfig(level=logging.INFO, format="%(asctime)s gateway %(message)s")
    stop = threading.Event()
    install_stop_signals(stop)
    with connect_retry(args.router, "gateway") as session:
        run_gateway(
            session,
            args.listen,
            stop,
            map_path=Path(args.map) if args.map else None,
            static_dir=Path(args.static) if args.static else None,
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="avp", description="AVP scenario harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario end to end")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--mode", choices=("subprocess", "thread"), default=None)
    p_run.add_argument("--gateway", action="store_true", help="also serve the panel gateway")
    p_run.add_argument("--gateway-port", type=int, default=8080)
    p_run.add_argument("--gateway-static", default=None, help="panel build dir to serve over HTTP")
    p_run.set_defaults(func=_cmd_run)

    p_assert = sub.add_parser("assert", help="replay assertion checks on a tap file")
    p_assert.add_argument("--tap", required=True)
    p_assert.add_argument("--map", default=None)
    p_assert.set_defaults(func=_cmd_assert)

    p_report = sub.add_parser("report", help="format a run report")
    p_report.add_argument("--in", dest="in_dir", required=True)
    p_report.add_argument("--format", choices=("json", "csv"), default="json")
    p_report.set_defaults(func=_cmd_report)

    p_gw = sub.add_parser("gateway", help="websocket bridge for the operator panel")
    p_gw.add_argument("--router", required=True)
    p_gw.add_argument("--listen", default=":8080")
    p_gw.add_argument("--map", default=None)
    p_gw.add_argument("--static", default=None)
    p_gw.set_defaults(func=_cmd_gateway)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
