"""Scenario runner.

Launches router -> world -> RSU -> managers -> vehicle nodes (-> gateway),
each gated on the previous component's readiness announcement, then drives
the command script, records the whole bus through the tap, and assembles a
RunReport with offline assertion results.

`mode: subprocess` runs every component as its own OS process (one per
"host"); `mode: thread` hosts them as threads in this process, which keeps
large randomized sweeps cheap. Both modes share the same service code and
the same bus.
"""

from __future__ import annotations

import logging
import subprocess
import sys
import threading
import time
from pathlib import Path

import psutil

from avpsim.coordination.managers import ManagerCore
from avpsim.coordination.service import run_managers
from avpsim.harness.checks import assert_suite
from avpsim.harness.report import (
    RunReport,
    extract_reservations,
    extract_transitions,
    results_to_dicts,
)
from avpsim.harness.scenario import Scenario
from avpsim.harness.tap import TapRecorder
from avpsim.msgbus.router import Router
from avpsim.msgbus.rtt import Prober, RttStats
from avpsim.msgbus.session import Session, SessionError, connect_retry
from avpsim.perception.service import run_rsu
from avpsim.vehicle.node import VehicleNode
from avpsim.world.lotmap import load_map_file
from avpsim.world.service import run_world

log = logging.getLogger(__name__)

READY_TIMEOUT_S = 10.0


class RunError(Exception):
    pass


class _Subprocess:
    def __init__(self, name: str, argv: list[str], log_dir: Path) -> None:
        self.name = name
        self._log_fh = open(log_dir / f"{name}.log", "w")
        self.proc = subprocess.Popen(
            argv, stdout=self._log_fh, stderr=subprocess.STDOUT, text=True
        )

    @property
    def pid(self) -> int | None:
        return self.proc.pid

    def alive(self) -> bool:
        return self.proc.poll() is None

    def exit_code(self) -> int | None:
        return self.proc.poll()

    def kill(self) -> None:
        if self.alive():
            self.proc.kill()

    def stop(self, timeout: float = 3.0) -> None:
        if self.alive():
            self.proc.terminate()
        try:
            self.proc.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait(timeout=2.0)
        self._log_fh.close()


class _ServiceThread:
    def __init__(self, name: str, target) -> None:
        self.name = name
        self.pid = None
        self.stop_event = threading.Event()
        self.error: BaseException | None = None

        def _run() -> None:
            try:
                target(self.stop_event)
            except BaseException as exc:  # surfaced by the monitor
                if not self.stop_event.is_set():
                    self.error = exc

        self.thread = threading.Thread(target=_run, name=f"svc-{name}", daemon=True)
        self.thread.start()

    def alive(self) -> bool:
        return self.thread.is_alive()

    def exit_code(self) -> int | None:
        if self.thread.is_alive():
            return None
        return 1 if self.error else 0

    def kill(self) -> None:
        self.stop_event.set()

    def stop(self, timeout: float = 3.0) -> None:
        self.stop_event.set()
        self.thread.join(timeout=timeout)


def _module_argv(module: str, *args: str) -> list[str]:
    return [sys.executable, "-m", module, *args]


class ScenarioRun:
    """One scenario execution; see `run_scenario` for the one-call wrapper."""

    def __init__(
        self,
        scenario: Scenario,
        out_dir: str | Path,
        with_gateway: bool = False,
        gateway_port: int = 0,
        gateway_static: str | Path | None = None,
        kill_script: list[tuple[float, str]] | None = None,
    ) -> None:
        self.scenario = scenario
        self.out_dir = Path(out_dir)
        self.with_gateway = with_gateway
        self.gateway_port = gateway_port
        self.gateway_static = Path(gateway_static) if gateway_static else None
        self.kill_script = kill_script or []
        self.lot = load_map_file(scenario.map_file)
        for v in scenario.vehicles:
            if not 0 <= v.spawn_index < len(self.lot.spawn_points):
                raise RunError(f"{v.ns}: spawn_index {v.spawn_index} outside map")
        self.components: list[_Subprocess | _ServiceThread] = []
        self.router: Router | None = None
        self.router_proc: _Subprocess | None = None
        self.address = ""
        self.tap: TapRecorder | None = None
        self.sessions: list[Session] = []
        self.stop_flag = threading.Event()
        self.aborted: str | None = None
        self.rtt_samples: dict[str, list[float]] = {}
        self.resources: dict[str, dict] = {}
        self.gateway_address: str | None = None

    # -- launch ----------------------------------------------------------------

    def _start_router(self) -> None:
        if self.scenario.mode == "thread":
            self.router = Router()
            self.address = self.router.start()
            return
        log_dir = self.out_dir / "logs"
        fh = open(log_dir / "router.log", "w")
        proc = subprocess.Popen(
            _module_argv("avpsim.msgbus.router", "--listen", "127.0.0.1:0"),
            stdout=subprocess.PIPE,
            stderr=fh,
            text=True,
        )
        assert proc.stdout is not None
        line = proc.stdout.readline().strip()
        if not line.startswith("router listening on "):
            proc.kill()
            raise RunError(f"router failed to start: {line!r}")
        self.address = line.rsplit(" ", 1)[1]
        wrapper = _Subprocess.__new__(_Subprocess)
        wrapper.name = "router"
        wrapper.proc = proc
        wrapper._log_fh = fh
        self.router_proc = wrapper

    def _session(self, client_id: str) -> Session:
        session = connect_retry(self.address, client_id)
        self.sessions.append(session)
        return session

    def _wait_ready(self, name: str) -> bool:
        assert self.tap is not None
        deadline = time.monotonic() + READY_TIMEOUT_S
        while time.monotonic() < deadline:
            if self.tap.is_ready(name):
                return True
            time.sleep(0.005)
        self.aborted = f"readiness-timeout:{name}"
        return False

    def _launch(self, name: str, argv: list[str], thread_target) -> _Subprocess | _ServiceThread:
        if self.scenario.mode == "thread":
            comp: _Subprocess | _ServiceThread = _ServiceThread(name, thread_target)
        else:
            comp = _Subprocess(name, argv, self.out_dir / "logs")
        self.components.append(comp)
        return comp

    def _launch_all(self) -> bool:
        sc = self.scenario
        scale = str(sc.time_scale)
        map_arg = str(sc.map_file)

        def world_target(stop):
            with self._session("world") as s:
                run_world(s, self.lot, sc.tick_ms / 1000.0, stop, sc.time_scale)

        self._launch(
            "world",
            _module_argv(
                "avpsim.world.service", "--router", self.address, "--map", map_arg,
                "--tick-ms", str(sc.tick_ms), "--seed", str(sc.seed), "--time-scale", scale,
            ),
            world_target,
        )
        if not self._wait_ready("world"):
            return False

        p_miss_spec = ",".join(f"{k}={v}" for k, v in sc.detector.p_miss.items())

        def rsu_target(stop):
            with self._session("rsu") as s:
                run_rsu(s, self.lot, sc.detector, sc.rsu_rate_hz, sc.theta, stop, sc.time_scale)

        self._launch(
            "rsu",
            _module_argv(
                "avpsim.perception.service", "--router", self.address, "--map", map_arg,
                "--rate-hz", str(sc.rsu_rate_hz), "--p-miss", p_miss_spec,
                "--sigma-m", str(sc.detector.pos_noise_sigma_m),
                "--seed", str(sc.detector.seed), "--theta", str(sc.theta),
                "--time-scale", scale,
            ),
            rsu_target,
        )
        if not self._wait_ready("rsu"):
            return False

        def managers_target(stop):
            core = ManagerCore(
                policy=sc.reservation_policy,
                heartbeat_timeout_ns=int(sc.heartbeat_timeout_s / sc.time_scale * 1e9),
            )
            core.spot_centers = {s.id: (s.rect.cx, s.rect.cy) for s in self.lot.spots}
            with self._session("managers") as s:
                run_managers(s, core, stop, sc.time_scale)

        self._launch(
            "managers",
            _module_argv(
                "avpsim.coordination.service", "--router", self.address,
                "--policy", sc.reservation_policy,
                "--heartbeat-timeout-s", str(sc.heartbeat_timeout_s),
                "--map", map_arg, "--time-scale", scale,
            ),
            managers_target,
        )
        if not self._wait_ready("managers"):
            return False

        for v in sc.vehicles:
            def vehicle_target(stop, v=v):
                with self._session(v.ns) as s:
                    node = VehicleNode(
                        s, v.ns, self.lot,
                        spawn_index=v.spawn_index, cls=v.class_label,
                        max_speed=v.max_speed, dwell_s=sc.dwell_s, retry_s=sc.retry_s,
                        time_scale=sc.time_scale,
                    )
                    node.run(stop)

            self._launch(
                v.ns,
                _module_argv(
                    "avpsim.vehicle.node", "--router", self.address, "--ns", v.ns,
                    "--map", map_arg, "--spawn-index", str(v.spawn_index),
                    "--class-label", v.class_label, "--max-speed", str(v.max_speed),
                    "--dwell-s", str(sc.dwell_s), "--retry-s", str(sc.retry_s),
                    "--time-scale", scale,
                ),
                vehicle_target,
            )
        for v in sc.vehicles:
            if not self._wait_ready(v.ns):
                return False

        if self.with_gateway:
            from avpsim.harness.gateway import run_gateway

            def gateway_target(stop):
                with self._session("gateway") as s:
                    run_gateway(s, f"127.0.0.1:{self.gateway_port}", stop,
                                map_path=Path(map_arg), static_dir=self.gateway_static,
                                on_bound=self._set_gateway_address)

            gw_argv = _module_argv(
                "avpsim.harness.cli", "gateway", "--router", self.address,
                "--listen", f"127.0.0.1:{self.gateway_port}", "--map", map_arg,
            )
            if self.gateway_static:
                gw_argv += ["--static", str(self.gateway_static)]
            self._launch("gateway", gw_argv, gateway_target)
            if not self._wait_ready("gateway"):
                return False
        return True

    def _set_gateway_address(self, address: str) -> None:
        self.gateway_address = address

    # -- scenario drive -----------------------------------------------------------

    def _sim_time(self) -> float:
        assert self.tap is not None
        return self.tap.sim_time_s(self.scenario.tick_ms / 1000.0)

    def _command_scheduler(self, session: Session) -> None:
        # at_s counts simulated seconds (world ticks), so a lagging world
        # cannot fire commands early; state-gated commands wait in their own
        # threads because queue order is not known up front
        sc = self.scenario
        assert self.tap is not None
        publish_lock = threading.Lock()

        def send(cmd) -> None:
            if self.stop_flag.is_set():
                return
            try:
                with publish_lock:
                    session.publish(f"avp/{cmd.target_ns}/cmd", {"kind": cmd.kind})
            except SessionError:
                pass

        def gate_then_send(cmd) -> None:
            while not self.stop_flag.is_set() and not self.tap.has_seen_state(
                cmd.target_ns, cmd.when_state
            ):
                time.sleep(0.005)
            send(cmd)

        waiters = []
        for cmd in sc.command_script:
            while not self.stop_flag.is_set() and self._sim_time() < cmd.at_s:
                time.sleep(0.005)
            if self.stop_flag.is_set():
                break
            if cmd.when_state is None:
                send(cmd)
            else:
                w = threading.Thread(target=gate_then_send, args=(cmd,), daemon=True)
                w.start()
                waiters.append(w)
        for w in waiters:
            w.join(timeout=0.5)

    def _kill_scheduler(self) -> None:
        for at_s, ns in sorted(self.kill_script):
            while not self.stop_flag.is_set() and self._sim_time() < at_s:
                time.sleep(0.005)
            if self.stop_flag.is_set():
                return
            for comp in self.components:
                if comp.name == ns:
                    log.info("killing %s mid-run", ns)
                    comp.kill()

    def _probe_loop(self, ns: str) -> None:
        try:
            prober = Prober(self._session(f"probe-{ns}"))
        except SessionError:
            return
        samples: list[float] = []
        self.rtt_samples[ns] = samples
        while not self.stop_flag.is_set():
            try:
                samples.extend(prober.collect(ns, count=20, interval_ms=25, timeout_s=0.5))
            except SessionError:
                return

    def _resource_sampler(self) -> None:
        procs: dict[str, psutil.Process] = {}
        for comp in self.components:
            if isinstance(comp, _Subprocess) and comp.pid:
                try:
                    procs[comp.name] = psutil.Process(comp.pid)
                except psutil.Error:
                    continue
        if not procs:
            procs["harness"] = psutil.Process()
        acc: dict[str, list[tuple[float, int]]] = {n: [] for n in procs}
        while not self.stop_flag.wait(0.5):
            for name, p in procs.items():
                try:
                    acc[name].append((p.cpu_percent(), p.memory_info().rss))
                except psutil.Error:
                    continue
        for name, rows in acc.items():
            if rows:
                self.resources[name] = {
                    "cpu_percent_mean": round(sum(r[0] for r in rows) / len(rows), 2),
                    "rss_mb_max": round(max(r[1] for r in rows) / 1e6, 1),
                    "samples": len(rows),
                }

    def _stop_targets_reached(self) -> bool:
        assert self.tap is not None
        return all(
            self.tap.has_seen_state(v.ns, self.scenario.stop_state_for(v.ns))
            for v in self.scenario.vehicles
        )

    def _critical_died(self) -> str | None:
        for comp in self.components:
            if comp.name in ("world", "rsu", "managers", "gateway") and not comp.alive():
                return f"component-died:{comp.name}"
        return None

    # -- top level ----------------------------------------------------------------

    def execute(self) -> RunReport:
        sc = self.scenario
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / "logs").mkdir(exist_ok=True)
        if sc.mode == "thread":
            sys.setswitchinterval(0.001)  # many timer threads; cut GIL quantum latency
        started = time.monotonic()
        threads: list[threading.Thread] = []
        try:
            self._start_router()
            tap_session = self._session("tap")
            self.tap = TapRecorder(tap_session, self.out_dir / "tap.ndjson")
            self.tap.start()
            if self._launch_all():
                cmd_session = self._session("harness")
                t0 = time.monotonic()
                threads.append(
                    threading.Thread(
                        target=self._command_scheduler, args=(cmd_session,), daemon=True
                    )
                )
                if self.kill_script:
                    threads.append(
                        threading.Thread(target=self._kill_scheduler, daemon=True)
                    )
                if sc.probes:
                    for v in sc.vehicles:
                        threads.append(
                            threading.Thread(
                                target=self._probe_loop, args=(v.ns,), daemon=True
                            )
                        )
                threads.append(threading.Thread(target=self._resource_sampler, daemon=True))
                for t in threads:
                    t.start()

                # duration counts simulated seconds; the wall cap only guards
                # against a stalled world
                wall_cap = t0 + 3.0 * sc.duration_s / sc.time_scale + 30.0
                while time.monotonic() < wall_cap:
                    if self._sim_time() >= sc.duration_s:
                        break
                    if self._stop_targets_reached():
                        break
                    died = self._critical_died()
                    if died:
                        self.aborted = died
                        break
                    time.sleep(0.02)
        finally:
            self.stop_flag.set()
            for t in threads:
                t.join(timeout=2.0)
            # settle: let final messages drain into the tap before teardown
            time.sleep(0.3)
            for comp in reversed(self.components):
                comp.stop()
            if self.tap is not None:
                self.tap.stop()
            for session in self.sessions:
                session.close()
            if self.router_proc is not None:
                self.router_proc.stop()
            if self.router is not None:
                self.router.stop()
        return self._build_report(time.monotonic() - started)

    def _build_report(self, wall_s: float) -> RunReport:
        entries = self.tap.snapshot_entries() if self.tap else []
        report = RunReport(
            scenario_name=self.scenario.name,
            seed=self.scenario.seed,
            mode=self.scenario.mode,
            duration_wall_s=round(wall_s, 3),
            transitions=extract_transitions(entries),
            reservations=extract_reservations(entries),
            collisions=self.tap.collisions if self.tap else 0,
            final_states=dict(sorted(self.tap.states.items())) if self.tap else {},
            rtt={
                ns: RttStats.from_rtts_ms(samples).to_payload()
                for ns, samples in sorted(self.rtt_samples.items())
                if samples
            },
            resources=self.resources,
            assertion_results=results_to_dicts(assert_suite(entries, self.lot.spot_ids)),
            aborted=self.aborted,
        )
        report.write(self.out_dir / "report.json")
        return report


def run_scenario(
    scenario: Scenario,
    out_dir: str | Path,
    with_gateway: bool = False,
    gateway_port: int = 0,
    gateway_static: str | Path | None = None,
    kill_script: list[tuple[float, str]] | None = None,
) -> RunReport:
    return ScenarioRun(
        scenario, out_dir, with_gateway, gateway_port, gateway_static, kill_script
    ).execute()
