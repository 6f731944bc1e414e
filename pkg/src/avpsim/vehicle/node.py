"""Vehicle node process: registers with the managers, heartbeats, consumes
its namespaced topics, runs the lifecycle machine, and publishes path goals
computed against the shared map."""

from __future__ import annotations

import argparse
import logging
import threading
import time

from avpsim.msgbus.rtt import PING_KEY, PONG_KEY
from avpsim.msgbus.session import Session, SessionError, connect_retry
from avpsim.msgbus.wire import Envelope
from avpsim.runtime import install_stop_signals, publish_ready
from avpsim.vehicle import fsm
from avpsim.world.geometry import Pose2
from avpsim.world.lotmap import LotMap, load_map_file
from avpsim.world.routing import RoutingError, plan_route
from avpsim.world.sim import DEFAULT_LENGTH_M, DEFAULT_MAX_SPEED_MPS, DEFAULT_WIDTH_M

log = logging.getLogger(__name__)

TICK_PERIOD_S = 0.1
HEARTBEAT_S = 1.0


class VehicleNode:
    def __init__(
        self,
        session: Session,
        ns: str,
        lot: LotMap,
        spawn_index: int = 0,
        cls: str = "sedan",
        length: float = DEFAULT_LENGTH_M,
        width: float = DEFAULT_WIDTH_M,
        max_speed: float = DEFAULT_MAX_SPEED_MPS,
        dwell_s: float = fsm.DWELL_S_DEFAULT,
        retry_s: float = fsm.RETRY_S_DEFAULT,
        time_scale: float = 1.0,
    ) -> None:
        self.session = session
        self.ns = ns
        self.lot = lot
        self.spawn_index = spawn_index
        self.cls = cls
        self.length = length
        self.width = width
        self.max_speed = max_speed
        # dwell/backoff are stated in sim seconds; wall timers shrink with scale
        self.dwell_s = dwell_s / time_scale
        self.retry_s = retry_s / time_scale
        self.tick_period = TICK_PERIOD_S / time_scale
        self.heartbeat_period = HEARTBEAT_S / time_scale
        self.ctx = fsm.NodeContext()
        self.status_seq = 0
        self.pose: Pose2 = lot.spawn_points[spawn_index]

    # -- wiring ------------------------------------------------------------

    def run(self, stop: threading.Event | None = None) -> None:
        stop = stop or threading.Event()
        ns = self.ns
        inbox = self.session.subscribe_many(
            [
                f"avp/{ns}/cmd",
                f"avp/{ns}/bay_grant",
                f"avp/{ns}/reserve_reply",
                f"avp/{ns}/goal_status",
                "avp/sim/poses",
                PING_KEY.format(peer=ns),
            ]
        )
        self.session.publish(
            f"avp/{ns}/spawn",
            {
                "spawn_index": self.spawn_index,
                "length": self.length,
                "width": self.width,
                "max_speed": self.max_speed,
                "cls": self.cls,
            },
        )
        self.session.publish(f"avp/{ns}/register", {})
        self._send_status()
        publish_ready(self.session, ns)

        next_heartbeat = time.monotonic()
        next_tick = time.monotonic()
        departed_at: float | None = None
        while not stop.is_set():
            now = time.monotonic()
            if now >= next_heartbeat:
                self.session.publish(f"avp/{ns}/heartbeat", {})
                next_heartbeat = now + self.heartbeat_period
            if now >= next_tick:
                self._apply(fsm.Tick())
                next_tick = now + self.tick_period
            if self.ctx.state is fsm.LifecycleState.DEPARTED:
                if departed_at is None:
                    departed_at = time.monotonic()
                elif time.monotonic() - departed_at > 5 * self.tick_period:
                    return  # flushed; lifecycle complete
            timeout = max(0.001, min(next_tick, next_heartbeat) - time.monotonic())
            try:
                env = inbox.get(timeout=timeout)
            except TimeoutError:
                continue
            self._on_envelope(env)

    def _on_envelope(self, env: Envelope) -> None:
        key = env.key
        payload = env.payload
        if key == "avp/sim/poses":
            for entry in payload or []:
                if entry.get("ns") == self.ns:
                    self.pose = Pose2(entry["x"], entry["y"], entry["yaw"])
            return
        if key == PING_KEY.format(peer=self.ns):
            requester = (payload or {}).get("requester")
            if requester:
                self.session.publish(PONG_KEY.format(requester=requester), payload)
            return
        topic = key.rsplit("/", 1)[1]
        if topic == "cmd":
            kind = (payload or {}).get("kind")
            if kind in fsm.COMMAND_KINDS:
                self._apply(fsm.Command(kind))
            else:
                log.warning("%s: ignoring malformed command %r", self.ns, payload)
        elif topic == "bay_grant":
            self._apply(fsm.BayGrant())
        elif topic == "reserve_reply":
            p = payload or {}
            self._apply(
                fsm.ReserveReply(
                    granted=bool(p.get("granted")),
                    spot_id=p.get("spot_id"),
                    reason=p.get("reason"),
                )
            )
        elif topic == "goal_status":
            status = (payload or {}).get("status")
            self._apply(fsm.GoalReached() if status == "reached" else fsm.GoalFailed())

    # -- machine + actions ----------------------------------------------------

    def _apply(self, event: fsm.NodeEvent) -> None:
        self.ctx, actions = fsm.transition(
            self.ctx, event, time.monotonic(), self.dwell_s, self.retry_s
        )
        for action in actions:
            self._execute(action)

    def _execute(self, action: fsm.Action) -> None:
        ns = self.ns
        if isinstance(action, fsm.SendStatus):
            self._send_status()
        elif isinstance(action, fsm.Enqueue):
            self.session.publish(f"avp/{ns}/queue_req", {})
        elif isinstance(action, fsm.SendPath):
            self._send_path(action)
        elif isinstance(action, fsm.ReleaseBay):
            self.session.publish(f"avp/{ns}/release", {"what": "bay"})
        elif isinstance(action, fsm.RequestReservation):
            self.session.publish(f"avp/{ns}/reserve_request", {})
        elif isinstance(action, fsm.ReleaseReservation):
            self.session.publish(f"avp/{ns}/release", {"what": "spot", "spot_id": action.spot_id})
        elif isinstance(action, fsm.Despawn):
            self.session.publish(f"avp/{ns}/despawn", {})

    def _send_status(self) -> None:
        self.status_seq += 1
        self.session.publish(
            f"avp/{self.ns}/status",
            {"state": self.ctx.state.value, "seq": self.status_seq, "failed": self.ctx.failed},
        )

    def _send_path(self, action: fsm.SendPath) -> None:
        try:
            path = plan_route(self.lot, self.pose, action.goal)
        except RoutingError as exc:
            log.error("%s: routing failed for %s: %s", self.ns, action.goal, exc)
            self._apply(fsm.GoalFailed())
            return
        self.session.publish(f"avp/{self.ns}/path", [p.to_payload() for p in path])


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vehicle", description="per-vehicle AVP node")
    parser.add_argument("--router", required=True)
    parser.add_argument("--ns", required=True)
    parser.add_argument("--map", required=True)
    parser.add_argument("--spawn-index", type=int, default=0)
    parser.add_argument("--class-label", default="sedan")
    parser.add_argument("--length", type=float, default=DEFAULT_LENGTH_M)
    parser.add_argument("--width", type=float, default=DEFAULT_WIDTH_M)
    parser.add_argument("--max-speed", type=float, default=DEFAULT_MAX_SPEED_MPS)
    parser.add_argument("--dwell-s", type=float, default=fsm.DWELL_S_DEFAULT)
    parser.add_argument("--retry-s", type=float, default=fsm.RETRY_S_DEFAULT)
    parser.add_argument("--time-scale", type=float, default=1.0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format=f"%(asctime)s {args.ns} %(message)s")

    lot = load_map_file(args.map)
    stop = threading.Event()
    install_stop_signals(stop)
    try:
        with connect_retry(args.router, args.ns) as session:
            node = VehicleNode(
                session,
                args.ns,
                lot,
                spawn_index=args.spawn_index,
                cls=args.class_label,
                length=args.length,
                width=args.width,
                max_speed=args.max_speed,
                dwell_s=args.dwell_s,
                retry_s=args.retry_s,
                time_scale=args.time_scale,
            )
            node.run(stop)
    except SessionError as exc:
        log.error("%s: bus failure: %s", args.ns, exc)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
