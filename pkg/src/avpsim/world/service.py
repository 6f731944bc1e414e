"""World service: advances all vehicles on a fixed tick, applying inbound
spawn/despawn/path messages at tick boundaries in arrival order, and
publishes ground-truth poses plus goal/collision events."""

from __future__ import annotations

import argparse
import logging
import threading

from avpsim.msgbus.session import Session, connect_retry
from avpsim.runtime import PaceTimer, install_stop_signals, publish_ready
from avpsim.world.geometry import Pose2
from avpsim.world.lotmap import LotMap, load_map_file
from avpsim.world.sim import (
    Collision,
    DEFAULT_LENGTH_M,
    DEFAULT_MAX_SPEED_MPS,
    DEFAULT_WIDTH_M,
    GoalReached,
    VehicleBody,
    World,
)

log = logging.getLogger(__name__)

POSES_KEY = "avp/sim/poses"
COLLISION_KEY = "avp/sim/collision"
CLOCK_KEY = "avp/sim/clock"

CLOCK_PERIOD_S = 0.5  # sim-time announcements for the harness scheduler


def run_world(
    session: Session,
    lot: LotMap,
    tick_s: float = 0.05,
    stop: threading.Event | None = None,
    time_scale: float = 1.0,
) -> None:
    stop = stop or threading.Event()
    inbox = session.subscribe_many(["avp/*/path", "avp/*/spawn", "avp/*/despawn"])
    publish_ready(session, "world")
    world = World(lot)
    timer = PaceTimer(tick_s / time_scale)
    # accelerated runs cap the wall-clock pose rate at roughly 40 Hz so the
    # fan-out does not swamp the bus; sim-time cadence is what matters
    pose_every = max(1, round(time_scale / 2.0))
    clock_every = max(1, int(CLOCK_PERIOD_S / tick_s))
    while not stop.is_set():
        timer.wait(stop)
        if stop.is_set():
            return
        while True:
            env = inbox.get_nowait()
            if env is None:
                break
            _apply(world, lot, env.key, env.payload)
        events = world.step(tick_s)
        if world.tick_count % pose_every == 0:
            session.publish(POSES_KEY, [b.to_pose_payload() for b in world.vehicles.values()])
        if world.tick_count % clock_every == 0:
            session.publish(CLOCK_KEY, {"tick": world.tick_count, "sim_s": world.tick_count * tick_s})
        for event in events:
            if isinstance(event, GoalReached):
                session.publish(f"avp/{event.ns}/goal_status", {"status": "reached"})
            elif isinstance(event, Collision):
                session.publish(COLLISION_KEY, {"a": event.ns_a, "b": event.ns_b})


def _apply(world: World, lot: LotMap, key: str, payload) -> None:
    ns, topic = key.split("/")[1:3]
    if topic == "spawn":
        idx = int(payload.get("spawn_index", 0))
        if not 0 <= idx < len(lot.spawn_points):
            log.warning("spawn for %s: bad spawn_index %s", ns, idx)
            return
        try:
            world.spawn(
                VehicleBody(
                    ns=ns,
                    pose=lot.spawn_points[idx],
                    length=float(payload.get("length", DEFAULT_LENGTH_M)),
                    width=float(payload.get("width", DEFAULT_WIDTH_M)),
                    max_speed=float(payload.get("max_speed", DEFAULT_MAX_SPEED_MPS)),
                    cls=payload.get("cls", "sedan"),
                )
            )
        except ValueError as exc:
            log.warning("spawn rejected: %s", exc)
    elif topic == "despawn":
        world.despawn(ns)
    elif topic == "path":
        try:
            path = [Pose2.from_payload(p) for p in payload]
        except (KeyError, TypeError, ValueError) as exc:
            log.warning("bad path for %s: %s", ns, exc)
            return
        world.set_path(ns, path)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="world", description="parking lot world service")
    parser.add_argument("--router", required=True)
    parser.add_argument("--map", required=True)
    parser.add_argument("--tick-ms", type=float, default=50.0)
    parser.add_argument("--seed", type=int, default=0)  # reserved; motion is deterministic
    parser.add_argument("--time-scale", type=float, default=1.0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s world %(message)s")

    lot = load_map_file(args.map)
    stop = threading.Event()
    install_stop_signals(stop)
    with connect_retry(args.router, "world") as session:
        run_world(session, lot, args.tick_ms / 1000.0, stop, args.time_scale)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
