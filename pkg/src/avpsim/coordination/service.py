"""Manager service loop: consumes every coordination topic in arrival order,
republishes full state every second for late joiners, and evicts vehicles
whose heartbeats age out."""

from __future__ import annotations

import argparse
import logging
import threading
import time

from avpsim.coordination.managers import ManagerCore
from avpsim.msgbus.rtt import PING_KEY, PONG_KEY
from avpsim.msgbus.session import Session, connect_retry
from avpsim.runtime import install_stop_signals, publish_ready
from avpsim.world.lotmap import LotMap, load_map_file

log = logging.getLogger(__name__)

SUBSCRIPTIONS = [
    "avp/*/register",
    "avp/*/heartbeat",
    "avp/*/status",
    "avp/*/queue_req",
    "avp/*/reserve_request",
    "avp/*/release",
    "avp/rsu/occupancy",
    "avp/sim/poses",
]


def run_managers(
    session: Session,
    core: ManagerCore,
    stop: threading.Event | None = None,
    time_scale: float = 1.0,
    republish_s: float = 1.0,
) -> None:
    stop = stop or threading.Event()
    inbox = session.subscribe_many(SUBSCRIPTIONS + [PING_KEY.format(peer="managers")])
    publish_ready(session, "managers")
    republish_wall = republish_s / time_scale
    next_republish = time.monotonic() + republish_wall
    expire_wall = min(0.1 / time_scale, republish_wall)
    next_expire = time.monotonic() + expire_wall
    while not stop.is_set():
        timeout = min(next_republish, next_expire) - time.monotonic()
        env = None
        if timeout > 0:
            try:
                env = inbox.get(timeout=timeout)
            except TimeoutError:
                env = None
        if env is not None:
            if env.key == PING_KEY.format(peer="managers"):
                requester = (env.payload or {}).get("requester")
                if requester:
                    session.publish(PONG_KEY.format(requester=requester), env.payload)
            else:
                for key, payload in core.handle(env.key, env.payload, time.time_ns()):
                    session.publish(key, payload)
        now = time.monotonic()
        if now >= next_expire:
            for key, payload in core.expire_stale(time.time_ns()):
                session.publish(key, payload)
            next_expire = now + expire_wall
        if now >= next_republish:
            for key, payload in core.snapshot():
                session.publish(key, payload)
            next_republish = now + republish_wall


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="managers", description="AVP coordination managers")
    parser.add_argument("--router", required=True)
    parser.add_argument("--policy", choices=("lowest-id", "nearest"), default="lowest-id")
    parser.add_argument("--heartbeat-timeout-s", type=float, default=5.0)
    parser.add_argument("--map", default=None, help="needed by the nearest policy")
    parser.add_argument("--time-scale", type=float, default=1.0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s managers %(message)s")

    timeout_ns = int(args.heartbeat_timeout_s / args.time_scale * 1e9)
    core = ManagerCore(policy=args.policy, heartbeat_timeout_ns=timeout_ns)
    if args.map:
        lot: LotMap = load_map_file(args.map)
        core.spot_centers = {s.id: (s.rect.cx, s.rect.cy) for s in lot.spots}
    stop = threading.Event()
    install_stop_signals(stop)
    with connect_retry(args.router, "managers") as session:
        run_managers(session, core, stop, args.time_scale)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
