"""RSU service: at a fixed rate, read the latest ground-truth poses, run the
detector model, classify spots, and publish the occupancy frame."""

from __future__ import annotations

import argparse
import logging
import threading

from avpsim.msgbus.session import Session, connect_retry
from avpsim.perception.detector import DetectorModel, detect
from avpsim.perception.occupancy import OVERLAP_THETA_DEFAULT, compute_occupancy
from avpsim.runtime import PaceTimer, install_stop_signals, publish_ready
from avpsim.world.geometry import Pose2
from avpsim.world.lotmap import LotMap, load_map_file
from avpsim.world.sim import VehicleBody

log = logging.getLogger(__name__)

OCCUPANCY_KEY = "avp/rsu/occupancy"
POSES_KEY = "avp/sim/poses"


def _bodies_from_payload(entries: list[dict]) -> list[VehicleBody]:
    bodies = []
    for e in entries:
        bodies.append(
            VehicleBody(
                ns=e["ns"],
                pose=Pose2(e["x"], e["y"], e["yaw"]),
                length=e["len"],
                width=e["wid"],
                cls=e.get("cls", "sedan"),
            )
        )
    return bodies


def run_rsu(
    session: Session,
    lot: LotMap,
    model: DetectorModel,
    rate_hz: float = 10.0,
    theta: float = OVERLAP_THETA_DEFAULT,
    stop: threading.Event | None = None,
    time_scale: float = 1.0,
) -> None:
    """Service loop; returns when `stop` is set."""
    stop = stop or threading.Event()
    poses = session.subscribe(POSES_KEY)
    publish_ready(session, "rsu")
    latest = None  # (pose_seq, timestamp_ns, entries)
    frame_seq = 0
    warned = False
    timer = PaceTimer(1.0 / (rate_hz * time_scale))
    while not stop.is_set():
        timer.wait(stop)
        if stop.is_set():
            return
        while True:
            env = poses.get_nowait()
            if env is None:
                break
            latest = (env.seq, env.timestamp_ns, env.payload)
        if latest is None:
            if not warned:
                log.warning("no pose message yet; occupancy not published")
                warned = True
            continue
        pose_seq, ts_ns, entries = latest
        frame_seq += 1
        detections = detect(_bodies_from_payload(entries), model, frame_seq)
        frame = compute_occupancy(detections, lot, frame_seq, ts_ns, theta)
        payload = frame.to_payload()
        payload["pose_seq"] = pose_seq  # which pose snapshot this frame classified
        session.publish(OCCUPANCY_KEY, payload)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="rsu", description="occupancy perception service")
    parser.add_argument("--router", required=True)
    parser.add_argument("--map", required=True)
    parser.add_argument("--rate-hz", type=float, default=10.0)
    parser.add_argument("--p-miss", default="", help="class=prob[,class=prob...]")
    parser.add_argument("--sigma-m", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--theta", type=float, default=OVERLAP_THETA_DEFAULT)
    parser.add_argument("--time-scale", type=float, default=1.0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s rsu %(message)s")

    lot = load_map_file(args.map)
    model = DetectorModel.from_spec(args.p_miss, args.sigma_m, args.seed)
    stop = threading.Event()
    install_stop_signals(stop)
    with connect_retry(args.router, "rsu") as session:
        run_rsu(session, lot, model, args.rate_hz, args.theta, stop, args.time_scale)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
