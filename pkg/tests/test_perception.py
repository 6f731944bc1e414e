"""Detector model and occupancy classification."""

import math

import pytest

from avpsim.perception.detector import DetectorModel, detect
from avpsim.perception.occupancy import OccupancyFrame, compute_occupancy
from avpsim.world.geometry import OrientedRect, Pose2, rect_intersection_area
from avpsim.world.lotmap import load_map_file, reference_map_path
from avpsim.world.sim import VehicleBody


@pytest.fixture(scope="module")
def lot():
    return load_map_file(reference_map_path())


def body(ns, x, y, yaw=0.0, cls="sedan"):
    return VehicleBody(ns, Pose2(x, y, yaw), cls=cls)


class TestDetector:
    def test_perfect_model_returns_exact_footprints(self):
        bodies = [body("a", 0, 0), body("b", 10, 0), body("c", 20, 0)]
        model = DetectorModel()
        rects = detect(bodies, model, frame_seq=1)
        assert len(rects) == 3
        assert rects[0] == bodies[0].footprint

    def test_class_conditional_miss(self):
        bodies = [body("van1", 0, 0, cls="van"), body("car1", 10, 0, cls="sedan")]
        model = DetectorModel(p_miss={"van": 1.0})
        rects = detect(bodies, model, frame_seq=1)
        assert len(rects) == 1
        assert rects[0].cx == 10

    def test_miss_rate_converges(self):
        # law of large numbers: 10^4 frames, one vehicle, p_miss 0.3
        model = DetectorModel(p_miss={"sedan": 0.3}, seed=9)
        bodies = [body("a", 0, 0)]
        misses = sum(1 for f in range(10_000) if not detect(bodies, model, f))
        assert misses / 10_000 == pytest.approx(0.3, abs=0.01)

    def test_deterministic_given_seed_and_frame(self):
        model = DetectorModel(p_miss={"sedan": 0.5}, pos_noise_sigma_m=0.2, seed=4)
        bodies = [body("a", 0, 0), body("b", 5, 5)]
        assert detect(bodies, model, 17) == detect(bodies, model, 17)

    def test_noise_perturbs_centers(self):
        model = DetectorModel(pos_noise_sigma_m=0.5, seed=1)
        rects = detect([body("a", 0, 0)], model, 1)
        assert rects[0].cx != 0 or rects[0].cy != 0
        assert math.hypot(rects[0].cx, rects[0].cy) < 5  # plausible magnitude

    def test_probability_validation(self):
        with pytest.raises(ValueError):
            DetectorModel(p_miss={"sedan": 1.5})

    def test_cli_spec_parser(self):
        model = DetectorModel.from_spec("van=0.4,sedan=0.1", sigma_m=0.2, seed=3)
        assert model.p_miss == {"van": 0.4, "sedan": 0.1}


class TestOccupancy:
    def test_no_detections_all_available(self, lot):
        frame = compute_occupancy([], lot, 1, 0)
        assert frame.occupied == frozenset()
        assert frame.available == frozenset(lot.spot_ids)

    def test_detection_centered_in_spot_3(self, lot):
        spot = lot.spot(3)
        det = OrientedRect(spot.rect.cx, spot.rect.cy, 2.3, 0.95, spot.rect.yaw)
        frame = compute_occupancy([det], lot, 1, 0)
        assert frame.occupied == frozenset({3})

    def test_straddling_detection_uses_area_ratio(self, lot):
        # place a footprint overlapping spot 3 heavily and spot 4 marginally;
        # the clipping oracle fixes the expected ratios
        s3, s4 = lot.spot(3).rect, lot.spot(4).rect
        det = OrientedRect(s3.cx + 1.7, s3.cy, 2.3, 0.95, s3.yaw)
        r3 = rect_intersection_area(det, s3) / s3.area
        r4 = rect_intersection_area(det, s4) / s4.area
        assert r3 > 0.05 > r4 > 0.0, f"fixture geometry drifted: {r3:.3f}, {r4:.3f}"
        frame = compute_occupancy([det], lot, 1, 0, theta=0.05)
        assert 3 in frame.occupied
        assert 4 in frame.available

    def test_partition_invariant(self, lot):
        dets = [OrientedRect(lot.spot(i).rect.cx, lot.spot(i).rect.cy, 2.3, 0.95)
                for i in (1, 5, 9)]
        frame = compute_occupancy(dets, lot, 1, 0)
        assert frame.occupied | frame.available == frozenset(lot.spot_ids)
        assert not frame.occupied & frame.available

    def test_zero_noise_fidelity_random_placements(self, lot):
        # with a perfect detector, occupancy equals direct truth-vs-spot overlap
        import random

        rng = random.Random(12)
        model = DetectorModel()
        for frame_seq in range(40):
            bodies = [
                body(f"v{i}", rng.uniform(30, 60), rng.uniform(-10, 10),
                     rng.uniform(-math.pi, math.pi))
                for i in range(rng.randrange(0, 5))
            ]
            dets = detect(bodies, model, frame_seq)
            frame = compute_occupancy(dets, lot, frame_seq, 0)
            truth = {
                s.id
                for s in lot.spots
                if any(
                    rect_intersection_area(b.footprint, s.rect) / s.rect.area > 0.05
                    for b in bodies
                )
            }
            assert frame.occupied == frozenset(truth)

    def test_frame_payload_round_trip(self):
        frame = OccupancyFrame(5, 123, frozenset({1, 2}), frozenset({3}))
        again = OccupancyFrame.from_payload(frame.to_payload(), 123)
        assert again == frame

    def test_rejects_bad_theta(self, lot):
        with pytest.raises(ValueError):
            compute_occupancy([], lot, 1, 0, theta=1.0)
