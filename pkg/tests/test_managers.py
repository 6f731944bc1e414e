"""Manager core: registration, LWW status, FIFO queue, reservation mutex,
eviction, and replay determinism."""

import random

from avpsim.coordination.managers import (
    EVICTED_KEY,
    QUEUE_KEY,
    RESERVED_KEY,
    STATUS_KEY,
    VEHICLES_KEY,
    ManagerCore,
)

T0 = 1_000_000_000_000


def occupancy(core, available, frame_seq=1):
    core.handle("avp/rsu/occupancy", {"frame_seq": frame_seq, "occupied": [],
                                      "available": sorted(available)}, T0)


def sent_on(out, key):
    return [p for k, p in out if k == key]


class TestRegistration:
    def test_register_counts(self):
        core = ManagerCore()
        out = core.handle("avp/v1/register", {}, T0)
        assert sent_on(out, "avp/v1/register_reply") == [{"active_count": 1}]
        assert sent_on(out, VEHICLES_KEY) == [{"count": 1, "roster": ["v1"]}]

    def test_duplicate_register_rejected(self):
        core = ManagerCore()
        core.handle("avp/v1/register", {}, T0)
        out = core.handle("avp/v1/register", {}, T0 + 1)
        assert sent_on(out, "avp/v1/reject") == [
            {"op": "register", "reason": "duplicate-namespace"}
        ]
        assert len(core.roster) == 1

    def test_three_vehicle_count(self):
        core = ManagerCore()
        core.handle("avp/v1/register", {}, T0)
        core.handle("avp/v2/register", {}, T0)
        out = core.handle("avp/v3/register", {}, T0)
        assert sent_on(out, VEHICLES_KEY)[0]["count"] == 3

    def test_reserved_namespaces_ignored(self):
        core = ManagerCore()
        assert core.handle("avp/coord/status", {"rows": {}}, T0) == []
        assert core.roster == {}


class TestStatus:
    def test_last_writer_wins_by_seq(self):
        core = ManagerCore()
        core.handle("avp/v1/register", {}, T0)
        core.handle("avp/v1/status", {"state": "A", "seq": 5}, T0)
        out = core.handle("avp/v1/status", {"state": "B", "seq": 4}, T0 + 1)
        assert out == []  # stale update ignored
        assert core.status["v1"].state == "A"
        core.handle("avp/v1/status", {"state": "C", "seq": 6}, T0 + 2)
        assert core.status["v1"].state == "C"

    def test_unregistered_status_ignored(self):
        core = ManagerCore()
        assert core.handle("avp/vX/status", {"state": "A", "seq": 1}, T0) == []

    def test_interleaved_updates_equal_per_vehicle_max_seq(self):
        # replay oracle: fold the logged order, expect max-seq row per vehicle
        rng = random.Random(3)
        msgs = []
        for ns in ("v1", "v2", "v3"):
            for seq in range(1, 8):
                msgs.append((ns, f"st-{ns}-{seq}", seq))
        rng.shuffle(msgs)
        core = ManagerCore()
        for ns in ("v1", "v2", "v3"):
            core.handle(f"avp/{ns}/register", {}, T0)
        applied = {}
        for ns, state, seq in msgs:
            core.handle(f"avp/{ns}/status", {"state": state, "seq": seq}, T0)
            if seq > applied.get(ns, 0):
                applied[ns] = seq
        for ns in ("v1", "v2", "v3"):
            assert core.status[ns].seq == applied[ns] == 7


class TestQueue:
    def make(self, *ns):
        core = ManagerCore()
        for n in ns:
            core.handle(f"avp/{n}/register", {}, T0)
        return core

    def test_fifo_positions_and_single_grant(self):
        core = self.make("v1", "v2")
        out1 = core.handle("avp/v1/queue_req", {}, T0)
        out2 = core.handle("avp/v2/queue_req", {}, T0)
        assert sent_on(out1, "avp/v1/queue_reply") == [{"position": 1}]
        assert sent_on(out2, "avp/v2/queue_reply") == [{"position": 2}]
        assert sent_on(out1, "avp/v1/bay_grant") == [{}]
        assert sent_on(out2, "avp/v2/bay_grant") == []

    def test_release_grants_next(self):
        core = self.make("v1", "v2")
        core.handle("avp/v1/queue_req", {}, T0)
        core.handle("avp/v2/queue_req", {}, T0)
        out = core.handle("avp/v1/release", {"what": "bay"}, T0)
        assert sent_on(out, "avp/v2/bay_grant") == [{}]
        assert sent_on(out, QUEUE_KEY) == [{"order": ["v2"]}]

    def test_non_head_release_rejected(self):
        core = self.make("v1", "v2")
        core.handle("avp/v1/queue_req", {}, T0)
        core.handle("avp/v2/queue_req", {}, T0)
        out = core.handle("avp/v2/release", {"what": "bay"}, T0)
        assert sent_on(out, "avp/v2/reject") == [{"op": "release", "reason": "not-head"}]

    def test_duplicate_enqueue_rejected(self):
        core = self.make("v1")
        core.handle("avp/v1/queue_req", {}, T0)
        out = core.handle("avp/v1/queue_req", {}, T0)
        assert sent_on(out, "avp/v1/reject") == [
            {"op": "queue_req", "reason": "duplicate-enqueue"}
        ]

    def test_random_arrivals_serviced_in_arrival_order(self):
        rng = random.Random(11)
        names = [f"v{i}" for i in range(5)]
        rng.shuffle(names)
        core = self.make(*names)
        grants = []
        for n in names:
            for key, _ in core.handle(f"avp/{n}/queue_req", {}, T0):
                if key.endswith("/bay_grant"):
                    grants.append(key.split("/")[1])
        for n in list(names):
            for key, _ in core.handle(f"avp/{n}/release", {"what": "bay"}, T0):
                if key.endswith("/bay_grant"):
                    grants.append(key.split("/")[1])
        assert grants == names


class TestReservation:
    def make(self, *ns, available=(2, 5, 7)):
        core = ManagerCore()
        for n in ns:
            core.handle(f"avp/{n}/register", {}, T0)
        occupancy(core, available)
        return core

    def test_grants_smallest_available(self):
        core = self.make("v1")
        out = core.handle("avp/v1/reserve_request", {}, T0)
        assert sent_on(out, "avp/v1/reserve_reply") == [
            {"granted": True, "spot_id": 2, "frame_seq": 1}
        ]
        assert sent_on(out, RESERVED_KEY) == [{"holders": {"2": "v1"}}]

    def test_no_spot_when_all_held(self):
        core = self.make("v1", "v2", available=[2])
        core.handle("avp/v1/reserve_request", {}, T0)
        out = core.handle("avp/v2/reserve_request", {}, T0)
        assert sent_on(out, "avp/v2/reserve_reply") == [{"granted": False, "reason": "no-spot"}]

    def test_already_holds_denied(self):
        core = self.make("v1")
        core.handle("avp/v1/reserve_request", {}, T0)
        out = core.handle("avp/v1/reserve_request", {}, T0)
        assert sent_on(out, "avp/v1/reserve_reply") == [
            {"granted": False, "reason": "already-holds"}
        ]

    def test_no_occupancy_denied(self):
        core = ManagerCore()
        core.handle("avp/v1/register", {}, T0)
        out = core.handle("avp/v1/reserve_request", {}, T0)
        assert sent_on(out, "avp/v1/reserve_reply") == [
            {"granted": False, "reason": "no-occupancy"}
        ]

    def test_same_tick_requests_get_distinct_spots(self):
        # serialization oracle: fold requests in logged order; grants must be
        # pairwise distinct and in arrival order of the smallest-id policy
        core = self.make("v1", "v2", "v3", available=(4, 5, 6))
        grants = {}
        for ns in ("v1", "v2", "v3"):
            out = core.handle(f"avp/{ns}/reserve_request", {}, T0)
            grants[ns] = sent_on(out, f"avp/{ns}/reserve_reply")[0]["spot_id"]
        assert grants == {"v1": 4, "v2": 5, "v3": 6}
        assert len(set(grants.values())) == 3

    def test_release_then_regrant(self):
        core = self.make("v1", "v2", available=[3])
        core.handle("avp/v1/reserve_request", {}, T0)
        out = core.handle("avp/v1/release", {"what": "spot", "spot_id": 3}, T0)
        assert sent_on(out, RESERVED_KEY) == [{"holders": {}}]
        out = core.handle("avp/v2/reserve_request", {}, T0)
        assert sent_on(out, "avp/v2/reserve_reply")[0]["spot_id"] == 3

    def test_release_wrong_holder_rejected(self):
        core = self.make("v1", "v2")
        core.handle("avp/v1/reserve_request", {}, T0)
        out = core.handle("avp/v2/release", {"what": "spot", "spot_id": 2}, T0)
        assert sent_on(out, "avp/v2/reject") == [{"op": "release", "reason": "not-holder"}]

    def test_mutex_invariant_under_random_traffic(self):
        rng = random.Random(1234)
        names = [f"v{i}" for i in range(6)]
        core = ManagerCore()
        for n in names:
            core.handle(f"avp/{n}/register", {}, T0)
        occupancy(core, range(1, 7))
        for step in range(500):
            ns = rng.choice(names)
            if rng.random() < 0.5:
                core.handle(f"avp/{ns}/reserve_request", {}, T0 + step)
            else:
                held = [s for s, h in core.holders.items() if h == ns]
                if held:
                    core.handle(f"avp/{ns}/release", {"what": "spot", "spot_id": held[0]}, T0)
            holders = list(core.holders.values())
            assert len(holders) == len(set(holders))  # one spot per vehicle
            # dict keys guarantee one holder per spot structurally

    def test_nearest_policy_uses_pose(self):
        core = ManagerCore(policy="nearest")
        core.spot_centers = {1: (0.0, 0.0), 2: (10.0, 0.0), 3: (20.0, 0.0)}
        core.handle("avp/v1/register", {}, T0)
        core.handle("avp/sim/poses", [{"ns": "v1", "x": 19.0, "y": 0.0}], T0)
        occupancy(core, [1, 2, 3])
        out = core.handle("avp/v1/reserve_request", {}, T0)
        assert sent_on(out, "avp/v1/reserve_reply")[0]["spot_id"] == 3


class TestEviction:
    def test_stale_vehicle_freed_everywhere(self):
        core = ManagerCore(heartbeat_timeout_ns=5_000_000_000)
        for n in ("v1", "v2", "v3"):
            core.handle(f"avp/{n}/register", {}, T0)
        occupancy(core, [1, 2])
        core.handle("avp/v1/queue_req", {}, T0)
        core.handle("avp/v2/queue_req", {}, T0)
        core.handle("avp/v2/reserve_request", {}, T0)
        # v2 stops heartbeating; v1 and v3 stay fresh
        late = T0 + 6_000_000_000
        core.handle("avp/v1/heartbeat", {}, late)
        core.handle("avp/v3/heartbeat", {}, late)
        out = core.expire_stale(late)
        assert sent_on(out, EVICTED_KEY) == [{"evicted": ["v2"]}]
        assert "v2" not in core.roster
        assert core.queue == ["v1"]
        assert core.holders == {}
        assert sent_on(out, RESERVED_KEY) == [{"holders": {}}]

    def test_evicted_head_grants_next(self):
        core = ManagerCore(heartbeat_timeout_ns=5_000_000_000)
        for n in ("v1", "v2"):
            core.handle(f"avp/{n}/register", {}, T0)
        core.handle("avp/v1/queue_req", {}, T0)
        core.handle("avp/v2/queue_req", {}, T0)
        late = T0 + 6_000_000_000
        core.handle("avp/v2/heartbeat", {}, late)
        out = core.expire_stale(late)
        assert sent_on(out, "avp/v2/bay_grant") == [{}]
        assert core.granted_head == "v2"

    def test_no_eviction_when_fresh(self):
        core = ManagerCore(heartbeat_timeout_ns=5_000_000_000)
        core.handle("avp/v1/register", {}, T0)
        assert core.expire_stale(T0 + 1_000_000_000) == []


class TestReplayDeterminism:
    def test_same_message_sequence_same_outputs(self):
        rng = random.Random(99)
        msgs = []
        for i in range(300):
            ns = f"v{rng.randrange(4)}"
            kind = rng.randrange(6)
            if kind == 0:
                msgs.append((f"avp/{ns}/register", {}))
            elif kind == 1:
                msgs.append((f"avp/{ns}/status", {"state": "S", "seq": rng.randrange(20)}))
            elif kind == 2:
                msgs.append((f"avp/{ns}/queue_req", {}))
            elif kind == 3:
                msgs.append((f"avp/{ns}/release", {"what": "bay"}))
            elif kind == 4:
                msgs.append((f"avp/{ns}/reserve_request", {}))
            else:
                msgs.append(("avp/rsu/occupancy",
                             {"frame_seq": i, "occupied": [], "available": [1, 2, 3]}))

        def run():
            core = ManagerCore()
            log = []
            for j, (key, payload) in enumerate(msgs):
                log.extend(core.handle(key, payload, T0 + j))
            return log

        assert run() == run()

    def test_count_matches_roster_after_every_change(self):
        core = ManagerCore()
        for i in range(5):
            out = core.handle(f"avp/v{i}/register", {}, T0)
            assert sent_on(out, VEHICLES_KEY)[0]["count"] == len(core.roster)

    def test_snapshot_contains_all_tables(self):
        core = ManagerCore()
        keys = [k for k, _ in core.snapshot()]
        assert keys == [VEHICLES_KEY, STATUS_KEY, QUEUE_KEY, RESERVED_KEY]
