"""Router + session integration: delivery, FIFO, fan-out, remap, RTT probes."""

import threading
import time

import pytest

from avpsim.msgbus import (
    ProbeError,
    Router,
    SessionError,
    connect,
    echo_responder,
    rtt_probe,
)
from avpsim.msgbus.wire import FrameError


@pytest.fixture()
def router():
    r = Router()
    r.start()
    yield r
    r.stop()


def drain(stream, n, timeout=5.0):
    out = []
    deadline = time.monotonic() + timeout
    while len(out) < n and time.monotonic() < deadline:
        try:
            out.append(stream.get(timeout=deadline - time.monotonic()))
        except TimeoutError:
            break
    return out


class TestSessionBasics:
    def test_publish_reaches_matching_subscriber(self, router):
        with connect(router.address, "a") as pub, connect(router.address, "b") as sub:
            stream = sub.subscribe("avp/*/status")
            pub.publish("avp/v1/status", {"state": "PARKED"})
            env = stream.get(timeout=2)
            assert env.key == "avp/v1/status"
            assert env.sender_id == "a"
            assert env.seq == 1
            assert env.payload == {"state": "PARKED"}

    def test_duplicate_client_id_rejected(self, router):
        with connect(router.address, "dup"):
            with pytest.raises(SessionError, match="duplicate"):
                connect(router.address, "dup")

    def test_oversize_payload_is_local_error_nothing_sent(self, router):
        with connect(router.address, "a") as pub, connect(router.address, "b") as sub:
            stream = sub.subscribe("big/**")
            with pytest.raises(FrameError):
                pub.publish("big/blob", {"data": "x" * (2 << 20)})
            pub.publish("big/ok", {"data": "small"})
            env = stream.get(timeout=2)
            assert env.key == "big/ok"

    def test_publish_after_close_raises(self, router):
        sess = connect(router.address, "a")
        sess.close()
        with pytest.raises(SessionError):
            sess.publish("x/y", 1)

    def test_no_delivery_before_subscription(self, router):
        with connect(router.address, "a") as pub, connect(router.address, "b") as sub:
            pub.publish("pre/msg", 1)
            time.sleep(0.1)
            stream = sub.subscribe("pre/**")
            pub.publish("pre/msg", 2)
            envs = drain(stream, 2, timeout=0.5)
            assert [e.payload for e in envs] == [2]


class TestOrderingAndFanout:
    def test_per_sender_key_fifo(self, router):
        n = 200
        with connect(router.address, "pub") as pub, connect(router.address, "sub") as sub:
            stream = sub.subscribe("t/**")
            for i in range(n):
                pub.publish("t/a", i)
            envs = drain(stream, n)
            assert [e.payload for e in envs] == list(range(n))
            assert [e.seq for e in envs] == list(range(1, n + 1))

    def test_interleaved_keys_keep_per_key_fifo(self, router):
        with connect(router.address, "pub") as pub, connect(router.address, "sub") as sub:
            stream = sub.subscribe("t/**")
            for i in range(50):
                pub.publish("t/a", i)
                pub.publish("t/b", i)
            envs = drain(stream, 100)
            for key in ("t/a", "t/b"):
                seqs = [e.seq for e in envs if e.key == key]
                assert seqs == sorted(seqs) and len(seqs) == 50

    def test_fanout_once_per_subscription(self, router):
        with connect(router.address, "pub") as pub, connect(router.address, "sub") as sub:
            s1 = sub.subscribe("f/**")
            s2 = sub.subscribe("f/x/*")
            pub.publish("f/x/1", "hit")
            assert len(drain(s1, 1)) == 1
            assert len(drain(s2, 1)) == 1
            assert s1.get_nowait() is None
            assert s2.get_nowait() is None

    def test_fanout_across_clients(self, router):
        with connect(router.address, "pub") as pub, \
                connect(router.address, "c1") as c1, connect(router.address, "c2") as c2:
            s1 = c1.subscribe("g/**")
            s2 = c2.subscribe("g/**")
            pub.publish("g/msg", 7)
            assert drain(s1, 1)[0].payload == 7
            assert drain(s2, 1)[0].payload == 7

    def test_isolation_no_foreign_keys(self, router):
        with connect(router.address, "pub") as pub, connect(router.address, "sub") as sub:
            stream = sub.subscribe("avp/v1/**")
            for i in range(20):
                pub.publish("avp/v1/status", i)
                pub.publish("avp/v2/status", i)
                pub.publish("other/v1/status", i)
            envs = drain(stream, 20)
            assert len(envs) == 20
            assert all(e.key.startswith("avp/v1/") for e in envs)
            assert stream.get_nowait() is None

    def test_concurrent_publishers_preserve_own_fifo(self, router):
        n = 100
        with connect(router.address, "sub") as sub:
            stream = sub.subscribe("c/**")
            sessions = [connect(router.address, f"p{k}") for k in range(4)]

            def run(sess, k):
                for i in range(n):
                    sess.publish(f"c/{k}", i)

            threads = [threading.Thread(target=run, args=(s, k)) for k, s in enumerate(sessions)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            envs = drain(stream, 4 * n)
            assert len(envs) == 4 * n
            for k in range(4):
                payloads = [e.payload for e in envs if e.key == f"c/{k}"]
                assert payloads == list(range(n))
            for s in sessions:
                s.close()


class TestRemap:
    def test_remap_rewrites_before_local_delivery(self, router):
        with connect(router.address, "pub") as pub, connect(router.address, "sub") as sub:
            sub.remap("avp/*/status", "local/$1/status")
            stream = sub.subscribe("local/**")
            pub.publish("avp/v3/status", {"s": 1})
            env = stream.get(timeout=2)
            assert env.key == "local/v3/status"

    def test_remap_only_affects_that_client(self, router):
        with connect(router.address, "pub") as pub, \
                connect(router.address, "mapped") as mapped, \
                connect(router.address, "plain") as plain:
            mapped.remap("avp/*/status", "local/$1/status")
            sm = mapped.subscribe("local/**")
            sp = plain.subscribe("avp/**")
            pub.publish("avp/v1/status", 0)
            assert sm.get(timeout=2).key == "local/v1/status"
            assert sp.get(timeout=2).key == "avp/v1/status"

    def test_bad_remap_rule_rejected(self, router):
        with connect(router.address, "sub") as sub:
            with pytest.raises(Exception, match="mismatched|out of range"):
                sub.remap("avp/*/x/*", "local/$1")


class TestRtt:
    def test_probe_counts_and_stats(self, router):
        stop = threading.Event()
        with connect(router.address, "peer") as peer, connect(router.address, "req") as req:
            echo_responder(peer, "peer", stop)
            stats = rtt_probe(req, "peer", count=50, interval_ms=0)
            assert stats.samples == 50
            assert stats.max_ms >= stats.mean_ms
            assert stats.std_ms >= 0
            stop.set()

    def test_single_ping_zero_std(self, router):
        stop = threading.Event()
        with connect(router.address, "peer") as peer, connect(router.address, "req") as req:
            echo_responder(peer, "peer", stop)
            stats = rtt_probe(req, "peer", count=1, interval_ms=0)
            assert stats.samples == 1
            assert stats.std_ms == 0.0
            stop.set()

    def test_injected_delay_shows_in_mean(self, router):
        # deterministic 5 ms delay on the echo path; scheduler budget 2 ms
        with connect(router.address, "peer") as peer, connect(router.address, "req") as req:
            ping = peer.subscribe("avp/probe/ping/slowpeer")

            def slow_echo():
                while True:
                    try:
                        env = ping.get(timeout=1.0)
                    except TimeoutError:
                        return
                    deadline = time.monotonic_ns() + 5_000_000
                    while time.monotonic_ns() < deadline:  # exact 5 ms, sleep is too coarse
                        pass
                    peer.publish(f"avp/probe/pong/{env.payload['requester']}", env.payload)

            t = threading.Thread(target=slow_echo, daemon=True)
            t.start()
            stats = rtt_probe(req, "slowpeer", count=20, interval_ms=10)
            assert 5.0 <= stats.mean_ms <= 7.0
            t.join(timeout=2)

    def test_zero_pongs_is_probe_failure(self, router):
        with connect(router.address, "req") as req:
            with pytest.raises(ProbeError):
                rtt_probe(req, "nobody", count=3, interval_ms=0, timeout_s=0.3)
