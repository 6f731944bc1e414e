"""Live bus round trip: spin up a router in-process, attach an echo peer,
and measure RTT the same way the harness probes vehicle hosts."""

import threading

from avpsim.msgbus import Router, connect, echo_responder, rtt_probe

router = Router()
address = router.start()
print(f"router on {address}")

stop = threading.Event()
with connect(address, "peer-host") as peer, connect(address, "prober") as prober:
    echo_responder(peer, "peer-host", stop)
    stats = rtt_probe(prober, "peer-host", count=500, interval_ms=2)
    print("\nRTT (ms)            | Max RTT (ms) | Samples")
    print(f"{stats.mean_ms:7.2f} +/- {stats.std_ms:5.2f} | {stats.max_ms:12.2f} | {stats.samples}")
stop.set()
router.stop()
