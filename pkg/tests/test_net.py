import pytest
from hypothesis import given, settings, strategies as st

from mpvideo.net import (
    ConfigError, DropTailLink, LinkConfig, WirePacket, build_topology, topology_links,
)
from mpvideo.sim import Simulator, ms


def make_link(capacity_mbps=4, owd_ms=100, queue_ms=200):
    sim = Simulator()
    link = DropTailLink(sim, LinkConfig(capacity_mbps * 1e6, owd_ms, queue_ms))
    return sim, link


def test_queue_capacity_in_bytes():
    # 3 Mbps x 400 ms
    assert LinkConfig(3e6, 100, 400).queue_capacity == 150_000


def test_full_queue_drops_next_packet():
    sim, link = make_link(3, 100, 400)
    accepted = [link.enqueue(WirePacket("f", i, 1000, 0)) for i in range(151)]
    assert accepted[:150] == [True] * 150
    assert accepted[150] is False
    assert link.dropped_packets == 1
    assert link.drops_by_flow == {"f": 1}


def test_empty_queue_accepts():
    _, link = make_link()
    assert link.enqueue(WirePacket("f", 1, 1000, 0))


def test_idle_link_delivery_time():
    sim, link = make_link(4, 100, 200)
    got = []
    link.attach("f", lambda p: got.append(sim.now))
    link.enqueue(WirePacket("f", 1, 1000, 0))
    sim.run_until(ms(500))
    # 2 ms serialization + 100 ms propagation
    assert got == [102_000]


def test_zero_propagation_is_serialization_only():
    sim, link = make_link(4, 0, 200)
    got = []
    link.attach("f", lambda p: got.append(sim.now))
    link.enqueue(WirePacket("f", 1, 1000, 0))
    sim.run_until(ms(10))
    assert got == [2000]


def test_back_to_back_chaining():
    sim, link = make_link(4, 100, 200)
    got = []
    link.attach("f", lambda p: got.append(sim.now))
    link.enqueue(WirePacket("f", 1, 1000, 0))
    link.enqueue(WirePacket("f", 2, 1000, 0))
    sim.run_until(ms(500))
    assert got[1] - got[0] == 2000


def test_oversize_packet_rejected():
    with pytest.raises(ValueError):
        WirePacket("f", 1, 1001, 0)


@pytest.mark.parametrize("kwargs", [
    dict(capacity_bps=0, prop_delay_ms=10, queue_ms=10),
    dict(capacity_bps=1e6, prop_delay_ms=-1, queue_ms=10),
    dict(capacity_bps=1e6, prop_delay_ms=10, queue_ms=0),
])
def test_link_config_validation(kwargs):
    with pytest.raises(ConfigError):
        LinkConfig(**kwargs)


def test_table1_case2_topology():
    sim = Simulator()
    topo = build_topology(sim, 1, 2)
    link = topo.link("L1")
    assert link.config == LinkConfig(3e6, 100, 400)
    assert link.capacity == 150_000
    assert list(topo.links) == ["L1"]


def test_table3_case4_topology():
    links = topology_links(3, 4)
    assert links["L1"] == LinkConfig(4e6, 100, 200)
    assert links["L2"] == LinkConfig(2e6, 50, 200)


def test_table3_case1_identical_paths():
    links = topology_links(3, 1)
    assert links["L1"] == links["L2"] == LinkConfig(4e6, 100, 200)


def test_table3_background_attachment():
    topo = build_topology(Simulator(), 3, 6)
    assert topo.background == ["L1", "L1", "L2"]


@pytest.mark.parametrize("table,case", [(1, 0), (1, 10), (3, 11), (2, 1)])
def test_unknown_case(table, case):
    with pytest.raises(ConfigError):
        topology_links(table, case)


def test_unknown_link_name():
    topo = build_topology(Simulator(), 1, 1)
    with pytest.raises(ConfigError, match="no link 'L2'"):
        topo.link("L2")


def test_constant_rate_at_capacity_never_queues():
    sim, link = make_link(4, 100, 200)
    delays = []
    link.attach("f", lambda p: delays.append(sim.now - p.sent_ts))
    # one 1000 B packet every 2 ms is exactly 4 Mbps
    for i in range(500):
        sim.schedule_at(i * 2000, lambda i=i: link.enqueue(WirePacket("f", i, 1000, sim.now)))
    sim.run_until(ms(2000))
    assert len(delays) == 500
    assert set(delays) == {102_000}


def reference_fifo(arrivals, capacity_bps, prop_us, queue_bytes):
    """Independent DropTail model: per-packet (accepted, deliver_us) from arrival times."""
    us_per_byte = 8e6 / capacity_bps
    finishes = []  # (finish_us, size) of accepted packets
    out = []
    last_finish = 0.0
    for t, size in arrivals:
        occupancy = sum(sz for f, sz in finishes if f > t)
        if occupancy + size > queue_bytes:
            out.append((False, None))
            continue
        finish = max(t, last_finish) + size * us_per_byte
        last_finish = finish
        finishes.append((finish, size))
        out.append((True, finish + prop_us))
    return out


@settings(max_examples=60, deadline=None)
@given(
    arrivals=st.lists(st.tuples(st.integers(0, 400), st.integers(1, 1000)), min_size=1, max_size=120),
    probes=st.lists(st.integers(0, 400_000), max_size=10),
)
def test_fifo_matches_reference_and_conserves_bytes(arrivals, probes):
    sim, link = make_link(1, 20, 5)
    times = []
    t = 0
    for gap, size in arrivals:
        t += gap * 100
        times.append((t, size))
    expected = reference_fifo(times, 1e6, 20_000, link.capacity)
    got = {}
    conserved = []
    link.attach("f", lambda p: got.__setitem__(p.seq, sim.now))
    results = {}

    for i, (at, size) in enumerate(times):
        sim.schedule_at(at, lambda i=i, size=size: results.__setitem__(i, link.enqueue(WirePacket("f", i, size, sim.now))))

    def audit():
        total = link.delivered_bytes + link.dropped_bytes + link.queued_bytes() + link.wire_bytes()
        conserved.append(total == link.enqueued_bytes)
        conserved.append(0 <= link.occupancy <= link.capacity)

    for p in probes:
        sim.schedule_at(p, audit)
    sim.run_until(5_000_000)
    audit()
    assert all(conserved)
    for i, (accepted, deliver) in enumerate(expected):
        assert results[i] is accepted
        if accepted:
            # delivery events land on the next whole microsecond
            assert got[i] == pytest.approx(deliver, abs=1)
        else:
            assert i not in got


def test_queueing_delay_equals_bytes_ahead_at_packet_boundary():
    sim, link = make_link(1, 20, 50)
    link.enqueue(WirePacket("f", 1, 1000, 0))
    link.enqueue(WirePacket("f", 2, 500, 0))
    ahead = link.queued_bytes()
    assert link.queueing_delay_us() == pytest.approx(ahead * 8)
