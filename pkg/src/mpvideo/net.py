"""DropTail bottleneck links and the two experiment topologies."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from .sim import Simulator, US_PER_MS

MTU = 1000


class ConfigError(ValueError):
    """Invalid experiment or topology configuration."""


@dataclass(frozen=True)
class LinkConfig:
    capacity_bps: float
    prop_delay_ms: float
    queue_ms: float

    def __post_init__(self):
        if self.capacity_bps <= 0:
            raise ConfigError(f"capacity must be positive, got {self.capacity_bps}")
        if self.prop_delay_ms < 0:
            raise ConfigError(f"prop_delay must be non-negative, got {self.prop_delay_ms}")
        if self.queue_ms <= 0:
            raise ConfigError(f"queue length must be positive, got {self.queue_ms}")

    @property
    def queue_capacity(self) -> int:
        """Queue size in bytes: capacity x queue_ms, as in '3Mbps*300ms'."""
        return int(round(self.capacity_bps * self.queue_ms / 1000 / 8))

    @property
    def prop_delay_us(self) -> int:
        return int(round(self.prop_delay_ms * US_PER_MS))


class WirePacket:
    __slots__ = ("flow_id", "seq", "size", "sent_ts", "enqueue_ts", "deliver_ts", "payload")

    def __init__(self, flow_id: str, seq: int, size: int, sent_ts: int, payload: Any = None):
        if size > MTU:
            raise ValueError(f"packet of {size} B exceeds MTU {MTU}")
        self.flow_id = flow_id
        self.seq = seq
        self.size = size
        self.sent_ts = sent_ts
        self.enqueue_ts = -1
        self.deliver_ts = -1
        self.payload = payload

    def __repr__(self) -> str:
        return f"WirePacket({self.flow_id}#{self.seq}, {self.size}B)"


class DropTailLink:
    """FIFO byte queue feeding a fixed-rate serializer and a constant propagation delay.

    Occupancy counts every byte whose serialization has not finished (a
    packet on the serializer counts in full until its last bit leaves), so an
    arrival waits for the bytes ahead of it minus whatever part of the head
    packet has already been sent.
    """

    def __init__(self, sim: Simulator, config: LinkConfig, name: str = "L1"):
        self.sim = sim
        self.config = config
        self.name = name
        self.capacity = config.queue_capacity
        self._us_per_byte = 8e6 / config.capacity_bps
        self._prop_us = config.prop_delay_us
        self._busy_until = 0.0
        self._backlog: deque[tuple[float, int]] = deque()
        self.occupancy = 0
        self._wire_bytes = 0
        self._receivers: dict[str, Callable[[WirePacket], None]] = {}
        self._drop_listeners: list[Callable[[WirePacket], None]] = []
        self.enqueued_bytes = 0
        self.delivered_bytes = 0
        self.dropped_bytes = 0
        self.enqueued_packets = 0
        self.dropped_packets = 0
        self.drops_by_flow: dict[str, int] = {}

    def attach(self, flow_id: str, deliver: Callable[[WirePacket], None]) -> None:
        self._receivers[flow_id] = deliver

    def on_drop(self, listener: Callable[[WirePacket], None]) -> None:
        self._drop_listeners.append(listener)

    def _drain(self, now: float) -> None:
        backlog = self._backlog
        while backlog and backlog[0][0] <= now:
            _, size = backlog.popleft()
            self.occupancy -= size
            self._wire_bytes += size

    def delivery_time(self, size: int) -> float:
        """Delivery instant (us, fractional) for a packet of ``size`` enqueued now."""
        start = max(float(self.sim.now), self._busy_until)
        return start + size * self._us_per_byte + self._prop_us

    def enqueue(self, pkt: WirePacket) -> bool:
        now = self.sim.now
        self._drain(now)
        size = pkt.size
        self.enqueued_bytes += size
        self.enqueued_packets += 1
        if self.occupancy + size > self.capacity:
            self.dropped_bytes += size
            self.dropped_packets += 1
            self.drops_by_flow[pkt.flow_id] = self.drops_by_flow.get(pkt.flow_id, 0) + 1
            for listener in self._drop_listeners:
                listener(pkt)
            return False
        busy = self._busy_until
        departure = (busy if busy > now else now) + size * self._us_per_byte
        self._busy_until = departure
        self._backlog.append((departure, size))
        self.occupancy += size
        pkt.enqueue_ts = now
        deliver_at = math.ceil(departure + self._prop_us - 1e-6)
        pkt.deliver_ts = deliver_at
        self.sim.schedule_at(deliver_at, self._deliver, pkt)
        return True

    def _deliver(self, pkt: WirePacket) -> None:
        self._drain(self.sim.now)
        self._wire_bytes -= pkt.size
        self.delivered_bytes += pkt.size
        receiver = self._receivers.get(pkt.flow_id)
        if receiver is not None:
            receiver(pkt)

    def queued_bytes(self) -> int:
        self._drain(self.sim.now)
        return self.occupancy

    def wire_bytes(self) -> int:
        self._drain(self.sim.now)
        return self._wire_bytes

    def queueing_delay_us(self) -> float:
        return max(0.0, self._busy_until - self.sim.now)


# Table 1: (capacity Mbps, one-way delay ms, queue ms)
TABLE1: dict[int, tuple[float, float, float]] = {
    1: (3, 100, 300),
    2: (3, 100, 400),
    3: (3, 100, 600),
    4: (4, 100, 300),
    5: (4, 100, 400),
    6: (4, 100, 600),
    7: (5, 100, 300),
    8: (5, 100, 400),
    9: (5, 100, 600),
}

# Table 3: per-path (BW Mbps, OWD ms, Q ms) for L1 and L2
TABLE3: dict[int, tuple[tuple[float, float, float], tuple[float, float, float]]] = {
    1: ((4, 100, 200), (4, 100, 200)),
    2: ((3, 100, 200), (2, 150, 200)),
    3: ((3, 100, 200), (2, 100, 200)),
    4: ((4, 100, 200), (2, 50, 200)),
    5: ((4, 50, 200), (2, 100, 200)),
    6: ((4, 50, 200), (4, 50, 200)),
    7: ((3, 100, 200), (3, 100, 200)),
    8: ((4, 100, 200), (3, 150, 200)),
    9: ((4, 150, 200), (3, 50, 200)),
    10: ((2, 100, 200), (3, 100, 200)),
}


def _link_config(row: tuple[float, float, float]) -> LinkConfig:
    bw, owd, q = row
    return LinkConfig(capacity_bps=bw * 1e6, prop_delay_ms=owd, queue_ms=q)


def topology_links(table: int, case: int) -> dict[str, LinkConfig]:
    if table == 1:
        if case not in TABLE1:
            raise ConfigError(f"table 1 has no case {case} (valid: 1-{len(TABLE1)})")
        return {"L1": _link_config(TABLE1[case])}
    if table == 3:
        if case not in TABLE3:
            raise ConfigError(f"table 3 has no case {case} (valid: 1-{len(TABLE3)})")
        l1, l2 = TABLE3[case]
        return {"L1": _link_config(l1), "L2": _link_config(l2)}
    raise ConfigError(f"unknown topology table {table} (valid: 1, 3)")


@dataclass
class Topology:
    table: int
    case: int
    links: dict[str, DropTailLink]
    # links that carry competing flows next to the multipath session
    background: list[str] = field(default_factory=list)

    def link(self, name: str) -> DropTailLink:
        try:
            return self.links[name]
        except KeyError:
            raise ConfigError(f"topology table {self.table} case {self.case} has no link {name!r}") from None


def build_topology(sim: Simulator, table: int, case: int) -> Topology:
    configs = topology_links(table, case)
    links = {name: DropTailLink(sim, cfg, name) for name, cfg in configs.items()}
    background = ["L1", "L1", "L2"] if table == 3 else []
    return Topology(table, case, links, background)
