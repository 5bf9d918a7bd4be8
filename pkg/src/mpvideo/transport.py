"""Senders, receivers and the multipath video session, wired over simulated links.

Every received packet is acknowledged individually over a reverse channel
with the link's propagation delay; acks are never lost.  A sequence number
is declared lost once three higher ones on the same path are acked, or
when a higher one is acked more than 9/8 of its RTT after the gap was sent.
"""

from __future__ import annotations

from collections import OrderedDict, deque
from typing import Callable

from .metrics import FlowStats, FrameStats
from .net import MTU, DropTailLink, WirePacket
from .cc import Pacer
from .sched import PathSnapshot, min_cost_schedule
from .sim import Event, Simulator
from .video import Reassembler, Segment, SenderSessionBuffer, generate_frame, packetize

REORDER_THRESHOLD = 3
LOSS_TIME_FACTOR = 1.125
RTO_MIN_US = 1_000_000


class PathSender:
    """One congestion-controlled path: send buffer, pacer, loss detection.

    ``bulk`` senders always have a full-size packet ready.  Video paths take
    segments via :meth:`push`; with ``padding`` they fill idle pacing slots
    with throwaway packets so the controller keeps probing.
    """

    def __init__(
        self,
        sim: Simulator,
        link: DropTailLink,
        flow_id: str,
        cc,
        stats: FlowStats,
        *,
        bulk: bool = False,
        padding: bool = False,
        mtu: int = MTU,
    ):
        self.sim = sim
        self.link = link
        self.flow_id = flow_id
        self.cc = cc
        self.stats = stats
        self.bulk = bulk
        self.padding = padding
        self.mtu = mtu
        self.paced = not getattr(cc, "window_based", False)
        self.pacer = Pacer(mtu)
        self.buffer: deque[Segment] = deque()
        self.pending_bytes = 0
        self.next_seq = 1
        self.active = False
        self._unacked: OrderedDict[int, tuple[int, Segment | None]] = OrderedDict()
        self._wake: Event | None = None
        self._wake_rate = 0.0
        self._rto: Event | None = None
        self.on_segment_sent: Callable[[Segment, int], None] | None = None
        self.on_segment_lost: Callable[[Segment, int], None] | None = None
        self.retransmitted = 0

    # ---- control --------------------------------------------------------
    def start(self) -> None:
        self.active = True
        self.stats.active_from = self.sim.now
        self._try_send()
        if not self.paced:
            self._arm_rto()

    def stop(self) -> None:
        self.active = False
        self.stats.active_until = self.sim.now
        Simulator.cancel(self._wake)
        self._wake = None

    def push(self, segment: Segment, front: bool = False) -> None:
        if front:
            self.buffer.appendleft(segment)
        else:
            self.buffer.append(segment)
        self.pending_bytes += segment.size
        if self.active and self._wake is None:
            self._try_send()

    def snapshot(self, path_id: int) -> PathSnapshot:
        cc = self.cc
        rtt_ms = cc.latest_rtt / 1000
        rate = cc.pacing_rate()
        abw = cc.bw if getattr(cc, "bw", 0) > 0 else rate
        return PathSnapshot(path_id, rtt_ms, self.pending_bytes, rate, abw, rtt_ms / 2, cc.min_rtt / 2000)

    # ---- sending --------------------------------------------------------
    def _next_size(self) -> int:
        if self.buffer:
            return self.buffer[0].size
        if self.bulk or self.padding:
            return self.mtu
        return 0

    def _try_send(self) -> None:
        if not self.active:
            return
        sim = self.sim
        now = sim.now
        cc = self.cc
        if self._wake is not None:
            Simulator.cancel(self._wake)
            self._wake = None
        if self.paced:
            rate = cc.pacing_rate()
            self.pacer.refill(now, rate)
        while True:
            size = self._next_size()
            if size == 0 or not cc.can_send(size):
                return
            if self.paced:
                if not self.pacer.can_send(size):
                    wait = self.pacer.wait_us(size)
                    if wait is not None:
                        self._wake_rate = rate
                        self._wake = sim.schedule_at(now + wait, self._on_wake)
                    return
                self.pacer.consume(size)
            self._transmit(now, size)

    def _on_wake(self) -> None:
        self._wake = None
        self._try_send()

    def _transmit(self, now: int, size: int) -> None:
        seg = None
        if self.buffer:
            seg = self.buffer.popleft()
            self.pending_bytes -= seg.size
            seg.sends += 1
        seq = self.next_seq
        self.next_seq = seq + 1
        self.cc.on_packet_sent(now, seq, size)
        self._unacked[seq] = (now, seg)
        self.stats.on_sent(now, size, padding=seg is None and not self.bulk)
        if seg is not None and self.on_segment_sent is not None:
            self.on_segment_sent(seg, now)
        self.link.enqueue(WirePacket(self.flow_id, seq, size, now, seg))

    # ---- feedback -------------------------------------------------------
    def on_ack(self, seq: int) -> None:
        now = self.sim.now
        entry = self._unacked.pop(seq, None)
        self.cc.on_ack(now, seq)
        if entry is not None:
            self._detect_losses(now, seq, now - entry[0])
        if not self.active:
            return
        if self.paced:
            if self._wake is None or self.cc.pacing_rate() != self._wake_rate:
                self._try_send()
        else:
            self._try_send()
            self._arm_rto()

    def _detect_losses(self, now: int, acked: int, rtt: int) -> None:
        unacked = self._unacked
        horizon = LOSS_TIME_FACTOR * rtt
        while unacked:
            seq = next(iter(unacked))
            if seq >= acked:
                break
            sent_ts, seg = unacked[seq]
            if acked - seq < REORDER_THRESHOLD and now - sent_ts <= horizon:
                break
            del unacked[seq]
            self._declare_lost(now, seq, seg)

    def _declare_lost(self, now: int, seq: int, seg: Segment | None) -> None:
        self.cc.on_packet_lost(now, seq)
        self.stats.detected_losses += 1
        if seg is not None and self.on_segment_lost is not None:
            self.on_segment_lost(seg, now)

    def _arm_rto(self) -> None:
        if self._rto is None and self._unacked:
            srtt = getattr(self.cc, "srtt", 0) or 0
            self._rto = self.sim.schedule_at(self.sim.now + max(RTO_MIN_US, int(3 * srtt)), self._on_rto)

    def _on_rto(self) -> None:
        self._rto = None
        if not self._unacked:
            return
        now = self.sim.now
        oldest_ts = next(iter(self._unacked.values()))[0]
        srtt = getattr(self.cc, "srtt", 0) or 0
        if now - oldest_ts >= max(RTO_MIN_US, 3 * srtt):
            for seq, (_, seg) in list(self._unacked.items()):
                del self._unacked[seq]
                self.stats.detected_losses += 1
                if seg is not None and self.on_segment_lost is not None:
                    self.on_segment_lost(seg, now)
            self.cc.on_timeout(now)
            self._try_send()
        self._arm_rto()


class Receiver:
    """Per-flow receiver: records OWD, returns one ack per packet, hands segments upward."""

    def __init__(self, sim: Simulator, link: DropTailLink, sender: PathSender, stats: FlowStats,
                 on_segment: Callable[[int, Segment, str], None] | None = None):
        self.sim = sim
        self.sender = sender
        self.stats = stats
        self.on_segment = on_segment
        self.path = link.name
        self._ack_delay = link.config.prop_delay_us
        link.attach(sender.flow_id, self.on_packet)

    def on_packet(self, pkt: WirePacket) -> None:
        now = self.sim.now
        self.stats.record_rx(pkt.seq, pkt.size, pkt.sent_ts, now)
        if pkt.payload is not None and self.on_segment is not None:
            self.on_segment(now, pkt.payload, self.path)
        self.sim.schedule_at(now + self._ack_delay, self.sender.on_ack, pkt.seq)


class VideoSession:
    """Multipath sender/receiver pair for one ideal-encoder video stream."""

    def __init__(
        self,
        sim: Simulator,
        paths: dict[str, PathSender],
        scheduler,
        *,
        frame_rate: float = 25.0,
        max_bitrate_bps: float = 2_000_000,
        key_interval: int = 100,
        key_size_multiplier: float = 1.0,
        retention_us: int = 500_000,
        wait_us: int = 500_000,
        backlog_drain_s: float = 0.0,
        mtu: int = MTU,
        frames: FrameStats | None = None,
    ):
        self.sim = sim
        self.names = list(paths)
        self.paths = [paths[n] for n in self.names]
        self.scheduler = scheduler
        self.interval_us = int(round(1e6 / frame_rate))
        self.max_bitrate_bps = max_bitrate_bps
        self.key_interval = key_interval
        self.key_size_multiplier = key_size_multiplier
        self.mtu = mtu
        self.backlog_drain_s = backlog_drain_s
        self.buffer = SenderSessionBuffer(retention_us)
        self.reassembler = Reassembler(wait_us)
        self.frames = frames if frames is not None else FrameStats()
        self.backlog: list[Segment] = []
        self.next_fid = 0
        self.active = False
        self.retransmissions = 0
        self.expired_losses = 0
        self._timer: Event | None = None
        for path in self.paths:
            path.on_segment_sent = self.buffer.on_sent
            path.on_segment_lost = self.on_segment_lost

    def start(self) -> None:
        self.active = True
        self._on_frame()

    def stop(self) -> None:
        self.active = False
        Simulator.cancel(self._timer)

    def snapshots(self) -> list[PathSnapshot]:
        return [p.snapshot(i) for i, p in enumerate(self.paths)]

    def pending_bytes(self) -> int:
        return sum(p.pending_bytes for p in self.paths) + sum(s.size for s in self.backlog)

    def target_bitrate(self) -> float:
        target = sum(getattr(p.cc, "bw", 0.0) for p in self.paths)
        if self.backlog_drain_s > 0 and target > 0:
            # leave room to drain what is already queued locally
            target = max(0.0, target - self.pending_bytes() * 8 / self.backlog_drain_s)
        return target

    def _on_frame(self) -> None:
        if not self.active:
            return
        now = self.sim.now
        target = self.target_bitrate()
        frame = generate_frame(
            self.next_fid, now, target, self.interval_us, self.max_bitrate_bps,
            self.key_interval, self.key_size_multiplier, self.mtu,
        )
        self.next_fid += 1
        self.frames.on_generated(frame)
        offered = min(max(target, 0.0), self.max_bitrate_bps)
        self._dispatch(self.backlog + packetize(frame, self.mtu), offered)
        self.frames.on_dropped(self.reassembler.expire(now))
        self.buffer.evict(now)
        self._timer = self.sim.schedule_at(now + self.interval_us, self._on_frame)

    def _dispatch(self, segments: list[Segment], offered_bps: float) -> None:
        decision = self.scheduler.assign([s.size for s in segments], self.snapshots(), offered_bps)
        if decision is None:
            self.backlog = segments
            return
        self.backlog = []
        for seg, path_id in zip(segments, decision):
            self.paths[path_id].push(seg)

    def on_segment_lost(self, seg: Segment, now: int) -> None:
        if self.buffer.lookup(seg.key, now) is None:
            self.expired_losses += 1
            return
        target = min_cost_schedule([seg.size], self.snapshots())
        if target is None:
            self.expired_losses += 1
            return
        self.retransmissions += 1
        self.paths[target[0]].push(seg, front=True)

    def on_segment(self, now: int, seg: Segment, path: str) -> None:
        frame = self.reassembler.on_segment(now, seg, path)
        if frame is not None:
            self.frames.on_delivered(frame)
        elif seg.fid in self.reassembler.dropped:
            self.frames.on_dropped([seg.fid])
