"""Ideal video source, segmentation, sender retention buffer and receiver reassembly."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from .net import MTU

MAX_BITRATE_BPS = 2_000_000
RETENTION_US = 500_000
WAIT_US = 500_000


@dataclass(frozen=True)
class VideoFrame:
    fid: int
    size: int
    is_key: bool
    gen_ts: int


class Segment:
    """Wire unit of a frame; ``gen_ts`` rides in the header so the receiver can time frames."""

    __slots__ = ("fid", "total", "index", "size", "gen_ts", "is_key", "sends")

    def __init__(self, fid: int, total: int, index: int, size: int, gen_ts: int, is_key: bool = False):
        if not 0 <= index < total:
            raise ValueError(f"segment index {index} outside frame of {total}")
        self.fid = fid
        self.total = total
        self.index = index
        self.size = size
        self.gen_ts = gen_ts
        self.is_key = is_key
        self.sends = 0

    @property
    def key(self) -> tuple[int, int]:
        return (self.fid, self.index)

    def __repr__(self) -> str:
        return f"Segment(fid={self.fid}, {self.index + 1}/{self.total}, {self.size}B)"


def frame_size(target_bps: float, interval_us: int, max_bitrate_bps: float = MAX_BITRATE_BPS, mtu: int = MTU) -> int:
    rate = min(max(target_bps, 0.0), max_bitrate_bps)
    size = int(rate * interval_us / 8e6)
    # nothing estimated yet: one full packet keeps the paths probing
    return size if size > 0 else mtu


def generate_frame(
    fid: int,
    now: int,
    target_bps: float,
    interval_us: int = 40_000,
    max_bitrate_bps: float = MAX_BITRATE_BPS,
    key_interval: int = 100,
    key_size_multiplier: float = 1.0,
    mtu: int = MTU,
) -> VideoFrame:
    size = frame_size(target_bps, interval_us, max_bitrate_bps, mtu)
    is_key = key_interval > 0 and fid % key_interval == 0
    if is_key:
        size = max(1, int(size * key_size_multiplier))
    return VideoFrame(fid, size, is_key, now)


def packetize(frame: VideoFrame, mtu: int = MTU) -> list[Segment]:
    if frame.size <= 0:
        raise ValueError("frame size must be positive")
    total = -(-frame.size // mtu)
    segments = []
    for index in range(total):
        size = min(mtu, frame.size - index * mtu)
        segments.append(Segment(frame.fid, total, index, size, frame.gen_ts, frame.is_key))
    return segments


class SenderSessionBuffer:
    """Copies of sent segments, kept for retransmission for at most ``retention_us``."""

    def __init__(self, retention_us: int = RETENTION_US):
        self.retention_us = retention_us
        self._entries: OrderedDict[tuple[int, int], tuple[Segment, int]] = OrderedDict()
        self.evicted = 0

    def __len__(self) -> int:
        return len(self._entries)

    def on_sent(self, segment: Segment, now: int) -> None:
        if segment.key not in self._entries:
            self._entries[segment.key] = (segment, now)

    def evict(self, now: int) -> None:
        entries = self._entries
        while entries:
            key, (_, first_sent) = next(iter(entries.items()))
            if now - first_sent <= self.retention_us:
                break
            entries.popitem(last=False)
            self.evicted += 1

    def lookup(self, key: tuple[int, int], now: int) -> Segment | None:
        self.evict(now)
        entry = self._entries.get(key)
        return entry[0] if entry is not None else None

    def first_sent(self, key: tuple[int, int]) -> int | None:
        entry = self._entries.get(key)
        return entry[1] if entry is not None else None


@dataclass
class FrameRecord:
    fid: int
    gen_ts: int
    total: int
    is_key: bool
    first_arrival: int
    received: bytearray
    count: int = 0
    bytes: int = 0
    paths: set = field(default_factory=set)


@dataclass(frozen=True)
class DeliveredFrame:
    fid: int
    gen_ts: int
    delivered_ts: int
    size: int
    is_key: bool
    paths: tuple[str, ...]

    @property
    def delay_us(self) -> int:
        return self.delivered_ts - self.gen_ts


class Reassembler:
    """Session-level receive buffer.

    Frames are delivered as soon as complete, in any fid order.  Incomplete
    non-key frames are dropped once they have waited ``wait_us`` since their
    first segment arrived; key frames wait for retransmissions indefinitely.
    """

    def __init__(self, wait_us: int = WAIT_US):
        self.wait_us = wait_us
        self.pending: dict[int, FrameRecord] = {}
        self.delivered: dict[int, DeliveredFrame] = {}
        self.dropped: dict[int, int] = {}
        self.duplicates = 0
        self.late_segments = 0

    def on_segment(self, now: int, segment: Segment, path: str = "") -> DeliveredFrame | None:
        fid = segment.fid
        if fid in self.delivered or fid in self.dropped:
            self.late_segments += 1
            return None
        rec = self.pending.get(fid)
        if rec is None:
            rec = FrameRecord(fid, segment.gen_ts, segment.total, segment.is_key, now, bytearray(segment.total))
            self.pending[fid] = rec
        elif not rec.is_key and now - rec.first_arrival > self.wait_us:
            self._drop(rec, now)
            self.late_segments += 1
            return None
        if rec.received[segment.index]:
            self.duplicates += 1
            return None
        rec.received[segment.index] = 1
        rec.count += 1
        rec.bytes += segment.size
        if path:
            rec.paths.add(path)
        if rec.count == rec.total:
            del self.pending[fid]
            frame = DeliveredFrame(fid, rec.gen_ts, now, rec.bytes, rec.is_key, tuple(sorted(rec.paths)))
            self.delivered[fid] = frame
            return frame
        return None

    def _drop(self, rec: FrameRecord, now: int) -> None:
        del self.pending[rec.fid]
        self.dropped[rec.fid] = now

    def expire(self, now: int) -> list[int]:
        expired = [
            rec for rec in self.pending.values()
            if not rec.is_key and now - rec.first_arrival > self.wait_us
        ]
        for rec in expired:
            self._drop(rec, now)
        return [rec.fid for rec in expired]
