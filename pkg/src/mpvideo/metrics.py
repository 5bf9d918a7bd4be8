"""Per-packet and per-frame measurement, run summaries and CSV output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .sim import SimulationError, US_PER_S
from .video import DeliveredFrame, VideoFrame

SCHEMA_VERSION = 1

FLOW_TRACE_HEADER = ("time_us", "flow_id", "mode", "pacing_rate_bps", "bw_bps", "srtt_ms", "min_rtt_ms", "inflight_bytes")
RATE_TRACE_HEADER = ("window_start_s", "flow_id", "send_rate_bps", "recv_rate_bps")
FRAME_TRACE_HEADER = ("fid", "gen_ts_us", "delivered_ts_us", "size_bytes", "is_key", "paths_used")
SUMMARY_HEADER = (
    "schema_version", "scenario", "scope", "cc", "scheduler",
    "avg_owd_ms", "avg_owd_ms_untrimmed", "loss_pct", "avg_rate_bps",
    "sent_packets", "received_packets", "lost_packets",
    "avg_frame_delay_ms", "avg_frame_delay_ms_untrimmed",
    "frames_generated", "frames_delivered", "frames_dropped",
)


class FlowStats:
    """Counters for one transport flow (one path of one sender)."""

    def __init__(self, flow_id: str, cc: str, warmup_us: int = 5 * US_PER_S, window_us: int = US_PER_S):
        self.flow_id = flow_id
        self.cc = cc
        self.warmup_us = warmup_us
        self.window_us = window_us
        self.sent_packets = 0
        self.sent_bytes = 0
        self.padding_bytes = 0
        self.detected_losses = 0
        self.received_packets = 0
        self.received_bytes = 0
        self.highest_seq = 0
        self.owd_sum = 0
        self.owd_count = 0
        self.owd_sum_trim = 0
        self.owd_count_trim = 0
        self.send_windows: list[int] = []
        self.recv_windows: list[int] = []
        self.active_from = 0
        self.active_until: int | None = None

    @staticmethod
    def _add(windows: list[int], idx: int, size: int) -> None:
        if idx >= len(windows):
            windows.extend([0] * (idx + 1 - len(windows)))
        windows[idx] += size

    def on_sent(self, now: int, size: int, padding: bool = False) -> None:
        self.sent_packets += 1
        self.sent_bytes += size
        if padding:
            self.padding_bytes += size
        self._add(self.send_windows, now // self.window_us, size)

    def record_rx(self, seq: int, size: int, sent_ts: int, recv_ts: int) -> None:
        owd = recv_ts - sent_ts
        if owd < 0:
            raise SimulationError(f"{self.flow_id}#{seq}: received {-owd} us before it was sent")
        self.received_packets += 1
        self.received_bytes += size
        if seq > self.highest_seq:
            self.highest_seq = seq
        self.owd_sum += owd
        self.owd_count += 1
        if sent_ts >= self.warmup_us:
            self.owd_sum_trim += owd
            self.owd_count_trim += 1
        self._add(self.recv_windows, recv_ts // self.window_us, size)

    @property
    def lost_packets(self) -> int:
        """Sequence-gap audit: every seq below the highest received one that never arrived."""
        return self.highest_seq - self.received_packets

    @property
    def loss_rate(self) -> float:
        return self.lost_packets / self.highest_seq if self.highest_seq else 0.0

    @property
    def avg_owd_ms(self) -> float:
        return self.owd_sum_trim / self.owd_count_trim / 1000 if self.owd_count_trim else math.nan

    @property
    def avg_owd_ms_untrimmed(self) -> float:
        return self.owd_sum / self.owd_count / 1000 if self.owd_count else math.nan

    def send_rates(self) -> list[float]:
        return [b * 8e6 / self.window_us for b in self.send_windows]

    def recv_rates(self) -> list[float]:
        return [b * 8e6 / self.window_us for b in self.recv_windows]

    def mean_send_rate(self, start_s: float | None = None, stop_s: float | None = None) -> float:
        """Mean of 1 s window send rates over [start_s, stop_s) (defaults: the flow's active span)."""
        first = int((start_s * US_PER_S if start_s is not None else self.active_from) // self.window_us)
        end_us = stop_s * US_PER_S if stop_s is not None else self.active_until
        last = int(end_us // self.window_us) if end_us is not None else len(self.send_windows)
        rates = self.send_rates()
        rates += [0.0] * max(0, last - len(rates))
        window = rates[first:last]
        return sum(window) / len(window) if window else 0.0


class FrameStats:
    def __init__(self, warmup_us: int = 5 * US_PER_S):
        self.warmup_us = warmup_us
        self.generated: dict[int, VideoFrame] = {}
        self.delivered: dict[int, DeliveredFrame] = {}
        self.dropped: set[int] = set()

    def on_generated(self, frame: VideoFrame) -> None:
        self.generated[frame.fid] = frame

    def on_delivered(self, frame: DeliveredFrame) -> None:
        self.delivered[frame.fid] = frame

    def on_dropped(self, fids: Iterable[int]) -> None:
        self.dropped.update(fids)

    @property
    def pending(self) -> int:
        return len(self.generated) - len(self.delivered) - len(self.dropped)

    def _avg(self, trim: bool) -> float:
        delays = [f.delay_us for f in self.delivered.values() if not trim or f.gen_ts >= self.warmup_us]
        return sum(delays) / len(delays) / 1000 if delays else math.nan

    @property
    def avg_delay_ms(self) -> float:
        return self._avg(trim=True)

    @property
    def avg_delay_ms_untrimmed(self) -> float:
        return self._avg(trim=False)


@dataclass
class SummaryRow:
    scenario: str
    scope: str
    cc: str
    scheduler: str
    avg_owd_ms: float
    avg_owd_ms_untrimmed: float
    loss_pct: float
    avg_rate_bps: float
    sent_packets: int
    received_packets: int
    lost_packets: int
    avg_frame_delay_ms: float = math.nan
    avg_frame_delay_ms_untrimmed: float = math.nan
    frames_generated: int = 0
    frames_delivered: int = 0
    frames_dropped: int = 0

    def as_csv(self) -> list:
        def fmt(v):
            if isinstance(v, float):
                return "" if math.isnan(v) else f"{v:.4f}"
            return v

        return [SCHEMA_VERSION] + [fmt(getattr(self, name)) for name in SUMMARY_HEADER[1:]]


def flow_row(scenario: str, flow: FlowStats, scheduler: str = "") -> SummaryRow:
    return SummaryRow(
        scenario, flow.flow_id, flow.cc, scheduler,
        flow.avg_owd_ms, flow.avg_owd_ms_untrimmed, 100 * flow.loss_rate, flow.mean_send_rate(),
        flow.sent_packets, flow.received_packets, flow.lost_packets,
    )


def pooled_row(scenario: str, flows: Sequence[FlowStats], scope: str = "all", scheduler: str = "",
               frames: FrameStats | None = None) -> SummaryRow:
    """Aggregate over flows: OWD averaged over all packets, loss over all packets."""
    owd_sum = sum(f.owd_sum_trim for f in flows)
    owd_n = sum(f.owd_count_trim for f in flows)
    raw_sum = sum(f.owd_sum for f in flows)
    raw_n = sum(f.owd_count for f in flows)
    lost = sum(f.lost_packets for f in flows)
    known = sum(f.highest_seq for f in flows)
    ccs = sorted({f.cc for f in flows})
    row = SummaryRow(
        scenario, scope, "+".join(ccs), scheduler,
        owd_sum / owd_n / 1000 if owd_n else math.nan,
        raw_sum / raw_n / 1000 if raw_n else math.nan,
        100 * lost / known if known else 0.0,
        sum(f.mean_send_rate() for f in flows) / len(flows) if flows else 0.0,
        sum(f.sent_packets for f in flows), sum(f.received_packets for f in flows), lost,
    )
    if frames is not None:
        row.avg_frame_delay_ms = frames.avg_delay_ms
        row.avg_frame_delay_ms_untrimmed = frames.avg_delay_ms_untrimmed
        row.frames_generated = len(frames.generated)
        row.frames_delivered = len(frames.delivered)
        row.frames_dropped = len(frames.dropped)
    return row


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_summary(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
