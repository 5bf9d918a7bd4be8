"""Delay-BBR and a baseline BBR with the original gain cycle.

Both run the same machinery: per-packet send records, a min(send-rate,
ack-rate) bandwidth sampler feeding a 10-round max filter, and the four-mode
state machine.  Delay-BBR additionally watches a smoothed RTT during ProbeBW
and drops into ProbeRTT (gain 0.75) whenever it exceeds ``beta`` times the
episode's baseline RTT; that drain episode ends as soon as inflight falls
under the BDP.

ProbeRTT entered because min_rtt expired is a measurement episode for both
variants: inflight is held at four packets for 200 ms.  If no sample within
``similar_min_rtt`` of the estimate turned up, the estimate moves towards the
episode's lowest RTT, rising by at most that factor per episode so a flow that
never sees an empty queue cannot ratchet it up to a full one.  StartUp
inflight is capped at ``startup_cwnd_gain`` x BDP.

All timestamps and RTTs are integer microseconds; rates are bits/second.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .filters import WindowedMax

INF = math.inf

DELAY_BBR_GAIN_CYCLE = (1.11, 0.9, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
BASELINE_GAIN_CYCLE = (1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)


class Mode(enum.Enum):
    STARTUP = "StartUp"
    DRAIN = "Drain"
    PROBE_BW = "ProbeBW"
    PROBE_RTT = "ProbeRTT"


@dataclass(frozen=True)
class CcConstants:
    alpha: float = 0.9
    beta: float = 1.2
    min_rtt_expiry_ms: float = 10_000.0
    gain_cycle: tuple[float, ...] = DELAY_BBR_GAIN_CYCLE
    startup_gain: float = 2 / math.log(2)
    drain_gain: float = 0.75
    backoff_gain: float = 0.75
    similar_min_rtt: float = 1.125
    bw_window_rounds: int = 10
    startup_growth_target: float = 1.25
    startup_full_bw_rounds: int = 3
    initial_rtt_ms: float = 100.0
    initial_window_packets: int = 10
    mtu: int = 1000
    # False selects the baseline behaviour: no delay trigger, classic ProbeRTT
    delay_response: bool = True
    probe_rtt_packets: int = 4
    probe_rtt_duration_ms: float = 200.0
    # StartUp inflight cap as a multiple of bw x min_rtt (0 disables)
    startup_cwnd_gain: float = 2 / math.log(2)

    def __post_init__(self):
        if len(self.gain_cycle) != 8:
            raise ValueError(f"gain cycle needs 8 entries, got {len(self.gain_cycle)}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.beta <= 1:
            raise ValueError(f"beta must exceed 1, got {self.beta}")

    @property
    def initial_rate_bps(self) -> float:
        return self.initial_window_packets * self.mtu * 8 / (self.initial_rtt_ms / 1000)


DELAY_BBR = CcConstants()
BASELINE_BBR = CcConstants(gain_cycle=BASELINE_GAIN_CYCLE, delay_response=False)


class PacketRecord:
    """Send-time bookkeeping for one transport sequence number.

    Besides ``sent_ts``/``bytes`` it snapshots the sampler counters so the
    ack can compute send and ack rates over the packet's flight interval.
    """

    __slots__ = (
        "seq", "bytes", "sent_ts",
        "total_sent", "first_total_sent", "first_sent_ts",
        "delivered", "delivered_ts",
    )

    def __init__(self, seq, nbytes, sent_ts, total_sent, first_total_sent, first_sent_ts, delivered, delivered_ts):
        self.seq = seq
        self.bytes = nbytes
        self.sent_ts = sent_ts
        self.total_sent = total_sent
        self.first_total_sent = first_total_sent
        self.first_sent_ts = first_sent_ts
        self.delivered = delivered
        self.delivered_ts = delivered_ts


class DelayBbr:
    name = "delay_bbr"

    def __init__(self, constants: CcConstants | None = None):
        self.constants = c = constants if constants is not None else DELAY_BBR
        self._alpha = c.alpha
        self._expiry_us = c.min_rtt_expiry_ms * 1000
        self.mode = Mode.STARTUP
        self.min_rtt = 0
        self.min_rtt_ts = 0
        self._probe_min = INF
        self._expiry_episode = False
        self.base_line_rtt = INF
        self.srtt = 0.0
        self.latest_rtt = 0
        self.inflight = 0
        self.last_sent_packet = 0
        self.seq_at_backoff = 0
        self.bw = 0.0
        self.bdp = 0.0
        self.pacing_gain = c.startup_gain
        self.cycle_index = 0
        self.sent_packets: dict[int, PacketRecord] = {}

        self.total_sent = 0
        self.total_acked = 0
        self.total_lost = 0
        self._last_ack_ts = 0
        self._last_acked_sent_ts = 0
        self._last_acked_total_sent = 0
        self._max_bw = WindowedMax(c.bw_window_rounds)
        self.round_count = 0
        self._round_end_seq = 0

        self._full_bw = 0.0
        self._full_bw_rounds = 0
        self._cycle_start = 0
        self._probe_rtt_start = 0
        self._pacing_rate = c.initial_rate_bps
        self.untracked_acks = 0
        self.probe_rtt_entries = 0
        self.congestion_backoffs = 0

    # ---- send -----------------------------------------------------------
    def on_packet_sent(self, now: int, seq: int, payload: int) -> None:
        if seq <= self.last_sent_packet:
            raise ValueError(f"sequence {seq} not above last sent {self.last_sent_packet}")
        if payload <= 0:
            raise ValueError(f"payload must be positive, got {payload}")
        if self.inflight == 0:
            # restart the rate sampler after an idle period
            self._last_ack_ts = now
            self._last_acked_sent_ts = now
            self._last_acked_total_sent = self.total_sent
        self.total_sent += payload
        self.sent_packets[seq] = PacketRecord(
            seq, payload, now,
            self.total_sent, self._last_acked_total_sent, self._last_acked_sent_ts,
            self.total_acked, self._last_ack_ts,
        )
        self.inflight += payload
        self.last_sent_packet = seq

    # ---- rtt and inflight -----------------------------------------------
    def update_rtt_and_inflight(self, now: int, seq: int) -> int | None:
        rec = self.sent_packets.pop(seq, None)
        if rec is None:
            self.untracked_acks += 1
            return None
        return self._update_rtt_and_inflight(now, rec)

    def _update_rtt_and_inflight(self, now: int, rec: PacketRecord) -> int:
        rtt = now - rec.sent_ts
        self.latest_rtt = rtt
        self.inflight -= rec.bytes
        if rtt < self.min_rtt or self.min_rtt == 0:
            self.min_rtt = rtt
            self.min_rtt_ts = now
        if rtt < self._probe_min:
            self._probe_min = rtt
        if rtt < self.constants.similar_min_rtt * self.min_rtt:
            self.min_rtt_ts = now
        if rec.seq > self.seq_at_backoff:
            if rtt < self.base_line_rtt:
                self.base_line_rtt = rtt
                self.srtt = rtt
            self.srtt = (1 - self._alpha) * self.srtt + self._alpha * rtt
        return rtt

    # ---- congestion check -----------------------------------------------
    def check_if_congestion(self) -> bool:
        if not self.constants.delay_response:
            return False
        if self.srtt == 0 or self.base_line_rtt == INF:
            return False
        return self.mode is Mode.PROBE_BW and self.srtt > self.constants.beta * self.base_line_rtt

    # ---- ack ------------------------------------------------------------
    def on_ack(self, now: int, seq: int) -> None:
        rec = self.sent_packets.pop(seq, None)
        if rec is None:
            self.untracked_acks += 1
            return
        self._update_rtt_and_inflight(now, rec)
        round_started = self._update_bandwidth(now, rec)
        congested = self.check_if_congestion()
        min_rtt_expired = now - self.min_rtt_ts > self._expiry_us
        self.maybe_enter_or_exit_drain(now, min_rtt_expired, congested)
        self._advance(now, round_started)
        self._update_pacing_rate()

    def on_packet_lost(self, now: int, seq: int) -> None:
        rec = self.sent_packets.pop(seq, None)
        if rec is None:
            return
        self.inflight -= rec.bytes
        self.total_lost += rec.bytes

    def _update_bandwidth(self, now: int, rec: PacketRecord) -> bool:
        self.total_acked += rec.bytes
        self._last_ack_ts = now
        self._last_acked_sent_ts = rec.sent_ts
        self._last_acked_total_sent = rec.total_sent

        sample = INF
        send_dt = rec.sent_ts - rec.first_sent_ts
        if send_dt > 0:
            sample = (rec.total_sent - rec.first_total_sent) * 8e6 / send_dt
        ack_dt = now - rec.delivered_ts
        if ack_dt > 0:
            ack_rate = (self.total_acked - rec.delivered) * 8e6 / ack_dt
            if ack_rate < sample:
                sample = ack_rate

        round_started = False
        if rec.seq > self._round_end_seq:
            self.round_count += 1
            self._round_end_seq = self.last_sent_packet
            round_started = True
        if sample != INF:
            self.bw = self._max_bw.update(sample, self.round_count)
        else:
            self.bw = self._max_bw.expire(self.round_count)
        return round_started

    # ---- ProbeRTT entry and exit ----------------------------------------
    def maybe_enter_or_exit_drain(self, now: int, min_rtt_expired: bool, congested: bool) -> None:
        if self.mode is not Mode.PROBE_RTT and (min_rtt_expired or congested):
            self.mode = Mode.PROBE_RTT
            self.seq_at_backoff = self.last_sent_packet
            self.srtt = 0.0
            self.base_line_rtt = INF
            self.pacing_gain = self.constants.backoff_gain if self.constants.delay_response else 1.0
            self.bdp = self.bw * self.min_rtt / 8e6
            self._probe_rtt_start = now
            self.probe_rtt_entries += 1
            self._probe_min = INF
            self._expiry_episode = not congested
            if congested:
                self.congestion_backoffs += 1
        if self.mode is Mode.PROBE_RTT and self.inflight < self.bdp:
            # an expiry episode also holds the four-packet floor for its full duration
            if not self._expiry_episode or now - self._probe_rtt_start >= self.constants.probe_rtt_duration_ms * 1000:
                self._enter_probe_bw(now)

    def _enter_probe_bw(self, now: int) -> None:
        if (self.mode is Mode.PROBE_RTT and self._expiry_episode and self._probe_min < INF
                and now - self.min_rtt_ts > self._expiry_us):
            # nothing below the old estimate was seen: adopt the episode minimum
            self.min_rtt = min(self._probe_min, self.min_rtt * self.constants.similar_min_rtt)
            self.min_rtt_ts = now
        self.mode = Mode.PROBE_BW
        self.cycle_index = 0
        self._cycle_start = now
        self.pacing_gain = self.constants.gain_cycle[0]

    def _advance(self, now: int, round_started: bool) -> None:
        c = self.constants
        mode = self.mode
        if mode is Mode.STARTUP:
            if round_started:
                if self.bw >= self._full_bw * c.startup_growth_target:
                    self._full_bw = self.bw
                    self._full_bw_rounds = 0
                else:
                    self._full_bw_rounds += 1
                    if self._full_bw_rounds >= c.startup_full_bw_rounds:
                        self.mode = mode = Mode.DRAIN
                        self.pacing_gain = c.drain_gain
        if mode is Mode.DRAIN:
            self.bdp = self.bw * self.min_rtt / 8e6
            if self.inflight < self.bdp:
                self._enter_probe_bw(now)
        elif mode is Mode.PROBE_BW:
            if self.min_rtt > 0 and now - self._cycle_start > self.min_rtt:
                self.cycle_index = (self.cycle_index + 1) % len(c.gain_cycle)
                self._cycle_start = now
                self.pacing_gain = c.gain_cycle[self.cycle_index]

    def _update_pacing_rate(self) -> None:
        if self.bw <= 0:
            return
        rate = self.pacing_gain * self.bw
        if self.mode is Mode.STARTUP and rate < self._pacing_rate:
            return
        self._pacing_rate = rate

    # ---- pacer-facing ---------------------------------------------------
    def pacing_rate(self) -> float:
        return self._pacing_rate

    def can_send(self, size: int) -> bool:
        c = self.constants
        if self.mode is Mode.PROBE_RTT and self._expiry_episode:
            return self.inflight + size <= c.probe_rtt_packets * c.mtu
        if self.mode is Mode.STARTUP and c.startup_cwnd_gain > 0 and self.bw > 0 and self.min_rtt > 0:
            cap = max(c.startup_cwnd_gain * self.bw * self.min_rtt / 8e6, c.probe_rtt_packets * c.mtu)
            return self.inflight + size <= cap
        return True

    def is_probing_up(self) -> bool:
        return self.pacing_gain > 1.0

    def trace_row(self) -> tuple:
        return (
            self.mode.value,
            round(self._pacing_rate),
            round(self.bw),
            round(self.srtt / 1000, 3),
            round(self.min_rtt / 1000, 3),
            self.inflight,
        )


class BaselineBbr(DelayBbr):
    name = "baseline_bbr"

    def __init__(self, constants: CcConstants | None = None):
        base = constants if constants is not None else BASELINE_BBR
        if base.delay_response:
            base = replace(base, delay_response=False)
        super().__init__(base)
