"""Reno-style loss-based window controller used as background traffic."""

from __future__ import annotations

import math


class Aimd:
    """Slow start until the first loss, then +1 MTU per RTT and halve on loss.

    At most one halving per window: losses of packets sent before the last
    reduction are absorbed by that reduction.
    """

    name = "aimd"
    window_based = True

    def __init__(self, mtu: int = 1000, initial_window_packets: int = 2):
        self.mtu = mtu
        self.cwnd = float(initial_window_packets * mtu)
        self.ssthresh = math.inf
        self.inflight = 0
        self.sent: dict[int, int] = {}
        self.last_sent_packet = 0
        self._recovery_seq = 0
        self.srtt = 0.0
        self.latest_rtt = 0
        self.min_rtt = 0
        self.reductions = 0
        self._sent_ts: dict[int, int] = {}

    def on_packet_sent(self, now: int, seq: int, payload: int) -> None:
        if seq <= self.last_sent_packet:
            raise ValueError(f"sequence {seq} not above last sent {self.last_sent_packet}")
        self.sent[seq] = payload
        self._sent_ts[seq] = now
        self.inflight += payload
        self.last_sent_packet = seq

    def on_ack(self, now: int, seq: int) -> None:
        size = self.sent.pop(seq, None)
        if size is None:
            return
        rtt = now - self._sent_ts.pop(seq)
        self.latest_rtt = rtt
        if self.min_rtt == 0 or rtt < self.min_rtt:
            self.min_rtt = rtt
        self.srtt = rtt if self.srtt == 0 else 0.875 * self.srtt + 0.125 * rtt
        self.inflight -= size
        if self.cwnd < self.ssthresh:
            self.cwnd += size
        else:
            self.cwnd += self.mtu * size / self.cwnd

    def on_packet_lost(self, now: int, seq: int) -> None:
        size = self.sent.pop(seq, None)
        if size is None:
            return
        self._sent_ts.pop(seq, None)
        self.inflight -= size
        if seq > self._recovery_seq:
            self.cwnd = max(self.cwnd / 2, 2 * self.mtu)
            self.ssthresh = self.cwnd
            self._recovery_seq = self.last_sent_packet
            self.reductions += 1

    def on_timeout(self, now: int) -> None:
        for seq in list(self.sent):
            self.on_packet_lost(now, seq)
        self.ssthresh = max(self.cwnd, 2 * self.mtu)
        self.cwnd = float(self.mtu)

    def pacing_rate(self) -> float:
        return 0.0

    def can_send(self, size: int) -> bool:
        return self.inflight + size <= self.cwnd

    def trace_row(self) -> tuple:
        mode = "SlowStart" if self.cwnd < self.ssthresh else "CongAvoid"
        rate = self.cwnd * 8e6 / self.srtt if self.srtt else 0
        return (mode, round(rate), round(rate), round(self.srtt / 1000, 3), round(self.min_rtt / 1000, 3), self.inflight)
