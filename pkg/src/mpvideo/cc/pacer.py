from __future__ import annotations

import math

from ..net import MTU


class Pacer:
    """Token bucket refilled at the pacing rate, burst capped at one MTU."""

    def __init__(self, burst_bytes: int = MTU):
        self.burst = burst_bytes
        self.budget = float(burst_bytes)
        self.rate_bps = 0.0
        self._last = 0

    def refill(self, now: int, rate_bps: float) -> None:
        # the elapsed interval is credited at the previous rate
        if now > self._last:
            self.budget = min(self.burst, self.budget + self.rate_bps * (now - self._last) / 8e6)
        self._last = now
        self.rate_bps = rate_bps

    def can_send(self, size: int) -> bool:
        return self.rate_bps > 0 and self.budget >= size - 1e-9

    def consume(self, size: int) -> None:
        self.budget -= size

    def wait_us(self, size: int) -> int | None:
        """Microseconds until ``size`` bytes of budget accumulate; None when paused."""
        if self.rate_bps <= 0:
            return None
        missing = size - self.budget
        if missing <= 0:
            return 0
        return max(1, math.ceil(missing * 8e6 / self.rate_bps))
