from __future__ import annotations

from collections import deque


class WindowedMax:
    """Running maximum over the last ``window`` rounds (monotone deque)."""

    def __init__(self, window: int):
        self.window = window
        self._samples: deque[tuple[int, float]] = deque()

    def update(self, value: float, round_count: int) -> float:
        samples = self._samples
        while samples and samples[-1][1] <= value:
            samples.pop()
        samples.append((round_count, value))
        return self.expire(round_count)

    def expire(self, round_count: int) -> float:
        samples = self._samples
        while len(samples) > 1 and samples[0][0] <= round_count - self.window:
            samples.popleft()
        return samples[0][1] if samples else 0.0

    def get(self) -> float:
        return self._samples[0][1] if self._samples else 0.0

    def reset(self) -> None:
        self._samples.clear()
