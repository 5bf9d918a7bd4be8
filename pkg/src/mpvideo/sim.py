"""Discrete-event engine: integer-microsecond clock, FIFO tiebreak, seeded RNG."""

from __future__ import annotations

import heapq
import random
from typing import Any, Callable

US_PER_MS = 1_000
US_PER_S = 1_000_000


def ms(value: float) -> int:
    return int(round(value * US_PER_MS))


def seconds(value: float) -> int:
    return int(round(value * US_PER_S))


class SimulationError(RuntimeError):
    """Raised when a component breaks the engine contract (e.g. scheduling in the past)."""


class Event:
    __slots__ = ("fire_time", "seq", "callback", "args", "cancelled")

    def __init__(self, fire_time: int, seq: int, callback: Callable[..., Any], args: tuple):
        self.fire_time = fire_time
        self.seq = seq
        self.callback = callback
        self.args = args
        self.cancelled = False

    def __repr__(self) -> str:
        name = getattr(self.callback, "__qualname__", repr(self.callback))
        return f"Event(t={self.fire_time}, seq={self.seq}, {name})"


class Simulator:
    """Single-threaded event loop.

    Events are ordered by ``(fire_time, insertion counter)`` so simultaneous
    events fire in the order they were scheduled.
    """

    def __init__(self, seed: int = 0):
        self.now = 0
        self.rng = random.Random(seed)
        self._heap: list[tuple[int, int, Event]] = []
        self._counter = 0
        self._running = False
        self.processed = 0

    def schedule_at(self, t: int, callback: Callable[..., Any], *args: Any) -> Event:
        if t < self.now:
            raise SimulationError(
                f"cannot schedule {getattr(callback, '__qualname__', callback)} at {t} us; clock is {self.now} us"
            )
        self._counter += 1
        ev = Event(t, self._counter, callback, args)
        heapq.heappush(self._heap, (t, self._counter, ev))
        return ev

    def schedule_in(self, delay: int, callback: Callable[..., Any], *args: Any) -> Event:
        return self.schedule_at(self.now + delay, callback, *args)

    @staticmethod
    def cancel(event: Event | None) -> None:
        if event is not None:
            event.cancelled = True

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._heap if not ev.cancelled)

    def run_until(self, t_end: int) -> int:
        """Process every event with ``fire_time <= t_end``; leave the clock at ``t_end``."""
        if self._running:
            raise SimulationError("run_until called re-entrantly")
        if t_end < self.now:
            raise SimulationError(f"t_end {t_end} is before the clock ({self.now})")
        self._running = True
        heap = self._heap
        pop = heapq.heappop
        count = 0
        try:
            while heap and heap[0][0] <= t_end:
                t, _, ev = pop(heap)
                if ev.cancelled:
                    continue
                self.now = t
                ev.callback(*ev.args)
                count += 1
            self.now = t_end
        finally:
            self._running = False
        self.processed += count
        return count
