"""Multipath packet schedulers.

Every scheduler maps a batch of packet sizes onto path indices given one
:class:`PathSnapshot` per path.  ``None`` means no path can take traffic
right now and the batch should stay in the session buffer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .net import MTU

SCHEDULERS = ("min_cost", "wrr", "edcld", "sfl")


@dataclass(frozen=True)
class PathSnapshot:
    path_id: int
    rtt_ms: float
    pending_bytes: int
    pacing_rate_bps: float
    abw_bps: float
    owd_ms: float
    # propagation-only estimate (min RTT / 2), used as EDCLD's fixed delay
    min_owd_ms: float = 0.0


def path_cost(snap: PathSnapshot, extra_bytes: int = 0) -> float:
    """Expected delivery delay in ms: half the RTT plus the local backlog drain time."""
    if snap.pacing_rate_bps <= 0:
        return math.inf
    return snap.rtt_ms / 2 + (snap.pending_bytes + extra_bytes) * 8000 / snap.pacing_rate_bps


def min_cost_schedule(sizes: Sequence[int], snapshots: Sequence[PathSnapshot]) -> list[int] | None:
    usable = [s for s in snapshots if s.pacing_rate_bps > 0]
    if not usable:
        return None
    half_rtt = [s.rtt_ms / 2 for s in usable]
    ms_per_byte = [8000 / s.pacing_rate_bps for s in usable]
    queued = [s.pending_bytes for s in usable]
    decision = []
    for size in sizes:
        best = 0
        best_cost = half_rtt[0] + queued[0] * ms_per_byte[0]
        for k in range(1, len(usable)):
            cost = half_rtt[k] + queued[k] * ms_per_byte[k]
            if cost < best_cost:
                best, best_cost = k, cost
        queued[best] += size
        decision.append(usable[best].path_id)
    return decision


def wrr_loads(abw: Sequence[float], n: int) -> list[int]:
    total = sum(abw)
    if total <= 0:
        raise ValueError("WRR needs positive aggregate bandwidth")
    # the epsilon keeps exact ratios like 5*3/5 from rounding up to 4
    return [max(0, math.ceil(n * a / total - 1e-9)) for a in abw]


class WrrScheduler:
    """Rounds of ``n`` packets split by ceil(n * ABW_i / sum ABW), dealt path by path."""

    name = "wrr"

    def __init__(self, round_size: int = 10):
        if round_size < 1:
            raise ValueError("round size must be >= 1")
        self.round_size = round_size
        self._loads: list[int] = []
        self._pos = 0
        self._left = 0
        self.rounds = 0

    def _start_round(self, snapshots: Sequence[PathSnapshot]) -> bool:
        abw = [max(0.0, s.abw_bps) for s in snapshots]
        if sum(abw) <= 0:
            return False
        self._loads = wrr_loads(abw, self.round_size)
        self._pos = 0
        self._left = self._loads[0]
        self.rounds += 1
        return True

    def assign(self, sizes: Sequence[int], snapshots: Sequence[PathSnapshot], offered_bps: float = 0.0) -> list[int] | None:
        if len(self._loads) != len(snapshots):
            self._loads, self._left = [], 0
        decision = []
        for _ in sizes:
            while self._left == 0:
                if not self._loads or self._pos >= len(self._loads) - 1:
                    if not self._start_round(snapshots):
                        return None
                else:
                    self._pos += 1
                    self._left = self._loads[self._pos]
            decision.append(snapshots[self._pos].path_id)
            self._left -= 1
        return decision


def edcld_cost(delay_s: float, mu_pps: float, ratio: float, offered_pps: float, w: float, queued_pkts: float) -> float:
    """Hybrid M/M/1 / unknown-traffic path cost in seconds."""
    headroom = mu_pps - ratio * offered_pps
    if headroom <= 0 or mu_pps <= 0:
        return math.inf
    return delay_s + (1 - w) / headroom + w * queued_pkts / mu_pps


def edcld_shift(
    best: tuple[float, float, float, float],
    worst: tuple[float, float, float, float],
    offered_pps: float,
    w: float,
) -> float:
    """Ratio moved from the worst to the best path so both costs meet.

    ``best``/``worst`` are ``(delay_s, mu_pps, ratio, queued_pkts)``.  Solves
    the quadratic in x = shift * offered_pps; if the equal-cost point lies
    beyond the ratio bounds the shift is clamped there, and 0 is returned
    when no stable admissible shift exists.
    """
    if w >= 1 or offered_pps <= 0:
        return 0.0
    d_b, mu_b, psi_b, q_b = best
    d_w, mu_w, psi_w, q_w = worst
    a = mu_b - psi_b * offered_pps
    c = mu_w - psi_w * offered_pps
    k = (d_w + w * q_w / mu_w) - (d_b + w * q_b / mu_b)
    lo = max(0.0, -c)
    hi = min(a, (1 - psi_b) * offered_pps, psi_w * offered_pps)
    if a <= 0 or hi <= lo:
        return 0.0
    u = 1 - w
    if abs(k) < 1e-15:
        roots = [(a - c) / 2]
    else:
        qa, qb, qc = k, 2 * u - k * (a - c), u * (c - a) - k * a * c
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            roots = []
        else:
            sq = math.sqrt(disc)
            roots = [(-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)]
    admissible = [x for x in roots if -c < x < a and x >= 0]
    if admissible:
        x = min(admissible)
        if x <= hi:
            return x / offered_pps
    # equal cost unreachable inside the bounds: go as far as allowed
    bound = min((1 - psi_b) * offered_pps, psi_w * offered_pps)
    if -c < bound < a and bound > 0:
        return bound / offered_pps
    return 0.0


def edcld_rebalance(
    ratios: Sequence[float],
    snapshots: Sequence[PathSnapshot],
    offered_pps: float,
    w: float = 0.8,
    mtu: int = MTU,
) -> list[float]:
    """One best/worst rebalance step; paths in between keep their ratio."""
    ratios = list(ratios)
    if len(ratios) < 2 or offered_pps <= 0:
        return ratios
    params = []
    for s, psi in zip(snapshots, ratios):
        params.append((s.min_owd_ms / 1000, s.abw_bps / (mtu * 8), psi, s.pending_bytes / mtu))
    costs = [edcld_cost(d, mu, psi, offered_pps, w, q) for d, mu, psi, q in params]
    best = min(range(len(costs)), key=lambda i: (costs[i], i))
    worst = max(range(len(costs)), key=lambda i: (costs[i], -i))
    if best == worst or costs[best] == math.inf or costs[best] >= costs[worst]:
        return ratios
    if params[best][1] <= 0:
        return ratios
    if params[worst][1] <= 0:
        # a path with no bandwidth estimate hands all its share over
        shift = ratios[worst]
    else:
        shift = edcld_shift(params[best], params[worst], offered_pps, w)
    ratios[best] += shift
    ratios[worst] -= shift
    if ratios[worst] < 0:
        ratios[best] += ratios[worst]
        ratios[worst] = 0.0
    return ratios


class EdcldScheduler:
    """Keeps per-path split ratios, rebalances them once per batch, deals by credit."""

    name = "edcld"

    def __init__(self, w: float = 0.8, mtu: int = MTU):
        self.w = w
        self.mtu = mtu
        self.ratios: list[float] = []
        self._credit: list[float] = []

    def assign(self, sizes: Sequence[int], snapshots: Sequence[PathSnapshot], offered_bps: float = 0.0) -> list[int] | None:
        n = len(snapshots)
        if len(self.ratios) != n:
            self.ratios = [1.0 / n] * n
            self._credit = [0.0] * n
        self.ratios = edcld_rebalance(self.ratios, snapshots, offered_bps / (self.mtu * 8), self.w, self.mtu)
        decision = []
        credit = self._credit
        for _ in sizes:
            for i in range(n):
                credit[i] += self.ratios[i]
            j = max(range(n), key=lambda i: (credit[i], -i))
            credit[j] -= 1.0
            decision.append(snapshots[j].path_id)
        return decision


def sfl_levels(sizes: Sequence[int], snapshots: Sequence[PathSnapshot]) -> tuple[list[int], float, list[float]] | None:
    """Raise the water level until the paths jointly hold the batch.

    Returns (path order by OWD, final level in ms, raw byte budgets in that order).
    """
    order = sorted(range(len(snapshots)), key=lambda i: (snapshots[i].owd_ms, i))
    owd = [snapshots[i].owd_ms for i in order]
    abw = [max(0.0, snapshots[i].abw_bps) for i in order]
    if sum(abw) <= 0:
        return None
    total = sum(sizes)
    step_abw = abw[-1] if abw[-1] > 0 else max(abw)
    step = sizes[0] * 1000 * 8 / step_abw
    i = 0
    while True:
        level = owd[-1] + i * step
        budgets = [(level - o) * a / 8000 for o, a in zip(owd, abw)]
        # tolerance so exact boundaries are not missed to float rounding
        if sum(budgets) >= total - 1e-6:
            return order, level, budgets
        i += 1


def sfl_water_fill(sizes: Sequence[int], snapshots: Sequence[PathSnapshot]) -> list[int] | None:
    if not sizes:
        return []
    levels = sfl_levels(sizes, snapshots)
    if levels is None:
        return None
    order, _, raw = levels
    unit = sizes[0]
    budgets = [math.floor(b / unit + 1e-9) * unit for b in raw]
    last = len(order) - 1
    k = 0
    decision = []
    for size in sizes:
        while k != last and budgets[k] <= 0:
            k += 1
        decision.append(snapshots[order[k]].path_id)
        budgets[k] -= size
    return decision


class MinCostScheduler:
    name = "min_cost"

    def assign(self, sizes, snapshots, offered_bps: float = 0.0):
        return min_cost_schedule(sizes, snapshots)


class SflScheduler:
    name = "sfl"

    def assign(self, sizes, snapshots, offered_bps: float = 0.0):
        return sfl_water_fill(sizes, snapshots)


def make_scheduler(name: str, *, wrr_round: int = 10, edcld_w: float = 0.8, mtu: int = MTU):
    if name == "min_cost":
        return MinCostScheduler()
    if name == "wrr":
        return WrrScheduler(wrr_round)
    if name == "edcld":
        return EdcldScheduler(edcld_w, mtu)
    if name == "sfl":
        return SflScheduler()
    raise ValueError(f"unknown scheduler {name!r} (valid: {', '.join(SCHEDULERS)})")
