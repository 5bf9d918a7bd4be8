"""Shared builders for tests: tiny configs, polling hooks, controller drivers."""

from __future__ import annotations

from mpvideo.config import ExperimentConfig, FlowConfig, SessionConfig, validate
from mpvideo.experiment import prepare_experiment


def flows_config(table: int, case: int, flows: list[FlowConfig], duration: float, **kw) -> ExperimentConfig:
    cfg = ExperimentConfig(name="test", table=table, case=case, duration_s=duration, flows=flows,
                           start_jitter_ms=kw.pop("start_jitter_ms", 0.0), **kw)
    validate(cfg)
    return cfg


def session_config(case: int, scheduler: str, duration: float, background: bool = True, **kw) -> ExperimentConfig:
    flows = [FlowConfig("delay_bbr", p) for p in ("L1", "L1", "L2")] if background else []
    cfg = ExperimentConfig(name="test", table=3, case=case, duration_s=duration, flows=flows,
                           session=SessionConfig(scheduler=scheduler, **kw))
    validate(cfg)
    return cfg


def poll(result, interval_us: int, fn, start_us: int = 0):
    """Call ``fn(now)`` every ``interval_us`` during the prepared run."""
    sim = result.sim

    def tick():
        fn(sim.now)
        sim.schedule_in(interval_us, tick)

    sim.schedule_at(max(start_us, sim.now), tick)


def prepared(cfg):
    return prepare_experiment(cfg)


class Driver:
    """Feeds a controller synthetic sends and acks on a shared clock."""

    def __init__(self, cc, mtu: int = 1000):
        self.cc = cc
        self.mtu = mtu
        self.now = 0
        self.seq = 0
        self.sent: dict[int, tuple[int, int]] = {}

    def send(self, size: int | None = None) -> int:
        self.seq += 1
        size = self.mtu if size is None else size
        self.cc.on_packet_sent(self.now, self.seq, size)
        self.sent[self.seq] = (self.now, size)
        return self.seq

    def ack(self, seq: int, at: int | None = None) -> None:
        if at is not None:
            self.now = at
        self.sent.pop(seq, None)
        self.cc.on_ack(self.now, seq)

    def lose(self, seq: int) -> None:
        self.sent.pop(seq, None)
        self.cc.on_packet_lost(self.now, seq)


# ---- shared full-run cache and acceptance bookkeeping ---------------------------------

_RUNS: dict = {}
CRITERIA: dict[int, tuple[bool, str]] = {}


def cached_run(scenario: str, seed: int = 1, duration: float | None = None):
    """Run a bundled scenario once per session; returns (result, wall seconds)."""
    import time

    from mpvideo.config import resolve_config
    from mpvideo.experiment import run_experiment

    key = (scenario, seed, duration)
    if key not in _RUNS:
        cfg = resolve_config(scenario)
        cfg.seed = seed
        if duration is not None:
            cfg.duration_s = duration
        t0 = time.perf_counter()
        result = run_experiment(cfg)
        _RUNS[key] = (result, time.perf_counter() - t0)
    return _RUNS[key]


def record(criterion: int, ok: bool, detail: str) -> None:
    CRITERIA[criterion] = (ok, detail)
