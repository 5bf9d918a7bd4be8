"""Build a simulated network from an :class:`ExperimentConfig`, run it, emit CSVs."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .cc import make_controller
from .config import ExperimentConfig
from .metrics import (
    FLOW_TRACE_HEADER, FRAME_TRACE_HEADER, RATE_TRACE_HEADER, SUMMARY_HEADER,
    FlowStats, FrameStats, SummaryRow, flow_row, pooled_row, write_csv,
)
from .net import Topology, build_topology
from .sched import make_scheduler
from .sim import Simulator, ms, seconds
from .transport import PathSender, Receiver, VideoSession


@dataclass
class RunResult:
    config: ExperimentConfig
    sim: Simulator
    topology: Topology
    flows: dict[str, FlowStats]
    senders: dict[str, PathSender]
    session: VideoSession | None = None
    frames: FrameStats | None = None
    trace: list[tuple] = field(default_factory=list)

    @property
    def session_flows(self) -> list[FlowStats]:
        return [f for fid, f in self.flows.items() if fid.startswith("mp/")]

    @property
    def background_flows(self) -> list[FlowStats]:
        return [f for fid, f in self.flows.items() if not fid.startswith("mp/")]

    def summary(self) -> list[SummaryRow]:
        cfg = self.config
        sched = cfg.session.scheduler if cfg.session else ""
        rows = [flow_row(cfg.name, f, sched if fid.startswith("mp/") else "") for fid, f in self.flows.items()]
        if self.background_flows:
            rows.append(pooled_row(cfg.name, self.background_flows, "flows"))
        if self.session is not None:
            rows.append(pooled_row(cfg.name, self.session_flows, "session", sched, self.frames))
        rows.append(pooled_row(cfg.name, list(self.flows.values()), "all", sched))
        return rows

    def frame_rows(self) -> list[tuple]:
        if self.frames is None:
            return []
        rows = []
        for fid, frame in sorted(self.frames.generated.items()):
            done = self.frames.delivered.get(fid)
            rows.append((
                fid, frame.gen_ts, done.delivered_ts if done else -1, frame.size,
                int(frame.is_key), ";".join(done.paths) if done else "",
            ))
        return rows

    def rate_rows(self) -> list[tuple]:
        rows = []
        for fid, f in self.flows.items():
            send, recv = f.send_rates(), f.recv_rates()
            for i in range(max(len(send), len(recv))):
                rows.append((i, fid, round(send[i]) if i < len(send) else 0, round(recv[i]) if i < len(recv) else 0))
        rows.sort(key=lambda r: (r[0], r[1]))
        return rows

    def run(self) -> "RunResult":
        end = seconds(self.config.duration_s)
        self.sim.run_until(end)
        for sender in self.senders.values():
            if sender.active:
                sender.stats.active_until = end
        if self.session is not None:
            self.frames.on_dropped(self.session.reassembler.expire(end))
        return self

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.yaml").write_text(self.config.dump())
        write_csv(out / "flow_trace.csv", FLOW_TRACE_HEADER, self.trace)
        write_csv(out / "rate_trace.csv", RATE_TRACE_HEADER, self.rate_rows())
        write_csv(out / "frame_trace.csv", FRAME_TRACE_HEADER, self.frame_rows())
        write_csv(out / "summary.csv", SUMMARY_HEADER, [r.as_csv() for r in self.summary()])
        return out


def _jitter(sim: Simulator, cfg: ExperimentConfig) -> int:
    return int(sim.rng.uniform(0, cfg.start_jitter_ms) * 1000) if cfg.start_jitter_ms > 0 else 0


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    result = prepare_experiment(cfg)
    result.run()
    return result


def prepare_experiment(cfg: ExperimentConfig) -> RunResult:
    """Wire everything up and schedule the starts; nothing runs until :meth:`RunResult.run`."""
    sim = Simulator(cfg.seed)
    topo = build_topology(sim, cfg.table, cfg.case)
    warmup = seconds(cfg.warmup_s)
    end = seconds(cfg.duration_s)
    mtu = cfg.constants.mtu
    flows: dict[str, FlowStats] = {}
    senders: dict[str, PathSender] = {}

    def add_sender(flow_id: str, cc_name: str, link_name: str, **kw) -> PathSender:
        link = topo.link(link_name)
        cc = make_controller(cc_name, cfg.constants.for_controller(cc_name) if cc_name != "aimd" else None, mtu)
        stats = FlowStats(flow_id, cc_name, warmup)
        sender = PathSender(sim, link, flow_id, cc, stats, mtu=mtu, **kw)
        flows[flow_id] = stats
        senders[flow_id] = sender
        return sender

    def schedule_span(obj, start_s: float, stop_s: float | None) -> None:
        start = seconds(start_s) + _jitter(sim, cfg)
        if start >= end:
            return
        sim.schedule_at(start, obj.start)
        stop = seconds(stop_s) if stop_s is not None else end
        if stop < end:
            sim.schedule_at(stop, obj.stop)

    for i, fc in enumerate(cfg.flows):
        sender = add_sender(f"f{i + 1}", fc.cc, fc.path, bulk=True)
        Receiver(sim, sender.link, sender, flows[sender.flow_id])
        schedule_span(sender, fc.start_s, fc.stop_s)

    session = None
    frames = None
    if cfg.session is not None:
        sc = cfg.session
        frames = FrameStats(warmup)
        paths = {name: add_sender(f"mp/{name}", sc.cc, name, padding=True) for name in sc.paths}
        scheduler = make_scheduler(sc.scheduler, wrr_round=sc.wrr_round, edcld_w=sc.edcld_w, mtu=mtu)
        session = VideoSession(
            sim, paths, scheduler,
            frame_rate=sc.frame_rate, max_bitrate_bps=sc.max_bitrate_bps,
            key_interval=sc.key_interval, key_size_multiplier=sc.key_size_multiplier,
            retention_us=ms(sc.retention_ms), wait_us=ms(sc.wait_ms),
            backlog_drain_s=sc.backlog_drain_s, mtu=mtu, frames=frames,
        )
        for name, sender in paths.items():
            Receiver(sim, sender.link, sender, flows[sender.flow_id], session.on_segment)
            schedule_span(sender, sc.start_s, sc.stop_s)
        schedule_span(session, sc.start_s, sc.stop_s)

    result = RunResult(cfg, sim, topo, flows, senders, session, frames)
    interval = ms(cfg.trace_interval_ms)

    def trace_tick() -> None:
        now = sim.now
        for fid, sender in senders.items():
            if sender.active:
                result.trace.append((now, fid) + sender.cc.trace_row())
        if now + interval <= end:
            sim.schedule_at(now + interval, trace_tick)

    sim.schedule_at(interval, trace_tick)
    return result
