"""Experiment configuration: YAML documents with every model constant overridable."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .cc import CONTROLLERS, BASELINE_GAIN_CYCLE, DELAY_BBR_GAIN_CYCLE, CcConstants
from .net import MTU, ConfigError, topology_links
from .sched import SCHEDULERS

# CcConstants fields a config may override (gain cycles have per-variant keys)
CC_OVERRIDES = (
    "alpha", "beta", "min_rtt_expiry_ms", "startup_gain", "drain_gain", "backoff_gain",
    "similar_min_rtt", "bw_window_rounds", "startup_growth_target", "startup_full_bw_rounds",
    "initial_rtt_ms", "initial_window_packets", "probe_rtt_packets", "probe_rtt_duration_ms",
    "startup_cwnd_gain",
)


@dataclass
class FlowConfig:
    cc: str
    path: str = "L1"
    start_s: float = 0.0
    stop_s: float | None = None


@dataclass
class SessionConfig:
    scheduler: str = "min_cost"
    paths: list[str] = field(default_factory=lambda: ["L1", "L2"])
    cc: str = "delay_bbr"
    start_s: float = 0.0
    stop_s: float | None = None
    max_bitrate_bps: float = 2_000_000
    frame_rate: float = 25.0
    key_interval: int = 100
    key_size_multiplier: float = 1.0
    retention_ms: float = 500.0
    wait_ms: float = 500.0
    # encoder target is reduced by local backlog / this horizon (0 disables)
    backlog_drain_s: float = 1.0
    wrr_round: int = 10
    edcld_w: float = 0.8


@dataclass
class Constants:
    alpha: float = 0.9
    beta: float = 1.2
    min_rtt_expiry_ms: float = 10_000.0
    delay_gain_cycle: list[float] = field(default_factory=lambda: list(DELAY_BBR_GAIN_CYCLE))
    baseline_gain_cycle: list[float] = field(default_factory=lambda: list(BASELINE_GAIN_CYCLE))
    startup_gain: float = CcConstants.startup_gain
    drain_gain: float = 0.75
    backoff_gain: float = 0.75
    similar_min_rtt: float = 1.125
    bw_window_rounds: int = 10
    startup_growth_target: float = 1.25
    startup_full_bw_rounds: int = 3
    initial_rtt_ms: float = 100.0
    initial_window_packets: int = 10
    probe_rtt_packets: int = 4
    probe_rtt_duration_ms: float = 200.0
    startup_cwnd_gain: float = CcConstants.startup_cwnd_gain
    mtu: int = MTU

    def for_controller(self, name: str) -> CcConstants:
        values = {k: getattr(self, k) for k in CC_OVERRIDES}
        if name == "baseline_bbr":
            return CcConstants(gain_cycle=tuple(self.baseline_gain_cycle), delay_response=False, mtu=self.mtu, **values)
        return CcConstants(gain_cycle=tuple(self.delay_gain_cycle), mtu=self.mtu, **values)


@dataclass
class ExperimentConfig:
    name: str
    table: int
    case: int
    duration_s: float = 300.0
    seed: int = 1
    flows: list[FlowConfig] = field(default_factory=list)
    session: SessionConfig | None = None
    constants: Constants = field(default_factory=Constants)
    trace_interval_ms: float = 100.0
    warmup_s: float = 5.0
    start_jitter_ms: float = 10.0

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        data["topology"] = {"table": data.pop("table"), "case": data.pop("case")}
        order = ["name", "topology", "duration_s", "seed", "flows", "session", "constants",
                 "trace_interval_ms", "warmup_s", "start_jitter_ms"]
        return {k: data[k] for k in order}

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}: unknown field")
    kwargs = {}
    for key, value in data.items():
        default = names[key].default
        if isinstance(default, bool) or isinstance(value, bool):
            pass
        elif isinstance(default, float) and isinstance(value, int):
            value = float(value)
        elif isinstance(default, (int, float)) and not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def from_dict(data: dict[str, Any]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: expected a mapping at top level")
    data = dict(data)
    topo = data.pop("topology", None)
    if not isinstance(topo, dict) or "table" not in topo or "case" not in topo:
        raise ConfigError("topology: needs 'table' and 'case'")
    flows = data.pop("flows", None) or []
    if not isinstance(flows, list):
        raise ConfigError("flows: expected a list")
    session = data.pop("session", None)
    constants = data.pop("constants", None) or {}
    if "name" not in data:
        raise ConfigError("name: required")
    cfg = _build(ExperimentConfig, {**data, "table": topo["table"], "case": topo["case"]}, "config")
    cfg.flows = [_build(FlowConfig, f, f"flows[{i}]") for i, f in enumerate(flows)]
    cfg.session = _build(SessionConfig, session, "session") if session is not None else None
    cfg.constants = _build(Constants, constants, "constants")
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    try:
        links = topology_links(cfg.table, cfg.case)
    except ConfigError as exc:
        raise ConfigError(f"topology: {exc}") from None
    if cfg.duration_s <= 0:
        raise ConfigError("duration_s: must be positive")
    for i, flow in enumerate(cfg.flows):
        where = f"flows[{i}]"
        if flow.cc not in CONTROLLERS:
            raise ConfigError(f"{where}.cc: unknown controller {flow.cc!r} (valid: {', '.join(CONTROLLERS)})")
        if flow.path not in links:
            raise ConfigError(f"{where}.path: no link {flow.path!r} in table {cfg.table} case {cfg.case}")
        stop = cfg.duration_s if flow.stop_s is None else flow.stop_s
        if not 0 <= flow.start_s < stop:
            raise ConfigError(f"{where}.start_s: must satisfy 0 <= start_s < stop_s")
        if stop > cfg.duration_s:
            raise ConfigError(f"{where}.stop_s: {stop} exceeds duration_s {cfg.duration_s}")
    s = cfg.session
    if s is not None:
        if s.scheduler not in SCHEDULERS:
            raise ConfigError(f"session.scheduler: unknown scheduler {s.scheduler!r} (valid: {', '.join(SCHEDULERS)})")
        if s.cc not in ("delay_bbr", "baseline_bbr"):
            raise ConfigError("session.cc: must be a rate-based controller (delay_bbr or baseline_bbr)")
        if not s.paths:
            raise ConfigError("session.paths: needs at least one path")
        for p in s.paths:
            if p not in links:
                raise ConfigError(f"session.paths: no link {p!r} in table {cfg.table} case {cfg.case}")
        if len(set(s.paths)) != len(s.paths):
            raise ConfigError("session.paths: duplicate path")
        stop = cfg.duration_s if s.stop_s is None else s.stop_s
        if not 0 <= s.start_s < stop or stop > cfg.duration_s:
            raise ConfigError("session.start_s: must satisfy 0 <= start_s < stop_s <= duration_s")
        if s.frame_rate <= 0:
            raise ConfigError("session.frame_rate: must be positive")
        if s.max_bitrate_bps <= 0:
            raise ConfigError("session.max_bitrate_bps: must be positive")
        if not 0 <= s.edcld_w <= 1:
            raise ConfigError("session.edcld_w: must be in [0, 1]")
        if s.wrr_round < 1:
            raise ConfigError("session.wrr_round: must be >= 1")
    if not cfg.flows and s is None:
        raise ConfigError("flows: config defines neither flows nor a session")
    c = cfg.constants
    if not 0 < c.mtu <= MTU:
        raise ConfigError(f"constants.mtu: must be in (0, {MTU}]")
    for key in ("delay_gain_cycle", "baseline_gain_cycle"):
        if len(getattr(c, key)) != 8:
            raise ConfigError(f"constants.{key}: needs 8 entries")
    try:
        c.for_controller("delay_bbr")
    except ValueError as exc:
        raise ConfigError(f"constants: {exc}") from None
    if cfg.trace_interval_ms <= 0:
        raise ConfigError("trace_interval_ms: must be positive")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    return from_dict(data)


SCENARIO_DIR = Path(__file__).parent / "scenarios"


def bundled_scenarios() -> dict[str, Path]:
    return {p.stem: p for p in sorted(SCENARIO_DIR.glob("*.yaml"))}


def resolve_config(ref: str | Path) -> ExperimentConfig:
    """Accept a file path or the name of a bundled scenario."""
    path = Path(ref)
    if not path.exists():
        bundled = bundled_scenarios()
        if str(ref) in bundled:
            path = bundled[str(ref)]
    return load_config(path)
