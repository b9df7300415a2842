"""Scenario configuration: INI-style sections of ``key = value`` pairs.

Every key belongs to exactly one section and unknown keys are rejected. An
empty file yields the defaults (100 nodes, 1000 x 1000 m, 200 s).

    [scenario]   node_count width height duration seed variant strict_loss
    [mobility]   pause_time speed_min speed_max
    [radio]      radio_range per_hop_latency latency_jitter loss_prob queue_limit
    [traffic]    flow_count packet_rate payload_size flow_start_window
                 traffic_stop_margin buffer_limit
    [attack]     attacker_count attack_mode reply_delay
    [dsr]        cached_replies discovery_timeout discovery_retries route_break_notice
    [defense]    rrep_window probe_timeout_per_hop probe_timeout_floor
                 iteration_window iteration_cap alert_threshold alert_flood
                 use_detectors min_self_patterns retrain_every max_self_patterns
    [ais]        population top_subset clone_factor mutation_scale worst_n
                 generations match_threshold
    [topology]   positions   "x,y; x,y; ..." (static placement, overrides mobility)
                 flows       "src>dst, src>dst, ..."
                 attackers   "id, id, ..."
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .ais.clonal import ClonalParams

VARIANTS = ("dsr-baseline", "dsr-under-attack", "ais-dsr-under-attack", "ais-dsr-clean")


class ConfigError(ValueError):
    pass


def _f(section: str, default, **kw):
    return field(default=default, metadata={"section": section, **kw})


@dataclass
class ScenarioConfig:
    node_count: int = _f("scenario", 100)
    width: float = _f("scenario", 1000.0)
    height: float = _f("scenario", 1000.0)
    duration: float = _f("scenario", 200.0)
    seed: int = _f("scenario", 1)
    variant: str = _f("scenario", "ais-dsr-under-attack")
    strict_loss: bool = _f("scenario", False)

    pause_time: float = _f("mobility", 0.0)
    speed_min: float = _f("mobility", 1.0)
    speed_max: float = _f("mobility", 20.0)

    radio_range: float = _f("radio", 250.0)
    per_hop_latency: float = _f("radio", 0.002)
    latency_jitter: float = _f("radio", 0.001)
    loss_prob: float = _f("radio", 0.0)
    queue_limit: int = _f("radio", 0)

    flow_count: int = _f("traffic", 10)
    packet_rate: float = _f("traffic", 4.0)
    payload_size: int = _f("traffic", 512)
    flow_start_window: float = _f("traffic", 5.0)
    traffic_stop_margin: float = _f("traffic", 5.0)
    buffer_limit: int = _f("traffic", 64)

    attacker_count: int = _f("attack", 5)
    attack_mode: str = _f("attack", "cooperative")
    reply_delay: float = _f("attack", 0.0)

    cached_replies: bool = _f("dsr", False)
    discovery_timeout: float = _f("dsr", 1.0)
    discovery_retries: int = _f("dsr", 2)
    route_break_notice: bool = _f("dsr", True)

    rrep_window: float = _f("defense", 0.05)
    probe_timeout_per_hop: float = _f("defense", 0.02)
    probe_timeout_floor: float = _f("defense", 0.05)
    iteration_window: float = _f("defense", 10.0)
    iteration_cap: int = _f("defense", 10)
    alert_threshold: int = _f("defense", 2)
    alert_flood: bool = _f("defense", False)
    use_detectors: bool = _f("defense", True)
    min_self_patterns: int = _f("defense", 5)
    retrain_every: int = _f("defense", 10)
    max_self_patterns: int = _f("defense", 20)

    population: int = _f("ais", 50)
    top_subset: int = _f("ais", 10)
    clone_factor: float = _f("ais", 5.0)
    mutation_scale: float = _f("ais", 0.2)
    worst_n: int = _f("ais", 5)
    generations: int = _f("ais", 20)
    match_threshold: float = _f("ais", 0.8)

    positions: Optional[list] = _f("topology", None)
    flows: Optional[list] = _f("topology", None)
    attackers: Optional[list] = _f("topology", None)

    # -- derived views --------------------------------------------------------

    @property
    def defended(self) -> bool:
        return self.variant.startswith("ais-dsr")

    @property
    def attacked(self) -> bool:
        return self.variant.endswith("under-attack")

    @property
    def static(self) -> bool:
        return self.positions is not None

    def clonal_params(self) -> ClonalParams:
        return ClonalParams(self.population, self.top_subset, self.clone_factor, self.mutation_scale,
                            self.worst_n, self.generations, self.match_threshold)

    def replace(self, **changes) -> "ScenarioConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg

    def validate(self) -> "ScenarioConfig":
        def need(cond: bool, key: str, why: str):
            if not cond:
                raise ConfigError(f"{key}: {why}")

        need(self.node_count >= 1, "node_count", "must be >= 1")
        need(self.width > 0 and self.height > 0, "width/height", "area must be positive")
        need(self.duration > 0, "duration", "must be > 0")
        need(0 <= self.seed < 2**64, "seed", "must be a 64-bit unsigned integer")
        need(self.variant in VARIANTS, "variant", f"must be one of {', '.join(VARIANTS)}")
        need(self.pause_time >= 0, "pause_time", "must be >= 0")
        need(0 < self.speed_min <= self.speed_max, "speed_min/speed_max", "need 0 < speed_min <= speed_max")
        need(self.radio_range > 0, "radio_range", "must be > 0")
        need(self.per_hop_latency >= 0, "per_hop_latency", "must be >= 0")
        need(self.latency_jitter >= 0, "latency_jitter", "must be >= 0")
        need(0 <= self.loss_prob <= 1, "loss_prob", "must lie in [0, 1]")
        need(self.queue_limit >= 0, "queue_limit", "must be >= 0 (0 = unbounded)")
        need(self.flow_count >= 0, "flow_count", "must be >= 0")
        need(self.packet_rate > 0, "packet_rate", "must be > 0")
        need(self.payload_size > 0, "payload_size", "must be > 0")
        need(self.flow_start_window >= 0, "flow_start_window", "must be >= 0")
        need(self.traffic_stop_margin >= 0, "traffic_stop_margin", "must be >= 0")
        need(self.buffer_limit >= 0, "buffer_limit", "must be >= 0")
        need(self.attacker_count >= 0, "attacker_count", "must be >= 0")
        # an explicit attacker list overrides attacker_count
        n_attackers = len(self.attackers) if self.attackers is not None else self.attacker_count
        need(n_attackers < self.node_count, "attacker_count", "must be < node_count")
        need(self.attack_mode in ("single", "cooperative"), "attack_mode", "must be single or cooperative")
        need(self.attack_mode != "single" or n_attackers <= 1, "attack_mode",
             "single mode allows at most one attacker")
        need(self.reply_delay >= 0, "reply_delay", "must be >= 0")
        need(self.discovery_timeout > 0, "discovery_timeout", "must be > 0")
        need(self.discovery_retries >= 0, "discovery_retries", "must be >= 0")
        need(self.rrep_window > 0, "rrep_window", "must be > 0")
        need(self.probe_timeout_per_hop > 0, "probe_timeout_per_hop", "must be > 0")
        need(self.probe_timeout_floor > 0, "probe_timeout_floor", "must be > 0")
        need(self.iteration_window > 0, "iteration_window", "must be > 0")
        need(self.iteration_cap >= 1, "iteration_cap", "must be >= 1")
        need(self.alert_threshold >= 1, "alert_threshold", "must be >= 1")
        need(self.min_self_patterns >= 1, "min_self_patterns", "must be >= 1")
        need(self.retrain_every >= 1, "retrain_every", "must be >= 1")
        need(self.max_self_patterns >= self.min_self_patterns, "max_self_patterns", "must be >= min_self_patterns")
        try:
            self.clonal_params().validate()
        except ValueError as exc:
            raise ConfigError(f"[ais] {exc}") from None
        if self.positions is not None:
            need(len(self.positions) == self.node_count, "positions",
                 f"lists {len(self.positions)} nodes but node_count is {self.node_count}")
            for x, y in self.positions:
                need(0 <= x <= self.width and 0 <= y <= self.height, "positions", f"({x}, {y}) outside the area")
        if self.flows is not None:
            for s, d in self.flows:
                need(0 <= s < self.node_count and 0 <= d < self.node_count and s != d, "flows",
                     f"bad flow {s}>{d}")
        if self.attackers is not None:
            need(all(0 <= a < self.node_count for a in self.attackers), "attackers", "unknown node id")
            need(len(self.attackers) < self.node_count, "attackers", "must be fewer than node_count")
            if self.flows is not None:
                ends = {n for f in self.flows for n in f}
                need(not ends.intersection(self.attackers), "attackers", "overlap traffic endpoints")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_SECTIONS: dict[str, set[str]] = {}
for _f_ in dataclasses.fields(ScenarioConfig):
    _SECTIONS.setdefault(_f_.metadata["section"], set()).add(_f_.name)


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_topology(key: str, raw: str):
    raw = raw.strip()
    if not raw:
        return []
    try:
        if key == "positions":
            return [tuple(float(v) for v in item.split(",")) for item in raw.split(";") if item.strip()]
        if key == "flows":
            return [tuple(int(v) for v in item.split(">")) for item in raw.split(",") if item.strip()]
        return [int(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def _coerce(key: str, raw: str):
    f = _FIELDS[key]
    kind = f.type if isinstance(f.type, str) else f.type.__name__
    if f.metadata["section"] == "topology":
        return _parse_topology(key, raw)
    try:
        if kind == "bool":
            return _parse_bool(key, raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None


def parse_scenario(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";;"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _coerce(key, raw)
    cfg = ScenarioConfig(**values)
    return cfg.validate()


def load_scenario(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text)


def dump_scenario(cfg: ScenarioConfig) -> str:
    """Render a config back to the file format (round-trips through ``parse_scenario``)."""
    out = []
    for section, names in _SECTIONS.items():
        lines = []
        for f in dataclasses.fields(ScenarioConfig):
            if f.name not in names:
                continue
            v = getattr(cfg, f.name)
            if v is None:
                continue
            if f.name == "positions":
                v = "; ".join(f"{x},{y}" for x, y in v)
            elif f.name == "flows":
                v = ", ".join(f"{s}>{d}" for s, d in v)
            elif f.name == "attackers":
                v = ", ".join(str(a) for a in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        if lines:
            out.append(f"[{section}]\n" + "\n".join(lines) + "\n")
    return "\n".join(out)


def apply_overrides(cfg: ScenarioConfig, pairs) -> ScenarioConfig:
    """Apply ``key=value`` strings on top of ``cfg`` using the file grammar's parsing rules."""
    changes = {}
    for item in pairs:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        changes[key] = _coerce(key, raw)
    try:
        return cfg.replace(**changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
