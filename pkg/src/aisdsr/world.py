"""One simulation world: engine, radio, nodes, traffic and ledger for a single run."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, TextIO

from .adversary import AttackerConfig, BlackHoleNode
from .ais.agent import AisDsrNode
from .config import ConfigError, ScenarioConfig
from .dsr import DsrNode
from .engine import Engine, EventKind, RngStream, to_seconds, to_us
from .metrics import MetricsLedger, MetricsReport, build_report
from .net import LinkModel, MobilityTrace, Network, RandomWaypoint, StaticPlacement
from .packets import check_route


@dataclass
class Flow:
    flow_id: int
    source: int
    dest: int
    start: int
    interval: int
    stop: int
    next_seq: int = 0


@dataclass
class Traces:
    events: Optional[TextIO] = None
    packets: Optional[TextIO] = None
    defense: Optional[TextIO] = None
    mobility: Optional[TextIO] = None


def choose_flows(cfg: ScenarioConfig, traffic: RngStream) -> list[tuple[int, int]]:
    if cfg.flows is not None:
        return [tuple(f) for f in cfg.flows]
    if cfg.node_count < 2:
        return []
    pairs = []
    for _ in range(cfg.flow_count):
        src = traffic.uniform_int(0, cfg.node_count)
        dst = traffic.uniform_int(0, cfg.node_count - 1)
        if dst >= src:
            dst += 1
        pairs.append((src, dst))
    return pairs


def choose_attackers(cfg: ScenarioConfig, traffic: RngStream, endpoints: set[int]) -> list[int]:
    if cfg.attackers is not None:
        return sorted(cfg.attackers)
    pool = [n for n in range(cfg.node_count) if n not in endpoints]
    if cfg.attacker_count > len(pool):
        raise ConfigError(f"attacker_count: only {len(pool)} nodes are free of traffic endpoints; "
                         f"cannot place {cfg.attacker_count} attackers")
    return sorted(traffic.sample(pool, cfg.attacker_count))


class World:
    def __init__(self, config: ScenarioConfig, traces: Optional[Traces] = None):
        config.validate()
        self.config = config
        self.traces = traces or Traces()
        self.engine = Engine(trace=self.traces.events)
        self.ledger = MetricsLedger()
        seed = config.seed
        self.duration = to_us(config.duration)

        if config.positions is not None:
            placement = StaticPlacement(config.positions)
        else:
            placement = RandomWaypoint(config.node_count, config.width, config.height, config.pause_time,
                                       (config.speed_min, config.speed_max), seed)
            if self.traces.mobility is not None:
                tracer = MobilityTrace(self.traces.mobility)
                for i, st in enumerate(placement.states):
                    tracer(i, st)
                placement.on_leg = tracer
        self.placement = placement
        link = LinkModel(config.radio_range, config.per_hop_latency, config.latency_jitter,
                         config.loss_prob, config.queue_limit or None)
        self.net = Network(self.engine, placement, link, RngStream(seed, "link"), self._deliver)

        traffic = RngStream(seed, "traffic")
        pairs = choose_flows(config, traffic)
        endpoints = {n for p in pairs for n in p}
        attackers = choose_attackers(config, traffic, endpoints)
        self.attacker_config = AttackerConfig(frozenset(attackers if config.attacked else ()),
                                              config.reply_delay, config.attack_mode)
        honest = AisDsrNode if config.defended else DsrNode
        self.nodes: list[DsrNode] = []
        for i in range(config.node_count):
            if i in self.attacker_config.attacker_ids:
                self.nodes.append(BlackHoleNode(self, i, config.reply_delay))
            else:
                self.nodes.append(honest(self, i))

        interval = to_us(1.0 / config.packet_rate)
        stop = self.duration - to_us(config.traffic_stop_margin)
        self.flows: list[Flow] = []
        for fid, (src, dst) in enumerate(pairs):
            start = to_us(traffic.uniform(0.0, config.flow_start_window))
            flow = Flow(fid, src, dst, start, interval, stop)
            self.flows.append(flow)
            if start <= stop:
                self.engine.at(start, EventKind.TRAFFIC, self._tick_action(flow), node=src,
                               detail={"flow": fid})

    # -- event plumbing -------------------------------------------------------------

    def _tick_action(self, flow: Flow):
        def tick():
            seq = flow.next_seq
            flow.next_seq += 1
            self.nodes[flow.source].send_data(flow.dest, flow.flow_id, seq, self.config.payload_size)
            nxt = self.engine.now + flow.interval
            if nxt <= flow.stop:
                self.engine.at(nxt, EventKind.TRAFFIC, tick, node=flow.source, detail={"flow": flow.flow_id})
        return tick

    def _deliver(self, receiver: int, sender: int, packet) -> None:
        kind = packet.kind
        if kind == "rreq":
            check_route(packet.record)
        elif kind == "rrep":
            check_route(packet.route)
        elif kind == "data":
            check_route(packet.source_route)
        elif kind in ("probe", "probe-ack", "route-break"):
            check_route(packet.route)
        if self.traces.packets is not None and kind != "data":
            self.trace_packet("recv", packet, sender, receiver)
        self.nodes[receiver].receive(sender, packet)

    # -- traces -----------------------------------------------------------------------

    def _write(self, out: TextIO, rec: dict) -> None:
        out.write(json.dumps(rec, sort_keys=True) + "\n")

    def trace_packet(self, event: str, packet, frm: int, to: Optional[int]) -> None:
        out = self.traces.packets
        if out is None:
            return
        route = getattr(packet, "route", None) or getattr(packet, "record", None)
        self._write(out, {"t": round(to_seconds(self.engine.now), 6), "event": event, "kind": packet.kind,
                          "from": frm, "to": to, "flow": None, "seq": None,
                          "route": list(route) if route else None})

    def trace_data(self, event: str, frm: int, to: Optional[int], flow: int, seq: int, route,
                   cause: Optional[str] = None) -> None:
        out = self.traces.packets
        if out is None:
            return
        rec = {"t": round(to_seconds(self.engine.now), 6), "event": event, "kind": "data", "from": frm,
               "to": to, "flow": flow, "seq": seq, "route": list(route) if route else None}
        if cause is not None:
            rec["cause"] = cause
        self._write(out, rec)

    def trace_defense(self, origin: int, discovery, candidates, selection, alerts, verdicts) -> None:
        out = self.traces.defense
        if out is None:
            return
        self._write(out, {
            "t": round(to_seconds(self.engine.now), 6),
            "origin": origin,
            "discovery": discovery.request_id,
            "target": discovery.target,
            "candidates": [{"route": list(c.route), "replier": c.replier, "hops": c.hop_count,
                            "iter": c.replier_rrep_iterations, "p_bh": c.p_bh, "fr": c.fitness,
                            "score": c.secure_score,
                            "self": None if c.route not in verdicts else verdicts[c.route].matched_self}
                           for c in candidates],
            "chosen": list(selection.chosen.route) if selection.chosen else None,
            "rejected": [list(c.route) for c in selection.rejected],
            "alerts": alerts,
        })

    # -- run ------------------------------------------------------------------------------

    def run(self) -> MetricsReport:
        self.engine.run_until(self.duration)
        return self.report()

    def attackers(self) -> list[BlackHoleNode]:
        return [n for n in self.nodes if n.is_attacker]

    def report(self) -> MetricsReport:
        atk = self.attackers()
        sink_data = sum(a.sinks.counts["data"] for a in atk)
        sink_probe = sum(a.sinks.counts["probe"] for a in atk)
        isolations = 0
        for n in self.nodes:
            table = getattr(n, "table", None)
            if table is not None:
                isolations += len(table.isolated())
        extra = {
            "variant": self.config.variant,
            "seed": self.config.seed,
            "pause_time": self.config.pause_time,
            "attackers": " ".join(str(a.id) for a in atk) or "none",
            "sink_data": sink_data,
            "sink_probe": sink_probe,
            "isolations": isolations,
        }
        return build_report(self.ledger, self.config.duration, strict=self.config.strict_loss, extra=extra)


def run_experiment(config: ScenarioConfig, traces: Optional[Traces] = None) -> MetricsReport:
    world = World(config, traces)
    return world.run()
