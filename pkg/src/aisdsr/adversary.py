"""Black-hole node: answers every route request with a forged short route, then swallows traffic."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .dsr import DsrNode
from .engine import to_us
from .packets import DataPacket, ProbePacket, Rrep, Rreq


@dataclass
class AttackerConfig:
    attacker_ids: frozenset
    reply_delay: float = 0.0
    mode: str = "cooperative"

    def __post_init__(self):
        if self.reply_delay < 0:
            raise ValueError("reply_delay must be >= 0")
        if self.mode not in ("single", "cooperative"):
            raise ValueError(f"unknown attack mode {self.mode!r}")
        if self.mode == "single" and len(self.attacker_ids) > 1:
            raise ValueError("single mode allows one attacker")


@dataclass
class SinkCounter:
    counts: Counter = field(default_factory=Counter)

    def add(self, kind: str) -> None:
        self.counts[kind] += 1

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def forge_rrep(attacker: int, rreq: Rreq) -> Rrep:
    """Claim one-hop adjacency to the target right after the attacker."""
    if attacker == rreq.target:
        raise ValueError("the attacker is the destination; no forgery needed")
    route = rreq.record + (attacker, rreq.target)
    return Rrep(rreq.origin, rreq.target, rreq.request_id, route, attacker, replier_claims_cached=True)


class BlackHoleNode(DsrNode):
    is_attacker = True

    def __init__(self, world, node_id: int, reply_delay: float = 0.0):
        super().__init__(world, node_id)
        self.reply_delay = to_us(reply_delay)
        self.sinks = SinkCounter()

    def handle_rreq(self, sender: int, rreq: Rreq) -> None:
        key = (rreq.origin, rreq.request_id)
        if key in self.seen or self.id in rreq.record:
            return
        if self.id == rreq.target:
            super().handle_rreq(sender, rreq)
            return
        self.seen.add(key)
        # no cache lookup and no rebroadcast
        rrep = forge_rrep(self.id, rreq)
        self.reply(rreq, rrep.route, claims_cached=True, delay=self.reply_delay)

    def forward_data(self, pkt: DataPacket) -> None:
        if pkt.cursor == len(pkt.source_route) - 1:
            super().forward_data(pkt)
            return
        self.sink_data(pkt)

    def handle_probe(self, probe: ProbePacket) -> None:
        if probe.cursor == len(probe.route) - 1:
            super().handle_probe(probe)
            return
        self.sink_data(probe)

    def sink_data(self, pkt) -> None:
        world = self.world
        if isinstance(pkt, DataPacket):
            self.sinks.add("data")
            world.ledger.record_drop(pkt.flow_id, pkt.seq_no, self.now, "blackhole")
            world.trace_data("drop", self.id, None, pkt.flow_id, pkt.seq_no, pkt.source_route, cause="blackhole")
        else:
            self.sinks.add("probe")
            world.ledger.record_control_drop(pkt.kind, "blackhole")

    def handle_probe_ack(self, ack) -> None:
        pass

    def handle_rrep(self, sender: int, rrep: Rrep) -> None:
        pass

    def handle_route_break(self, rb) -> None:
        pass
