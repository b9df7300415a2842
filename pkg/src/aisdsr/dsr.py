"""Honest DSR node: RREQ flooding, RREP return, route cache and source-routed forwarding.

This class is also the baseline protocol: the originator adopts the first
route reply that answers its pending discovery and ignores the rest.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Optional

from .engine import EventHandle, EventKind, to_us
from .packets import (DataPacket, ProbeAck, ProbePacket, Route, RouteBreak, Rrep, Rreq,
                      SuspicionAlert)

if TYPE_CHECKING:
    from .world import World


class ProtocolFault(RuntimeError):
    pass


class RouteCache:
    """Destination -> source routes, most recently installed first."""

    def __init__(self, owner: int):
        self.owner = owner
        self.routes: dict[int, list[tuple[Route, int]]] = {}

    def add(self, dest: int, route: Route, now: int) -> None:
        if route[0] != self.owner or route[-1] != dest:
            raise ProtocolFault(f"node {self.owner} cannot cache {route} for {dest}")
        entries = [e for e in self.routes.get(dest, []) if e[0] != route]
        entries.insert(0, (route, now))
        self.routes[dest] = entries

    def get(self, dest: int, avoid: frozenset | set = frozenset()) -> Optional[Route]:
        for route, _ in self.routes.get(dest, ()):
            if not avoid or avoid.isdisjoint(route):
                return route
        return None

    def invalidate_link(self, a: int, b: int) -> int:
        removed = 0
        for dest in list(self.routes):
            kept = [e for e in self.routes[dest] if not _has_link(e[0], a, b)]
            removed += len(self.routes[dest]) - len(kept)
            self.routes[dest] = kept
        return removed

    def invalidate_node(self, node: int) -> int:
        removed = 0
        for dest in list(self.routes):
            kept = [e for e in self.routes[dest] if node not in e[0]]
            removed += len(self.routes[dest]) - len(kept)
            self.routes[dest] = kept
        return removed


def _has_link(route: Route, a: int, b: int) -> bool:
    for u, v in zip(route, route[1:]):
        if (u == a and v == b) or (u == b and v == a):
            return True
    return False


@dataclass
class Discovery:
    target: int
    request_id: int
    started_at: int
    attempts: int = 1
    state: str = "waiting"  # waiting -> collecting -> probing
    timer: Optional[EventHandle] = None
    candidates: list = field(default_factory=list)
    chosen: object = None


@dataclass
class Buffered:
    dest: int
    flow: int
    seq: int
    size: int
    created_at: int


class DsrNode:
    is_attacker = False

    def __init__(self, world: "World", node_id: int):
        self.world = world
        self.id = node_id
        cfg = world.config
        self.cached_replies = cfg.cached_replies
        self.discovery_timeout = to_us(cfg.discovery_timeout)
        self.discovery_retries = cfg.discovery_retries
        self.buffer_limit = cfg.buffer_limit
        self.route_break_notice = cfg.route_break_notice
        self.next_request_id = 1
        self.seen: set[tuple[int, int]] = set()
        self.cache = RouteCache(node_id)
        self.pending: dict[int, Discovery] = {}
        self.buffer: deque[Buffered] = deque()

    # -- helpers -----------------------------------------------------------------

    @property
    def now(self) -> int:
        return self.world.engine.now

    def avoid(self) -> frozenset:
        """Nodes this node refuses to route through."""
        return frozenset()

    def send_control(self, dest: Optional[int], packet) -> list[int]:
        self.world.ledger.record_control(packet.kind)
        receivers = self.world.net.transmit(self.id, dest, packet)
        self.world.trace_packet("send", packet, self.id, dest)
        return receivers

    # -- dispatch ----------------------------------------------------------------

    def receive(self, sender: int, packet) -> None:
        kind = packet.kind
        if kind == "data":
            self.forward_data(packet)
        elif kind == "rreq":
            self.handle_rreq(sender, packet)
        elif kind == "rrep":
            self.handle_rrep(sender, packet)
        elif kind == "probe":
            self.handle_probe(packet)
        elif kind == "probe-ack":
            self.handle_probe_ack(packet)
        elif kind == "alert":
            self.handle_alert(sender, packet)
        elif kind == "route-break":
            self.handle_route_break(packet)
        else:
            raise ProtocolFault(f"unknown packet kind {kind!r}")

    # -- discovery ---------------------------------------------------------------

    def start_discovery(self, target: int) -> int:
        if target == self.id:
            raise ProtocolFault(f"node {self.id} cannot discover a route to itself")
        d = self.pending.get(target)
        if d is not None:
            return d.request_id
        d = Discovery(target=target, request_id=0, started_at=self.now)
        self.pending[target] = d
        self._flood(d)
        return d.request_id

    def _flood(self, d: Discovery) -> None:
        rid = self.next_request_id
        self.next_request_id += 1
        d.request_id = rid
        d.state = "waiting"
        d.candidates = []
        d.chosen = None
        self.seen.add((self.id, rid))
        self.send_control(None, Rreq(self.id, d.target, rid, (self.id,)))
        d.timer = self.world.engine.after(self.discovery_timeout, EventKind.RREP_WINDOW,
                                          lambda: self._discovery_timeout(d, rid),
                                          node=self.id, detail={"discovery": rid, "why": "timeout"})

    def _discovery_timeout(self, d: Discovery, rid: int) -> None:
        if self.pending.get(d.target) is not d or d.request_id != rid or d.state != "waiting":
            return
        self.discovery_failed(d)

    def discovery_failed(self, d: Discovery) -> None:
        """Retry up to ``discovery_retries`` times, then drop the packets waiting for it."""
        if d.attempts <= self.discovery_retries:
            d.attempts += 1
            self._flood(d)
            return
        self.close_discovery(d)
        self.drop_buffered(d.target, "no-route")

    def close_discovery(self, d: Discovery) -> None:
        if d.timer is not None:
            d.timer.cancel()
        if self.pending.get(d.target) is d:
            del self.pending[d.target]

    def handle_rreq(self, sender: int, rreq: Rreq) -> None:
        key = (rreq.origin, rreq.request_id)
        if key in self.seen or self.id in rreq.record:
            return
        if not self.accept_rreq(sender, rreq):
            return
        self.seen.add(key)
        if self.id == rreq.target:
            self.reply(rreq, rreq.record + (self.id,))
            return
        if self.cached_replies:
            cached = self.cache.get(rreq.target, self.avoid())
            if cached is not None and set(cached[1:]).isdisjoint(rreq.record):
                self.reply(rreq, rreq.record + cached, claims_cached=True)
                return
        self.send_control(None, replace(rreq, record=rreq.record + (self.id,)))

    def accept_rreq(self, sender: int, rreq: Rreq) -> bool:
        return True

    def reply(self, rreq: Rreq, route: Route, claims_cached: bool = False, delay: int = 0) -> None:
        rrep = Rrep(rreq.origin, rreq.target, rreq.request_id, route, self.id, claims_cached)
        prev = route[route.index(self.id) - 1]
        if delay > 0:
            self.world.engine.after(delay, EventKind.DELIVERY, lambda: self.send_control(prev, rrep),
                                    node=self.id, detail="rrep-delay")
        else:
            self.send_control(prev, rrep)

    def handle_rrep(self, sender: int, rrep: Rrep) -> None:
        if self.id == rrep.origin:
            self.on_rrep(rrep)
            return
        if self.id not in rrep.route:
            return
        idx = rrep.route.index(self.id)
        if idx == 0 or idx >= rrep.route.index(rrep.replier):
            return
        if not self.accept_relayed_rrep(rrep):
            return
        self.send_control(rrep.route[idx - 1], rrep)

    def accept_relayed_rrep(self, rrep: Rrep) -> bool:
        return True

    def on_rrep(self, rrep: Rrep) -> None:
        """Baseline: the first reply for the pending discovery wins."""
        self.handle_rrep_plain(rrep)

    def handle_rrep_plain(self, rrep: Rrep) -> bool:
        d = self.pending.get(rrep.target)
        if d is None or d.request_id != rrep.request_id:
            return False
        self.install_route(d, rrep.route)
        return True

    def install_route(self, d: Discovery, route: Route) -> None:
        self.cache.add(d.target, route, self.now)
        self.close_discovery(d)
        self.flush(d.target)

    # -- data ----------------------------------------------------------------------

    def send_data(self, dest: int, flow: int, seq: int, size: int) -> str:
        """Originate one data packet; returns 'sent', 'buffered' or 'lost'."""
        now = self.now
        ledger = self.world.ledger
        ledger.record_send(flow, seq, now, size)
        route = self.cache.get(dest, self.avoid())
        if route is not None and dest not in self.pending:
            self._launch(DataPacket(flow, seq, route, 0, size, now))
            return "sent"
        if len(self.buffer) >= self.buffer_limit:
            ledger.record_drop(flow, seq, now, "buffer")
            self.world.trace_data("drop", self.id, None, flow, seq, None, cause="buffer")
            self.start_discovery(dest)
            return "lost"
        self.buffer.append(Buffered(dest, flow, seq, size, now))
        self.start_discovery(dest)
        return "buffered"

    def flush(self, dest: int) -> None:
        waiting = [b for b in self.buffer if b.dest == dest]
        if not waiting:
            return
        self.buffer = deque(b for b in self.buffer if b.dest != dest)
        for b in waiting:
            route = self.cache.get(dest, self.avoid())
            if route is None:
                self.buffer.append(b)
                self.start_discovery(dest)
                continue
            self._launch(DataPacket(b.flow, b.seq, route, 0, b.size, b.created_at))

    def drop_buffered(self, dest: int, cause: str) -> None:
        for b in [b for b in self.buffer if b.dest == dest]:
            self.world.ledger.record_drop(b.flow, b.seq, self.now, cause)
            self.world.trace_data("drop", self.id, None, b.flow, b.seq, None, cause=cause)
        self.buffer = deque(b for b in self.buffer if b.dest != dest)

    def _launch(self, pkt: DataPacket) -> None:
        self._relay(pkt)

    def forward_data(self, pkt: DataPacket) -> None:
        route = pkt.source_route
        if route[pkt.cursor] != self.id:
            raise ProtocolFault(f"data {pkt.flow_id}/{pkt.seq_no} at node {self.id} but cursor names {route[pkt.cursor]}")
        if pkt.cursor == len(route) - 1:
            self.world.ledger.record_receive(pkt.flow_id, pkt.seq_no, self.now)
            self.world.trace_data("recv", route[pkt.cursor - 1], self.id, pkt.flow_id, pkt.seq_no, route)
            return
        self._relay(pkt)

    def _relay(self, pkt: DataPacket) -> None:
        route = pkt.source_route
        nxt = route[pkt.cursor + 1]
        out = replace(pkt, cursor=pkt.cursor + 1)
        net = self.world.net
        reachable = net.in_range(self.id, nxt)
        delivered = net.transmit(self.id, nxt, out) if reachable else []
        if delivered:
            self.world.trace_data("send" if pkt.cursor == 0 else "fwd", self.id, nxt,
                                  pkt.flow_id, pkt.seq_no, route)
            return
        self.world.ledger.record_drop(pkt.flow_id, pkt.seq_no, self.now, "link")
        self.world.trace_data("drop", self.id, nxt, pkt.flow_id, pkt.seq_no, route, cause="link")
        if not reachable:
            self.link_broken(route, pkt.cursor, nxt)

    def link_broken(self, route: Route, cursor: int, nxt: int) -> None:
        self.cache.invalidate_link(self.id, nxt)
        if cursor > 0 and self.route_break_notice:
            self.send_control(route[cursor - 1], RouteBreak(route, self.id, nxt, cursor - 1))

    def handle_route_break(self, rb: RouteBreak) -> None:
        if rb.route[rb.cursor] != self.id:
            return
        self.cache.invalidate_link(rb.broken_from, rb.broken_to)
        if rb.cursor > 0:
            self.send_control(rb.route[rb.cursor - 1], replace(rb, cursor=rb.cursor - 1))

    # -- probes (relayed by every honest node) ---------------------------------------

    def handle_probe(self, probe: ProbePacket) -> None:
        route = probe.route
        if route[probe.cursor] != self.id:
            return
        if probe.cursor == len(route) - 1:
            self.send_control(route[-2], ProbeAck(probe.probe_id, route, len(route) - 2))
            return
        self.send_control(route[probe.cursor + 1], replace(probe, cursor=probe.cursor + 1))

    def handle_probe_ack(self, ack: ProbeAck) -> None:
        if ack.route[ack.cursor] != self.id:
            return
        if ack.cursor == 0:
            self.on_probe_ack(ack)
            return
        self.send_control(ack.route[ack.cursor - 1], replace(ack, cursor=ack.cursor - 1))

    def on_probe_ack(self, ack: ProbeAck) -> None:
        pass

    def handle_alert(self, sender: int, alert: SuspicionAlert) -> None:
        pass
