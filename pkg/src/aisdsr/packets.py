"""Wire messages exchanged between nodes.

Routes are tuples of node ids starting at the originator. Every message is an
immutable dataclass; relaying produces a modified copy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

Route = tuple[int, ...]


class RouteError(ValueError):
    pass


def check_route(route: Route) -> Route:
    """Raise unless ``route`` is a non-empty simple path."""
    if len(route) < 1:
        raise RouteError("empty route record")
    if len(set(route)) != len(route):
        raise RouteError(f"route {route} repeats a node")
    return route


@dataclass(frozen=True)
class Rreq:
    origin: int
    target: int
    request_id: int
    record: Route

    kind = "rreq"


@dataclass(frozen=True)
class Rrep:
    origin: int
    target: int
    request_id: int
    route: Route
    replier: int
    replier_claims_cached: bool = False

    kind = "rrep"

    def __post_init__(self):
        if self.route[0] != self.origin or self.route[-1] != self.target:
            raise RouteError(f"reply route {self.route} does not join {self.origin}->{self.target}")
        if self.replier not in self.route:
            raise RouteError(f"replier {self.replier} not on {self.route}")


@dataclass(frozen=True)
class DataPacket:
    flow_id: int
    seq_no: int
    source_route: Route
    cursor: int
    payload_size: int
    created_at: int

    kind = "data"

    def __post_init__(self):
        if not 0 <= self.cursor < len(self.source_route):
            raise RouteError(f"cursor {self.cursor} outside {self.source_route}")
        if self.payload_size <= 0:
            raise ValueError("payload_size must be positive")

    @property
    def source(self) -> int:
        return self.source_route[0]

    @property
    def dest(self) -> int:
        return self.source_route[-1]


@dataclass(frozen=True)
class ProbePacket:
    probe_id: int
    route: Route
    cursor: int
    issued_at: int

    kind = "probe"


@dataclass(frozen=True)
class ProbeAck:
    probe_id: int
    route: Route  # forward route; the ack travels it backwards
    cursor: int

    kind = "probe-ack"


@dataclass(frozen=True)
class SuspicionAlert:
    alerter: int
    suspect: int
    ttl: int = 0

    kind = "alert"


@dataclass(frozen=True)
class RouteBreak:
    """Breakage notice returned to a data source when a relay cannot reach its next hop."""

    route: Route
    broken_from: int
    broken_to: int
    cursor: int

    kind = "route-break"


Packet = Union[Rreq, Rrep, DataPacket, ProbePacket, ProbeAck, SuspicionAlert, RouteBreak]

CONTROL_KINDS = frozenset({"rreq", "rrep", "probe", "probe-ack", "alert", "route-break"})
