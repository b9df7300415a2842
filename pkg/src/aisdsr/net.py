"""Node placement, random-waypoint mobility, unit-disk connectivity and the link layer."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, TextIO

import numpy as np

from .engine import Engine, EventKind, RngStream, derive_seed, to_seconds, to_us


@dataclass
class Position:
    x: float
    y: float


@dataclass
class MobilityState:
    """One leg of random-waypoint motion followed by a pause at the waypoint."""

    start: tuple[float, float]
    waypoint: tuple[float, float]
    speed: float
    depart_at: int
    arrive_at: int
    pause_until: int


class RandomWaypoint:
    """Per-node random-waypoint motion.

    Each node draws from its own stream, so the trajectory of a node does not
    depend on when, or how often, positions are queried.
    """

    def __init__(self, n: int, width: float, height: float, pause_time: float,
                 speed_range: tuple[float, float], seed: int):
        v_min, v_max = speed_range
        if not 0 < v_min <= v_max:
            raise ValueError(f"speed range {speed_range} must satisfy 0 < v_min <= v_max")
        if pause_time < 0:
            raise ValueError("pause_time must be non-negative")
        self.n = n
        self.width = float(width)
        self.height = float(height)
        self.pause_us = to_us(pause_time)
        self.speed_range = (float(v_min), float(v_max))
        self._rngs = [RngStream(derive_seed(seed, "mobility", i), "mobility") for i in range(n)]
        self.states: list[MobilityState] = []
        for rng in self._rngs:
            p = (rng.uniform(0.0, self.width), rng.uniform(0.0, self.height))
            # nodes start paused at their initial position
            self.states.append(MobilityState(p, p, 0.0, 0, 0, self.pause_us))
        self._refresh_arrays()
        self._cache_t = -1
        self._cache = None
        self.on_leg: Optional[Callable[[int, MobilityState], None]] = None

    def _new_leg(self, i: int) -> None:
        st = self.states[i]
        rng = self._rngs[i]
        start = st.waypoint
        dest = (rng.uniform(0.0, self.width), rng.uniform(0.0, self.height))
        speed = rng.uniform(*self.speed_range)
        dist = math.hypot(dest[0] - start[0], dest[1] - start[1])
        depart = st.pause_until
        arrive = depart + to_us(dist / speed)
        self.states[i] = MobilityState(start, dest, speed, depart, arrive, arrive + self.pause_us)
        if self.on_leg is not None:
            self.on_leg(i, self.states[i])

    def _refresh_arrays(self) -> None:
        st = self.states
        self._sx = np.array([s.start[0] for s in st])
        self._sy = np.array([s.start[1] for s in st])
        self._wx = np.array([s.waypoint[0] for s in st])
        self._wy = np.array([s.waypoint[1] for s in st])
        self._dep = np.array([s.depart_at for s in st], dtype=np.int64)
        self._arr = np.array([s.arrive_at for s in st], dtype=np.int64)
        self._pause = np.array([s.pause_until for s in st], dtype=np.int64)

    def _advance(self, t: int) -> None:
        stale = np.nonzero(self._pause <= t)[0]
        if stale.size == 0:
            return
        for i in stale:
            i = int(i)
            while self.states[i].pause_until <= t:
                self._new_leg(i)
        self._refresh_arrays()

    def positions(self, t: int) -> np.ndarray:
        """(n, 2) array of positions at time ``t`` (microseconds)."""
        if t == self._cache_t:
            return self._cache
        self._advance(t)
        span = np.maximum(self._arr - self._dep, 1)
        frac = np.clip((t - self._dep) / span, 0.0, 1.0)
        out = np.empty((self.n, 2))
        out[:, 0] = self._sx + (self._wx - self._sx) * frac
        out[:, 1] = self._sy + (self._wy - self._sy) * frac
        self._cache_t = t
        self._cache = out
        return out

    def position_at(self, node: int, t: int) -> Position:
        x, y = self.positions(t)[node]
        return Position(float(x), float(y))


class StaticPlacement:
    """Fixed node coordinates (explicit topologies)."""

    def __init__(self, coords: Sequence[tuple[float, float]]):
        self.n = len(coords)
        self._pos = np.array(coords, dtype=float).reshape(self.n, 2)

    def positions(self, t: int) -> np.ndarray:
        return self._pos

    def position_at(self, node: int, t: int) -> Position:
        x, y = self._pos[node]
        return Position(float(x), float(y))


def kinematic_position(start, waypoint, speed: float, elapsed: float) -> tuple[float, float]:
    """Closed-form straight-line position after ``elapsed`` seconds."""
    dx, dy = waypoint[0] - start[0], waypoint[1] - start[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return start
    f = min(1.0, speed * elapsed / dist)
    return (start[0] + dx * f, start[1] + dy * f)


@dataclass
class LinkModel:
    range: float = 250.0
    per_hop_latency: float = 0.002
    latency_jitter: float = 0.001
    loss_prob: float = 0.0
    queue_limit: Optional[int] = None

    def __post_init__(self):
        if self.range <= 0:
            raise ValueError("radio range must be positive")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must lie in [0, 1]")
        if self.per_hop_latency < 0 or self.latency_jitter < 0:
            raise ValueError("latencies must be non-negative")


class Network:
    """Unit-disk radio over a placement; turns transmissions into delivery events."""

    def __init__(self, engine: Engine, placement, link: LinkModel, rng: RngStream,
                 deliver: Callable[[int, int, object], None]):
        self.engine = engine
        self.placement = placement
        self.link = link
        self.rng = rng
        self._deliver = deliver
        self._r2 = link.range * link.range
        self._lat = to_us(link.per_hop_latency)
        self._jit = link.latency_jitter
        self._outbound = [0] * placement.n

    @property
    def n(self) -> int:
        return self.placement.n

    def distance(self, a: int, b: int, t: Optional[int] = None) -> float:
        pos = self.placement.positions(self.engine.now if t is None else t)
        return math.hypot(pos[a, 0] - pos[b, 0], pos[a, 1] - pos[b, 1])

    def in_range(self, a: int, b: int, t: Optional[int] = None) -> bool:
        pos = self.placement.positions(self.engine.now if t is None else t)
        dx = pos[a, 0] - pos[b, 0]
        dy = pos[a, 1] - pos[b, 1]
        return dx * dx + dy * dy <= self._r2

    def neighbors(self, node: int, t: Optional[int] = None) -> list[int]:
        pos = self.placement.positions(self.engine.now if t is None else t)
        d = pos - pos[node]
        mask = (d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]) <= self._r2
        mask[node] = False
        return np.nonzero(mask)[0].tolist()

    def transmit(self, sender: int, dest: Optional[int], packet) -> list[int]:
        """Schedule deliveries; ``dest=None`` broadcasts. Returns the receivers scheduled."""
        if dest is None:
            candidates = self.neighbors(sender)
        elif dest != sender and self.in_range(sender, dest):
            candidates = [dest]
        else:
            candidates = []
        receivers = []
        limit = self.link.queue_limit
        for r in candidates:
            if self.link.loss_prob > 0.0 and self.rng.uniform() < self.link.loss_prob:
                continue
            if limit is not None and self._outbound[sender] >= limit:
                continue
            delay = self._lat + to_us(self._jit * self.rng.uniform()) if self._jit > 0 else self._lat
            self._outbound[sender] += 1
            self.engine.after(delay, EventKind.DELIVERY, _Delivery(self, sender, r, packet),
                              node=r, detail=packet.kind)
            receivers.append(r)
        return receivers

    def _complete(self, sender: int, receiver: int, packet) -> None:
        self._outbound[sender] -= 1
        self._deliver(receiver, sender, packet)


class _Delivery:
    __slots__ = ("net", "sender", "receiver", "packet")

    def __init__(self, net: Network, sender: int, receiver: int, packet):
        self.net = net
        self.sender = sender
        self.receiver = receiver
        self.packet = packet

    def __call__(self) -> None:
        self.net._complete(self.sender, self.receiver, self.packet)


class MobilityTrace:
    """Writes {t, node, x, y} JSON lines at every waypoint departure."""

    def __init__(self, out: TextIO):
        self.out = out

    def __call__(self, node: int, st: MobilityState) -> None:
        self.out.write(json.dumps({"t": round(to_seconds(st.depart_at), 6), "node": node,
                                   "x": round(st.start[0], 3), "y": round(st.start[1], 3)}) + "\n")
