"""Deterministic discrete-event engine.

Time is kept as integer microseconds so that event ordering never depends on
floating-point rounding. Ties at equal timestamps resolve by insertion order.
"""
from __future__ import annotations

import enum
import hashlib
import heapq
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, TextIO

US_PER_SECOND = 1_000_000


def to_us(seconds: float) -> int:
    """Convert seconds to integer microseconds (round half away from zero)."""
    if seconds < 0:
        return -int(-seconds * US_PER_SECOND + 0.5)
    return int(seconds * US_PER_SECOND + 0.5)


def to_seconds(us: int) -> float:
    return us / US_PER_SECOND


class EventKind(str, enum.Enum):
    DELIVERY = "delivery"
    MOBILITY = "mobility"
    PROBE_TIMEOUT = "probe-timeout"
    RREP_WINDOW = "rrep-window"
    TRAFFIC = "traffic"
    SNAPSHOT = "snapshot"


class SchedulingError(ValueError):
    pass


class SimulationFault(RuntimeError):
    """An event handler failed; carries the offending event."""

    def __init__(self, message: str, event: "Event | None" = None, tail: tuple = ()):
        super().__init__(message)
        self.event = event
        self.tail = tail


@dataclass
class Event:
    fire_at: int
    kind: EventKind
    action: Callable[[], Any]
    node: Optional[int] = None
    detail: Any = None
    seq: int = -1
    cancelled: bool = field(default=False, repr=False)
    fired: bool = field(default=False, repr=False)

    def describe(self) -> str:
        return f"{self.kind.value}@{to_seconds(self.fire_at):.6f}s seq={self.seq} node={self.node} detail={self.detail!r}"


class EventHandle:
    __slots__ = ("_event",)

    def __init__(self, event: Event):
        self._event = event

    @property
    def seq(self) -> int:
        return self._event.seq

    @property
    def fire_at(self) -> int:
        return self._event.fire_at

    @property
    def pending(self) -> bool:
        ev = self._event
        return not (ev.cancelled or ev.fired)

    def cancel(self) -> None:
        self._event.cancelled = True


class Engine:
    """Single-threaded event loop for one simulation world."""

    def __init__(self, trace: Optional[TextIO] = None):
        self.now = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._trace = trace
        self.processed = 0
        self._recent: deque[Event] = deque(maxlen=20)

    def schedule(self, event: Event) -> EventHandle:
        if event.fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule {event.kind.value} at {event.fire_at}us, clock is {self.now}us"
            )
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, (event.fire_at, event.seq, event))
        return EventHandle(event)

    def at(self, fire_at: int, kind: EventKind, action: Callable[[], Any],
           node: Optional[int] = None, detail: Any = None) -> EventHandle:
        return self.schedule(Event(fire_at, kind, action, node, detail))

    def after(self, delay_us: int, kind: EventKind, action: Callable[[], Any],
              node: Optional[int] = None, detail: Any = None) -> EventHandle:
        return self.schedule(Event(self.now + delay_us, kind, action, node, detail))

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    def run_until(self, end: int) -> int:
        """Process every event with ``fire_at <= end``; return how many ran."""
        if end < self.now:
            raise SchedulingError(f"run_until({end}) is before the clock ({self.now})")
        count = 0
        queue = self._queue
        while queue and queue[0][0] <= end:
            fire_at, _, event = heapq.heappop(queue)
            if event.cancelled:
                continue
            self.now = fire_at
            event.fired = True
            self._recent.append(event)
            if self._trace is not None:
                self._emit(event)
            try:
                event.action()
            except SimulationFault:
                raise
            except Exception as exc:
                tail = tuple(e.describe() for e in self._recent)
                raise SimulationFault(f"handler failed on {event.describe()}: {exc!r}", event, tail) from exc
            count += 1
        self.now = end
        self.processed += count
        return count

    def _emit(self, event: Event) -> None:
        rec = {
            "t": round(to_seconds(event.fire_at), 6),
            "seq": event.seq,
            "kind": event.kind.value,
            "node": event.node,
            "detail": event.detail,
        }
        self._trace.write(json.dumps(rec, default=str, sort_keys=True) + "\n")


def derive_seed(seed: int, *labels: object) -> int:
    """Stable 64-bit seed for a named stream, independent of platform and hash salting."""
    text = ":".join([str(seed & 0xFFFFFFFFFFFFFFFF), *map(str, labels)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


class RngStream:
    """A named pseudo-random stream; draws never touch any other stream."""

    def __init__(self, seed: int, stream_id: str):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.stream_id = stream_id
        self._rng = random.Random(derive_seed(seed, stream_id))

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        if low == 0.0 and high == 1.0:
            return self._rng.random()
        return low + (high - low) * self._rng.random()

    def uniform_int(self, low: int, high: int) -> int:
        """Integer in the half-open range [low, high)."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        return low + self._rng.randrange(high - low)

    def gaussian(self, mean: float, sd: float) -> float:
        return self._rng.gauss(mean, sd)

    def sample(self, population, k: int) -> list:
        return self._rng.sample(list(population), k)

    def child_seed(self) -> int:
        return self._rng.getrandbits(64)


def next_random(stream: RngStream, kind: str = "uniform-float", *args: float):
    """Dispatch a draw by kind name: ``uniform-float``, ``uniform-int``, ``gaussian``."""
    if kind == "uniform-float":
        return stream.uniform()
    if kind == "uniform-int":
        return stream.uniform_int(int(args[0]), int(args[1]))
    if kind == "gaussian":
        return stream.gaussian(args[0], args[1])
    raise ValueError(f"unknown draw kind {kind!r}")
