"""Per-flow data-packet ledger and the four evaluation metrics.

Only data packets enter the send/receive/drop lists. Control traffic (route
requests/replies, probes, alerts) is tallied separately as overhead.
"""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Optional, TextIO


DROP_CAUSES = ("blackhole", "link", "buffer", "no-route")


class LedgerFault(RuntimeError):
    pass


@dataclass(frozen=True)
class SendEvent:
    flow: int
    seq: int
    t: int
    bytes: int


@dataclass(frozen=True)
class ReceiveEvent:
    flow: int
    seq: int
    t: int


@dataclass(frozen=True)
class DropEvent:
    flow: int
    seq: int
    t: int
    cause: str


class MetricsLedger:
    def __init__(self):
        self.sends: dict[tuple[int, int], SendEvent] = {}
        self.receives: dict[tuple[int, int], ReceiveEvent] = {}
        self.drops: dict[tuple[int, int], DropEvent] = {}
        self.control_packets = 0
        self.control_by_kind: Counter = Counter()
        self.control_drops: Counter = Counter()
        self._last_t: dict[int, int] = {}

    def _check_time(self, flow: int, t: int) -> None:
        if t < self._last_t.get(flow, 0):
            raise LedgerFault(f"flow {flow}: time went backwards to {t}")
        self._last_t[flow] = t

    def record_send(self, flow: int, seq: int, t: int, nbytes: int) -> None:
        key = (flow, seq)
        if key in self.sends:
            raise LedgerFault(f"duplicate send for {key}")
        self._check_time(flow, t)
        self.sends[key] = SendEvent(flow, seq, t, nbytes)

    def record_receive(self, flow: int, seq: int, t: int) -> None:
        key = (flow, seq)
        if key not in self.sends:
            raise LedgerFault(f"receive without send for {key}")
        if key in self.receives:
            raise LedgerFault(f"second receive for {key}")
        if key in self.drops:
            raise LedgerFault(f"receive after drop for {key}")
        self._check_time(flow, t)
        self.receives[key] = ReceiveEvent(flow, seq, t)

    def record_drop(self, flow: int, seq: int, t: int, cause: str) -> None:
        key = (flow, seq)
        if cause not in DROP_CAUSES:
            raise LedgerFault(f"unknown drop cause {cause!r}")
        if key not in self.sends:
            raise LedgerFault(f"drop without send for {key}")
        if key in self.receives:
            raise LedgerFault(f"drop after receive for {key}")
        if key in self.drops:
            raise LedgerFault(f"second drop for {key}")
        self._check_time(flow, t)
        self.drops[key] = DropEvent(flow, seq, t, cause)

    def record(self, event: str, **detail) -> None:
        """Generic entry point: ``event`` is ``send``, ``receive`` or ``drop``."""
        if event == "send":
            self.record_send(detail["flow"], detail["seq"], detail["t"], detail["bytes"])
        elif event == "receive":
            self.record_receive(detail["flow"], detail["seq"], detail["t"])
        elif event == "drop":
            self.record_drop(detail["flow"], detail["seq"], detail["t"], detail["cause"])
        else:
            raise LedgerFault(f"unknown ledger event {event!r}")

    def record_control(self, kind: str) -> None:
        self.control_packets += 1
        self.control_by_kind[kind] += 1

    def record_control_drop(self, kind: str, cause: str) -> None:
        self.control_drops[(kind, cause)] += 1

    @property
    def originated(self) -> int:
        return len(self.sends)

    @property
    def received(self) -> int:
        return len(self.receives)

    @property
    def dropped(self) -> int:
        return len(self.drops)

    @property
    def in_flight(self) -> int:
        return self.originated - self.received - self.dropped

    def drops_by_cause(self) -> dict[str, int]:
        c = Counter(d.cause for d in self.drops.values())
        return {k: c.get(k, 0) for k in DROP_CAUSES}

    def received_bytes(self) -> int:
        return sum(self.sends[k].bytes for k in self.receives)

    def delays_us(self) -> list[int]:
        return [r.t - self.sends[k].t for k, r in self.receives.items()]

    # -- export -----------------------------------------------------------------

    def to_jsonl(self, out: TextIO) -> None:
        for s in self.sends.values():
            out.write(json.dumps({"event": "send", **asdict(s)}) + "\n")
        for r in self.receives.values():
            out.write(json.dumps({"event": "receive", **asdict(r)}) + "\n")
        for d in self.drops.values():
            out.write(json.dumps({"event": "drop", **asdict(d)}) + "\n")
        out.write(json.dumps({"event": "control", "packets": self.control_packets}) + "\n")

    @classmethod
    def from_jsonl(cls, lines: Iterable[str]) -> "MetricsLedger":
        ledger = cls()
        recs = [json.loads(line) for line in lines if line.strip()]
        for rec in recs:
            ev = rec.pop("event")
            if ev == "send":
                ledger.sends[(rec["flow"], rec["seq"])] = SendEvent(**rec)
            elif ev == "receive":
                ledger.receives[(rec["flow"], rec["seq"])] = ReceiveEvent(**rec)
            elif ev == "drop":
                ledger.drops[(rec["flow"], rec["seq"])] = DropEvent(**rec)
            elif ev == "control":
                ledger.control_packets = rec["packets"]
        return ledger


# -- metric formulas --------------------------------------------------------------


def delivery_ratio(received: int, originated: int) -> Optional[float]:
    if originated <= 0:
        return None
    return received / originated


def throughput(ledger: MetricsLedger, duration: float, strict: bool = False) -> dict:
    """Delivery ratio and received bit rate over ``duration`` seconds.

    By default packets still buffered or in flight at the end are left out of
    the denominator; ``strict=True`` counts them as undelivered.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    sent = ledger.originated if strict else ledger.originated - ledger.in_flight
    return {
        "pdr": delivery_ratio(ledger.received, sent),
        "throughput_bps": ledger.received_bytes() * 8 / duration,
    }


def avg_end_to_end_delay(ledger: MetricsLedger) -> Optional[float]:
    """Mean per-packet delay of delivered packets, in milliseconds."""
    delays = ledger.delays_us()
    if not delays:
        return None
    return sum(delays) / len(delays) / 1000.0


def loss_percent(received: int, sent: int) -> Optional[float]:
    if sent <= 0:
        return None
    return (sent - received) / sent * 100.0


def packet_loss_ratio(ledger: MetricsLedger, strict: bool = False) -> Optional[float]:
    sent = ledger.originated if strict else ledger.originated - ledger.in_flight
    return loss_percent(ledger.received, sent)


def drop_percent(dropped: int, sent: int) -> Optional[float]:
    if dropped + sent <= 0:
        return None
    return dropped / (dropped + sent) * 100.0


def drop_packet_ratio(ledger: MetricsLedger) -> Optional[float]:
    return drop_percent(ledger.dropped, ledger.originated)


@dataclass
class MetricsReport:
    pdr: Optional[float]
    throughput_bps: float
    avg_delay_ms: Optional[float]
    plr_percent: Optional[float]
    dpr_percent: Optional[float]
    control_overhead_packets: int
    originated: int = 0
    received: int = 0
    dropped: int = 0
    in_flight: int = 0
    drops_by_cause: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def flat(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, dict):
                prefix = "drops" if f.name == "drops_by_cause" else ""
                for k in sorted(v):
                    out[f"{prefix}_{k}" if prefix else k] = v[k]
            else:
                out[f.name] = v
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.flat().items())

    def to_csv_row(self) -> str:
        flat = self.flat()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(flat.keys())
        w.writerow(_fmt(v) for v in flat.values())
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, set, frozenset)):
        return " ".join(str(x) for x in sorted(v))
    return str(v)


def build_report(ledger: MetricsLedger, duration: float, strict: bool = False,
                 extra: Optional[dict] = None) -> MetricsReport:
    tp = throughput(ledger, duration, strict)
    return MetricsReport(
        pdr=tp["pdr"],
        throughput_bps=tp["throughput_bps"],
        avg_delay_ms=avg_end_to_end_delay(ledger),
        plr_percent=packet_loss_ratio(ledger, strict),
        dpr_percent=drop_packet_ratio(ledger),
        control_overhead_packets=ledger.control_packets,
        originated=ledger.originated,
        received=ledger.received,
        dropped=ledger.dropped,
        in_flight=ledger.in_flight,
        drops_by_cause=ledger.drops_by_cause(),
        extra=dict(extra or {}),
    )
