"""AIS-DSR originator pipeline.

Replies are gathered for a window after the first one arrives, each distinct
route is probed three times, the candidates are scored and vetted, and the
survivor with the best secure score is installed. Fully failed routes get
their replier isolated and reported to one-hop neighbours.
"""
from __future__ import annotations

import bisect
from collections import defaultdict
from typing import Optional

import numpy as np

from ..dsr import Discovery, DsrNode
from ..engine import EventHandle, EventKind, derive_seed, to_us
from ..packets import ProbeAck, ProbePacket, Rrep, Rreq, SuspicionAlert
from .clonal import DetectorSet, classify_pattern, train_detectors
from .scoring import (PROBES_PER_ROUTE, RouteCandidate, route_features, score_candidates,
                      select_route, settled_choice)
from .suspicion import SuspicionTable


def rrep_iteration_count(log: list[int], at: int, window: int) -> int:
    """Replies logged in the half-open interval (at - window, at]."""
    lo = bisect.bisect_right(log, at - window)
    hi = bisect.bisect_right(log, at)
    return hi - lo


def probe_timeout(hop_count: int, per_hop: float, floor: float) -> float:
    return max(floor, per_hop * hop_count)


class _ProbeRun:
    __slots__ = ("candidate", "outstanding", "timer", "issued")

    def __init__(self, candidate: RouteCandidate):
        self.candidate = candidate
        self.outstanding: Optional[int] = None
        self.timer: Optional[EventHandle] = None
        self.issued = 0


class AisDsrNode(DsrNode):
    def __init__(self, world, node_id: int):
        super().__init__(world, node_id)
        cfg = world.config
        self.rrep_window = to_us(cfg.rrep_window)
        self.iteration_window = to_us(cfg.iteration_window)
        self.iteration_cap = cfg.iteration_cap
        self.timeout_per_hop = cfg.probe_timeout_per_hop
        self.timeout_floor = cfg.probe_timeout_floor
        self.alert_flood = cfg.alert_flood
        self.use_detectors = cfg.use_detectors
        self.min_self = cfg.min_self_patterns
        self.retrain_every = cfg.retrain_every
        self.max_self = cfg.max_self_patterns
        self.clonal = cfg.clonal_params()
        self.table = SuspicionTable(node_id, cfg.alert_threshold)
        self.rrep_log: dict[int, list[int]] = defaultdict(list)
        self.self_patterns: list[tuple[float, float, float]] = []
        self._harvested = 0
        self._trained_at = 0
        self.detectors: Optional[DetectorSet] = None
        self._det_rng = np.random.default_rng(derive_seed(cfg.seed, "ais-mutation", node_id))
        self._next_probe = 1
        self._probes: dict[int, tuple[Discovery, int, _ProbeRun]] = {}
        self._alerts_seen: set[tuple[int, int]] = set()

    def avoid(self) -> frozenset:
        return frozenset(self.table.isolated())

    # -- isolation filters ---------------------------------------------------------

    def accept_rreq(self, sender: int, rreq: Rreq) -> bool:
        if self.table.is_isolated(sender):
            return False
        return not any(self.table.is_isolated(n) for n in rreq.record)

    def accept_relayed_rrep(self, rrep: Rrep) -> bool:
        return not self.table.is_isolated(rrep.replier)

    # -- reply collection ------------------------------------------------------------

    def on_rrep(self, rrep: Rrep) -> None:
        now = self.now
        if self.table.is_isolated(rrep.replier) or not self.avoid().isdisjoint(rrep.route):
            return
        log = self.rrep_log[rrep.replier]
        log.append(now)
        d = self.pending.get(rrep.target)
        if d is None or d.request_id != rrep.request_id or d.state == "probing":
            return
        if d.state == "waiting":
            if d.timer is not None:
                d.timer.cancel()
            d.state = "collecting"
            rid = d.request_id
            d.timer = self.world.engine.after(self.rrep_window, EventKind.RREP_WINDOW,
                                              lambda: self._window_closed(d, rid), node=self.id,
                                              detail={"discovery": rid, "why": "window"})
        if any(c.route == rrep.route for c in d.candidates):
            return
        iters = rrep_iteration_count(log, now, self.iteration_window)
        d.candidates.append(RouteCandidate(route=rrep.route, replier=rrep.replier,
                                           replier_rrep_iterations=iters, received_at=now))

    def _window_closed(self, d: Discovery, rid: int) -> None:
        if self.pending.get(d.target) is not d or d.request_id != rid:
            return
        d.state = "probing"
        d.timer = None
        for cand in d.candidates:
            self._issue_probe(d, _ProbeRun(cand))

    # -- probing -----------------------------------------------------------------------

    def _issue_probe(self, d: Discovery, run: _ProbeRun) -> None:
        pid = self._next_probe
        self._next_probe += 1
        run.outstanding = pid
        run.issued += 1
        self._probes[pid] = (d, d.request_id, run)
        route = run.candidate.route
        timeout = to_us(probe_timeout(run.candidate.hop_count, self.timeout_per_hop, self.timeout_floor))
        run.timer = self.world.engine.after(timeout, EventKind.PROBE_TIMEOUT,
                                            lambda: self._probe_result(pid, False), node=self.id,
                                            detail={"probe": pid})
        self.send_control(route[1], ProbePacket(pid, route, 1, self.now))

    def on_probe_ack(self, ack: ProbeAck) -> None:
        self._probe_result(ack.probe_id, True)

    def _probe_result(self, pid: int, ok: bool) -> None:
        entry = self._probes.pop(pid, None)
        if entry is None:
            return
        d, rid, run = entry
        if d.request_id != rid or d.state != "probing":
            return
        if ok:
            run.timer.cancel()
            run.candidate.probe_successes += 1
        else:
            run.candidate.probe_failures += 1
        run.outstanding = None
        if run.issued < PROBES_PER_ROUTE:
            self._issue_probe(d, run)
        if all(c.probes_done == PROBES_PER_ROUTE for c in d.candidates):
            self._finalize(d)
        elif d.chosen is None:
            early = settled_choice(d.candidates, self.avoid())
            if early is not None:
                d.chosen = early
                self.install_route(d, early.route)

    # -- scoring and selection -----------------------------------------------------------

    def _finalize(self, d: Discovery) -> None:
        """All probes answered or timed out: score, classify, accuse, and pick if not yet picked."""
        d.state = "done"
        cands = d.candidates
        score_candidates(cands)
        max_hop = max(c.hop_count for c in cands)
        verdicts = {}
        for c in cands:
            c.features = route_features(c, max_hop, self.iteration_cap)
            if self.use_detectors and self.detectors is not None:
                v = classify_pattern(self.detectors, c.features)
                verdicts[c.route] = v
                if not v.matched_self and c.replier != d.target:
                    if self.table.advisory(c.replier, self.now):
                        self._on_isolated(c.replier)
        sel = select_route(cands, self.avoid())
        alerts = []
        for suspect in sel.accused:
            # the destination answering for itself is never the forger
            if suspect == d.target:
                continue
            if self.raise_alert_and_isolate(suspect):
                alerts.append(suspect)
        if self.use_detectors:
            self._harvest(c.features for c in cands if c.p_bh == 0.0)
        if d.chosen is not None:
            sel.chosen = d.chosen
            self.world.trace_defense(self.id, d, cands, sel, alerts, verdicts)
            return
        self.world.trace_defense(self.id, d, cands, sel, alerts, verdicts)
        if sel.chosen is not None and self.avoid().isdisjoint(sel.chosen.route):
            d.chosen = sel.chosen
            self.install_route(d, sel.chosen.route)
        elif self.pending.get(d.target) is d:
            self.discovery_failed(d)

    def _harvest(self, features) -> None:
        new = list(features)
        if not new:
            return
        self.self_patterns.extend(new)
        self._harvested += len(new)
        if len(self.self_patterns) > self.max_self:
            self.self_patterns = self.self_patterns[-self.max_self:]
        if self.detectors is None:
            due = len(self.self_patterns) >= self.min_self
        else:
            due = self._harvested - self._trained_at >= self.retrain_every
        if due:
            self.detectors = train_detectors(self.self_patterns, self.clonal, self._det_rng)
            self._trained_at = self._harvested

    # -- suspicion ------------------------------------------------------------------------

    def raise_alert_and_isolate(self, suspect: int) -> bool:
        """Direct detection of ``suspect``; broadcasts an alert the first time. Returns True if alerted."""
        if suspect == self.id:
            return False
        first = self.table.direct_detection(suspect, self.now)
        self._on_isolated(suspect)
        if first:
            self._alerts_seen.add((self.id, suspect))
            self.send_control(None, SuspicionAlert(self.id, suspect))
        return first

    def _on_isolated(self, suspect: int) -> None:
        self.cache.invalidate_node(suspect)

    def handle_alert(self, sender: int, alert: SuspicionAlert) -> None:
        key = (alert.alerter, alert.suspect)
        if key in self._alerts_seen:
            return
        self._alerts_seen.add(key)
        if self.table.alert(alert.suspect, alert.alerter, self.now):
            self._on_isolated(alert.suspect)
        if self.alert_flood and alert.suspect != self.id:
            self.send_control(None, alert)
