from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SuspicionEntry:
    suspicion_count: int = 0
    first_seen: int = 0
    isolated: bool = False
    direct: bool = False
    alerters: set = field(default_factory=set)


class SuspicionTable:
    """Per-node record of suspected black holes.

    A suspect is isolated after one direct detection or once its accumulated
    suspicion (distinct one-hop alerts plus local detector verdicts) reaches
    ``alert_threshold``. Isolation is never lifted.
    """

    def __init__(self, owner: int, alert_threshold: int = 2):
        self.owner = owner
        self.alert_threshold = alert_threshold
        self.entries: dict[int, SuspicionEntry] = {}

    def _entry(self, suspect: int, now: int) -> SuspicionEntry:
        e = self.entries.get(suspect)
        if e is None:
            e = self.entries[suspect] = SuspicionEntry(first_seen=now)
        return e

    def is_isolated(self, node: int) -> bool:
        e = self.entries.get(node)
        return e is not None and e.isolated

    def isolated(self) -> set[int]:
        return {n for n, e in self.entries.items() if e.isolated}

    def count(self, node: int) -> int:
        e = self.entries.get(node)
        return 0 if e is None else e.suspicion_count

    def direct_detection(self, suspect: int, now: int) -> bool:
        """Record a fully failed route replied by ``suspect``; True the first time."""
        if suspect == self.owner:
            return False
        e = self._entry(suspect, now)
        e.suspicion_count += 1
        first = not e.direct
        e.direct = True
        e.isolated = True
        return first

    def alert(self, suspect: int, alerter: int, now: int) -> bool:
        """Count a neighbour's alert; repeated alerts from one alerter count once. True if newly isolated."""
        if suspect == self.owner or alerter == suspect:
            return False
        e = self._entry(suspect, now)
        if alerter in e.alerters:
            return False
        e.alerters.add(alerter)
        e.suspicion_count += 1
        return self._maybe_isolate(e)

    def advisory(self, suspect: int, now: int) -> bool:
        """A non-self detector verdict against ``suspect``'s route. True if newly isolated."""
        if suspect == self.owner:
            return False
        e = self._entry(suspect, now)
        e.suspicion_count += 1
        return self._maybe_isolate(e)

    def _maybe_isolate(self, e: SuspicionEntry) -> bool:
        if not e.isolated and e.suspicion_count >= self.alert_threshold:
            e.isolated = True
            return True
        return False
