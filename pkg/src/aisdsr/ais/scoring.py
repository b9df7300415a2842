"""Route vetting arithmetic: infection probability, route fitness, secure score and selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ..packets import Route

PROBES_PER_ROUTE = 3
REJECT_ABOVE = 0.5


class ScoringError(ValueError):
    pass


@dataclass
class RouteCandidate:
    route: Route
    replier: int
    replier_rrep_iterations: int = 1
    probe_successes: int = 0
    probe_failures: int = 0
    p_bh: Optional[float] = None
    fitness: Optional[float] = None
    secure_score: Optional[float] = None
    features: Optional[tuple[float, float, float]] = None
    received_at: int = 0

    def __post_init__(self):
        if len(self.route) < 2:
            raise ScoringError(f"candidate route {self.route} has no hops")
        if self.replier_rrep_iterations < 1:
            raise ScoringError("replier_rrep_iterations counts the triggering reply, so it is >= 1")

    @property
    def hop_count(self) -> int:
        return len(self.route) - 1

    @property
    def probes_done(self) -> int:
        return self.probe_successes + self.probe_failures


def infection_probability(candidate: RouteCandidate) -> float:
    """Fraction of the three probes that went unanswered."""
    if candidate.probes_done != PROBES_PER_ROUTE:
        raise ScoringError(
            f"probing incomplete for {candidate.route}: {candidate.probes_done}/{PROBES_PER_ROUTE}"
        )
    return candidate.probe_failures / PROBES_PER_ROUTE


def route_fitness(hop_count: float, max_hop_count: float, iteration: float, max_iteration: float) -> float:
    """hop_count / max_hop_count + max_iteration / iteration."""
    for name, v in (("hop_count", hop_count), ("max_hop_count", max_hop_count),
                    ("iteration", iteration), ("max_iteration", max_iteration)):
        if not v >= 1:
            raise ScoringError(f"{name} must be >= 1, got {v}")
    if hop_count > max_hop_count or iteration > max_iteration:
        raise ScoringError("values may not exceed their maxima")
    return hop_count / max_hop_count + max_iteration / iteration


def secure_score(p_bh: float, fitness: float) -> float:
    if not 0.0 <= p_bh <= 1.0:
        raise ScoringError(f"p_bh {p_bh} outside [0, 1]")
    if fitness < 0:
        raise ScoringError("fitness must be non-negative")
    return (1.0 - p_bh) * fitness


def score_candidates(candidates: Sequence[RouteCandidate]) -> None:
    """Fill p_bh, fitness and secure_score in place; maxima span the given set."""
    if not candidates:
        return
    max_hop = max(c.hop_count for c in candidates)
    max_iter = max(c.replier_rrep_iterations for c in candidates)
    for c in candidates:
        c.p_bh = infection_probability(c)
        c.fitness = route_fitness(c.hop_count, max_hop, c.replier_rrep_iterations, max_iter)
        c.secure_score = secure_score(c.p_bh, c.fitness)


def _tie_key(c: RouteCandidate):
    return (c.hop_count, c.route)


@dataclass
class Selection:
    chosen: Optional[RouteCandidate]
    rejected: list[RouteCandidate] = field(default_factory=list)
    excluded: list[RouteCandidate] = field(default_factory=list)
    accused: list[int] = field(default_factory=list)


def select_route(candidates: Iterable[RouteCandidate], isolated: Iterable[int] = ()) -> Selection:
    """Reject p_bh > 0.5 and routes through isolated nodes; take the best secure score.

    Scores within a relative 1e-12 are ties, broken by fewer hops and then by
    the lexicographically smallest route. ``accused`` lists the repliers of
    fully failed routes (p_bh = 1).
    """
    isolated = set(isolated)
    sel = Selection(chosen=None)
    survivors = []
    for c in candidates:
        if c.p_bh is None or c.secure_score is None:
            raise ScoringError(f"candidate {c.route} was not scored")
        if c.p_bh > REJECT_ABOVE:
            sel.rejected.append(c)
            if c.p_bh == 1.0 and c.replier not in sel.accused:
                sel.accused.append(c.replier)
        elif isolated.intersection(c.route):
            sel.excluded.append(c)
        else:
            survivors.append(c)
    best = None
    for c in survivors:
        if best is None:
            best = c
            continue
        if math.isclose(c.secure_score, best.secure_score, rel_tol=1e-12, abs_tol=0.0):
            if _tie_key(c) < _tie_key(best):
                best = c
        elif c.secure_score > best.secure_score:
            best = c
    sel.chosen = best
    return sel


def _fitness_all(candidates: Sequence[RouteCandidate]) -> list[float]:
    max_hop = max(c.hop_count for c in candidates)
    max_iter = max(c.replier_rrep_iterations for c in candidates)
    return [route_fitness(c.hop_count, max_hop, c.replier_rrep_iterations, max_iter) for c in candidates]


def settled_choice(candidates: Sequence[RouteCandidate], isolated: Iterable[int] = ()) -> Optional[RouteCandidate]:
    """The candidate ``select_route`` is bound to pick once probing ends, if already determined.

    Fitness depends only on hop counts and reply counts, so it is known before
    probing finishes. A candidate with ``f`` failures so far can score at most
    ``(1 - f/3) * Fr`` and is certainly rejected once ``f/3 > 0.5``. Returns
    None while some unfinished candidate could still win or no finished one
    survives.
    """
    if not candidates:
        return None
    isolated = set(isolated)
    fits = _fitness_all(candidates)
    best = None
    best_score = None
    pending = []
    for c, fr in zip(candidates, fits):
        if isolated.intersection(c.route):
            continue
        low = c.probe_failures / PROBES_PER_ROUTE
        if low > REJECT_ABOVE:
            continue
        if c.probes_done < PROBES_PER_ROUTE:
            pending.append(((1.0 - low) * fr, c))
            continue
        score = (1.0 - low) * fr
        if best is None or (math.isclose(score, best_score, rel_tol=1e-12, abs_tol=0.0)
                            and _tie_key(c) < _tie_key(best)) \
                or (score > best_score and not math.isclose(score, best_score, rel_tol=1e-12, abs_tol=0.0)):
            best, best_score = c, score
    if best is None:
        return None
    for upper, c in pending:
        close = math.isclose(best_score, upper, rel_tol=1e-12, abs_tol=0.0)
        if best_score > upper and not close:
            continue
        if (close or best_score >= upper) and _tie_key(best) < _tie_key(c):
            continue
        return None
    return best


def route_features(candidate: RouteCandidate, max_hop_count: int, iteration_cap: int = 10) -> tuple[float, float, float]:
    """Antigen encoding of a candidate: hop ratio, capped reply rate, probe-failure rate."""
    return (
        candidate.hop_count / max_hop_count,
        min(1.0, candidate.replier_rrep_iterations / iteration_cap),
        candidate.probe_failures / PROBES_PER_ROUTE,
    )
