"""Clonal-selection training of route-pattern detectors.

Antibodies are points in the unit cube. Affinity is one minus the euclidean
distance scaled by the cube diagonal, so it spans [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DIM = 3
DIAGONAL = math.sqrt(DIM)


class DetectorError(ValueError):
    pass


@dataclass(frozen=True)
class ClonalParams:
    population: int = 50
    top_subset: int = 10
    clone_factor: float = 5.0
    mutation_scale: float = 0.2
    worst_n: int = 5
    generations: int = 20
    match_threshold: float = 0.8

    def validate(self) -> None:
        if self.population < 1:
            raise DetectorError("population must be >= 1")
        if not 0 <= self.worst_n < self.population:
            raise DetectorError(f"worst_n={self.worst_n} must be in [0, population={self.population})")
        if not 1 <= self.top_subset <= self.population:
            raise DetectorError("top_subset must be in [1, population]")
        if self.clone_factor < 0 or self.mutation_scale < 0:
            raise DetectorError("clone_factor and mutation_scale must be non-negative")
        if self.generations < 1:
            raise DetectorError("generations must be >= 1")
        if not 0.0 <= self.match_threshold <= 1.0:
            raise DetectorError("match_threshold must lie in [0, 1]")


@dataclass
class Detector:
    center: np.ndarray
    affinity_score: float = 0.0
    is_memory: bool = False


@dataclass
class DetectorSet:
    population: list[Detector]
    memory: list[Detector]
    params: ClonalParams = field(default_factory=ClonalParams)

    def memory_matrix(self) -> np.ndarray:
        if not self.memory:
            return np.empty((0, DIM))
        return np.array([d.center for d in self.memory])


def affinity(antibodies: np.ndarray, pattern: np.ndarray) -> np.ndarray:
    """1 - ||a - p|| / sqrt(3) for every row ``a`` of ``antibodies``."""
    d = np.sqrt(((antibodies - pattern) ** 2).sum(axis=-1))
    return np.clip(1.0 - d / DIAGONAL, 0.0, 1.0)


def train_detectors(self_patterns: Sequence[Sequence[float]], params: Optional[ClonalParams] = None,
                    rng: Optional[np.random.Generator] = None,
                    initial: Optional[np.ndarray] = None) -> DetectorSet:
    """Run clonal selection over ``self_patterns`` and return population plus memory.

    Each generation visits every pattern: the ``top_subset`` antibodies with
    highest affinity are cloned ``ceil(clone_factor * affinity * top_subset)``
    times, clones are mutated with gaussian noise of scale
    ``mutation_scale * (1 - affinity)``, the best clone replaces its parent when
    it improves on it, the best antibody becomes that pattern's memory detector
    when it beats the current one, and the ``worst_n`` lowest-affinity
    antibodies are replaced by fresh random ones.
    """
    params = params or ClonalParams()
    params.validate()
    patterns = np.asarray(self_patterns, dtype=float).reshape(-1, DIM) if len(self_patterns) else np.empty((0, DIM))
    if patterns.shape[0] == 0:
        raise DetectorError("self_patterns must be non-empty")
    if np.any(patterns < 0.0) or np.any(patterns > 1.0):
        raise DetectorError("patterns must lie in the unit cube")
    rng = rng if rng is not None else np.random.default_rng(0)

    if initial is not None:
        pop = np.array(initial, dtype=float).reshape(params.population, DIM)
    else:
        pop = rng.random((params.population, DIM))
    mem = np.full((patterns.shape[0], DIM), np.nan)
    mem_aff = np.full(patterns.shape[0], -1.0)

    k = params.top_subset
    for _ in range(params.generations):
        for j, pattern in enumerate(patterns):
            aff = affinity(pop, pattern)
            top = np.argsort(-aff, kind="stable")[:k]
            counts = np.ceil(params.clone_factor * aff[top] * k).astype(int)
            keep = counts > 0
            top, counts = top[keep], counts[keep]
            if top.size:
                clones = np.repeat(pop[top], counts, axis=0)
                scales = np.repeat(params.mutation_scale * (1.0 - aff[top]), counts)
                if params.mutation_scale > 0:
                    noise = rng.normal(0.0, 1.0, clones.shape) * scales[:, None]
                    clones = np.clip(clones + noise, 0.0, 1.0)
                c_aff = affinity(clones, pattern)
                starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
                best_per_parent = np.maximum.reduceat(c_aff, starts)
                # index of the best clone within each parent's block
                owner = np.repeat(np.arange(top.size), counts)
                order = np.lexsort((-c_aff, owner))
                best_rows = order[starts]
                better = best_per_parent > aff[top]
                pop[top[better]] = clones[best_rows[better]]
                aff[top[better]] = best_per_parent[better]
            best = int(np.argmax(aff))
            if aff[best] > mem_aff[j]:
                mem[j] = pop[best]
                mem_aff[j] = aff[best]
            if params.worst_n:
                worst = np.argsort(aff, kind="stable")[:params.worst_n]
                pop[worst] = rng.random((params.worst_n, DIM))

    population = [Detector(center=row.copy()) for row in pop]
    memory = [Detector(center=mem[j].copy(), affinity_score=float(mem_aff[j]), is_memory=True)
              for j in range(patterns.shape[0])]
    return DetectorSet(population=population, memory=memory, params=params)


@dataclass(frozen=True)
class Verdict:
    matched_self: bool
    best_affinity: float


def classify_pattern(detectors: DetectorSet, pattern: Sequence[float]) -> Verdict:
    if not detectors.memory:
        raise DetectorError("detector set has no memory detectors")
    aff = affinity(detectors.memory_matrix(), np.asarray(pattern, dtype=float))
    best = float(aff.max())
    return Verdict(matched_self=best >= detectors.params.match_threshold, best_affinity=best)
