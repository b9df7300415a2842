"""Pause-time sweeps: one world per (variant, value, seed), detail rows plus per-point means."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .config import VARIANTS, ScenarioConfig
from .world import run_experiment

DETAIL_COLUMNS = ("variant", "pause_time", "seed", "pdr", "throughput_bps", "delay_ms", "plr", "dpr",
                  "overhead", "errors")
SUMMARY_COLUMNS = ("variant", "pause_time", "seeds", "pdr", "throughput_bps", "delay_ms", "plr", "dpr",
                   "overhead", "errors")
METRIC_COLUMNS = ("pdr", "throughput_bps", "delay_ms", "plr", "dpr", "overhead")


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    values: tuple[float, ...]
    seeds: int
    parameter: str = "pause_time"
    variants: tuple[str, ...] = VARIANTS
    first_seed: int = 1

    def __post_init__(self):
        if not self.values:
            raise SweepError("value list is empty")
        if self.seeds < 1:
            raise SweepError("seeds must be >= 1")
        if self.parameter != "pause_time":
            raise SweepError(f"only pause_time sweeps are supported, not {self.parameter!r}")
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown or not self.variants:
            raise SweepError(f"unknown variants {unknown}")

    def seed_list(self) -> list[int]:
        return list(range(self.first_seed, self.first_seed + self.seeds))

    def points(self, base: ScenarioConfig) -> list[ScenarioConfig]:
        """Configs in (variant, value, seed) order, each validated."""
        out = []
        for variant in self.variants:
            for value in self.values:
                for seed in self.seed_list():
                    out.append(base.replace(variant=variant, seed=seed, **{self.parameter: value}))
        return out


def run_point(cfg: ScenarioConfig) -> dict:
    row = {"variant": cfg.variant, "pause_time": cfg.pause_time, "seed": cfg.seed}
    try:
        rep = run_experiment(cfg)
    except Exception as exc:  # one failed world must not sink the sweep
        row.update({k: None for k in METRIC_COLUMNS})
        row["errors"] = f"{type(exc).__name__}: {exc}".splitlines()[0]
        return row
    row.update(pdr=rep.pdr, throughput_bps=rep.throughput_bps, delay_ms=rep.avg_delay_ms,
               plr=rep.plr_percent, dpr=rep.dpr_percent, overhead=rep.control_overhead_packets,
               errors="")
    return row


def run_sweep(spec: SweepSpec, base: ScenarioConfig, jobs: int = 1) -> list[dict]:
    points = spec.points(base)
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_point, points))
    else:
        rows = [run_point(p) for p in points]
    # map() preserves order, but sort anyway so the output never depends on scheduling
    order = {v: i for i, v in enumerate(spec.variants)}
    rows.sort(key=lambda r: (order[r["variant"]], r["pause_time"], r["seed"]))
    return rows


def _mean(values) -> Optional[float]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)


def summarize(rows: Sequence[dict]) -> list[dict]:
    """Mean over seeds per (variant, value); undefined metrics (NA) are skipped, not zeroed."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["variant"], r["pause_time"]), []).append(r)
    out = []
    for (variant, value), members in groups.items():
        s = {"variant": variant, "pause_time": value, "seeds": len(members)}
        for col in METRIC_COLUMNS:
            s[col] = _mean(m[col] for m in members)
        s["errors"] = sum(1 for m in members if m["errors"])
        out.append(s)
    return out


def any_failed(rows: Sequence[dict]) -> bool:
    return any(r["errors"] for r in rows)


def _cell(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(_cell(r[c]) for c in columns)
    return buf.getvalue()
