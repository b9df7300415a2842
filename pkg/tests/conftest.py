import io
import os

import pytest

from aisdsr.config import ScenarioConfig
from aisdsr.world import Traces, World

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


def line_world(variant="dsr-baseline", **kw):
    """Six static nodes; the honest path 0-1-3-4-5 has four hops, attacker 2 borders 1 and 5."""
    positions = [(0, 0), (200, 0), (400, 0), (300, 200), (500, 200), (600, 0)]
    cfg = dict(node_count=6, width=600, height=300, duration=20, pause_time=20, variant=variant,
               positions=positions, flows=[(0, 5)], attackers=[2], traffic_stop_margin=5)
    cfg.update(kw)
    return World(ScenarioConfig(**cfg).validate(), Traces(defense=io.StringIO(), packets=io.StringIO()))


def static_world(positions, variant="dsr-baseline", flows=(), attackers=None, **kw):
    xs = [p[0] for p in positions] + [1.0]
    ys = [p[1] for p in positions] + [1.0]
    cfg = ScenarioConfig(node_count=len(positions), width=max(xs), height=max(ys), duration=kw.pop("duration", 10),
                         pause_time=10, variant=variant, positions=list(positions), flows=list(flows),
                         attackers=list(attackers) if attackers is not None else [], **kw)
    return World(cfg.validate(), Traces(defense=io.StringIO(), packets=io.StringIO()))


@pytest.fixture
def criterion():
    """Record an acceptance verdict so the terminal summary can list every criterion."""
    def record(number: int, title: str, ok: bool, detail: str = ""):
        _CRITERIA[number] = (title, ok, detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")


def cpu_jobs() -> int:
    return max(1, min(8, os.cpu_count() or 1))
