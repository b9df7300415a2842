import csv
import io
import json
import math

import pytest

from aisdsr import cli, sweep
from aisdsr.config import parse_scenario
from aisdsr.engine import SimulationFault
from aisdsr.sweep import DETAIL_COLUMNS, SweepError, SweepSpec, run_sweep, summarize, to_csv

TINY = """[scenario]
node_count = 12
width = 400
height = 400
duration = 12
[traffic]
flow_count = 3
[attack]
attacker_count = 2
"""


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.ini"
    p.write_text(TINY)
    return p


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_cartesian_row_counts():
    base = parse_scenario(TINY)
    spec = SweepSpec(values=(0, 50, 100), seeds=2,
                     variants=("dsr-baseline", "dsr-under-attack", "ais-dsr-under-attack"))
    rows = run_sweep(spec, base)
    assert len(rows) == 18 and len(summarize(rows)) == 9
    assert [(r["variant"], r["pause_time"], r["seed"]) for r in rows] == [
        (v, float(p), s) for v in spec.variants for p in (0, 50, 100) for s in (1, 2)]


def test_summary_means_match_detail():
    rows = run_sweep(SweepSpec(values=(0, 20), seeds=3, variants=("ais-dsr-under-attack",)), parse_scenario(TINY))
    for s in summarize(rows):
        members = [r for r in rows if r["pause_time"] == s["pause_time"]]
        for col in ("pdr", "throughput_bps", "plr", "dpr", "overhead"):
            vals = [m[col] for m in members if m[col] is not None]
            assert math.isclose(s[col], sum(vals) / len(vals), rel_tol=1e-9)


def test_degenerate_sweep_summary_equals_detail():
    rows = run_sweep(SweepSpec(values=(5,), seeds=1, variants=("dsr-baseline",)), parse_scenario(TINY))
    (s,) = summarize(rows)
    for col in ("pdr", "throughput_bps", "delay_ms", "plr", "dpr", "overhead"):
        assert s[col] == rows[0][col]


def test_failed_point_is_recorded_and_sweep_continues(monkeypatch):
    real = sweep.run_experiment

    def flaky(cfg):
        if cfg.seed == 2:
            raise SimulationFault("handler failed")
        return real(cfg)

    monkeypatch.setattr(sweep, "run_experiment", flaky)
    rows = run_sweep(SweepSpec(values=(0,), seeds=3, variants=("dsr-baseline",)), parse_scenario(TINY))
    assert [bool(r["errors"]) for r in rows] == [False, True, False]
    assert rows[1]["pdr"] is None and sweep.any_failed(rows)
    assert summarize(rows)[0]["errors"] == 1


@pytest.mark.parametrize("kw", [dict(values=(), seeds=1), dict(values=(0,), seeds=0),
                                dict(values=(0,), seeds=1, variants=("olsr",))])
def test_bad_sweep_spec(kw):
    with pytest.raises(SweepError):
        SweepSpec(**kw)


def test_csv_marks_missing_as_na():
    text = to_csv([{c: None for c in DETAIL_COLUMNS}], DETAIL_COLUMNS)
    assert text.splitlines()[1].startswith("NA,NA")


def test_cli_run_writes_outputs_and_traces(tiny, tmp_path, capsys):
    out = tmp_path / "run"
    rc = cli.main(["run", "--scenario", str(tiny), "--seed", "3", "--out", str(out),
                   "--trace", "events", "--trace", "defense", "--trace", "packets", "--trace", "mobility"])
    assert rc == 0
    report = (out / "report.txt").read_text()
    assert "seed = 3" in report and "pdr = " in report
    (row,) = read_csv((out / "detail.csv").read_text())
    assert row["variant"] == "ais-dsr-under-attack"
    for kind in ("events", "defense", "packets", "mobility"):
        lines = (out / f"{kind}.jsonl").read_text().splitlines()
        assert lines and all(json.loads(x) for x in lines)


def test_cli_sweep_outputs(tiny, tmp_path):
    out = tmp_path / "sw"
    rc = cli.main(["sweep", "--scenario", str(tiny), "--pause-times", "0,10", "--seeds", "2",
                   "--variants", "dsr-baseline,ais-dsr-clean", "--out", str(out)])
    assert rc == 0
    assert len(read_csv((out / "detail.csv").read_text())) == 8
    assert len(read_csv((out / "summary.csv").read_text())) == 4


def test_cli_sweep_rerun_is_byte_identical(tiny, tmp_path):
    args = ["sweep", "--scenario", str(tiny), "--pause-times", "0", "--seeds", "2",
            "--variants", "dsr-under-attack,ais-dsr-under-attack"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("detail.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\nnode_count = 3\n[attack]\nattacker_count = 3\n")
    assert cli.main(["run", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    assert "attacker_count" in capsys.readouterr().err
    assert cli.main(["run", "--scenario", str(tmp_path / "nope.ini")]) == 2
    assert cli.main(["run"]) == 2


def test_cli_fault_exits_1(tiny, tmp_path, monkeypatch, capsys):
    def broken(self):
        raise SimulationFault("handler failed on delivery", tail=("t=1us delivery node=3",))

    monkeypatch.setattr(cli.World, "run", broken)
    assert cli.main(["run", "--scenario", str(tiny), "--out", str(tmp_path)]) == 1
    assert "node=3" in capsys.readouterr().err


def test_cli_sweep_with_failed_run_exits_1(tiny, tmp_path, monkeypatch):
    monkeypatch.setattr(sweep, "run_experiment", lambda cfg: (_ for _ in ()).throw(SimulationFault("x")))
    assert cli.main(["sweep", "--scenario", str(tiny), "--pause-times", "0", "--seeds", "1",
                     "--variants", "dsr-baseline", "--out", str(tmp_path)]) == 1
