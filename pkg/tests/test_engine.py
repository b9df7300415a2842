import io
import json
import random

import pytest

from aisdsr.engine import (Engine, EventKind, RngStream, SchedulingError, SimulationFault, derive_seed,
                           next_random, to_seconds, to_us)


def noop():
    pass


def test_schedule_in_future_is_pending():
    eng = Engine()
    eng.run_until(3)
    h = eng.at(5, EventKind.TRAFFIC, noop)
    assert h.pending and h.fire_at == 5


def test_schedule_in_past_rejected():
    eng = Engine()
    eng.run_until(3)
    with pytest.raises(SchedulingError):
        eng.at(2, EventKind.TRAFFIC, noop)


def test_same_time_fires_in_insertion_order():
    eng = Engine()
    fired = []
    hs = [eng.at(5, EventKind.TRAFFIC, lambda i=i: fired.append(i)) for i in range(4)]
    eng.run_until(5)
    assert fired == [0, 1, 2, 3]
    assert [h.seq for h in hs] == sorted(h.seq for h in hs)


def test_empty_run_advances_clock():
    eng = Engine()
    assert eng.run_until(10) == 0
    assert eng.now == 10


def test_run_until_is_inclusive():
    eng = Engine()
    for t in (1, 2, 3):
        eng.at(t, EventKind.TRAFFIC, noop)
    assert eng.run_until(2) == 2
    assert eng.pending() == 1


def test_cancelled_event_never_fires():
    eng = Engine()
    fired = []
    h = eng.at(4, EventKind.PROBE_TIMEOUT, lambda: fired.append(1))
    h.cancel()
    eng.run_until(10)
    assert fired == [] and not h.pending


def test_random_schedule_is_reproducible():
    def run():
        rng = random.Random(7)
        eng = Engine()
        order = []
        for i in range(1000):
            eng.at(rng.randrange(500), EventKind.DELIVERY, lambda i=i: order.append(i))
        eng.run_until(1000)
        return order

    a, b = run(), run()
    assert len(a) == 1000 and a == b


def test_handler_failure_carries_tail():
    eng = Engine()
    for t in range(5):
        eng.at(t, EventKind.TRAFFIC, noop, node=t)

    def boom():
        raise KeyError("x")

    eng.at(9, EventKind.DELIVERY, boom, node=3)
    with pytest.raises(SimulationFault) as info:
        eng.run_until(20)
    assert info.value.event.fire_at == 9
    assert len(info.value.tail) == 6
    assert "delivery" in info.value.tail[-1]


def test_trace_lines_are_json():
    out = io.StringIO()
    eng = Engine(trace=out)
    eng.at(1500, EventKind.MOBILITY, noop, node=2, detail={"a": 1})
    eng.run_until(2000)
    rec = json.loads(out.getvalue())
    assert rec == {"t": 0.0015, "seq": 0, "kind": "mobility", "node": 2, "detail": {"a": 1}}


def test_time_conversion_round_trip():
    assert to_us(1.5) == 1_500_000
    assert to_seconds(to_us(0.002)) == 0.002


# -- random streams ----------------------------------------------------------------


def test_uniform_float_in_unit_interval():
    s = RngStream(3, "x")
    vals = [next_random(s) for _ in range(2000)]
    assert all(0.0 <= v < 1.0 for v in vals)


def test_streams_are_independent_of_interleaving():
    a1, b1 = RngStream(5, "a"), RngStream(5, "b")
    inter = []
    for _ in range(50):
        inter.append(("a", a1.uniform()))
        inter.append(("b", b1.uniform()))
    a2, b2 = RngStream(5, "a"), RngStream(5, "b")
    seq_a = [a2.uniform() for _ in range(50)]
    seq_b = [b2.uniform() for _ in range(50)]
    assert [v for k, v in inter if k == "a"] == seq_a
    assert [v for k, v in inter if k == "b"] == seq_b


def test_empty_int_range_rejected():
    with pytest.raises(ValueError):
        RngStream(1, "x").uniform_int(4, 4)
    with pytest.raises(ValueError):
        next_random(RngStream(1, "x"), "uniform-int", 4, 4)


def test_derive_seed_is_stable():
    # sha256 based, so the value is fixed across processes and platforms
    assert derive_seed(1, "traffic") == derive_seed(1, "traffic")
    assert derive_seed(1, "traffic") != derive_seed(2, "traffic")
    assert 0 <= derive_seed(1, "mobility", 3) < 2**64
