import io

import pytest

from aisdsr.metrics import (LedgerFault, MetricsLedger, avg_end_to_end_delay, build_report, delivery_ratio,
                            drop_percent, loss_percent, throughput)


def ledger_with(n_sent, n_recv, delay_us=1000, size=512):
    led = MetricsLedger()
    for s in range(n_sent):
        led.record_send(0, s, s * 10, size)
    for s in range(n_recv):
        led.record_receive(0, s, s * 10 + delay_us + n_sent * 10)
    return led


def test_send_then_receive_stored():
    led = MetricsLedger()
    led.record("send", flow=3, seq=1, t=0, bytes=512)
    led.record("receive", flow=3, seq=1, t=5)
    assert led.originated == led.received == 1


def test_receive_without_send_faults():
    with pytest.raises(LedgerFault):
        MetricsLedger().record_receive(0, 1, 0)


def test_drop_after_receive_faults():
    led = ledger_with(1, 1)
    with pytest.raises(LedgerFault):
        led.record_drop(0, 0, 10_000, "link")


def test_second_receive_faults():
    led = ledger_with(1, 1)
    with pytest.raises(LedgerFault):
        led.record_receive(0, 0, 10_000)


def test_time_may_not_run_backwards_within_a_flow():
    led = ledger_with(2, 0)
    with pytest.raises(LedgerFault):
        led.record_drop(0, 0, 1, "link")


def test_unknown_drop_cause_faults():
    led = ledger_with(1, 0)
    with pytest.raises(LedgerFault):
        led.record_drop(0, 0, 100, "gremlins")


def test_throughput_hand_values():
    led = ledger_with(100, 80)
    tp = throughput(led, 100.0, strict=True)
    assert tp["pdr"] == pytest.approx(0.8, rel=1e-12)
    assert tp["throughput_bps"] == pytest.approx(3276.8, rel=1e-12)


def test_delivery_ratio_edges():
    assert delivery_ratio(5, 5) == 1.0
    assert delivery_ratio(0, 0) is None


def test_average_delay_hand_values():
    led = MetricsLedger()
    led.record_send(0, 0, 0, 1)
    led.record_send(0, 1, 0, 1)
    led.record_receive(0, 0, 10_000)
    led.record_receive(0, 1, 20_000)
    assert avg_end_to_end_delay(led) == pytest.approx(15.0)
    single = MetricsLedger()
    single.record_send(1, 0, 0, 1)
    single.record_receive(1, 0, 7_250)
    assert avg_end_to_end_delay(single) == 7.25
    assert avg_end_to_end_delay(MetricsLedger()) is None


def test_loss_percent_hand_values():
    assert loss_percent(80, 100) == 20.0
    assert loss_percent(100, 100) == 0.0
    assert loss_percent(0, 100) == 100.0
    assert loss_percent(0, 0) is None


def test_drop_percent_hand_values():
    assert drop_percent(20, 80) == 20.0
    assert drop_percent(0, 80) == 0.0
    assert drop_percent(5, 0) == 100.0
    assert drop_percent(0, 0) is None


def test_in_flight_excluded_unless_strict():
    led = ledger_with(10, 6)
    led.record_drop(0, 6, 10_000, "blackhole")
    loose = build_report(led, 10.0)
    strict = build_report(led, 10.0, strict=True)
    assert loose.in_flight == 3
    assert loose.pdr == pytest.approx(6 / 7) and strict.pdr == pytest.approx(6 / 10)
    assert loose.plr_percent == pytest.approx(100 / 7)


def test_report_recomputes_from_exported_ledger():
    led = ledger_with(20, 15)
    led.record_drop(0, 17, 10_000, "link")
    led.record_control("rreq")
    buf = io.StringIO()
    led.to_jsonl(buf)
    again = MetricsLedger.from_jsonl(buf.getvalue().splitlines())
    assert build_report(again, 50.0).to_text() == build_report(led, 50.0).to_text()


def test_report_text_marks_missing_values():
    rep = build_report(MetricsLedger(), 10.0)
    text = rep.to_text()
    assert "pdr = NA" in text and "avg_delay_ms = NA" in text
    header, row = rep.to_csv_row().splitlines()
    assert len(header.split(",")) == len(row.split(","))
