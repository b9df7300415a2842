import pytest

from conftest import line_world, static_world
from aisdsr.adversary import AttackerConfig, forge_rrep
from aisdsr.engine import to_us
from aisdsr.packets import DataPacket, ProbePacket, Rreq


def test_forged_route_claims_adjacency_to_target():
    rrep = forge_rrep(7, Rreq(1, 9, 4, (1, 2)))
    assert rrep.route == (1, 2, 7, 9)
    assert rrep.replier == 7 and rrep.request_id == 4


def test_forging_for_itself_is_refused():
    with pytest.raises(ValueError):
        forge_rrep(9, Rreq(1, 9, 4, (1, 2)))


def test_forged_reply_beats_honest_reply():
    w = line_world("dsr-under-attack", flows=[])
    arrivals = []
    origin = w.nodes[0]
    real = origin.on_rrep
    origin.on_rrep = lambda rrep: (arrivals.append((w.engine.now, rrep.route)), real(rrep))
    origin.start_discovery(5)
    w.engine.run_until(to_us(1))
    forged = [t for t, r in arrivals if r == (0, 1, 2, 5)]
    honest = [t for t, r in arrivals if r == (0, 1, 3, 4, 5)]
    assert forged and honest and forged[0] < honest[0]
    assert origin.cache.get(5) == (0, 1, 2, 5)


def test_attacker_as_destination_answers_honestly():
    w = static_world([(0, 0), (200, 0), (400, 0)], variant="dsr-under-attack", attackers=[2])
    sent = []
    w.net.transmit = lambda s, d, p: sent.append((s, d, p)) or [d]
    w.nodes[2].handle_rreq(1, Rreq(0, 2, 1, (0, 1)))
    (s, d, rrep), = sent
    assert (s, d) == (2, 1)
    assert rrep.route == (0, 1, 2) and not rrep.replier_claims_cached


def test_attacker_does_not_rebroadcast():
    w = line_world("dsr-under-attack", flows=[])
    w.nodes[2].handle_rreq(1, Rreq(0, 5, 1, (0, 1)))
    assert w.ledger.control_by_kind == {"rrep": 1}


def test_data_through_attacker_is_sunk():
    w = line_world("dsr-under-attack", flows=[])
    for seq in range(100):
        w.ledger.record_send(0, seq, 0, 512)
        w.nodes[2].forward_data(DataPacket(0, seq, (0, 1, 2, 5), 2, 512, 0))
    w.engine.run_until(to_us(1))
    assert w.nodes[2].sinks.counts["data"] == 100
    assert w.ledger.received == 0 and w.ledger.drops_by_cause()["blackhole"] == 100


def test_probe_through_attacker_is_sunk():
    w = line_world("dsr-under-attack", flows=[])
    w.nodes[2].handle_probe(ProbePacket(1, (0, 1, 2, 5), 2, 0))
    w.engine.run_until(to_us(1))
    assert w.nodes[2].sinks.counts["probe"] == 1
    assert w.ledger.control_drops[("probe", "blackhole")] == 1


def test_undefended_flow_through_attacker_delivers_nothing():
    w = line_world("dsr-under-attack")
    rep = w.run()
    assert rep.originated > 0 and rep.received == 0
    assert rep.drops_by_cause["blackhole"] == rep.dropped


def test_reply_delay_postpones_forgery():
    w = line_world("dsr-under-attack", flows=[], reply_delay=0.05)
    arrivals = []
    origin = w.nodes[0]
    real = origin.on_rrep
    origin.on_rrep = lambda rrep: (arrivals.append((w.engine.now, rrep.route)), real(rrep))
    origin.start_discovery(5)
    w.engine.run_until(to_us(1))
    assert arrivals[0][1] == (0, 1, 3, 4, 5)


def test_attacker_config_validation():
    with pytest.raises(ValueError):
        AttackerConfig(frozenset({1, 2}), mode="single")
    with pytest.raises(ValueError):
        AttackerConfig(frozenset(), reply_delay=-1)
