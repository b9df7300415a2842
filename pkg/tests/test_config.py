import pytest

from aisdsr.config import ConfigError, ScenarioConfig, apply_overrides, dump_scenario, load_scenario, parse_scenario


def test_empty_file_gives_table_defaults(tmp_path):
    p = tmp_path / "empty.ini"
    p.write_text("")
    cfg = load_scenario(p)
    assert cfg.node_count == 100 and cfg.duration == 200.0
    assert (cfg.width, cfg.height) == (1000.0, 1000.0)
    assert cfg.payload_size == 512 and cfg.radio_range == 250.0


def test_sections_are_parsed_and_typed():
    cfg = parse_scenario("[scenario]\nnode_count = 7\nstrict_loss = yes\n[topology]\nflows = 0>3, 2>4\n"
                         "attackers = 1\n[attack]\nattacker_count = 1\n")
    assert cfg.node_count == 7 and cfg.strict_loss is True
    assert cfg.flows == [(0, 3), (2, 4)] and cfg.attackers == [1]


@pytest.mark.parametrize("text,field", [
    ("[scenario]\nnode_count = 5\n[attack]\nattacker_count = 5\n", "attacker_count"),
    ("[mobility]\npause_time = -1\n", "pause_time"),
    ("[scenario]\nduration = 0\n", "duration"),
    ("[defense]\nrrep_window = 0\n", "rrep_window"),
    ("[defense]\nprobe_timeout_per_hop = 0\n", "probe_timeout_per_hop"),
    ("[scenario]\nbogus = 1\n", "bogus"),
    ("[nonsense]\nx = 1\n", "nonsense"),
    ("[scenario]\nnode_count = many\n", "node_count"),
    ("[scenario]\nvariant = aodv\n", "variant"),
])
def test_invalid_files_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field):
        parse_scenario(text)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_scenario(tmp_path / "missing.ini")


def test_dump_round_trips():
    cfg = ScenarioConfig(node_count=6, positions=[(0.0, 0.0)] * 6, flows=[(0, 5)], attackers=[2],
                         attacker_count=1, alert_flood=True).validate()
    assert parse_scenario(dump_scenario(cfg)) == cfg


def test_overrides_use_file_parsing():
    cfg = apply_overrides(ScenarioConfig(), ["node_count=50", "use_detectors=false"])
    assert cfg.node_count == 50 and cfg.use_detectors is False
    with pytest.raises(ConfigError):
        apply_overrides(ScenarioConfig(), ["nope=1"])
