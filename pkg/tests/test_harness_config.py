import json

import pytest

from frechet_consensus.errors import ConfigError
from frechet_consensus.harness.config import (
    SCHEMA_PATH,
    bundled_config,
    json_schema,
    parse_config,
    parse_config_data,
    sample_population,
    sdr_scenario,
    serialize_config,
)

BUNDLED = ["ordered_preferences.json", "identical_anchors.json", "separated.json",
           "sdr_uniform_beliefs.json", "sdr_impatient_agents.json", "wasserstein_normals.json"]


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_round_trip(name, tmp_path):
    cfg = parse_config(bundled_config(name))
    text = serialize_config(cfg)
    path = tmp_path / "again.json"
    path.write_text(text)
    again = parse_config(path)
    assert again == cfg and serialize_config(again) == text


def test_theta_above_one_is_reported_with_path(config_dir):
    with pytest.raises(ConfigError) as err:
        parse_config(config_dir / "broken.json")
    assert [p for p, _ in err.value.violations] == ["groups.0.profile.theta"]


def test_all_violations_are_collected():
    data = {
        "space": {"kind": "euclidean"},
        "groups": [{"size": 0, "anchors": {"center": [0, 0]},
                    "profile": {"rho": [-1, 1], "r": [2, 1]}}],
        "seed": -3,
    }
    with pytest.raises(ConfigError) as err:
        parse_config_data(data)
    paths = {p for p, _ in err.value.violations}
    assert {"groups.0.size", "groups.0.profile.rho", "groups.0.profile.r", "seed"} <= paths


def test_cross_field_violation_paths():
    data = {"space": {"kind": "sdr"}, "groups": [{"size": 2, "anchors": {"center": [0.0]}}]}
    with pytest.raises(ConfigError) as err:
        parse_config_data(data)
    assert err.value.violations[0][0].startswith("groups.0.anchors")


def test_seed_range():
    base = {"space": {"kind": "euclidean"}, "groups": [{"size": 1, "anchors": {"center": [0]}}]}
    assert parse_config_data({**base, "seed": 2**64 - 1}).seed == 2**64 - 1
    with pytest.raises(ConfigError):
        parse_config_data({**base, "seed": 2**64})


def test_optional_flags_default():
    cfg = parse_config_data({"space": {"kind": "euclidean"},
                             "groups": [{"size": 1, "anchors": {"center": [0]}}]})
    assert cfg.engine.time_update is False
    assert cfg.engine.p_stop == 0.95 and cfg.engine.max_steps == 500


def test_unknown_fields_and_infinite_bounds_rejected():
    base = {"space": {"kind": "euclidean"}, "groups": [{"size": 1, "anchors": {"center": [0]}}]}
    with pytest.raises(ConfigError):
        parse_config_data({**base, "colour": "red"})
    bad = json.loads(json.dumps(base))
    bad["groups"][0]["profile"] = {"rho": [1.0, float("inf")]}
    with pytest.raises(ConfigError):
        parse_config_data(bad)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError) as err:
        parse_config(p)
    assert "line 1" in str(err.value)


def test_shipped_schema_is_current():
    assert json.loads(SCHEMA_PATH.read_text()) == json_schema()


def test_population_matches_groups(config_dir):
    cfg = parse_config(config_dir / "ordered_preferences.json")
    space, anchors, profiles, labels = sample_population(cfg)
    assert len(anchors) == 100 and list(labels[:2]) == [0, 0] and labels[-1] == 3
    assert all(0.0 <= p.theta <= 0.2 for p in profiles[75:])
    again = sample_population(cfg)
    assert all((a == b).all() for a, b in zip(anchors, again[1]))


def test_sdr_scenario_from_config(config_dir):
    sc = sdr_scenario(parse_config(config_dir / "sdr_uniform_beliefs.json"))
    assert sc.n_agents == 90 and sc.subgroups[2].gamma == (0.3, 2.0)
    with pytest.raises(ConfigError):
        sdr_scenario(parse_config(config_dir / "separated.json"))
