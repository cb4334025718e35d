import numpy as np
import pytest

from phasemem.config import SCHEMA, load_config, parse_yaml, resolve, run_config_from, schedule_from
from phasemem.errors import ConfigurationError
from phasemem.protocol import RECALL, TRAIN


def test_defaults_materialized():
    cfg = resolve({})
    assert set(cfg) == set(SCHEMA)
    assert cfg["learning"]["eta"] == 0.05
    assert cfg["schedule"]["train"] == {"interval": 1.0, "duration": 100.0, "half_last": False}
    assert cfg["schedule"]["recall"]["interval"] == 2.0
    assert cfg["schedule"]["settle_time"] == 0.5
    assert cfg["simulation"]["init_weight_range"] == [-0.25, 0.25]


def test_layered_train_defaults():
    cfg = resolve({"topology": {"layers": [2, 4, 2]}})
    assert cfg["schedule"]["train"] == {"interval": 4.0, "duration": 160.0, "half_last": True}


def test_unknown_key_reports_line(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("seed: 1\nlearning:\n  eta: 0.1\n  etaa: 2\n")
    with pytest.raises(ConfigurationError, match=r"line 4: unknown key 'learning.etaa'"):
        load_config(path)


def test_bad_value_reports_line():
    data, lines = parse_yaml("seed: 3\nsimulation:\n  dt: -1\n", "x.yaml")
    with pytest.raises(ConfigurationError, match=r"x.yaml: line 3: key 'simulation.dt' must be a positive"):
        resolve(data, lines, "x.yaml")


@pytest.mark.parametrize("text", [
    "seed: [1\n",
    "- 1\n- 2\n",
    "seed: 1\nseed: 2\n",
    "topology:\n  layers: []\n",
    "patterns:\n  targets: [[1, 0, 1, -1]]\n",
    "output:\n  sawtooth_window: 4\n",
    "batch:\n  metric: median\n",
    "learning:\n  plastic_recall: 1\n",
    "learning: 3\n",
])
def test_rejections(text):
    with pytest.raises(ConfigurationError):
        data, lines = parse_yaml(text)
        resolve(data, lines)


def test_empty_document():
    assert parse_yaml("") == ({}, {})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")


def test_run_config_from():
    cfg = resolve({"seed": 9, "schedule": {"train": {"interval": 1.0, "duration": 4.0},
                                           "recall": {"interval": 2.0, "duration": 4.0}}})
    rc = run_config_from(cfg)
    assert rc.seed == 9
    assert [s.mode for s in rc.schedule.segments] == [TRAIN] * 4 + [RECALL] * 2
    assert run_config_from(cfg, (TRAIN,)).schedule.part(RECALL) is None
    np.testing.assert_array_equal(rc.target_patterns, [[1, -1, 1, -1], [1, 1, -1, -1]])
    assert rc.learning.lam == 0.8
    assert schedule_from(cfg, (RECALL,)).duration == 4.0
