import json

import numpy as np
import pytest

from phasemem.cli import main
from phasemem.encoding import outer_product_weights
from phasemem.phase import CouplingMatrix, NetworkTopology, integrate_trace

from conftest import STORED_PATTERNS

FLAT_YAML = """\
seed: 7
topology:
  layers: [4]
schedule:
  train: {interval: 1.0, duration: 20.0}
  recall: {interval: 2.0, duration: 6.0}
batch:
  runs: 3
"""

LAYERED_YAML = """\
seed: 3
topology:
  layers: [2, 4, 2]
schedule:
  train: {interval: 4.0, duration: 16.0}
  recall: {interval: 2.0, duration: 6.0}
"""


@pytest.fixture
def flat_cfg(tmp_path):
    path = tmp_path / "flat.yaml"
    path.write_text(FLAT_YAML)
    return path


@pytest.fixture
def trained(tmp_path, flat_cfg):
    out = tmp_path / "train"
    assert main(["train", "--config", str(flat_cfg), "--out", str(out)]) == 0
    return out


def test_train_outputs(trained):
    assert sorted(p.name for p in trained.iterdir()) == ["summary.json", "trace.csv", "weights.json"]
    header = trained.joinpath("trace.csv").read_text().splitlines()[0].split(",")
    assert header == (["t"] + [f"phi_{i}" for i in range(4)]
                      + [f"k_{i}_{j}" for i in range(4) for j in range(i + 1, 4)] + ["energy", "acc_0", "acc_1"])
    summary = json.loads(trained.joinpath("summary.json").read_text())
    assert summary["seed"] == 7
    assert summary["config"]["learning"]["lambda"] == 0.8
    assert "version" in summary and "wall_time_s" in summary
    weights = json.loads(trained.joinpath("weights.json").read_text())
    assert weights["layers"] == [4]
    assert len(weights["masked_entries"]) == 6


def test_train_deterministic(tmp_path, flat_cfg, trained):
    again = tmp_path / "again"
    assert main(["train", "--config", str(flat_cfg), "--out", str(again)]) == 0
    assert again.joinpath("trace.csv").read_bytes() == trained.joinpath("trace.csv").read_bytes()
    other = tmp_path / "other"
    assert main(["train", "--config", str(flat_cfg), "--out", str(other), "--seed", "8"]) == 0
    assert other.joinpath("trace.csv").read_bytes() != trained.joinpath("trace.csv").read_bytes()


def test_trace_round_trips(trained):
    data = np.loadtxt(trained / "trace.csv", delimiter=",", skiprows=1)
    weights = json.loads(trained.joinpath("weights.json").read_text())
    k = np.array(weights["k"])
    assert data[-1, 5] == k[0, 1]


def test_malformed_config_leaves_nothing(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("seed: 1\nlearning:\n  etta: 0.1\n")
    out = tmp_path / "out"
    assert main(["train", "--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    assert "line 3" in capsys.readouterr().err


def test_recall(tmp_path, flat_cfg, trained):
    out = tmp_path / "recall"
    assert main(["recall", "--config", str(flat_cfg), "--weights", str(trained / "weights.json"),
                 "--out", str(out)]) == 0
    summary = json.loads(out.joinpath("summary.json").read_text())
    assert 0 <= summary["steady_accuracy"] <= 1
    assert len(summary["segments"]) == 3
    assert "energy_sawtooth" in summary
    data = np.loadtxt(out / "trace.csv", delimiter=",", skiprows=1)
    acc = data[:, -2:]
    assert np.all((acc >= 0) & (acc <= 1))


def test_recall_topology_mismatch(tmp_path, trained):
    cfg = tmp_path / "layered.yaml"
    cfg.write_text(LAYERED_YAML)
    out = tmp_path / "r"
    assert main(["recall", "--config", str(cfg), "--weights", str(trained / "weights.json"), "--out", str(out)]) == 2
    assert not out.exists()


def test_batch_workers_identical(tmp_path, flat_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["batch", "--config", str(flat_cfg), "--out", str(a), "--workers", "1"]) == 0
    assert main(["batch", "--config", str(flat_cfg), "--out", str(b), "--workers", "3"]) == 0
    assert a.joinpath("aggregate.csv").read_bytes() == b.joinpath("aggregate.csv").read_bytes()
    assert a.joinpath("aggregate.svg").read_bytes() == b.joinpath("aggregate.svg").read_bytes()
    lines = a.joinpath("aggregate.csv").read_text().splitlines()
    assert lines[0] == "t,mean,std,rolling_mean"
    summary = json.loads(a.joinpath("summary.json").read_text())
    assert summary["metric"] == "mse" and len(summary["runs"]) == 3
    assert summary["mean_final_mse"] < summary["mean_initial_mse"]


def test_empty_batch(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(FLAT_YAML.replace("runs: 3", "runs: 0"))
    assert main(["batch", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def _weights_file(path, k, layers, patterns):
    topo = NetworkTopology.from_sizes(layers)
    path.write_text(json.dumps({"layers": layers, "symmetric": True, "k": np.asarray(k).tolist(),
                                "patterns": np.asarray(patterns).tolist(),
                                "inputs": list(topo.inputs), "outputs": list(topo.outputs)}))
    return path


def test_analyze_stability(tmp_path):
    w = _weights_file(tmp_path / "w.json", outer_product_weights(STORED_PATTERNS).k, [4], STORED_PATTERNS)
    out = tmp_path / "a"
    assert main(["analyze", "--weights", str(w), "--mode", "stability", "--out", str(out)]) == 0
    doc = json.loads(out.joinpath("stability.json").read_text())
    assert [r["is_minimum"] for r in doc["reports"]] == [True, True]
    assert all(r["residual_norm"] < 1e-10 for r in doc["reports"])


def test_analyze_fisher(tmp_path, rng):
    topo = NetworkTopology.layered([2, 4, 2])
    k = CouplingMatrix.random_uniform(topo, -1, 1, rng).k
    w = _weights_file(tmp_path / "w.json", k, [2, 4, 2], STORED_PATTERNS)
    out = tmp_path / "f"
    assert main(["analyze", "--weights", str(w), "--mode", "fisher", "--out", str(out)]) == 0
    doc = json.loads(out.joinpath("fisher.json").read_text())
    vals = np.array(doc["eigenvalues"])
    assert vals[0] <= 1e-8 * vals[-1]
    assert len(doc["null_directions"]) >= 1
    assert len(doc["parameter_order"]) == 16
    flat = _weights_file(tmp_path / "flat.json", outer_product_weights(STORED_PATTERNS).k, [4], STORED_PATTERNS)
    assert main(["analyze", "--weights", str(flat), "--mode", "fisher", "--out", str(tmp_path / "x")]) == 2


def test_analyze_missing_file(tmp_path):
    assert main(["analyze", "--weights", str(tmp_path / "nope.json"), "--mode", "stability",
                 "--out", str(tmp_path / "o")]) == 2


def _voltage_csv(path, volts, fs):
    t = np.arange(volts.shape[1]) / fs
    header = "t," + ",".join(f"ch{i}" for i in range(volts.shape[0]))
    np.savetxt(path, np.column_stack([t, volts.T]), delimiter=",", header=header, comments="", fmt="%.17g")
    return path


def test_fit(tmp_path):
    rng = np.random.default_rng(4)
    k = np.triu(rng.uniform(-1, 1, (3, 3)), 1)
    k = k + k.T
    t, ph = integrate_trace(rng.uniform(-3, 3, 3), k, 0.05 * rng.uniform(-1, 1, 3), 4.0, 1e-3)
    trace = _voltage_csv(tmp_path / "v.csv", np.cos(2 * np.pi * 50 * t[None, :] + ph.T), 1000.0)
    out = tmp_path / "fit"
    assert main(["fit", "--trace", str(trace), "--out", str(out)]) == 0
    doc = json.loads(out.joinpath("fit.json").read_text())
    assert np.max(np.abs(np.array(doc["k_hat"]) - k)) <= 0.05
    svg = out.joinpath("overlay.svg").read_text()
    for i in range(3):
        assert svg.count(f'id="observed_ch{i}"') == 1
        assert svg.count(f'id="fitted_ch{i}"') == 1


def test_fit_constant_channel(tmp_path, capsys):
    t = np.arange(2000) / 1000.0
    volts = np.vstack([np.cos(2 * np.pi * 50 * t), np.full(t.size, 0.3)])
    trace = _voltage_csv(tmp_path / "v.csv", volts, 1000.0)
    out = tmp_path / "fit"
    assert main(["fit", "--trace", str(trace), "--out", str(out)]) == 3
    assert not out.exists()
    assert "constant" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["train"])
    assert info.value.code == 2


def test_plots_can_be_disabled(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(FLAT_YAML.replace("runs: 3", "runs: 1") + "output:\n  plots: false\n")
    out = tmp_path / "o"
    assert main(["batch", "--config", str(cfg), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["aggregate.csv", "summary.json"]
