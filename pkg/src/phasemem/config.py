"""YAML experiment configs: schema, defaults and line-aware diagnostics."""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigurationError
from .phase import NetworkTopology
from .plasticity import LearningParams
from .protocol import RECALL, TRAIN, ExperimentSchedule, RunConfig

_DEFAULT_PATTERNS = [[1, -1, 1, -1], [1, 1, -1, -1]]

# None marks keys whose default depends on the topology
SCHEMA: dict[str, Any] = {
    "seed": 0,
    "topology": {"layers": [4], "symmetric": True},
    "learning": {"eta": 0.05, "lambda": 0.8, "k_nudge": 200.0, "recall_eta": 0.01, "plastic_recall": True},
    "simulation": {"dt": 1e-3, "coupling_gain": 40.0, "freq_dispersion": 0.05,
                   "init_weight_range": [-0.25, 0.25], "sample_every": 10},
    "schedule": {
        "settle_time": 0.5,
        "train": {"interval": None, "duration": None, "half_last": None},
        "recall": {"interval": 2.0, "duration": 12.0},
    },
    "patterns": {"targets": _DEFAULT_PATTERNS},
    "batch": {"runs": 100, "metric": "auto", "rolling_window": 100, "random_patterns": True},
    "output": {"plots": True, "sawtooth_window": 5},
    "analysis": {"beta": 1.0, "null_threshold": 1e-8, "pinned": "inputs", "tol": 1e-10},
    "fit": {"symmetric": True, "substeps": 1, "max_iter": 5000, "rel_tol": 1e-8, "mask": None},
}

_TRAIN_DEFAULTS = {
    "flat": {"interval": 1.0, "duration": 100.0, "half_last": False},
    "layered": {"interval": 4.0, "duration": 160.0, "half_last": True},
}


def _construct(node, path, lines):
    if isinstance(node, yaml.MappingNode):
        out = {}
        for knode, vnode in node.value:
            if not isinstance(knode, yaml.ScalarNode):
                raise ConfigurationError(f"line {knode.start_mark.line + 1}: keys must be plain scalars")
            key = knode.value
            full = f"{path}.{key}" if path else key
            if key in out:
                raise ConfigurationError(f"line {knode.start_mark.line + 1}: duplicate key '{full}'")
            lines[full] = knode.start_mark.line + 1
            out[key] = _construct(vnode, full, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return _scalar(node)


def _scalar(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


def parse_yaml(text: str, source: str = "<config>") -> tuple[dict, dict]:
    """Parse YAML into plain data plus a ``dotted.key -> line`` map."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigurationError(f"{source}: YAML syntax error at {where}: {getattr(exc, 'problem', exc)}") from exc
    if node is None:
        return {}, {}
    if not isinstance(node, yaml.MappingNode):
        raise ConfigurationError(f"{source}: top level must be a mapping")
    lines: dict = {}
    try:
        data = _construct(node, "", lines)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    return data, lines


def _merge(schema, data, path, lines, source):
    out = {}
    for key, value in data.items():
        full = f"{path}.{key}" if path else key
        if key not in schema:
            line = lines.get(full, "?")
            raise ConfigurationError(f"{source}: line {line}: unknown key '{full}'")
    for key, default in schema.items():
        full = f"{path}.{key}" if path else key
        if isinstance(default, dict):
            sub = data.get(key, {})
            if sub is None:
                sub = {}
            if not isinstance(sub, dict):
                raise ConfigurationError(f"{source}: line {lines.get(full, '?')}: '{full}' must be a mapping")
            out[key] = _merge(default, sub, full, lines, source)
        else:
            out[key] = copy.deepcopy(data[key]) if key in data else copy.deepcopy(default)
    return out


def _where(source, lines, key):
    return f"{source}: line {lines.get(key, '?')}: key '{key}'"


def resolve(data: dict, lines: dict | None = None, source: str = "<config>") -> dict:
    """Fill defaults, reject unknown keys and type-check every value."""
    lines = lines or {}
    cfg = _merge(SCHEMA, data, "", lines, source)
    layers = cfg["topology"]["layers"]
    kind = "layered" if isinstance(layers, list) and len(layers) > 1 else "flat"
    for k, v in _TRAIN_DEFAULTS[kind].items():
        if cfg["schedule"]["train"][k] is None:
            cfg["schedule"]["train"][k] = v

    def num(key, value, positive=False, nonneg=False, integer=False):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and np.isfinite(value)
        if integer:
            ok = ok and float(value) == int(value)
        if ok and positive:
            ok = value > 0
        if ok and nonneg:
            ok = value >= 0
        if not ok:
            kindtxt = "a positive" if positive else "a non-negative" if nonneg else "a"
            raise ConfigurationError(f"{_where(source, lines, key)} must be {kindtxt} "
                                     f"{'integer' if integer else 'number'}, got {value!r}")
        return int(value) if integer else float(value)

    def flag(key, value):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{_where(source, lines, key)} must be true or false, got {value!r}")
        return value

    cfg["seed"] = num("seed", cfg["seed"], nonneg=True, integer=True)
    if not isinstance(layers, list) or not layers:
        raise ConfigurationError(f"{_where(source, lines, 'topology.layers')} must be a list of layer sizes")
    cfg["topology"]["layers"] = [num("topology.layers", s, positive=True, integer=True) for s in layers]
    flag("topology.symmetric", cfg["topology"]["symmetric"])
    ln = cfg["learning"]
    ln["eta"] = num("learning.eta", ln["eta"], positive=True)
    ln["lambda"] = num("learning.lambda", ln["lambda"], nonneg=True)
    ln["k_nudge"] = num("learning.k_nudge", ln["k_nudge"], nonneg=True)
    if ln["recall_eta"] is not None:
        ln["recall_eta"] = num("learning.recall_eta", ln["recall_eta"], positive=True)
    flag("learning.plastic_recall", ln["plastic_recall"])
    sim = cfg["simulation"]
    sim["dt"] = num("simulation.dt", sim["dt"], positive=True)
    sim["coupling_gain"] = num("simulation.coupling_gain", sim["coupling_gain"], positive=True)
    sim["freq_dispersion"] = num("simulation.freq_dispersion", sim["freq_dispersion"], nonneg=True)
    rng = sim["init_weight_range"]
    if not isinstance(rng, list) or len(rng) != 2:
        raise ConfigurationError(f"{_where(source, lines, 'simulation.init_weight_range')} must be [low, high]")
    sim["init_weight_range"] = [num("simulation.init_weight_range", x) for x in rng]
    sim["sample_every"] = num("simulation.sample_every", sim["sample_every"], positive=True, integer=True)
    sch = cfg["schedule"]
    sch["settle_time"] = num("schedule.settle_time", sch["settle_time"], nonneg=True)
    for part in ("train", "recall"):
        for key in ("interval", "duration"):
            sch[part][key] = num(f"schedule.{part}.{key}", sch[part][key], positive=True)
    flag("schedule.train.half_last", sch["train"]["half_last"])
    targets = cfg["patterns"]["targets"]
    if not isinstance(targets, list) or not targets or not all(isinstance(p, list) for p in targets):
        raise ConfigurationError(f"{_where(source, lines, 'patterns.targets')} must be a list of +1/-1 lists")
    for p in targets:
        if not p or not all(x in (1, -1) and not isinstance(x, bool) for x in p):
            raise ConfigurationError(f"{_where(source, lines, 'patterns.targets')} entries must be +1 or -1")
    b = cfg["batch"]
    b["runs"] = num("batch.runs", b["runs"], nonneg=True, integer=True)
    if b["metric"] not in ("auto", "mse", "accuracy"):
        raise ConfigurationError(f"{_where(source, lines, 'batch.metric')} must be auto, mse or accuracy")
    b["rolling_window"] = num("batch.rolling_window", b["rolling_window"], positive=True, integer=True)
    flag("batch.random_patterns", b["random_patterns"])
    flag("output.plots", cfg["output"]["plots"])
    w = num("output.sawtooth_window", cfg["output"]["sawtooth_window"], positive=True, integer=True)
    if w % 2 == 0:
        raise ConfigurationError(f"{_where(source, lines, 'output.sawtooth_window')} must be odd")
    cfg["output"]["sawtooth_window"] = w
    an = cfg["analysis"]
    an["beta"] = num("analysis.beta", an["beta"], positive=True)
    an["null_threshold"] = num("analysis.null_threshold", an["null_threshold"], positive=True)
    an["tol"] = num("analysis.tol", an["tol"], positive=True)
    if an["pinned"] != "inputs" and not (isinstance(an["pinned"], list)
                                         and all(isinstance(i, int) and i >= 0 for i in an["pinned"])):
        raise ConfigurationError(f"{_where(source, lines, 'analysis.pinned')} must be 'inputs' or a list of indices")
    ft = cfg["fit"]
    flag("fit.symmetric", ft["symmetric"])
    ft["substeps"] = num("fit.substeps", ft["substeps"], positive=True, integer=True)
    ft["max_iter"] = num("fit.max_iter", ft["max_iter"], positive=True, integer=True)
    ft["rel_tol"] = num("fit.rel_tol", ft["rel_tol"], positive=True)
    if ft["mask"] is not None and not (isinstance(ft["mask"], list) and all(isinstance(r, list) for r in ft["mask"])):
        raise ConfigurationError(f"{_where(source, lines, 'fit.mask')} must be a boolean matrix or null")
    return cfg


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    data, lines = parse_yaml(text, str(path))
    return resolve(data, lines, str(path))


def topology_from(cfg: dict) -> NetworkTopology:
    return NetworkTopology.from_sizes(cfg["topology"]["layers"])


def schedule_from(cfg: dict, modes=(TRAIN, RECALL)) -> ExperimentSchedule:
    sch = cfg["schedule"]
    parts = []
    n_pat = len(cfg["patterns"]["targets"])
    if TRAIN in modes:
        t = sch["train"]
        parts.append(ExperimentSchedule.alternating(t["interval"], t["duration"], TRAIN, sch["settle_time"],
                                                    n_pat, t["half_last"]))
    if RECALL in modes:
        r = sch["recall"]
        parts.append(ExperimentSchedule.alternating(r["interval"], r["duration"], RECALL, sch["settle_time"], n_pat))
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out


def run_config_from(cfg: dict, modes=(TRAIN, RECALL)) -> RunConfig:
    ln, sim = cfg["learning"], cfg["simulation"]
    learning = LearningParams(ln["eta"], ln["lambda"], ln["k_nudge"], ln["recall_eta"])
    return RunConfig(
        topology=topology_from(cfg),
        schedule=schedule_from(cfg, modes),
        target_patterns=np.array(cfg["patterns"]["targets"]),
        learning=learning,
        dt=sim["dt"],
        seed=cfg["seed"],
        init_weight_range=tuple(sim["init_weight_range"]),
        freq_dispersion=sim["freq_dispersion"],
        coupling_gain=sim["coupling_gain"],
        sample_every=sim["sample_every"],
        plastic_recall=ln["plastic_recall"],
        symmetric=cfg["topology"]["symmetric"],
    )
