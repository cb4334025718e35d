"""Command-line entry point: ``phasemem {train,recall,batch,analyze,fit}``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Outputs are written only after the computation succeeded, so a failed
command leaves no partial files behind.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, resolve, run_config_from
from .encoding import all_binary_states, pattern_to_phases
from .errors import ConfigurationError, DegenerateSignalError, DivergenceError, PreconditionError
from .hidden import BipartiteEnergyModel, fisher_information, is_visible_low_energy, log_prob_change, null_directions
from .phase import CouplingMatrix, NetworkTopology
from .protocol import (RECALL, TRAIN, Trace, batch_configs, batch_run, energy_sawtooth, run_recall,
                       run_training, weight_mse)
from .stability import find_fixed_point
from .sysid import fit_voltage_trace, read_voltage_csv, simulate_fit

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    # json writes floats with repr(), which is the shortest round-tripping form
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def trace_csv(trace: Trace) -> str:
    """``t, phi_0.., k_i_j.., energy, acc_0..`` with one row per sample."""
    n = trace.phases.shape[1]
    header = (["t"] + [f"phi_{i}" for i in range(n)] + [f"k_{i}_{j}" for i, j in trace.pairs]
              + ["energy"] + [f"acc_{o}" for o in range(trace.accuracy.shape[1])])
    table = np.column_stack([trace.times, trace.phases, trace.weights, trace.energy, trace.accuracy])
    buf = io.StringIO()
    np.savetxt(buf, table, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def weights_doc(k: CouplingMatrix, topology: NetworkTopology, patterns) -> dict:
    entries = [{"i": i, "j": j, "k": float(k.k[i, j])} for i, j in topology.masked_pairs(k.symmetric)]
    return {
        "layers": list(topology.layer_sizes),
        "symmetric": k.symmetric,
        "inputs": list(topology.inputs),
        "outputs": list(topology.outputs),
        "patterns": np.asarray(patterns).tolist(),
        "k": k.k.tolist(),
        "masked_entries": entries,
        "note": "k is row-major; masked_entries lists the synapses the topology allows",
    }


def read_weights(path) -> tuple[CouplingMatrix, NetworkTopology, list | None]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read weights {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "k" not in doc or "layers" not in doc:
        raise ConfigurationError(f"{path}: weights file needs 'layers' and 'k'")
    topo = NetworkTopology.from_sizes(doc["layers"])
    try:
        k = np.array(doc["k"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: 'k' is not a numeric matrix") from exc
    if k.shape != (topo.n_oscillators, topo.n_oscillators):
        raise ConfigurationError(f"{path}: 'k' has shape {k.shape}, layers imply {topo.n_oscillators} oscillators")
    return CouplingMatrix(k, topo.coupling_mask, bool(doc.get("symmetric", True))), topo, doc.get("patterns")


def _write(out: Path, files: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)


def _summary(cfg: dict, extra: dict, started: float) -> str:
    doc = {"version": __version__, "config": cfg}
    doc.update(extra)
    doc["wall_time_s"] = time.perf_counter() - started
    return dumps(doc)


def _load(args) -> dict:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigurationError("--seed must be non-negative")
        cfg["seed"] = int(args.seed)
    return cfg


def cmd_train(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    rc = run_config_from(cfg, (TRAIN,))
    k, trace = run_training(rc)
    extra = {"seed": rc.seed, "samples": len(trace)}
    ideal = rc.ideal_weights
    if ideal is not None:
        extra["initial_mse"] = float(trace.mse[0])
        extra["final_mse"] = weight_mse(k, ideal)
    _write(Path(args.out), {
        "trace.csv": trace_csv(trace),
        "weights.json": dumps(weights_doc(k, rc.topology, rc.target_patterns)),
        "summary.json": _summary(cfg, extra, started),
    })
    return EXIT_OK


def _segment_stats(trace: Trace, sched) -> list[dict]:
    out = []
    for s, seg in enumerate(sched.segments):
        sel = (trace.segment == s) & trace.steady
        acc = trace.accuracy[sel].mean(axis=1) if sel.any() else np.array([np.nan])
        out.append({"segment": s, "pattern": seg.pattern, "duration": seg.duration,
                    "mean_accuracy": float(np.mean(acc)), "min_accuracy": float(np.min(acc))})
    return out


def cmd_recall(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    k, topo, _ = read_weights(args.weights)
    if list(topo.layer_sizes) != cfg["topology"]["layers"]:
        raise ConfigurationError(f"weights are for layers {list(topo.layer_sizes)}, "
                                 f"config says {cfg['topology']['layers']}")
    rc = run_config_from(cfg, (RECALL,))
    final, trace = run_recall(rc, k)
    sched = rc.schedule.part(RECALL)
    extra = {"seed": rc.seed, "steady_accuracy": trace.steady_accuracy(),
             "segments": _segment_stats(trace, sched)}
    if trace.switch_samples.size:
        saw = energy_sawtooth(trace, cfg["output"]["sawtooth_window"])
        extra["energy_sawtooth"] = {"ok": saw.ok, "pre": saw.pre, "after": saw.after,
                                    "jumped": saw.jumped, "relaxed": saw.relaxed}
    _write(Path(args.out), {
        "trace.csv": trace_csv(trace),
        "weights.json": dumps(weights_doc(final, rc.topology, rc.target_patterns)),
        "summary.json": _summary(cfg, extra, started),
    })
    return EXIT_OK


def _svg(fig) -> str:
    import matplotlib.pyplot as plt

    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def _figure(**kw):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "phasemem"
    return plt.subplots(**kw)


def cmd_batch(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    runs = cfg["batch"]["runs"]
    if runs < 1:
        raise ConfigurationError("batch.runs must be at least 1")
    if args.workers < 1:
        raise ConfigurationError("--workers must be at least 1")
    base = run_config_from(cfg)
    if cfg["batch"]["metric"] == "mse" or (cfg["batch"]["metric"] == "auto" and not base.topology.is_layered):
        base = run_config_from(cfg, (TRAIN,))
    configs = batch_configs(base, runs, cfg["seed"], cfg["batch"]["random_patterns"])
    res = batch_run(configs, cfg["batch"]["metric"], cfg["batch"]["rolling_window"], args.workers)
    rows = ["t,mean,std,rolling_mean"]
    rows += [",".join(fmt(v) for v in r) for r in zip(res.times, res.mean, res.std, res.rolling_mean)]
    files = {"aggregate.csv": "\n".join(rows) + "\n"}
    runs_doc = [{"seed": r.seed, "initial_mse": r.initial_mse, "final_mse": r.final_mse,
                 "steady_accuracy": r.steady_accuracy, "sawtooth": r.sawtooth, "dips": r.dips} for r in res.runs]
    extra = {"metric": res.metric, "runs": runs_doc, "final_mean": float(res.mean[-1])}
    if res.metric == "mse":
        extra["mean_initial_mse"] = float(np.mean([r.initial_mse for r in res.runs]))
        extra["mean_final_mse"] = float(np.mean([r.final_mse for r in res.runs]))
    else:
        extra["mean_steady_accuracy"] = float(np.mean([r.steady_accuracy for r in res.runs]))
    if cfg["output"]["plots"]:
        files["aggregate.svg"] = _aggregate_svg(res, cfg["batch"]["rolling_window"])
    files["summary.json"] = _summary(cfg, extra, started)
    _write(Path(args.out), files)
    return EXIT_OK


def _aggregate_svg(res, window: int) -> str:
    fig, ax = _figure(figsize=(7, 4))
    ax.fill_between(res.times, res.mean - res.std, res.mean + res.std, alpha=0.3, label="mean ± std")
    ax.plot(res.times, res.mean, lw=1, label="mean")
    ax.plot(res.times, res.rolling_mean, lw=1.5, label=f"rolling mean ({window})")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("weight MSE" if res.metric == "mse" else "recall accuracy")
    ax.legend()
    return _svg(fig)


def _hidden_init(k, topo, pattern) -> np.ndarray:
    """Pattern phases on visible oscillators; hidden ones at their lowest-energy binary state."""
    phi = np.zeros(topo.n_oscillators)
    phi[list(topo.visible)] = pattern_to_phases(pattern)
    hid = list(topo.hidden)
    if hid:
        s = np.zeros(topo.n_oscillators)
        s[list(topo.visible)] = pattern
        best = None
        for h in all_binary_states(len(hid)):
            s[hid] = h
            e = -0.5 * s @ k @ s
            if best is None or e < best[0] - 1e-12:
                best = (e, h.copy())
        phi[hid] = pattern_to_phases(best[1])
    return phi


def cmd_analyze(args) -> int:
    started = time.perf_counter()
    cfg = resolve({}) if args.config is None else load_config(args.config)
    k, topo, patterns = read_weights(args.weights)
    an = cfg["analysis"]
    if args.mode == "stability":
        if not patterns:
            raise ConfigurationError("stability mode needs 'patterns' in the weights file")
        pinned = list(topo.inputs) if an["pinned"] == "inputs" else an["pinned"]
        reports = []
        for p in patterns:
            phi0 = _hidden_init(k.k, topo, np.array(p))
            rep = find_fixed_point(phi0, k.k, tol=an["tol"], pinned=pinned)
            d = rep.to_dict()
            d["pattern"] = p
            reports.append(d)
        doc = {"mode": "stability", "reports": reports}
        name = "stability.json"
    else:
        if not topo.hidden:
            raise ConfigurationError("fisher mode needs a layered topology with hidden oscillators")
        model = BipartiteEnergyModel.from_coupling(k.k, topo, an["beta"])
        f = fisher_information(model)
        vals = np.linalg.eigvalsh(f)
        nulls = null_directions(f, an["null_threshold"])
        vis, hid = topo.visible, topo.hidden
        doc = {
            "mode": "fisher",
            "beta": an["beta"],
            "parameter_order": [f"w_{v}_{h}" for v in vis for h in hid],
            "eigenvalues": vals,
            "null_directions": [{"vector": u, "max_logprob_change_at_1e-4": log_prob_change(model, u)}
                                for u in nulls],
            "patterns_low_energy": ([{"pattern": p, "is_low_energy": is_visible_low_energy(p, model)}
                                     for p in patterns] if patterns else []),
        }
        name = "fisher.json"
    doc["version"] = __version__
    doc["config"] = cfg
    doc["wall_time_s"] = time.perf_counter() - started
    _write(Path(args.out), {name: dumps(doc)})
    return EXIT_OK


def cmd_fit(args) -> int:
    started = time.perf_counter()
    cfg = resolve({}) if args.config is None else load_config(args.config)
    trace = read_voltage_csv(args.trace)
    ft = cfg["fit"]
    mask = None if ft["mask"] is None else np.array(ft["mask"], dtype=bool)
    fit, series = fit_voltage_trace(trace, mask, ft["symmetric"], ft["substeps"], ft["max_iter"], ft["rel_tol"])
    doc = fit.to_dict()
    obs = series.interior()
    doc.update({"version": __version__, "config": cfg, "sample_rate": trace.sample_rate,
                "interior_samples": int(obs.shape[1]), "wall_time_s": time.perf_counter() - started})
    files = {"fit.json": dumps(doc)}
    if cfg["output"]["plots"]:
        sim = simulate_fit(fit, obs[:, 0], obs.shape[1], trace.dt, ft["substeps"])
        files["overlay.svg"] = _overlay_svg(obs, sim, np.nonzero(series.reliable)[0] * trace.dt)
    _write(Path(args.out), files)
    return EXIT_OK


def _overlay_svg(obs, sim, t) -> str:
    n = obs.shape[0]
    fig, axes = _figure(nrows=n, ncols=1, figsize=(7, 1.6 * n + 0.6), sharex=True, squeeze=False)
    # differences to channel 0 remove the carrier from the observed phases
    for i, ax in enumerate(axes[:, 0]):
        (lo,) = ax.plot(t, np.cos(obs[i] - obs[0]), lw=1, label="observed")
        (lf,) = ax.plot(t, np.cos(sim[i] - sim[0]), lw=1, ls="--", label="fitted")
        lo.set_gid(f"observed_ch{i}")
        lf.set_gid(f"fitted_ch{i}")
        ax.set_ylabel(f"cos Δφ ch{i}")
    axes[-1, 0].set_xlabel("time (s)")
    axes[0, 0].legend(loc="upper right")
    return _svg(fig)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phasemem", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a network and write trace, weights and summary")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("recall", help="run recall with trained weights")
    r.add_argument("--config", required=True)
    r.add_argument("--weights", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_recall)

    b = sub.add_parser("batch", help="seeded batch with aggregate curve")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--seed", type=int)
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=cmd_batch)

    a = sub.add_parser("analyze", help="stability or Fisher analysis of a weights file")
    a.add_argument("--weights", required=True)
    a.add_argument("--mode", choices=("stability", "fisher"), required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--config")
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("fit", help="fit Kuramoto parameters to a voltage-trace CSV")
    f.add_argument("--trace", required=True)
    f.add_argument("--config")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, PreconditionError) as exc:
        print(f"phasemem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateSignalError as exc:
        print(f"phasemem: degenerate signal: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DivergenceError, FloatingPointError) as exc:
        print(f"phasemem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
