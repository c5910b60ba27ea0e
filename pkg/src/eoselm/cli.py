"""Command-line entry point: ``eoselm <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from eoselm import experiments as ex
from eoselm import featsel, features, jaya
from eoselm.config import ExperimentConfig, config_to_dict, load_config, with_overrides
from eoselm.errors import EoselmError, InputError
from eoselm.powersim import kb as kbmod
from eoselm.powersim.network import load_network


def _common(parser: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    parser.add_argument("--config", default=S, help="TOML or JSON experiment config")
    parser.add_argument("--seed", type=int, default=S)
    parser.add_argument("--trials", type=int, default=S)
    parser.add_argument("--out-dir", default=S)
    parser.add_argument("--mode", choices=("one-by-one", "chunk"), default=S)
    parser.add_argument("--chunk-size", type=int, default=S)
    parser.add_argument("--workers", type=int, default=S, help="processes for trials and simulations")
    parser.add_argument("--print-config", action="store_true", default=S, help="print the resolved config and exit")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eoselm", description="Transient stability assessment with OS-ELM ensembles.")
    _common(p)
    sub = p.add_subparsers(dest="command")
    for name, help_ in [
        ("gen-kb", "simulate the scenario grid and write the knowledge base"),
        ("model-select", "cross-validate the hidden-layer size"),
        ("train-eval", "repeated trials of OS-ELM, EOS-ELM and SGBP; saves the best model"),
        ("select-features", "BinJaya feature selection and full-vs-subset comparison"),
        ("predict", "stream labels for a feature CSV with a saved model"),
        ("benchmark", "accuracy and timing of every learner and update mode"),
    ]:
        sp = sub.add_parser(name, help=help_)
        _common(sp)
        if name in ("train-eval", "select-features", "benchmark"):
            sp.add_argument("--L", default=None, help="hidden nodes, or 'selected' to reuse model-select's choice")
        if name == "predict":
            sp.add_argument("--model", required=False, help="model file (default <out-dir>/model.json)")
            sp.add_argument("--input", required=False, help="feature CSV (default: the knowledge base)")
            sp.add_argument("--output", required=False, help="labels CSV (default <out-dir>/labels.csv)")
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    workers = getattr(args, "workers", None)
    cfg = with_overrides(
        cfg,
        seed=getattr(args, "seed", None),
        trials=getattr(args, "trials", None),
        out_dir=getattr(args, "out_dir", None),
        mode=getattr(args, "mode", None),
        chunk_size=getattr(args, "chunk_size", None),
        workers=workers,
    )
    if workers is not None:
        cfg = replace(cfg, grid=replace(cfg.grid, workers=workers))
    return cfg


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_summary(out: Path, command: str, doc: dict) -> None:
    (out / f"{command}-summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load_scaled_kb(cfg: ExperimentConfig):
    path = cfg.kb_file
    if not path.exists():
        raise InputError(f"{path} not found; run gen-kb first")
    raw = kbmod.read_kb(path)
    if len(raw) == 0:
        raise InputError(f"{path} has no rows")
    return features.normalize_kb(raw)


def _hidden_nodes(cfg: ExperimentConfig, arg) -> int:
    if arg is None:
        return cfg.model.L
    if arg == "selected":
        path = Path(cfg.out_dir) / "model-select-summary.json"
        if not path.exists():
            raise InputError(f"{path} not found; run model-select first")
        return int(json.loads(path.read_text())["best_L"])
    try:
        return int(arg)
    except ValueError:
        raise InputError(f"--L expects an integer or 'selected', got {arg!r}") from None


def _report_line(rep: ex.TrialReport) -> str:
    s = rep.summary()
    return (
        f"{rep.method:>14}: test {s['test_mean']:.4f} +/- {s['test_sd']:.4f}  "
        f"train {s['train_mean']:.4f} +/- {s['train_sd']:.4f}  "
        f"time {s['init_time_mean'] + s['train_time_mean']:.4f} s  ({s['trials']} trials)"
    )


# -- subcommands ------------------------------------------------------------------


def cmd_gen_kb(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    g = cfg.grid
    grid = kbmod.ScenarioGrid(g.load_levels, g.n_dispatch, g.n_faults, g.t_fault, g.clear_cycles, g.dispatch_spread)
    t0 = time.perf_counter()
    kb = kbmod.generate_kb(load_network(cfg.network), grid, cfg.seed, g.dt, g.horizon, g.batch_size, g.workers)
    elapsed = time.perf_counter() - t0
    path = cfg.kb_file
    path.parent.mkdir(parents=True, exist_ok=True)
    kbmod.write_kb(kb, path)
    kbmod.write_rejections(kb, out / "rejected.tsv")
    (out / "feature_dictionary.md").write_text(features.feature_dictionary())
    doc = {
        "rows": len(kb),
        "scenarios": grid.size,
        "rejected": len(kb.rejected),
        "stable": int(np.sum(kb.y == 1)),
        "unstable": int(np.sum(kb.y == -1)),
        "minority_fraction": kb.minority_fraction(),
        "train_rows": int(np.sum(kb.split == "train")),
        "test_rows": int(np.sum(kb.split == "test")),
        "seconds": elapsed,
    }
    _write_summary(out, "gen-kb", doc)
    print(f"wrote {path}: {doc['rows']} rows ({doc['stable']} stable, {doc['unstable']} unstable, "
          f"{doc['rejected']} rejected) in {elapsed:.1f} s")
    return doc


def cmd_model_select(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    kb, _ = _load_scaled_kb(cfg)
    X, y = kb.part("train")
    m = cfg.model
    t0 = time.perf_counter()
    best, curve = ex.model_select(X, y, m.L_grid, m.cv_folds, m.cv_repeats, cfg.seed, "oselm", m.activation, m.mode, m.chunk_size)
    ex.write_curve_csv(curve, out / "validation_curve.csv")
    doc = {
        "best_L": best,
        "best_accuracy": next(p.mean_accuracy for p in curve if p.L == best),
        "grid_evaluated": [p.L for p in curve],
        "seconds": time.perf_counter() - t0,
    }
    _write_summary(out, "model-select", doc)
    for p in curve:
        print(f"L={p.L:4d}  validation accuracy {p.mean_accuracy:.4f} +/- {p.sd_accuracy:.4f}{'  <- best' if p.L == best else ''}")
    return doc


def cmd_train_eval(cfg: ExperimentConfig, L_arg=None) -> dict:
    out = _out(cfg)
    kb, scaling = _load_scaled_kb(cfg)
    L = _hidden_nodes(cfg, L_arg)
    data = ex.Dataset.from_kb(kb)
    seeds = ex.trial_seeds(cfg.seed, cfg.trials)
    reports, best_model = [], None
    for method in ex.METHODS:
        spec = ex.TrialSpec.from_config(method, cfg, L)
        rep, models = ex.run_trials(spec, data, seeds, cfg.workers, keep_models=method == "eoselm")
        reports.append(rep)
        if method == "eoselm":
            k = ex.best_trial(rep)
            best_model = ex.TsaModel(models[k], scaling, list(range(kb.X.shape[1])), tuple(kb.feature_names))
            best_index = k
        print(_report_line(rep))
    ex.write_trials_csv(reports, out / "trials.csv")
    ex.write_aggregates_csv(reports, out / "aggregates.csv")
    ex.save_model(best_model, out / "model.json")
    doc = {"L": L, "best_trial": best_index, "reports": [r.summary() for r in reports]}
    _write_summary(out, "train-eval", doc)
    return doc


def cmd_select_features(cfg: ExperimentConfig, L_arg=None) -> dict:
    out = _out(cfg)
    kb, _ = _load_scaled_kb(cfg)
    L = _hidden_nodes(cfg, L_arg)
    t0 = time.perf_counter()
    cmp = ex.compare_subset(kb, cfg, L, cfg.workers)
    sel = cmp.selection
    jaya.write_trace(sel.search.jaya, out / "jaya_trace.csv")
    featsel.write_selection_report(sel, out / "subset.json", "jaya_trace.csv")
    ex.write_trials_csv([cmp.full, cmp.subset], out / "feature_trials.csv")
    ex.write_aggregates_csv([cmp.full, cmp.subset], out / "feature_aggregates.csv")
    full, sub = cmp.full.summary(), cmp.subset.summary()
    doc = {
        "L": L,
        "features": sel.features,
        "size": len(sel.features),
        "of": kb.X.shape[1],
        "fitness": sel.fitness.total,
        "full_test_mean": full["test_mean"],
        "subset_test_mean": sub["test_mean"],
        "accuracy_drop": full["test_mean"] - sub["test_mean"],
        "seconds": time.perf_counter() - t0,
    }
    _write_summary(out, "select-features", doc)
    print(f"selected {doc['size']}/{doc['of']} features: {', '.join(sel.features)}")
    print(_report_line(cmp.full))
    print(_report_line(cmp.subset))
    return doc


def cmd_predict(cfg: ExperimentConfig, model_path=None, input_path=None, output_path=None) -> dict:
    out = _out(cfg)
    model = ex.load_model(model_path or out / "model.json")
    src = Path(input_path) if input_path else cfg.kb_file
    dst = Path(output_path) if output_path else out / "labels.csv"
    latencies = []
    with open(src, newline="") as fin, open(dst, "w", newline="") as fout:
        fout.write("row,label\n")
        rows = ex.read_feature_rows(fin, model.feature_names)
        for k, (label, dt) in enumerate(ex.stream_predict(model, rows)):
            fout.write(f"{k},{label}\n")
            latencies.append(dt)
    doc = ex.latency_stats(latencies)
    _write_summary(out, "predict", doc)
    if latencies:
        print(f"{doc['rows']} rows -> {dst}; median latency {doc['median_ms']:.3f} ms/row")
    else:
        print(f"no input rows; wrote header only to {dst}")
    return doc


def cmd_benchmark(cfg: ExperimentConfig, L_arg=None) -> dict:
    out = _out(cfg)
    kb, _ = _load_scaled_kb(cfg)
    L = _hidden_nodes(cfg, L_arg)
    data = ex.Dataset.from_kb(kb)
    seeds = ex.trial_seeds(cfg.seed, cfg.trials)
    chunk = cfg.model.chunk_size if cfg.model.chunk_size > 1 else 10
    variants = [
        ("oselm-1by1", ex.TrialSpec("oselm", L=L, n0=cfg.model.n0, activation=cfg.model.activation)),
        ("oselm-chunk", ex.TrialSpec("oselm", L=L, n0=cfg.model.n0, activation=cfg.model.activation, mode="chunk", chunk_size=chunk)),
        ("eoselm", ex.TrialSpec.from_config("eoselm", cfg, L)),
        ("sgbp", ex.TrialSpec.from_config("sgbp", cfg, L)),
    ]
    reports, timing = [], {}
    for name, spec in variants:
        rep, models = ex.run_trials(spec, data, seeds, cfg.workers, keep_models=True)
        rep = ex.TrialReport(name, rep.records)
        reports.append(rep)
        t0 = time.perf_counter()
        for x in data.X_test:
            ex.predict_model(spec.method, models[0], x[None, :])
        per_row = (time.perf_counter() - t0) / max(len(data.X_test), 1)
        s = rep.summary()
        timing[name] = {"init_s": s["init_time_mean"], "sequential_s": s["train_time_mean"], "predict_ms_per_row": per_row * 1e3}
        print(_report_line(rep))
    ex.write_aggregates_csv(reports, out / "benchmark.csv")
    doc = {"L": L, "chunk_size": chunk, "timing": timing, "reports": [r.summary() for r in reports]}
    _write_summary(out, "benchmark", doc)
    return doc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if getattr(args, "print_config", False):
            print(json.dumps(config_to_dict(cfg), indent=2))
            return 0
        if args.command is None:
            parser.print_help()
            return 2
        if args.command == "gen-kb":
            cmd_gen_kb(cfg)
        elif args.command == "model-select":
            cmd_model_select(cfg)
        elif args.command == "train-eval":
            cmd_train_eval(cfg, args.L)
        elif args.command == "select-features":
            cmd_select_features(cfg, args.L)
        elif args.command == "predict":
            cmd_predict(cfg, args.model, args.input, args.output)
        elif args.command == "benchmark":
            cmd_benchmark(cfg, args.L)
    except (EoselmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
