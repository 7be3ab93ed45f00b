"""Command-line entry point: ``filread <command> [--config FILE] [--key value ...]``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from dataclasses import fields
from pathlib import Path

from . import __version__
from .corpus import make_document
from .evaluation import write_metrics_csv
from .explain import Discretizer, explain_instance, explanation_to_json, explanation_to_text
from .features import Resources, default_registry, extract_all, write_feature_csv
from .interpret import (
    cross_reference_top,
    linear_global_weights,
    rank_by_spearman,
    write_rankings_csv,
)
from .lm import load_models, save_models
from .models import load_model, save_model, train
from .pipeline import (
    ConfigError,
    ExperimentConfig,
    RunResult,
    StageError,
    fit_run,
    global_ranking,
    load_config_file,
    model_extra,
    prepare_data,
    run_experiment,
    select_features,
    stage,
    write_run_outputs,
)
from .synth import SynthConfig, generate_corpus, write_corpus

def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value file; flags override its values")
    g = p.add_argument_group("experiment settings (override the config file)")
    for f in fields(ExperimentConfig):
        flags = [f"--{f.name}"]
        if "_" in f.name:
            flags.append(f"--{f.name.replace('_', '-')}")
        g.add_argument(*flags, dest=f.name, default=None, metavar=f.name.upper())
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="filread", description="Interpretable readability assessment for Filipino text.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[parent], help="write a synthetic corpus (manifest.csv + docs/)")
    sub.add_parser("extract", parents=[parent], help="split, train LMs, write feature CSVs")
    sub.add_parser("train", parents=[parent], help="train one model and write model.json")
    sub.add_parser("rank", parents=[parent], help="write Spearman and model-based feature rankings")
    ex = sub.add_parser("explain", parents=[parent], help="explain one document under a saved model")
    ex.add_argument("--model-file", "--model_file", dest="model_file", required=True)
    ex.add_argument("--doc", required=True, help="plain-text document")
    ex.add_argument("--class", dest="target_class", type=int, required=True)
    ex.add_argument("--lms", help="LM bundle (default: lms.json next to the model)")
    sub.add_parser("run", parents=[parent], help="full experiment with metrics, rankings and explanations")
    sub.add_parser("report", parents=[parent], help="rebuild report.md from the CSVs in --out")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    raw = load_config_file(args.config) if args.config else {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            raw[f.name] = v
    cfg = ExperimentConfig().with_overrides(raw)
    cfg.validate()
    return cfg


# --- commands -----------------------------------------------------------------------


def cmd_synth(cfg: ExperimentConfig, args) -> int:
    corpus = generate_corpus(SynthConfig(docs_per_level=cfg.docs_per_level, seed=cfg.synth_seed))
    manifest = write_corpus(corpus, cfg.out)
    print(f"wrote {len(corpus)} documents; manifest {manifest}")
    return 0


def cmd_extract(cfg: ExperimentConfig, args) -> int:
    data = prepare_data(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    reg = data.resources.registry
    write_feature_csv(out / "features_train.csv", data.train_vectors, data.train.labels, reg)
    write_feature_csv(out / "features_test.csv", data.test_vectors, data.test.labels, reg)
    if data.resources.lms:
        save_models(data.resources.lms, out / "lms.json")
    print(f"wrote features for {len(data.train)} train and {len(data.test)} test documents to {out}")
    return 0


def cmd_train(cfg: ExperimentConfig, args) -> int:
    data = prepare_data(cfg)
    kind, mode = cfg.model[0], cfg.selection[0]
    with stage("select"):
        sel = select_features(mode, data, kind, cfg)
    with stage("train"):
        run = fit_run(kind, sel, data, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    result = RunResult(cfg, data, [run])
    save_model(run.model, out / "model.json", model_extra(result, run))
    if data.resources.lms:
        save_models(data.resources.lms, out / "lms.json")
    write_metrics_csv(out / "metrics.csv", result.metric_rows)
    print(f"{run.label}: " + " ".join(f"{k}={v}" for k, v in zip(("acc", "prec", "rec", "f1"), run.metrics.as_row())))
    return 0


def cmd_rank(cfg: ExperimentConfig, args) -> int:
    data = prepare_data(cfg)
    reg = data.resources.registry
    with stage("rank"):
        rankings = [rank_by_spearman(data.Z_train, data.y_train, cfg.k, data.names, reg)]
        common: dict[str, list[str]] = {}
        for kind in cfg.model:
            model = train(data.Z_train, data.y_train, cfg.train_config(kind), feature_names=data.names, stats=data.stats)
            rankings.append(global_ranking(model, cfg.k, data.Z_train, data.y_train, reg))
            if kind in ("logreg", "svm"):
                per_class = linear_global_weights(model, cfg.k, reg)
                rankings.extend(per_class)
                if all(len(r) for r in per_class):
                    common[kind] = cross_reference_top(per_class, cfg.k)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rankings_csv(out / "rankings.csv", rankings)
    if common:
        lines = [f"{kind}: {', '.join(names) or '(none)'}" for kind, names in common.items()]
        (out / "cross_reference.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print("\n".join(lines))
    print(f"wrote {out / 'rankings.csv'}")
    return 0


def cmd_explain(cfg: ExperimentConfig, args) -> int:
    model_path = Path(args.model_file)
    if not model_path.is_file():
        raise ConfigError(f"model file not found: {model_path}")
    doc_path = Path(args.doc)
    if not doc_path.is_file():
        raise ConfigError(f"document not found: {doc_path}")
    with stage("load"):
        model, extra = load_model(model_path)
        if "discretizer" not in extra:
            raise ValueError(f"{model_path} carries no discretizer")
        disc = Discretizer.from_dict(extra["discretizer"])
        known = dict(default_registry().entries)
        unknown = [n for n in model.feature_names if n not in known]
        if unknown:
            raise ValueError(f"feature mismatch: model uses {unknown}, which the extractor does not produce")
        registry = default_registry().subset(model.feature_names)
        lms = {}
        if "LM" in registry.families:
            lms_path = Path(args.lms) if args.lms else model_path.parent / "lms.json"
            if not lms_path.is_file():
                raise ConfigError(f"language model bundle not found: {lms_path}")
            lms = load_models(lms_path)
    with stage("extract"):
        doc = make_document(doc_path.stem, doc_path.read_text(encoding="utf-8"), args.target_class)
        vec = extract_all(doc, Resources.default(lms, registry))
    with stage("explain"):
        exp = explain_instance(model, vec, disc, args.target_class, cfg.explain_config(), doc_id=doc.id)
    out = Path(cfg.out) / "explanations"
    out.mkdir(parents=True, exist_ok=True)
    stem = f"level{args.target_class}_{doc.id}"
    (out / f"{stem}.json").write_text(explanation_to_json(exp) + "\n", encoding="utf-8")
    text = explanation_to_text(exp)
    (out / f"{stem}.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_run(cfg: ExperimentConfig, args) -> int:
    result = run_experiment(cfg)
    with stage("write"):
        paths = write_run_outputs(result, cfg.out)
    for name, rep in result.metric_rows:
        print(f"{name}: " + " ".join(f"{k}={v}" for k, v in zip(("acc", "prec", "rec", "f1"), rep.as_row())))
    print(f"report: {paths['report']}")
    return 0


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_report(cfg: ExperimentConfig, args) -> int:
    out = Path(cfg.out)
    metrics_path = out / "metrics.csv"
    if not metrics_path.is_file():
        raise ConfigError(f"no metrics.csv in {out}; run 'filread run' first")
    lines = ["# Readability experiment report", "", "## Metrics", ""]
    lines += ["| Model | Acc | Prec | Rec | F1 |", "|---|---:|---:|---:|---:|"]
    for row in _read_csv(metrics_path):
        vals = " | ".join(f"{float(row[k]):.3f}" for k in ("accuracy", "precision", "recall", "f1"))
        lines.append(f"| {row['model']} | {vals} |")
    rankings_path = out / "rankings.csv"
    if rankings_path.is_file():
        groups: dict[tuple[str, str], list[dict]] = {}
        for row in _read_csv(rankings_path):
            groups.setdefault((row["source"], row["class"]), []).append(row)
        for (source, cls), rows in groups.items():
            title = f"{source} ranking" + (f", level {cls}" if cls else "")
            lines += ["", f"## {title}", "", "| Rank | Feature | Family | Score | Direction |", "|---:|---|---|---:|---|"]
            lines += [f"| {r['rank']} | {r['feature']} | {r['family']} | {r['score']} | {r['direction']} |" for r in rows]
    exp_dir = out / "explanations"
    texts = sorted(exp_dir.glob("*.txt")) if exp_dir.is_dir() else []
    if texts:
        lines += ["", "## Local explanations"]
        for t in texts:
            lines += ["", "```", t.read_text(encoding="utf-8").rstrip("\n"), "```"]
    (out / "report.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'report.md'}")
    return 0


HANDLERS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "rank": cmd_rank,
    "explain": cmd_explain,
    "run": cmd_run,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        warnings.showwarning = _show_warning
        return _dispatch(args)


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def _dispatch(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_config(args)
        return HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"filread: config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"filread: error {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"filread: error [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
