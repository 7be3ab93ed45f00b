"""End-to-end experiment: split, LMs, features, selection, training, metrics, explanations.

Every random stage draws from the master seed plus a fixed offset
(see ``SEED_OFFSETS``), so one number reproduces a run.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import LEVELS, LabeledCorpus, load_corpus
from .evaluation import MetricsReport, compute_metrics, metrics_markdown, stratified_split, write_metrics_csv
from .explain import Discretizer, ExplainConfig, LocalExplanation, explain_instance, explanation_to_json, explanation_to_text, fit_discretizer
from .features import (
    LM_LEVELS,
    LM_ORDERS,
    FeatureRegistry,
    FeatureVector,
    Resources,
    default_registry,
    extract_all,
    extract_lm,
    feature_matrix,
    standardize,
    StandardizationStats,
)
from .interpret import (
    FeatureRanking,
    RankEntry,
    combine_rankings,
    cross_reference_top,
    format_spearman_table,
    linear_global_weights,
    linear_overall_ranking,
    rank_by_spearman,
    rf_global_importance,
    write_rankings_csv,
)
from .lm import NgramModel, train_ngram
from .models import MODEL_KINDS, TrainConfig, TrainedModel, predict_label, train
from .synth import SynthConfig, generate_corpus

__all__ = [
    "ConfigError",
    "StageError",
    "stage",
    "ExperimentConfig",
    "PreparedData",
    "RunResult",
    "SELECTION_MODES",
    "SEED_OFFSETS",
    "load_config_file",
    "get_corpus",
    "train_level_lms",
    "prepare_data",
    "global_ranking",
    "select_features",
    "run_experiment",
    "write_run_outputs",
    "write_report",
]

log = logging.getLogger(__name__)

SELECTION_MODES = ("all", "spearman", "global", "combined")
SELECTION_LABELS = {"all": "All", "spearman": "Corr", "global": "Global", "combined": "Combined"}
MODEL_LABELS = {"logreg": "LogReg", "svm": "SVM", "rf": "RF"}
SEED_OFFSETS = {"split": 0, "model": 1, "explain": 2, "pick": 3, "lm_folds": 4}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class StageError(RuntimeError):
    """A pipeline stage failed; the message starts with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage


@contextmanager
def stage(name: str):
    try:
        yield
    except (ConfigError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _csv_list(v) -> tuple[str, ...]:
    if isinstance(v, str):
        return tuple(p.strip().lower() for p in v.split(",") if p.strip())
    return tuple(str(p).lower() for p in v)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 42
    out: str = "out"
    manifest: str = ""
    docs_per_level: int = 100
    synth_seed: int = 42
    features: tuple[str, ...] = ("trad", "lex", "lm", "syll", "morph")
    model: tuple[str, ...] = ("rf",)
    selection: tuple[str, ...] = ("all",)
    k: int = 10
    test_fraction: float = 0.3
    lm_alpha: float = 1.0
    lm_folds: int = 5
    l2_lambda: float = 1e-3
    learning_rate: float = 0.1
    epochs: int = 500
    n_trees: int = 100
    max_depth: int = 12
    features_per_split: str = "sqrt"
    n_explain: int = 1
    n_samples: int = 5000
    kernel_width: float = 0.0  # 0 selects 0.75 * sqrt(n_features)
    ridge_lambda: float = 1.0
    explain_k: int = 10

    def __post_init__(self):
        object.__setattr__(self, "features", _csv_list(self.features))
        object.__setattr__(self, "model", _csv_list(self.model))
        object.__setattr__(self, "selection", _csv_list(self.selection))

    def validate(self) -> None:
        bad = [m for m in self.model if m not in MODEL_KINDS]
        if bad or not self.model:
            raise ConfigError(f"unknown model kind(s) {bad or '(none)'}; expected {', '.join(MODEL_KINDS)}")
        bad = [s for s in self.selection if s not in SELECTION_MODES]
        if bad or not self.selection:
            raise ConfigError(f"unknown selection mode(s) {bad or '(none)'}; expected {', '.join(SELECTION_MODES)}")
        try:
            default_registry().select_families(self.features)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.features:
            raise ConfigError("no feature families selected")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must be in (0, 1)")
        if self.docs_per_level < 2:
            raise ConfigError("docs_per_level must be >= 2")
        if self.lm_folds == 1 or self.lm_folds < 0:
            raise ConfigError("lm_folds must be 0 (no cross-fitting) or >= 2")
        if self.n_explain < 0:
            raise ConfigError("n_explain must be >= 0")
        if self.n_explain and self.n_samples < 10:
            raise ConfigError("n_samples must be >= 10")
        try:
            for kind in self.model:
                self.train_config(kind).validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def registry(self) -> FeatureRegistry:
        return default_registry().select_families(self.features)

    def stage_seed(self, stage: str) -> int:
        return self.seed + SEED_OFFSETS[stage]

    def train_config(self, kind: str) -> TrainConfig:
        return TrainConfig(
            model_kind=kind,
            l2_lambda=self.l2_lambda,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            features_per_split=self.features_per_split,
            rng_seed=self.stage_seed("model"),
        )

    def explain_config(self) -> ExplainConfig:
        return ExplainConfig(
            n_samples=self.n_samples,
            kernel_width=self.kernel_width or None,
            k=self.explain_k,
            ridge_lambda=self.ridge_lambda,
            seed=self.stage_seed("explain"),
        )

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        return replace(self, **coerce_values(overrides))


_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}


def coerce_values(raw: dict) -> dict:
    """Convert string values to the field types of ExperimentConfig."""
    out = {}
    for key, value in raw.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        default = _FIELD_TYPES[key].default
        if not isinstance(value, str):
            out[key] = value
            continue
        try:
            if isinstance(default, bool):
                out[key] = value.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                out[key] = int(value)
            elif isinstance(default, float):
                out[key] = float(value)
            else:
                out[key] = value.strip()
        except ValueError:
            raise ConfigError(f"config key {key!r}: cannot parse {value!r}") from None
    return out


def load_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = {}
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    coerce_values(raw)  # validate keys early
    return raw


# --- stages -------------------------------------------------------------------------


def get_corpus(cfg: ExperimentConfig) -> LabeledCorpus:
    if cfg.manifest:
        return load_corpus(cfg.manifest)
    return generate_corpus(SynthConfig(docs_per_level=cfg.docs_per_level, seed=cfg.synth_seed))


def train_level_lms(train_corpus: LabeledCorpus, alpha: float = 1.0) -> dict[tuple[str, int], NgramModel]:
    """Nine models: one per (level, order), each fitted on that level's training documents."""
    out = {}
    for tag, level in zip(LM_LEVELS, LEVELS):
        sents = [s for d in train_corpus.by_level(level) for s in d.sentences]
        if not sents:
            raise ValueError(f"no training documents for level {level}")
        for order in LM_ORDERS:
            out[(tag, order)] = train_ngram(sents, order, alpha, tag)
    return out


@dataclass
class PreparedData:
    train: LabeledCorpus
    test: LabeledCorpus
    resources: Resources
    names: list[str]
    train_vectors: list[FeatureVector]
    test_vectors: list[FeatureVector]
    stats: StandardizationStats
    Z_train: np.ndarray
    Z_test: np.ndarray
    y_train: np.ndarray
    y_test: np.ndarray


def prepare_data(cfg: ExperimentConfig, corpus: LabeledCorpus | None = None) -> PreparedData:
    with stage("corpus"):
        corpus = corpus if corpus is not None else get_corpus(cfg)
    with stage("split"):
        train_c, test_c = stratified_split(corpus, cfg.test_fraction, cfg.stage_seed("split"))
    registry = cfg.registry
    with stage("lm"):
        lms = train_level_lms(train_c, cfg.lm_alpha) if "LM" in registry.families else {}
    with stage("extract"):
        res = Resources.default(lms, registry)
        tr = [extract_all(d, res) for d in train_c]
        if lms and cfg.lm_folds:
            tr = _cross_fit_lm(train_c, tr, cfg)
        te = [extract_all(d, res) for d in test_c]
    names = registry.names
    with stage("standardize"):
        Z_train, stats = standardize(feature_matrix(tr, names))
        Z_test, _ = standardize(feature_matrix(te, names), stats)
    return PreparedData(
        train_c, test_c, res, names, tr, te, stats, Z_train, Z_test,
        np.asarray(train_c.labels), np.asarray(test_c.labels),
    )


def _cross_fit_lm(train_c: LabeledCorpus, vectors: list[FeatureVector], cfg: ExperimentConfig) -> list[FeatureVector]:
    """Replace training-document LM features with out-of-fold perplexities.

    A document scored by a model that saw it gets an optimistically low
    perplexity under its own level, which the test documents never get.
    """
    rng = np.random.default_rng(cfg.stage_seed("lm_folds"))
    fold = np.empty(len(train_c), dtype=int)
    for level in LEVELS:
        idx = np.array([i for i, d in enumerate(train_c) if d.label == level])
        fold[idx[rng.permutation(len(idx))]] = np.arange(len(idx)) % cfg.lm_folds
    out = list(vectors)
    for f in range(cfg.lm_folds):
        held = np.flatnonzero(fold == f)
        if len(held) == 0:
            continue
        rest = train_c.subset(np.flatnonzero(fold != f).tolist())
        try:
            lms = train_level_lms(rest, cfg.lm_alpha)
        except ValueError:
            continue  # too few documents for this fold; keep in-sample values
        for i in held:
            v = out[i]
            out[i] = FeatureVector(v.doc_id, {**v.values, **extract_lm(train_c.documents[i], lms)})
    return out


def _sub_stats(stats: StandardizationStats, idx: Sequence[int]) -> StandardizationStats:
    idx = list(idx)
    return StandardizationStats(stats.mean[idx], stats.std[idx])


def global_ranking(model: TrainedModel, k: int, Z, y, families) -> FeatureRanking:
    if model.kind == "rf":
        return rf_global_importance(model, k, Z, y, families)
    return linear_overall_ranking(model, k, families)


@dataclass
class Selection:
    mode: str
    names: list[str]
    rankings: list[FeatureRanking] = field(default_factory=list)


def select_features(mode: str, data: PreparedData, kind: str, cfg: ExperimentConfig) -> Selection:
    fam = data.resources.registry
    if mode == "all":
        return Selection(mode, list(data.names))
    spear = global_rank = None
    if mode in ("spearman", "combined"):
        spear = rank_by_spearman(data.Z_train, data.y_train, cfg.k, data.names, fam)
    if mode in ("global", "combined"):
        full = train(data.Z_train, data.y_train, cfg.train_config(kind), feature_names=data.names, stats=data.stats)
        global_rank = global_ranking(full, cfg.k, data.Z_train, data.y_train, fam)
    if mode == "spearman":
        return Selection(mode, spear.names, [spear])
    if mode == "global":
        return Selection(mode, global_rank.names, [global_rank])
    names = combine_rankings(spear, global_rank)
    scores = {e.name: e for e in (*spear.entries, *global_rank.entries)}
    seen = [scores[n] for n in names]
    combined = FeatureRanking(tuple(RankEntry(e.name, e.score, e.direction, e.family) for e in seen), "combined")
    return Selection(mode, names, [spear, global_rank, combined])


@dataclass
class ModelRun:
    kind: str
    selection: Selection
    model: TrainedModel
    predictions: list[int]
    metrics: MetricsReport

    @property
    def label(self) -> str:
        return f"{MODEL_LABELS[self.kind]} + {SELECTION_LABELS[self.selection.mode]}"


@dataclass
class RunResult:
    config: ExperimentConfig
    data: PreparedData
    runs: list[ModelRun]
    discretizers: dict[str, Discretizer] = field(default_factory=dict)
    explanations: list[LocalExplanation] = field(default_factory=list)

    @property
    def metric_rows(self) -> list[tuple[str, MetricsReport]]:
        return [(r.label, r.metrics) for r in self.runs]


def fit_run(kind: str, sel: Selection, data: PreparedData, cfg: ExperimentConfig) -> ModelRun:
    idx = [data.names.index(n) for n in sel.names]
    model = train(
        data.Z_train[:, idx], data.y_train, cfg.train_config(kind),
        feature_names=sel.names, stats=_sub_stats(data.stats, idx),
    )
    preds = [int(p) for p in predict_label(model, data.Z_test[:, idx])]
    return ModelRun(kind, sel, model, preds, compute_metrics(data.y_test.tolist(), preds))


def _pick_instances(run: ModelRun, data: PreparedData, n_per_level: int, seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    picked = []
    for level in LEVELS:
        idx = [i for i, y in enumerate(data.y_test) if y == level]
        correct = [i for i in idx if run.predictions[i] == level]
        pool = correct or idx
        if pool:
            take = min(n_per_level, len(pool))
            picked.extend(sorted(int(i) for i in rng.choice(pool, size=take, replace=False)))
    return picked


def run_experiment(cfg: ExperimentConfig, corpus: LabeledCorpus | None = None) -> RunResult:
    cfg.validate()
    data = prepare_data(cfg, corpus)
    runs = []
    for kind in cfg.model:
        for mode in cfg.selection:
            log.info("training %s with %s features", kind, mode)
            with stage("select"):
                sel = select_features(mode, data, kind, cfg)
            with stage("train"):
                runs.append(fit_run(kind, sel, data, cfg))
    result = RunResult(cfg, data, runs)
    if cfg.n_explain and runs:
        with stage("explain"):
            _explain_run(result, runs[-1])
    return result


def _explain_run(result: RunResult, target: ModelRun) -> None:
    cfg, data = result.config, result.data
    idx = [data.names.index(n) for n in target.selection.names]
    disc = fit_discretizer(data.Z_train[:, idx], target.selection.names)
    result.discretizers[target.label] = disc
    ecfg = cfg.explain_config()
    for i in _pick_instances(target, data, cfg.n_explain, cfg.stage_seed("pick")):
        vec = data.test_vectors[i]
        result.explanations.append(
            explain_instance(target.model, vec, disc, int(data.y_test[i]), ecfg, doc_id=vec.doc_id)
        )


# --- output -------------------------------------------------------------------------


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def run_rankings(result: RunResult) -> list[FeatureRanking]:
    out: list[FeatureRanking] = []
    seen = set()
    for r in result.runs:
        for rk in r.selection.rankings:
            key = (rk.source, rk.class_context, tuple(rk.names))
            if key not in seen:
                seen.add(key)
                out.append(rk)
    return out


def model_extra(result: RunResult, r: ModelRun) -> dict:
    """Metadata stored next to a model so ``explain`` can rebuild its inputs."""
    disc = result.discretizers.get(r.label)
    if disc is None:
        idx = [result.data.names.index(n) for n in r.selection.names]
        disc = fit_discretizer(result.data.Z_train[:, idx], r.selection.names)
    return {
        "selection": r.selection.mode,
        "families": sorted({f for _, f in result.config.registry.entries}),
        "discretizer": disc.to_dict(),
    }


def write_run_outputs(result: RunResult, out_dir: str | Path) -> dict[str, Path]:
    """metrics.csv, rankings.csv, models/, explanations/ and report.md."""
    from .lm import save_models
    from .models import save_model

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"metrics": out / "metrics.csv", "rankings": out / "rankings.csv", "report": out / "report.md"}
    write_metrics_csv(paths["metrics"], result.metric_rows)
    write_rankings_csv(paths["rankings"], run_rankings(result))
    if result.data.resources.lms:
        save_models(result.data.resources.lms, out / "lms.json")
    (out / "models").mkdir(exist_ok=True)
    for r in result.runs:
        extra = model_extra(result, r)
        save_model(r.model, out / "models" / f"{r.kind}_{r.selection.mode}.json", extra)
    if result.runs:
        save_model(result.runs[-1].model, out / "model.json", model_extra(result, result.runs[-1]))
    if result.explanations:
        exp_dir = out / "explanations"
        exp_dir.mkdir(exist_ok=True)
        for e in result.explanations:
            stem = f"level{e.target_class}_{_safe(e.doc_id)}"
            (exp_dir / f"{stem}.json").write_text(explanation_to_json(e) + "\n", encoding="utf-8")
            (exp_dir / f"{stem}.txt").write_text(explanation_to_text(e), encoding="utf-8")
    write_report(result, paths["report"])
    return paths


def write_report(result: RunResult, path: str | Path) -> None:
    cfg = result.config
    lines = ["# Readability experiment report", ""]
    lines.append(
        f"seed {cfg.seed}; families {'+'.join(f.upper() for f in cfg.features)}; "
        f"{len(result.data.train)} train / {len(result.data.test)} test documents"
    )
    lines += ["", "## Metrics", "", metrics_markdown(result.metric_rows), ""]
    for rk in run_rankings(result):
        if rk.source == "spearman":
            lines += ["## Top Spearman correlations", "", format_spearman_table(rk), ""]
            break
    for r in result.runs:
        if r.model.kind in ("logreg", "svm"):
            per_class = linear_global_weights(r.model, cfg.k, result.data.resources.registry)
            if all(len(p) for p in per_class):
                common = cross_reference_top(per_class, cfg.k)
                lines += [f"## {r.label}: features in every level's top {cfg.k}", "", ", ".join(common) or "(none)", ""]
    if result.explanations:
        lines += ["## Local explanations", ""]
        for e in result.explanations:
            lines.append(f"### {e.doc_id} (level {e.target_class})")
            lines.append("")
            lines.append("| Condition | Weight |")
            lines.append("|---|---:|")
            for bc, w in e.entries:
                lines.append(f"| {bc.rendered.replace('x', bc.feature)} | {w:+.4f} |")
            lines.append("")
    Path(path).write_text("\n".join(lines), encoding="utf-8")
