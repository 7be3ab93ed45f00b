"""Local surrogate explanations with quartile boundary conditions.

An instance is explained by perturbing it bin-wise in z-space, weighting
the perturbations by closeness in the binary "same bin as the instance"
representation, and fitting a weighted ridge model to the classifier's
probability for one class. The largest coefficients are reported against
the instance's own quartile interval for each feature.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import FeatureVector
from .models import TrainedModel, predict_proba

__all__ = [
    "Discretizer",
    "BoundaryCondition",
    "LocalExplanation",
    "ExplainConfig",
    "Neighborhood",
    "fit_discretizer",
    "assign_bin",
    "render_boundary",
    "weighted_ridge",
    "sample_neighborhood",
    "explain_instance",
    "explanation_to_json",
    "explanation_to_text",
]

N_BINS = 4


@dataclass(frozen=True)
class Discretizer:
    """Per-feature quartile cuts plus the training range used for sampling."""

    feature_names: tuple[str, ...]
    cuts: np.ndarray  # n_features x 3, nondecreasing rows
    mins: np.ndarray
    maxs: np.ndarray

    def index(self, feature: str) -> int:
        try:
            return self.feature_names.index(feature)
        except ValueError:
            raise KeyError(f"discretizer has no feature {feature!r}") from None

    def is_constant(self, feature: str) -> bool:
        j = self.index(feature)
        return self.mins[j] == self.maxs[j]

    def bin_range(self, j: int, b: int) -> tuple[float, float]:
        """Closed sampling range for bin ``b`` of feature ``j``; empty if lo > hi."""
        lo = self.mins[j] if b == 0 else self.cuts[j, b - 1]
        hi = self.maxs[j] if b == N_BINS - 1 else self.cuts[j, b]
        return float(lo), float(hi)

    def nonempty_bins(self, j: int) -> list[int]:
        out = [0]  # bin 0 always holds the training minimum
        for b in range(1, N_BINS):
            lo, hi = self.bin_range(j, b)
            if hi > lo:
                out.append(b)
        return out

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "cuts": self.cuts.tolist(),
            "mins": self.mins.tolist(),
            "maxs": self.maxs.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "Discretizer":
        return cls(
            tuple(d["feature_names"]),
            np.asarray(d["cuts"], dtype=float).reshape(-1, 3),
            np.asarray(d["mins"], dtype=float),
            np.asarray(d["maxs"], dtype=float),
        )


@dataclass(frozen=True)
class BoundaryCondition:
    feature: str
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"empty interval for {self.feature}: ({self.lower}, {self.upper}]")

    def contains(self, value: float) -> bool:
        return self.lower < value <= self.upper

    @property
    def rendered(self) -> str:
        if math.isinf(self.lower):
            return f"x <= {_fmt(self.upper)}"
        if math.isinf(self.upper):
            return f"x > {_fmt(self.lower)}"
        return f"{_fmt(self.lower)} < x <= {_fmt(self.upper)}"

    def __str__(self):
        return f"{self.feature}: {self.rendered}"


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass(frozen=True)
class ExplainConfig:
    n_samples: int = 5000
    kernel_width: float | None = None  # default 0.75 * sqrt(n_features)
    k: int = 10
    ridge_lambda: float = 1.0
    seed: int = 42


@dataclass(frozen=True)
class LocalExplanation:
    doc_id: str
    target_class: int
    entries: tuple[tuple[BoundaryCondition, float], ...]
    intercept: float
    kernel_width: float
    seed: int
    proba: tuple[float, ...] = ()
    classes: tuple[int, ...] = ()
    instance_z: tuple[float, ...] = ()


@dataclass(frozen=True)
class Neighborhood:
    """Perturbation sample around one instance; row 0 is the instance itself."""

    values: np.ndarray  # z-space samples
    binary: np.ndarray  # 1 where the sample's bin equals the instance's bin
    weights: np.ndarray
    kernel_width: float
    instance_bins: np.ndarray


def fit_discretizer(X_train, feature_names: Sequence[str] | None = None) -> Discretizer:
    """Quartile cuts per column via linearly interpolated quantiles."""
    X = np.asarray(X_train, dtype=float)
    if X.ndim != 2 or X.shape[0] < 4:
        raise ValueError("fit_discretizer needs a matrix with at least 4 rows")
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(X.shape[1])]
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match X columns")
    cuts = np.percentile(X, [25, 50, 75], axis=0).T
    cuts = np.maximum.accumulate(cuts, axis=1)
    return Discretizer(tuple(feature_names), cuts, X.min(axis=0), X.max(axis=0))


def _bin_of(cuts: np.ndarray, value: float) -> int:
    return bisect_left(list(cuts), value)


def assign_bin(d: Discretizer, feature: str, value: float) -> int:
    """0: v <= q25, 1: q25 < v <= q50, 2: q50 < v <= q75, 3: v > q75."""
    return _bin_of(d.cuts[d.index(feature)], float(value))


def render_boundary(d: Discretizer, feature: str, bin_index: int) -> BoundaryCondition:
    if not 0 <= bin_index < N_BINS:
        raise ValueError(f"bin index must be in 0..{N_BINS - 1}, got {bin_index}")
    c = d.cuts[d.index(feature)]
    lower = -math.inf if bin_index == 0 else float(c[bin_index - 1])
    upper = math.inf if bin_index == N_BINS - 1 else float(c[bin_index])
    return BoundaryCondition(feature, lower, upper)


def weighted_ridge(Z, targets, sample_weights, lam: float, fit_intercept: bool = True) -> tuple[np.ndarray, float]:
    """Solve ``(Z'WZ + lam*I) beta = Z'Wy``; the intercept is never penalized.

    Returns ``(coefficients, intercept)``; the intercept is 0 when not fitted.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(targets, dtype=float)
    w = np.asarray(sample_weights, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != y.shape[0] or w.shape != y.shape:
        raise ValueError("Z, targets and sample_weights disagree in length")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if np.any(w < 0):
        raise ValueError("sample weights must be nonnegative")
    A = np.column_stack([Z, np.ones(len(y))]) if fit_intercept else Z
    penalty = np.full(A.shape[1], float(lam))
    if fit_intercept:
        penalty[-1] = 0.0
    AtW = A.T * w
    lhs = AtW @ A + np.diag(penalty)
    rhs = AtW @ y
    if lam == 0 and np.linalg.matrix_rank(lhs) < lhs.shape[0]:
        raise np.linalg.LinAlgError("singular weighted least-squares system (lambda = 0)")
    beta = np.linalg.solve(lhs, rhs)
    if fit_intercept:
        return beta[:-1], float(beta[-1])
    return beta, 0.0


def sample_neighborhood(z_instance, d: Discretizer, cfg: ExplainConfig) -> Neighborhood:
    """Draw ``cfg.n_samples`` rows: the instance, then bin-wise random perturbations."""
    if cfg.n_samples < 10:
        raise ValueError("n_samples must be at least 10")
    z = np.asarray(z_instance, dtype=float)
    m = len(d.feature_names)
    if z.shape != (m,):
        raise ValueError(f"instance has {z.shape} values, discretizer expects {m}")
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_samples
    inst_bins = np.array([_bin_of(d.cuts[j], z[j]) for j in range(m)])
    values = np.empty((n, m))
    bins = np.empty((n, m), dtype=int)
    values[0] = z
    bins[0] = inst_bins
    for j in range(m):
        choices = np.asarray(d.nonempty_bins(j))
        picked = choices[rng.integers(0, len(choices), size=n - 1)]
        u = rng.random(n - 1)
        lo = np.empty(n - 1)
        hi = np.empty(n - 1)
        for b in choices:
            sel = picked == b
            lo[sel], hi[sel] = d.bin_range(j, b)
        # bin 0 is the closed range [min, q25]; others are (lo, hi]
        values[1:, j] = np.where(picked == 0, lo + u * (hi - lo), hi - u * (hi - lo))
        bins[1:, j] = picked
    binary = (bins == inst_bins).astype(float)
    width = cfg.kernel_width if cfg.kernel_width is not None else 0.75 * math.sqrt(m)
    dist2 = np.sum((binary - 1.0) ** 2, axis=1)
    weights = np.exp(-dist2 / width**2)
    return Neighborhood(values, binary, weights, float(width), inst_bins)


def explain_instance(
    model: TrainedModel,
    x,
    d: Discretizer,
    target_class: int,
    cfg: ExplainConfig | None = None,
    doc_id: str | None = None,
) -> LocalExplanation:
    """Fit the local surrogate for ``target_class`` and keep the top-K features.

    ``x`` is a FeatureVector / mapping of raw values, or an array already in
    the model's z-space.
    """
    cfg = cfg or ExplainConfig()
    if tuple(d.feature_names) != tuple(model.feature_names):
        raise ValueError("model and discretizer were fitted on different features")
    if target_class not in model.classes:
        raise ValueError(f"class {target_class} not among model classes {model.classes}")
    if isinstance(x, FeatureVector):
        doc_id = doc_id or x.doc_id
        x = x.values
    if isinstance(x, dict):
        z = model.stats.apply(np.array([float(x[n]) for n in model.feature_names]))
    else:
        z = np.asarray(x, dtype=float)
    hood = sample_neighborhood(z, d, cfg)
    ci = model.classes.index(target_class)
    targets = model.proba_z(hood.values)[:, ci]
    coef, intercept = weighted_ridge(hood.binary, targets, hood.weights, cfg.ridge_lambda, fit_intercept=True)
    order = sorted(range(len(coef)), key=lambda j: -abs(coef[j]))[: cfg.k]
    entries = tuple(
        (render_boundary(d, d.feature_names[j], int(hood.instance_bins[j])), float(coef[j])) for j in order
    )
    proba = predict_proba(model, z)
    return LocalExplanation(
        doc_id=doc_id or "",
        target_class=int(target_class),
        entries=entries,
        intercept=intercept,
        kernel_width=hood.kernel_width,
        seed=cfg.seed,
        proba=tuple(float(p) for p in proba),
        classes=tuple(model.classes),
        instance_z=tuple(float(v) for v in z),
    )


# --- export -------------------------------------------------------------------------


def _num(v: float):
    return None if math.isinf(v) else v


def explanation_to_json(exp: LocalExplanation) -> str:
    payload = {
        "doc_id": exp.doc_id,
        "target_class": exp.target_class,
        "classes": list(exp.classes),
        "proba": list(exp.proba),
        "intercept": exp.intercept,
        "kernel_width": exp.kernel_width,
        "seed": exp.seed,
        "conditions": [
            {
                "feature": bc.feature,
                "lower": _num(bc.lower),
                "upper": _num(bc.upper),
                "condition": bc.rendered.replace("x", bc.feature),
                "weight": w,
            }
            for bc, w in exp.entries
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def explanation_to_text(exp: LocalExplanation, bar_width: int = 30) -> str:
    """Plain-text bars: class probabilities, then one signed bar per condition."""
    lines = [f"document {exp.doc_id}  explained class {exp.target_class}", "", "prediction probabilities"]
    for cls, p in zip(exp.classes, exp.proba):
        lines.append(f"  level {cls}  {'#' * round(p * bar_width):<{bar_width}} {p:.2f}")
    lines += ["", f"top conditions for level {exp.target_class}"]
    scale = max((abs(w) for _, w in exp.entries), default=0.0) or 1.0
    label_w = max((len(str(bc)) for bc, _ in exp.entries), default=0)
    for bc, w in exp.entries:
        tag = "green" if w > 0 else "red"
        bar = ("+" if w > 0 else "-") * max(1, round(abs(w) / scale * bar_width))
        lines.append(f"  {str(bc):<{label_w}}  {w:+.4f} [{tag}] {bar}")
    return "\n".join(lines) + "\n"
