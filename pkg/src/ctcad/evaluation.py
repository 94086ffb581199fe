"""Leave-one-case-out evaluation, ROC/AUC metrics, and run comparison.

Two protocols are supported through ``balance_mode``:

* ``strict`` (default): every fold fits its own normalizer, reducer, balancer
  and classifier on the remaining real cases only -- nothing derived from the
  held-out case leaks into its fold.
* ``global``: the dataset is normalized globally and balanced once up front;
  folds then iterate over every balanced row, but only real cases are scored
  and reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .gbm import GbmModel, GbmParams, gbm_predict, gbm_train
from .radiomics import NormalizerParams, apply_normalizer, fit_normalizer
from .rebalance import smote
from .reduction import PcaModel, RandomProjection, pca_fit, pca_transform, rp_generate, rp_project
from .seeding import derive_seed

MODE_STRICT = "strict"
MODE_GLOBAL = "global"

REDUCER_RPA = "rpa"
REDUCER_PCA = "pca"
REDUCER_NONE = "none"


@dataclass
class PipelineConfig:
    reducer: str = REDUCER_RPA
    reduced_dim: int = 20
    balance_mode: str = MODE_STRICT
    feature_mode: str = "features_3d"
    threshold: float = 0.5
    run_seed: int = 0
    smote_k: int = 5
    gbm: GbmParams = field(default_factory=GbmParams)
    bootstrap_samples: int = 1000

    def __post_init__(self):
        if self.reducer not in (REDUCER_RPA, REDUCER_PCA, REDUCER_NONE):
            raise ValueError(f"unknown reducer {self.reducer!r}")
        if self.balance_mode not in (MODE_STRICT, MODE_GLOBAL):
            raise ValueError(f"unknown balance_mode {self.balance_mode!r}")
        if self.reduced_dim < 1:
            raise ValueError("reduced_dim must be >= 1")
        if isinstance(self.gbm, dict):
            self.gbm = GbmParams(**self.gbm)

    def to_dict(self) -> dict:
        return {
            "reducer": self.reducer,
            "reduced_dim": self.reduced_dim,
            "balance_mode": self.balance_mode,
            "feature_mode": self.feature_mode,
            "threshold": self.threshold,
            "run_seed": self.run_seed,
            "smote_k": self.smote_k,
            "gbm": self.gbm.to_dict(),
            "bootstrap_samples": self.bootstrap_samples,
        }


@dataclass
class FeatureDataset:
    """Case-aligned feature matrix; synthetic_flags defaults to all-real."""

    case_ids: list[str]
    x: np.ndarray
    y: np.ndarray
    synthetic_flags: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.ndim != 2 or len(self.case_ids) != self.x.shape[0] or self.y.shape[0] != self.x.shape[0]:
            raise ValueError("case_ids, x and y must align")
        if self.synthetic_flags is None:
            self.synthetic_flags = np.zeros(self.x.shape[0], dtype=bool)
        else:
            self.synthetic_flags = np.asarray(self.synthetic_flags, dtype=bool)
        if len(set(self.case_ids)) != len(self.case_ids):
            raise ValueError("case_ids must be unique")


# ---------------------------------------------------------------------------
# ROC / AUC


def roc_points(scores: np.ndarray, labels: np.ndarray) -> list[tuple[float, float]]:
    """(FPR, TPR) at every distinct score threshold plus (0,0) and (1,1).

    Predicted positive means score >= threshold; thresholds sweep the distinct
    scores in descending order, so the curve is monotone non-decreasing.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need both classes to build a ROC curve")
    points = [(0.0, 0.0)]
    for thr in np.unique(scores)[::-1]:
        pred = scores >= thr
        tpr = float((pred & (labels == 1)).sum() / n_pos)
        fpr = float((pred & (labels == 0)).sum() / n_neg)
        points.append((fpr, tpr))
    points.append((1.0, 1.0))
    deduped = [points[0]]
    for pt in points[1:]:
        if pt != deduped[-1]:
            deduped.append(pt)
    return deduped


def auc_from_points(points: list[tuple[float, float]]) -> float:
    """Trapezoidal area under a ROC polyline."""
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    return auc_from_points(roc_points(scores, labels))


def accuracy_at(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pred = (scores >= threshold).astype(np.int64)
    return float((pred == labels).mean())


def _resample_with_both_classes(rng: np.random.Generator, labels: np.ndarray, max_retries: int = 100) -> np.ndarray:
    n = len(labels)
    for _ in range(max_retries):
        idx = rng.integers(0, n, size=n)
        picked = labels[idx]
        if (picked == 1).any() and (picked == 0).any():
            return idx
    raise RuntimeError("bootstrap resampling failed to draw both classes")


def bootstrap_auc_std(
    scores: np.ndarray,
    labels: np.ndarray,
    n_samples: int = 1000,
    seed: int = 0,
) -> float:
    """Std (population) of AUC over seeded case resamples with replacement."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    aucs = np.empty(n_samples)
    for b in range(n_samples):
        idx = _resample_with_both_classes(rng, labels)
        aucs[b] = auc(scores[idx], labels[idx])
    return float(aucs.std())


# ---------------------------------------------------------------------------
# Reports


@dataclass
class EvaluationReport:
    cases: list[dict]  # {case_id, label, score}
    roc: list[tuple[float, float]]
    auc: float
    auc_std: float
    accuracy: float
    config: dict
    run: dict  # {seed, fold_count, mode, reducer, timestamp}

    def to_json_dict(self) -> dict:
        return {
            "cases": self.cases,
            "roc": [[x, y] for x, y in self.roc],
            "auc": self.auc,
            "auc_std": self.auc_std,
            "accuracy": self.accuracy,
            "config": self.config,
            "run": self.run,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json_dict(cls, data: dict) -> "EvaluationReport":
        return cls(
            cases=list(data["cases"]),
            roc=[(float(x), float(y)) for x, y in data["roc"]],
            auc=float(data["auc"]),
            auc_std=float(data["auc_std"]),
            accuracy=float(data["accuracy"]),
            config=dict(data["config"]),
            run=dict(data["run"]),
        )


# ---------------------------------------------------------------------------
# Fold models


@dataclass
class FoldModel:
    """Everything fitted for one fold: normalizer, reducer, classifier."""

    normalizer: NormalizerParams
    reducer_kind: str
    reducer: RandomProjection | PcaModel | None
    gbm: GbmModel

    def score(self, x_raw: np.ndarray) -> float:
        z = apply_normalizer(self.normalizer, np.asarray(x_raw, dtype=np.float64))
        z = _reduce_vector(self.reducer_kind, self.reducer, z)
        return float(gbm_predict(self.gbm, z))

    def to_json_dict(self) -> dict:
        if self.reducer_kind == REDUCER_RPA:
            red = {"matrix": self.reducer.matrix.tolist(), "seed": self.reducer.seed}
        elif self.reducer_kind == REDUCER_PCA:
            red = {
                "mean": self.reducer.mean.tolist(),
                "components": self.reducer.components.tolist(),
            }
        else:
            red = None
        return {
            "normalizer": {
                "minima": self.normalizer.minima.tolist(),
                "maxima": self.normalizer.maxima.tolist(),
            },
            "reducer_kind": self.reducer_kind,
            "reducer": red,
            "gbm": self.gbm.to_json_dict(),
        }


def _fit_reducer(kind: str, x: np.ndarray, d_out: int, seed: int):
    if kind == REDUCER_RPA:
        return rp_generate(x.shape[1], d_out, seed)
    if kind == REDUCER_PCA:
        return pca_fit(x, min(d_out, min(x.shape[0], x.shape[1])))
    return None


def _reduce_matrix(kind: str, reducer, x: np.ndarray) -> np.ndarray:
    if kind == REDUCER_RPA:
        return rp_project(reducer, x)
    if kind == REDUCER_PCA:
        return pca_transform(reducer, x)
    return x


_reduce_vector = _reduce_matrix


def fit_fold(dataset: FeatureDataset, test_index: int, config: PipelineConfig) -> FoldModel:
    """Fit one strict-mode fold; the row at ``test_index`` is never read."""
    real = np.nonzero(~dataset.synthetic_flags)[0]
    if test_index not in real:
        raise ValueError("strict folds hold out real cases only")
    real_order = [i for i in real if i != test_index]
    fold_index = int(np.nonzero(real == test_index)[0][0])
    x_train = dataset.x[real_order]
    y_train = dataset.y[real_order]
    normalizer = fit_normalizer(x_train)
    xn = apply_normalizer(normalizer, x_train)
    reducer = _fit_reducer(
        config.reducer, xn, config.reduced_dim, derive_seed(config.run_seed, fold_index)
    )
    z = _reduce_matrix(config.reducer, reducer, xn)
    aug = smote(z, y_train, config.smote_k, derive_seed(config.run_seed, fold_index, "smote"))
    model = gbm_train(aug.rows, aug.labels, config.gbm)
    return FoldModel(normalizer=normalizer, reducer_kind=config.reducer, reducer=reducer, gbm=model)


def _loco_strict(dataset: FeatureDataset, config: PipelineConfig):
    real = np.nonzero(~dataset.synthetic_flags)[0]
    scores = np.empty(real.size)
    for pos, i in enumerate(real):
        fm = fit_fold(dataset, int(i), config)
        scores[pos] = fm.score(dataset.x[i])
    return real, scores, int(real.size)


def _loco_global(dataset: FeatureDataset, config: PipelineConfig):
    real = np.nonzero(~dataset.synthetic_flags)[0]
    x_real = dataset.x[real]
    y_real = dataset.y[real]
    normalizer = fit_normalizer(x_real)
    xn = apply_normalizer(normalizer, x_real)
    aug = smote(xn, y_real, config.smote_k, derive_seed(config.run_seed, "smote"))
    n_rows = aug.rows.shape[0]
    scores = np.empty(real.size)
    keep = np.arange(n_rows)
    for fold_index in range(n_rows):
        train = keep != fold_index
        x_train = aug.rows[train]
        y_train = aug.labels[train]
        reducer = _fit_reducer(
            config.reducer,
            x_train,
            config.reduced_dim,
            derive_seed(config.run_seed, fold_index),
        )
        z_train = _reduce_matrix(config.reducer, reducer, x_train)
        model = gbm_train(z_train, y_train, config.gbm)
        if fold_index < real.size:  # real rows come first in the augmented set
            z_test = _reduce_matrix(config.reducer, reducer, aug.rows[fold_index])
            scores[fold_index] = gbm_predict(model, z_test)
    return real, scores, n_rows


def loco_evaluate(dataset: FeatureDataset, config: PipelineConfig | None = None) -> EvaluationReport:
    """Leave-one-case-out evaluation; scores and metrics cover real cases only."""
    config = config or PipelineConfig()
    real_mask = ~dataset.synthetic_flags
    y_real_all = dataset.y[real_mask]
    if int((y_real_all == 1).sum()) < 2 or int((y_real_all == 0).sum()) < 2:
        raise ValueError("need at least 2 real cases per class")
    if config.balance_mode == MODE_STRICT:
        real, scores, fold_count = _loco_strict(dataset, config)
    else:
        real, scores, fold_count = _loco_global(dataset, config)
    labels = dataset.y[real]
    case_ids = [dataset.case_ids[i] for i in real]
    roc = roc_points(scores, labels)
    return EvaluationReport(
        cases=[
            {"case_id": cid, "label": int(lbl), "score": float(s)}
            for cid, lbl, s in zip(case_ids, labels, scores)
        ],
        roc=roc,
        auc=auc_from_points(roc),
        auc_std=bootstrap_auc_std(
            scores, labels, config.bootstrap_samples, derive_seed(config.run_seed, "bootstrap")
        ),
        accuracy=accuracy_at(scores, labels, config.threshold),
        config=config.to_dict(),
        run={
            "seed": config.run_seed,
            "fold_count": fold_count,
            "mode": config.balance_mode,
            "reducer": config.reducer,
            "timestamp": None,  # callers may stamp a copy; the library stays deterministic
        },
    )


# ---------------------------------------------------------------------------
# Run comparison


@dataclass
class ComparisonResult:
    delta_auc: float
    p_value: float
    auc_a: float
    auc_b: float
    n_resamples: int

    def to_json_dict(self) -> dict:
        return {
            "delta_auc": self.delta_auc,
            "p_value": self.p_value,
            "auc_a": self.auc_a,
            "auc_b": self.auc_b,
            "n_resamples": self.n_resamples,
        }


def compare_runs(
    report_a: EvaluationReport,
    report_b: EvaluationReport,
    n_resamples: int = 1000,
    seed: int = 0,
) -> ComparisonResult:
    """Paired bootstrap over cases: delta AUC and a sign-flip p-value.

    A resample "flips" when its delta and the observed delta have opposite
    signs (product <= 0); p = (flips + 1) / (n_resamples + 1), two-sided by
    construction since a zero observed delta flips everywhere.
    """
    ids_a = [c["case_id"] for c in report_a.cases]
    ids_b = [c["case_id"] for c in report_b.cases]
    if set(ids_a) != set(ids_b):
        raise ValueError("reports cover different case sets")
    order_b = {cid: k for k, cid in enumerate(ids_b)}
    labels = np.array([c["label"] for c in report_a.cases])
    labels_b = np.array([report_b.cases[order_b[c["case_id"]]]["label"] for c in report_a.cases])
    if not np.array_equal(labels, labels_b):
        raise ValueError("reports disagree on case labels")
    scores_a = np.array([c["score"] for c in report_a.cases])
    scores_b = np.array(
        [report_b.cases[order_b[c["case_id"]]]["score"] for c in report_a.cases]
    )
    auc_a = auc(scores_a, labels)
    auc_b = auc(scores_b, labels)
    observed = auc_a - auc_b
    rng = np.random.default_rng(seed)
    flips = 0
    for _ in range(n_resamples):
        idx = _resample_with_both_classes(rng, labels)
        delta = auc(scores_a[idx], labels[idx]) - auc(scores_b[idx], labels[idx])
        if delta * observed <= 0:
            flips += 1
    return ComparisonResult(
        delta_auc=float(observed),
        p_value=float((flips + 1) / (n_resamples + 1)),
        auc_a=float(auc_a),
        auc_b=float(auc_b),
        n_resamples=n_resamples,
    )


# ---------------------------------------------------------------------------
# CSV writers


def report_case_csv(report: EvaluationReport) -> str:
    lines = ["case_id,label,score"]
    for c in report.cases:
        lines.append(f"{c['case_id']},{c['label']},{c['score']:.9g}")
    return "\n".join(lines) + "\n"


def report_roc_csv(report: EvaluationReport) -> str:
    lines = ["fpr,tpr"]
    for x, y in report.roc:
        lines.append(f"{x:.9g},{y:.9g}")
    return "\n".join(lines) + "\n"
