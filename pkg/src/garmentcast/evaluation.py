"""Metrics, the new-item chronological split, and multi-criteria model ranking.

Binary accuracy is the agreement of 0.5-thresholded predictions and truths
on normalized popularity; that definition travels inside every report.  AUC
uses the rank statistic with ties counted half.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BA_DEFINITION = "agreement of 0.5-thresholded normalized popularity"


class MetricError(ValueError):
    pass


class SplitError(ValueError):
    pass


# ---- regression ------------------------------------------------------------------


def _pair(pred, truth):
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise MetricError(f"pred has {p.shape[0]} values, truth {t.shape[0]}")
    if p.size == 0:
        raise MetricError("empty inputs")
    return p, t


def mae(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.abs(p - t).mean())


def wape(pred, truth) -> float:
    """Sum of absolute errors over sum of truths; undefined when truths sum to 0."""
    p, t = _pair(pred, truth)
    denom = t.sum()
    if denom <= 0.0:
        raise MetricError(f"wape undefined: truths sum to {denom}")
    return float(np.abs(p - t).sum() / denom)


def pcc(pred, truth) -> float:
    p, t = _pair(pred, truth)
    if p.size < 2:
        raise MetricError("pcc needs at least 2 samples")
    if np.ptp(t) == 0.0:
        raise MetricError("pcc undefined: truth has zero variance")
    if np.ptp(p) == 0.0:
        raise MetricError("pcc undefined: pred has zero variance")
    return float(np.corrcoef(p, t)[0, 1])


def binary_accuracy(pred, truth, threshold: float = 0.5) -> float:
    p, t = _pair(pred, truth)
    return float(((p >= threshold) == (t >= threshold)).mean())


@dataclass
class RegressionMetrics:
    mae: float
    wape: float
    pcc: float
    binary_accuracy: float


def regression_metrics(pred, truth) -> RegressionMetrics:
    return RegressionMetrics(mae(pred, truth), wape(pred, truth), pcc(pred, truth),
                             binary_accuracy(pred, truth))


# ---- classification --------------------------------------------------------------


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    s, y = _pair(scores, labels)
    return float(((s >= threshold) == (y >= 0.5)).mean())


def auc(scores, labels) -> float:
    """Rank-statistic AUC; tied score pairs count half."""
    s, y = _pair(scores, labels)
    pos = y >= 0.5
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("auc undefined: labels contain a single class")
    ranks = _average_ranks(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class ClassificationMetrics:
    accuracy: float
    auc: float


def classification_metrics(scores, labels) -> ClassificationMetrics:
    return ClassificationMetrics(accuracy(scores, labels), auc(scores, labels))


@dataclass
class MetricReport:
    """Bundle of whatever metrics a run produced, with provenance."""

    sample_count: int
    dataset_id: str = ""
    model_version: str = ""
    mae: float | None = None
    wape: float | None = None
    pcc: float | None = None
    binary_accuracy: float | None = None
    accuracy: float | None = None
    auc: float | None = None
    notes: str = BA_DEFINITION

    def to_dict(self) -> dict:
        out = {"sample_count": self.sample_count, "dataset_id": self.dataset_id,
               "model_version": self.model_version, "notes": self.notes}
        for name in ("mae", "wape", "pcc", "binary_accuracy", "accuracy", "auc"):
            value = getattr(self, name)
            if value is not None:
                out[name] = float(value)
        return out


# ---- chronological split ---------------------------------------------------------


@dataclass
class Split:
    train: list
    validation: list
    test: list

    def item_ids(self, part: str) -> set:
        return {r.item_id for r in getattr(self, part)}


def chronological_split(records) -> Split:
    """New-item protocol: multi-record items train; singletons split by time.

    Singleton items are ordered chronologically; the earlier half becomes
    validation, the later half test.  No item id crosses partitions.
    """
    records = list(records)
    if not records:
        raise SplitError("no records")
    by_item: dict = {}
    for r in records:
        by_item.setdefault(r.item_id, []).append(r)
    train, singles = [], []
    for item_id, grp in by_item.items():
        if len(grp) >= 2:
            train.extend(grp)
        else:
            singles.append(grp[0])
    if not singles:
        raise SplitError("protocol unsatisfiable: no single-record items for val/test")
    if not train:
        raise SplitError("protocol unsatisfiable: every item is a singleton, train is empty")
    singles.sort(key=lambda r: (r.timestamp, r.item_id))
    half = len(singles) // 2
    train.sort(key=lambda r: (r.timestamp, r.item_id))
    return Split(train=train, validation=singles[:half], test=singles[half:])


# ---- TOPSIS ----------------------------------------------------------------------


@dataclass
class CriteriaMatrix:
    models: list[str]
    criteria: list[tuple[str, str]]     # (metric name, "benefit" | "cost")
    values: np.ndarray                  # [models, criteria]
    weights: np.ndarray | None = None   # defaults to equal

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n_rows, n_cols = len(self.models), len(self.criteria)
        if self.values.shape != (n_rows, n_cols):
            raise MetricError(f"values shape {self.values.shape} != ({n_rows}, {n_cols})")
        if n_rows < 2 or n_cols < 1:
            raise MetricError("need at least 2 models and 1 criterion")
        if len(set(self.models)) != n_rows:
            raise MetricError("duplicate model names")
        if not np.all(np.isfinite(self.values)):
            raise MetricError("criteria values must be finite")
        for name, direction in self.criteria:
            if direction not in ("benefit", "cost"):
                raise MetricError(f"criterion {name!r} has direction {direction!r}; "
                                  "expected benefit or cost")
        if self.weights is None:
            self.weights = np.full(n_cols, 1.0 / n_cols)
        else:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != (n_cols,):
                raise MetricError(f"weights shape {self.weights.shape} != ({n_cols},)")
            if abs(self.weights.sum() - 1.0) > 1e-9 or np.any(self.weights < 0):
                raise MetricError("weights must be non-negative and sum to 1")


@dataclass
class TopsisResult:
    models: list[str]           # input row order
    closeness: np.ndarray       # aligned with models
    ranking: list[str]          # best first
    matrix: CriteriaMatrix = field(repr=False, default=None)

    def rank_of(self, model: str) -> int:
        return self.ranking.index(model) + 1

    def to_dict(self) -> dict:
        return {
            "criteria": [name for name, _ in self.matrix.criteria],
            "directions": [d for _, d in self.matrix.criteria],
            "weights": [float(w) for w in self.matrix.weights],
            "closeness": [[m, float(c)] for m, c in
                          sorted(zip(self.models, self.closeness),
                                 key=lambda mc: (-mc[1], mc[0]))],
            "ranking": list(self.ranking),
        }


def topsis_rank(matrix: CriteriaMatrix) -> TopsisResult:
    """Closeness to the ideal solution; ties broken alphabetically."""
    values = matrix.values
    norms = np.sqrt((values ** 2).sum(axis=0))
    for j, ((name, _), norm) in enumerate(zip(matrix.criteria, norms)):
        if norm == 0.0:
            raise MetricError(f"criterion {name!r} is all-zero; cannot vector-normalize")
    weighted = values / norms * matrix.weights
    ideal = np.empty(weighted.shape[1])
    anti = np.empty(weighted.shape[1])
    for j, (_, direction) in enumerate(matrix.criteria):
        col = weighted[:, j]
        if direction == "benefit":
            ideal[j], anti[j] = col.max(), col.min()
        else:
            ideal[j], anti[j] = col.min(), col.max()
    d_plus = np.sqrt(((weighted - ideal) ** 2).sum(axis=1))
    d_minus = np.sqrt(((weighted - anti) ** 2).sum(axis=1))
    total = d_plus + d_minus
    closeness = np.where(total > 0.0, d_minus / np.where(total > 0, total, 1.0), 0.5)
    order = sorted(range(len(matrix.models)),
                   key=lambda i: (-closeness[i], matrix.models[i]))
    ranking = [matrix.models[i] for i in order]
    return TopsisResult(models=list(matrix.models), closeness=closeness,
                        ranking=ranking, matrix=matrix)
