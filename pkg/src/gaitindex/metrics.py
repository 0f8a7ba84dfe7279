"""ROC analysis for normal/abnormal separation.

Abnormal is the positive class and a higher index means more abnormal; a
sample is predicted positive when its index is >= the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RocResult:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # first entry is +inf (nothing predicted positive)
    auc: float
    eer: float
    eer_threshold: float

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))


@dataclass
class ConfusionMetrics:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: float
    specificity: float
    precision: float
    accuracy: float
    f1: float
    undefined: list[str] = field(default_factory=list)


def _labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.dtype.kind in "US":
        if not np.isin(labels, ("normal", "abnormal")).all():
            raise ValueError("string labels must be 'normal' or 'abnormal'")
        return labels == "abnormal"
    return labels.astype(bool)


def roc(scores, labels) -> RocResult:
    """ROC curve over all distinct thresholds, trapezoidal AUC and interpolated EER.

    Equal scores form a single threshold step, so the AUC equals
    P(pos > neg) + 0.5 * P(pos == neg).
    """
    scores = np.asarray(scores, dtype=np.float64)
    pos = _labels(labels)
    if scores.shape != pos.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and the same length")
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one normal and one abnormal sample")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = pos[order]
    tp = np.cumsum(p)
    fp = np.cumsum(~p)
    # last index of each run of equal scores
    ends = np.r_[np.nonzero(s[1:] != s[:-1])[0], len(s) - 1]
    tpr = np.r_[0.0, tp[ends] / n_pos]
    fpr = np.r_[0.0, fp[ends] / n_neg]
    thresholds = np.r_[np.inf, s[ends]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))

    d = fpr + tpr - 1.0
    k = int(np.argmax(d >= 0.0))
    if d[k] == 0.0:
        eer = float(fpr[k])
    else:
        a = -d[k - 1] / (d[k] - d[k - 1])
        eer = float(fpr[k - 1] + a * (fpr[k] - fpr[k - 1]))
    best = k if abs(d[k]) <= abs(d[k - 1]) or k == 0 else k - 1
    if not np.isfinite(thresholds[best]):
        best = k
    return RocResult(fpr, tpr, thresholds, auc, eer, float(thresholds[best]))


def _ratio(num: int, den: int, name: str, undefined: list[str]) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def confusion_at(scores, labels, threshold: float) -> ConfusionMetrics:
    scores = np.asarray(scores, dtype=np.float64)
    pos = _labels(labels)
    if scores.size == 0:
        raise ValueError("no scores")
    pred = scores >= threshold
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    tn = int(np.sum(~pred & ~pos))
    fn = int(np.sum(~pred & pos))
    undefined: list[str] = []
    sens = _ratio(tp, tp + fn, "sensitivity", undefined)
    spec = _ratio(tn, tn + fp, "specificity", undefined)
    prec = _ratio(tp, tp + fp, "precision", undefined)
    acc = (tp + tn) / len(scores)
    if prec + sens > 0:
        f1 = 2 * prec * sens / (prec + sens)
    else:
        f1 = 0.0
        undefined.append("f1")
    return ConfusionMetrics(float(threshold), tp, fp, tn, fn, sens, spec, prec, acc, f1, undefined)


def evaluate(scores, labels, threshold: float | None = None) -> dict:
    """AUC, EER and confusion metrics; the operating point defaults to the EER threshold."""
    r = roc(scores, labels)
    thr = r.eer_threshold if threshold is None else threshold
    cm = confusion_at(scores, labels, thr)
    pos = _labels(labels)
    return {
        "auc": r.auc,
        "eer": r.eer,
        "eer_threshold": r.eer_threshold,
        "threshold": cm.threshold,
        "sensitivity": cm.sensitivity,
        "specificity": cm.specificity,
        "precision": cm.precision,
        "accuracy": cm.accuracy,
        "f1": cm.f1,
        "undefined": cm.undefined,
        "n_pos": int(pos.sum()),
        "n_neg": int((~pos).sum()),
    }
