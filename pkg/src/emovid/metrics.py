"""Challenge evaluation: per-class AP and ROC AUC, per-dimension R^2, and the
Emotion Recognition Score."""

import json
from dataclasses import dataclass, field

import numpy as np

from .data import binarize_targets
from .taxonomy import N_LABELS


def average_precision(scores, labels):
    """Step-integral AP over descending-score ranks; ties keep stable input order."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("no positive labels")
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order]
    tp = np.cumsum(ranked)
    precision = tp / np.arange(1, len(ranked) + 1)
    return float(precision[ranked == 1].sum() / n_pos)


def roc_auc(scores, labels):
    """Mann-Whitney AUC: correctly ordered positive/negative pairs, ties half-credit."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("needs at least one positive and one negative")
    from scipy.stats import rankdata
    ranks = rankdata(scores)  # average ranks handle ties with half credit
    return float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def r_squared(preds, targets):
    """Coefficient of determination, 1 - SS_res / SS_tot about the target mean."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if len(targets) < 2:
        raise ValueError("needs at least two points")
    ss_tot = ((targets - targets.mean()) ** 2).sum()
    if ss_tot == 0:
        raise ValueError("undefined R^2: constant targets")
    return float(1 - ((preds - targets) ** 2).sum() / ss_tot)


def compute_ers(m_ap, m_ra, m_r2):
    """Emotion Recognition Score: 0.5 * (mR^2 + 0.5 * (mAP + mRA))."""
    return 0.5 * (m_r2 + 0.5 * (m_ap + m_ra))


@dataclass
class MetricsReport:
    ap: np.ndarray  # (26,) NaN where skipped
    auc: np.ndarray  # (26,) NaN where skipped
    r2: np.ndarray  # (3,) NaN where skipped
    m_ap: float
    m_ra: float
    m_r2: float
    ers: float
    n_instances: int
    ap_skipped: list = field(default_factory=list)
    auc_skipped: list = field(default_factory=list)
    r2_skipped: list = field(default_factory=list)

    def to_dict(self):
        clean = lambda v: None if np.isnan(v) else float(v)
        return {
            "ap": [clean(v) for v in self.ap],
            "auc": [clean(v) for v in self.auc],
            "r2": [clean(v) for v in self.r2],
            "mAP": self.m_ap, "mRA": self.m_ra, "mR2": self.m_r2, "ers": self.ers,
            "n_instances": self.n_instances,
            "ap_skipped": self.ap_skipped, "auc_skipped": self.auc_skipped,
            "r2_skipped": self.r2_skipped,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def evaluate_arrays(cat_scores, cont_preds, cat_targets, vad_targets, threshold=0.5):
    """Metrics over aligned arrays: (n, 26) scores, (n, 3) continuous predictions,
    (n, 26) crowd scores, (n, 3) VAD targets."""
    cat_scores = np.asarray(cat_scores, dtype=np.float64)
    cont_preds = np.asarray(cont_preds, dtype=np.float64)
    binary = binarize_targets(cat_targets, threshold)
    vad_targets = np.asarray(vad_targets, dtype=np.float64)

    ap = np.full(N_LABELS, np.nan)
    auc = np.full(N_LABELS, np.nan)
    ap_skipped, auc_skipped = [], []
    for c in range(N_LABELS):
        try:
            ap[c] = average_precision(cat_scores[:, c], binary[:, c])
        except ValueError:
            ap_skipped.append(c)
        try:
            auc[c] = roc_auc(cat_scores[:, c], binary[:, c])
        except ValueError:
            auc_skipped.append(c)

    r2 = np.full(3, np.nan)
    r2_skipped = []
    for d in range(3):
        try:
            r2[d] = r_squared(cont_preds[:, d], vad_targets[:, d])
        except ValueError:
            r2_skipped.append(d)

    m_ap = float(np.nanmean(ap)) if np.any(~np.isnan(ap)) else 0.0
    m_ra = float(np.nanmean(auc)) if np.any(~np.isnan(auc)) else 0.0
    m_r2 = float(np.nanmean(r2)) if np.any(~np.isnan(r2)) else 0.0
    return MetricsReport(ap=ap, auc=auc, r2=r2, m_ap=m_ap, m_ra=m_ra, m_r2=m_r2,
                         ers=compute_ers(m_ap, m_ra, m_r2),
                         n_instances=len(cat_scores),
                         ap_skipped=ap_skipped, auc_skipped=auc_skipped,
                         r2_skipped=r2_skipped)


def evaluate(predictions, dataset, threshold=0.5):
    """Evaluate predictions against a Dataset.

    `predictions` maps (clip_id, person_id) -> object with `categorical` and
    `continuous` arrays (PredictionSet or dict-like rows).
    """
    cat, cont, cat_t, vad_t = [], [], [], []
    for inst in dataset:
        key = (inst.clip_id, inst.person_id)
        if key not in predictions:
            raise ValueError(f"missing prediction for instance {key}")
        p = predictions[key]
        cat.append(np.asarray(p.categorical if hasattr(p, "categorical")
                              else p["categorical"], dtype=np.float64))
        cont.append(np.asarray(p.continuous if hasattr(p, "continuous")
                               else p["continuous"], dtype=np.float64))
        cat_t.append(inst.categorical)
        vad_t.append(inst.vad)
    return evaluate_arrays(np.stack(cat), np.stack(cont), np.stack(cat_t),
                           np.stack(vad_t), threshold)
