"""Precision / recall / F1 from a confusion matrix (rows gold, columns predicted)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .corpus import LABELS, NONE


def confusion_matrix(gold: Sequence[str], pred: Sequence[str], labels=LABELS) -> np.ndarray:
    index = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold labels but {len(pred)} predictions")
    for g, p in zip(gold, pred):
        cm[index[g], index[p]] += 1
    return cm


def _prf(tp, fp, fn):
    p = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    r = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class EvalReport:
    """Scores in percent.  ``undefined[k]`` marks a class never seen nor predicted."""

    labels: List[str]
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    undefined: np.ndarray
    micro: tuple
    micro_excl_none: tuple
    macro: tuple
    fold_scores: List[float] = field(default_factory=list)

    @property
    def micro_f1(self):
        return self.micro[2]

    def per_class(self) -> Dict[str, dict]:
        return {lab: {"precision": float(self.precision[i]), "recall": float(self.recall[i]),
                      "f1": float(self.f1[i]), "support": int(self.support[i]),
                      "undefined": bool(self.undefined[i])}
                for i, lab in enumerate(self.labels)}

    def to_dict(self) -> dict:
        agg = lambda t: dict(zip(("precision", "recall", "f1"), map(float, t)))  # noqa: E731
        return {
            "labels": list(self.labels),
            "per_class": self.per_class(),
            "micro": agg(self.micro),
            "micro_excl_none": agg(self.micro_excl_none),
            "macro": agg(self.macro),
            "confusion": self.confusion.tolist(),
            "fold_scores": [float(x) for x in self.fold_scores],
        }


def prf1(confusion, labels: Optional[Sequence[str]] = None, none_label: str = NONE) -> EvalReport:
    cm = np.asarray(confusion)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError(f"confusion matrix must be square, got shape {cm.shape}")
    if (cm < 0).any():
        raise ValueError("confusion counts must be non-negative")
    labels = list(labels) if labels is not None else list(LABELS[:cm.shape[0]])
    tp = np.diag(cm).astype(float)
    predicted = cm.sum(axis=0)
    actual = cm.sum(axis=1)
    scores = np.array([_prf(tp[i], predicted[i] - tp[i], actual[i] - tp[i])
                       for i in range(len(labels))]).reshape(-1, 3)
    undefined = (predicted == 0) & (actual == 0)

    micro = _prf(tp.sum(), (predicted - tp).sum(), (actual - tp).sum())
    keep = np.array([lab != none_label for lab in labels])
    micro_x = _prf(tp[keep].sum(), (predicted - tp)[keep].sum(), (actual - tp)[keep].sum())
    defined = ~undefined
    macro = tuple(scores[defined].mean(axis=0)) if defined.any() else (0.0, 0.0, 0.0)
    return EvalReport(labels, cm, scores[:, 0], scores[:, 1], scores[:, 2], actual, undefined,
                      micro, micro_x, macro)


def write_report(report: dict, fh, fmt: str = "json"):
    """Emit a flat report dict as JSON or as ``key<TAB>value`` lines."""
    if fmt == "json":
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    elif fmt == "tsv":
        for key, value in _flatten(report):
            fh.write(f"{key}\t{value}\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and obj and isinstance(obj[0], (list, dict)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}.{i}")
    elif isinstance(obj, list):
        yield prefix, ",".join(str(v) for v in obj)
    elif isinstance(obj, float):
        yield prefix, f"{obj:.4f}"
    else:
        yield prefix, obj
