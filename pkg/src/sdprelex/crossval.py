"""Document-level k-fold cross-validation of the parse -> SDP -> classify pipeline."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import clone

from .corpus import Document, RelationRecord, generate_candidates
from .metrics import EvalReport, confusion_matrix, prf1
from .sdp import SdpInstance, extract_sdp
from .treebank import DepSentence

logger = logging.getLogger(__name__)


@dataclass
class FoldPlan:
    k: int
    seed: int
    assignment: Dict[str, int] = field(default_factory=dict)

    def test_ids(self, fold: int) -> List[str]:
        return sorted(d for d, f in self.assignment.items() if f == fold)

    def fold_seed(self, fold: int) -> int:
        return int(np.random.SeedSequence([self.seed, fold]).generate_state(1)[0])


def make_fold_plan(doc_ids: Sequence[str], k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle documents with ``seed`` and deal them round-robin into ``k`` folds."""
    ids = sorted(set(doc_ids))
    if len(ids) != len(doc_ids):
        raise ValueError("duplicate document ids")
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if k > len(ids):
        raise ValueError(f"{k} folds requested but only {len(ids)} documents")
    random.Random(seed).shuffle(ids)
    return FoldPlan(k, seed, {d: i % k for i, d in enumerate(ids)})


def document_instances(doc: Document, parser=None) -> List[Tuple[RelationRecord, SdpInstance]]:
    """Candidate pairs of ``doc`` with their SDP instances.

    Sentences are parsed with ``parser`` when given; otherwise the trees
    stored in the document are used.
    """
    candidates = generate_candidates(doc)
    if not candidates:
        return []
    if doc.sentences is None:
        raise ValueError(f"{doc.doc_id}: POS-tagged sentences are required (<id>.conllu)")
    parsed: Dict[int, DepSentence] = {}
    out = []
    for rec in candidates:
        line = rec.sentence_line
        if line not in parsed:
            s = doc.sentences[line - 1]
            if parser is not None:
                s = parser.parse(s.without_tree() if s.is_parsed else s)
            elif not s.is_parsed:
                raise ValueError(f"{doc.doc_id}: line {line} has no tree and no parser was given")
            parsed[line] = s
        out.append((rec, extract_sdp(parsed[line], rec.first, rec.second, rec.label)))
    return out


@dataclass
class CrossValReport:
    folds: List[EvalReport]
    pooled: EvalReport
    plan: FoldPlan

    @property
    def fold_micro_f1(self) -> List[float]:
        return [r.micro[2] for r in self.folds]

    @property
    def mean_micro_f1(self) -> float:
        return float(np.mean(self.fold_micro_f1))

    @property
    def mean_micro_f1_excl_none(self) -> float:
        return float(np.mean([r.micro_excl_none[2] for r in self.folds]))

    def to_dict(self) -> dict:
        return {
            "k": self.plan.k,
            "seed": self.plan.seed,
            "mean_micro_f1": self.mean_micro_f1,
            "mean_micro_f1_excl_none": self.mean_micro_f1_excl_none,
            "fold_micro_f1": self.fold_micro_f1,
            "folds": [r.to_dict() for r in self.folds],
            "pooled": self.pooled.to_dict(),
        }


def crossval(documents: Sequence[Document], plan: FoldPlan, parser, estimator) -> CrossValReport:
    """Train a clone of ``estimator`` on k-1 folds, score the held-out fold, k times.

    Each fold's estimator is seeded from ``plan``, so the whole run is
    reproducible.  Scores are averaged unweighted across folds.
    """
    by_id = {d.doc_id: d for d in documents}
    if set(by_id) != set(plan.assignment):
        raise ValueError("fold plan does not cover exactly the given documents")
    instances = {d.doc_id: [inst for _, inst in document_instances(d, parser)]
                 for d in documents}
    reports = []
    for fold in range(plan.k):
        test = set(plan.test_ids(fold))
        train = [i for d in sorted(by_id) if d not in test for i in instances[d]]
        held = [i for d in sorted(test) for i in instances[d]]
        if not train:
            raise ValueError(f"fold {fold} has no training candidates")
        model = clone(estimator).set_params(random_state=plan.fold_seed(fold))
        model.fit(train)
        pred = list(model.predict(held)) if held else []
        report = prf1(confusion_matrix([i.label for i in held], pred))
        logger.info("fold %d: %d train / %d test, micro-F1 %.2f", fold, len(train), len(held),
                    report.micro[2])
        reports.append(report)
    pooled = prf1(sum(r.confusion for r in reports))
    pooled.fold_scores = [r.micro[2] for r in reports]
    return CrossValReport(reports, pooled, plan)
