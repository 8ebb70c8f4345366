"""Template-generated clinical-style corpus with gold trees and relations.

Relation labels are decided by a marker verb: a concept pair carries the
marker's relation exactly when the marker lies on the pair's dependency
path, and NONE otherwise.  A correct parse + SDP + classifier pipeline can
therefore reach perfect accuracy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

from .corpus import ARGUMENT_TYPES, NONE, Document, RelationRecord, normalize_pair, write_document
from .sdp import ConceptSpan, build_undirected_graph, shortest_path
from .treebank import DepSentence, Treebank, is_projective, write_conllu

TAGS = {
    "a": "DT", "the": "DT", "oral": "JJ", "iv": "JJ", "acute": "JJ", "mild": "JJ",
    "atrial": "JJ", "chronic": "JJ", "renal": "JJ", "severe": "JJ", "an": "DT", "this": "DT",
}

PHRASES = {
    "treatment": ["aspirin", "oral amiodarone", "iv heparin", "metoprolol", "insulin drip",
                  "lasix", "vancomycin", "nitroglycerin paste", "oral prednisone"],
    "problem": ["chest pain", "atrial fibrillation", "hypotension", "edema",
                "acute renal failure", "pneumonia", "headache", "fever", "mild anemia",
                "chronic cough", "severe sepsis", "this mass", "hematoma"],
    "test": ["a biopsy", "chest x-ray", "ct scan", "mri head", "echocardiogram",
             "blood cultures", "an ekg"],
}

MARKERS = {
    "TrIP": "improved",
    "TrWP": "worsened",
    "TrCP": "caused",
    "TrAP": "treated",
    "TrNAP": "avoided",
    "TeRP": "revealed",
    "TeCP": "evaluated",
    "PIP": "complicated",
    NONE: "preceded",
}


class _Builder:
    """Accumulates tokens; heads are positions in the builder (1-based)."""

    def __init__(self):
        self.forms, self.tags, self.heads, self.rels = [], [], [], []

    def add(self, form, tag, head=None, rel="dep"):
        self.forms.append(form)
        self.tags.append(tag)
        self.heads.append(head)
        self.rels.append(rel)
        return len(self.forms)

    def concept(self, text, ctype):
        """Add a phrase headed by its last word; returns (span, head position)."""
        words = text.split()
        start = len(self.forms)
        positions = [self.add(w, TAGS.get(w, "NN")) for w in words]
        head = positions[-1]
        for p, w in zip(positions[:-1], words[:-1]):
            self.heads[p - 1] = head
            self.rels[p - 1] = {"DT": "det", "JJ": "amod"}.get(TAGS.get(w, "NN"), "compound")
        return ConceptSpan(0, start, start + len(words) - 1, ctype, text), head

    def attach(self, pos, head, rel):
        self.heads[pos - 1] = head
        self.rels[pos - 1] = rel

    def sentence(self):
        return DepSentence.from_lists(self.forms, self.tags, self.heads, self.rels)


@dataclass
class SyntheticSentence:
    sentence: DepSentence
    concepts: List[ConceptSpan]
    marker: int = 0
    marker_label: str = NONE


def _pick(rng, ctype, exclude=()):
    return rng.choice([p for p in PHRASES[ctype] if p not in exclude])


def _binary(rng):
    label = rng.choice(list(MARKERS))
    if label == NONE:
        types = rng.choice([("treatment", "problem"), ("test", "problem"), ("problem", "problem")])
    else:
        types = ARGUMENT_TYPES[label]
    verb = MARKERS[label]
    b = _Builder()
    if types[0] != types[1] and rng.random() < 0.3:
        # passive: "<problem> was <verb> by <treatment/test> ."
        second, h2 = b.concept(_pick(rng, types[1]), types[1])
        aux = b.add("was", "VBD")
        v = b.add(verb, "VBN", 0, "root")
        by = b.add("by", "IN", v, "prep")
        first, h1 = b.concept(_pick(rng, types[0], (second.text,)), types[0])
        b.attach(h2, v, "nsubjpass")
        b.attach(aux, v, "auxpass")
        b.attach(h1, by, "pobj")
    else:
        first, h1 = b.concept(_pick(rng, types[0]), types[0])
        v = b.add(verb, "VBD", 0, "root")
        det = b.add("the", "DT") if rng.random() < 0.3 else None
        second, h2 = b.concept(_pick(rng, types[1], (first.text,)), types[1])
        b.attach(h1, v, "nsubj")
        b.attach(h2, v, "dobj")
        if det:
            b.attach(det, h2, "det")
    b.attach(b.add(".", "."), v, "punct")
    return SyntheticSentence(b.sentence(), [first, second], v, label)


def _coordinated(rng):
    label = rng.choice(list(MARKERS))
    if label == NONE:
        t0 = rng.choice(["treatment", "test", "problem"])
    else:
        t0 = ARGUMENT_TYPES[label][0]
    verb = MARKERS[label]
    b = _Builder()
    first, h1 = b.concept(_pick(rng, t0), t0)
    v = b.add(verb, "VBD", 0, "root")
    second, h2 = b.concept(_pick(rng, "problem", (first.text,)), "problem")
    cc = b.add("and", "CC")
    third, h3 = b.concept(_pick(rng, "problem", (first.text, second.text)), "problem")
    b.attach(h1, v, "nsubj")
    b.attach(h2, v, "dobj")
    b.attach(h3, h2, "conj")
    b.attach(cc, h3, "cc")
    b.attach(b.add(".", "."), v, "punct")
    return SyntheticSentence(b.sentence(), [first, second, third], v, label)


def _filler(rng):
    b = _Builder()
    kind = rng.random()
    if kind < 0.4:
        # one concept only: filtered out downstream
        ctype = rng.choice(["treatment", "test", "problem"])
        the = b.add("the", "DT")
        pt = b.add("patient", "NN")
        v = b.add("denied" if ctype == "problem" else "received", "VBD", 0, "root")
        c, h = b.concept(_pick(rng, ctype), ctype)
        b.attach(the, pt, "det")
        b.attach(pt, v, "nsubj")
        b.attach(h, v, "dobj")
        concepts = [c]
    elif kind < 0.7:
        # two treatments: no admissible pair
        c1, h1 = b.concept(_pick(rng, "treatment"), "treatment")
        cc = b.add("and", "CC")
        c2, h2 = b.concept(_pick(rng, "treatment", (c1.text,)), "treatment")
        aux = b.add("were", "VBD")
        v = b.add("continued", "VBN", 0, "root")
        b.attach(h1, v, "nsubjpass")
        b.attach(h2, h1, "conj")
        b.attach(cc, h2, "cc")
        b.attach(aux, v, "auxpass")
        concepts = [c1, c2]
    else:
        the = b.add("the", "DT")
        pt = b.add("patient", "NN")
        aux = b.add("was", "VBD")
        v = b.add("stable", "JJ", 0, "root")
        b.attach(the, pt, "det")
        b.attach(pt, v, "nsubj")
        b.attach(aux, v, "cop")
        concepts = []
    b.attach(b.add(".", "."), v, "punct")
    return SyntheticSentence(b.sentence(), concepts)


def synthetic_sentence(rng) -> SyntheticSentence:
    r = rng.random()
    if r < 0.55:
        return _binary(rng)
    if r < 0.8:
        return _coordinated(rng)
    return _filler(rng)


def gold_relations(item: SyntheticSentence, line: int, doc_id: str) -> List[RelationRecord]:
    """Relations implied by the marker rule, for a sentence placed on ``line``."""
    if item.marker_label == NONE:
        return []
    g = build_undirected_graph(item.sentence)
    concepts = [ConceptSpan(line, c.start_token, c.end_token, c.concept_type, c.text)
                for c in item.concepts]
    out = []
    for i in range(len(concepts)):
        for j in range(i + 1, len(concepts)):
            pair = normalize_pair(concepts[i], concepts[j])
            if pair is None:
                continue
            if item.marker in shortest_path(g, pair[0], pair[1], item.sentence):
                out.append(RelationRecord(pair[0], pair[1], item.marker_label, doc_id))
    return out


@dataclass
class SyntheticCorpus:
    documents: List[Document]
    treebank: Treebank = field(default_factory=Treebank)

    def write(self, directory):
        """i2b2 layout per document plus the combined gold ``treebank.conllu``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for doc in self.documents:
            write_document(doc, d)
        (d / "treebank.conllu").write_bytes(write_conllu(self.treebank))


def generate_synthetic_corpus(n_docs=20, seed=7, min_sentences=4, max_sentences=8
                              ) -> SyntheticCorpus:
    if n_docs <= 0 or min_sentences <= 0 or max_sentences < min_sentences:
        raise ValueError("corpus sizes must be positive")
    rng = random.Random(seed)
    docs, sents = [], []
    for k in range(n_docs):
        doc_id = f"doc{k:03d}"
        lines, concepts, relations, parsed = [], [], [], []
        for line in range(1, rng.randint(min_sentences, max_sentences) + 1):
            item = synthetic_sentence(rng)
            s = DepSentence(item.sentence.tokens, (f"# sent_id = {doc_id}-{line}",))
            assert is_projective(s)
            lines.append(s.forms)
            parsed.append(s)
            concepts += [ConceptSpan(line, c.start_token, c.end_token, c.concept_type, c.text)
                         for c in item.concepts]
            relations += gold_relations(item, line, doc_id)
        docs.append(Document(doc_id, lines, concepts, relations, parsed))
        sents += parsed
    return SyntheticCorpus(docs, Treebank(sents, f"synthetic(seed={seed})"))


def generate_synthetic_treebank(n_sentences=50, seed=0) -> Treebank:
    rng = random.Random(seed)
    return Treebank([synthetic_sentence(rng).sentence for _ in range(n_sentences)],
                    f"synthetic(seed={seed})")
