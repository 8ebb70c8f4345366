"""i2b2-2010 concept/relation annotations and candidate-pair generation.

A document lives in a directory as ``<id>.txt`` (one whitespace-tokenized
sentence per line), ``<id>.con`` and optionally ``<id>.rel``.  Because POS
tags are required downstream, a document may also carry ``<id>.conllu``
with one tagged (optionally parsed) block per text line.
"""

from __future__ import annotations

import itertools
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from .errors import FormatError
from .sdp import CONCEPT_TYPES, ConceptSpan
from .treebank import DepSentence, read_conllu, write_conllu

logger = logging.getLogger(__name__)

RELATION_TYPES = ("TrIP", "TrWP", "TrCP", "TrAP", "TrNAP", "TeRP", "TeCP", "PIP")
NONE = "NONE"
LABELS = RELATION_TYPES + (NONE,)

# argument types (first, second) required by each relation
ARGUMENT_TYPES = {
    "TrIP": ("treatment", "problem"),
    "TrWP": ("treatment", "problem"),
    "TrCP": ("treatment", "problem"),
    "TrAP": ("treatment", "problem"),
    "TrNAP": ("treatment", "problem"),
    "TeRP": ("test", "problem"),
    "TeCP": ("test", "problem"),
    "PIP": ("problem", "problem"),
}
ADMISSIBLE = {("treatment", "problem"), ("test", "problem"), ("problem", "problem")}

_SPAN = r'c="(?P<{p}text>.*?)"\s+(?P<{p}l1>\d+):(?P<{p}s>\d+)\s+(?P<{p}l2>\d+):(?P<{p}e>\d+)'
CONCEPT_RE = re.compile(r"^\s*" + _SPAN.format(p="") + r'\s*\|\|\s*t="(?P<type>[^"]*)"\s*$')
RELATION_RE = re.compile(r"^\s*" + _SPAN.format(p="a") + r'\s*\|\|\s*r="(?P<label>[^"]*)"\s*\|\|\s*'
                         + _SPAN.format(p="b") + r"\s*$")


@dataclass(frozen=True)
class RelationRecord:
    first: ConceptSpan
    second: ConceptSpan
    label: str
    doc_id: str = ""

    def __post_init__(self):
        if self.label not in LABELS:
            raise FormatError(f"unknown relation label {self.label!r}")
        if self.first.sentence_line != self.second.sentence_line:
            raise FormatError(f"relation {self.label} spans lines {self.first.sentence_line} "
                              f"and {self.second.sentence_line}")
        if self.label != NONE:
            want = ARGUMENT_TYPES[self.label]
            got = (self.first.concept_type, self.second.concept_type)
            if got != want:
                raise FormatError(f"{self.label} needs arguments {want}, got {got}")

    @property
    def sentence_line(self):
        return self.first.sentence_line


@dataclass
class Document:
    doc_id: str
    lines: List[List[str]]
    concepts: List[ConceptSpan] = field(default_factory=list)
    relations: List[RelationRecord] = field(default_factory=list)
    # optional tagged/parsed sentences aligned with ``lines``
    sentences: Optional[List[DepSentence]] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        keys = set()
        for c in self.concepts:
            if not 1 <= c.sentence_line <= len(self.lines):
                raise FormatError(f"{self.doc_id}: concept {c.text!r} on missing line "
                                  f"{c.sentence_line}")
            if c.end_token >= len(self.lines[c.sentence_line - 1]):
                raise FormatError(f"{self.doc_id}: concept {c.text!r} offset {c.end_token} "
                                  f"beyond line {c.sentence_line}")
            keys.add(c.key)
        for r in self.relations:
            for arg in (r.first, r.second):
                if arg.key not in keys:
                    raise FormatError(f"{self.doc_id}: relation argument {arg.text!r} "
                                      f"{arg.key} is not a listed concept")
        if self.sentences is not None:
            if len(self.sentences) != len(self.lines):
                raise FormatError(f"{self.doc_id}: {len(self.sentences)} tagged sentences "
                                  f"for {len(self.lines)} text lines")
            for i, (s, toks) in enumerate(zip(self.sentences, self.lines), start=1):
                if len(s) != len(toks):
                    raise FormatError(f"{self.doc_id}: line {i} has {len(toks)} tokens but "
                                      f"its tagged sentence has {len(s)}")


def _span(m, prefix="", concept_type="problem"):
    l1, l2 = int(m[prefix + "l1"]), int(m[prefix + "l2"])
    if l1 != l2:
        raise FormatError(f"concept {m[prefix + 'text']!r} crosses lines {l1} and {l2}")
    s, e = int(m[prefix + "s"]), int(m[prefix + "e"])
    if s > e:
        raise FormatError(f"concept {m[prefix + 'text']!r} starts after it ends ({s} > {e})")
    return ConceptSpan(l1, s, e, concept_type, m[prefix + "text"])


def parse_concept_line(line: str) -> ConceptSpan:
    """Parse ``c="text" L:S L:E||t="type"``."""
    m = CONCEPT_RE.match(line)
    if not m:
        raise FormatError(f"not a concept annotation: {line.rstrip()!r}")
    ctype = m["type"].lower()
    if ctype not in CONCEPT_TYPES:
        raise FormatError(f"unknown concept type {m['type']!r}")
    return _span(m, concept_type=ctype)


def parse_relation_line(line: str, concepts: Optional[Dict] = None) -> RelationRecord:
    """Parse ``c="a" L:S L:E||r="label"||c="b" L:S L:E``.

    Argument types come from ``concepts`` (span key -> ConceptSpan) when
    given, otherwise from the label's argument signature.
    """
    m = RELATION_RE.match(line)
    if not m:
        raise FormatError(f"not a relation annotation: {line.rstrip()!r}")
    label = m["label"]
    if label not in RELATION_TYPES:
        raise FormatError(f"unknown relation label {label!r}")
    t1, t2 = ARGUMENT_TYPES[label]
    first, second = _span(m, "a", t1), _span(m, "b", t2)
    if first.sentence_line != second.sentence_line:
        raise FormatError(f"relation {label} links lines {first.sentence_line} and "
                          f"{second.sentence_line}")
    if concepts is not None:
        try:
            first, second = concepts[first.key], concepts[second.key]
        except KeyError as exc:
            raise FormatError(f"relation argument {exc.args[0]} is not a listed concept") from None
    return RelationRecord(first, second, label)


def _read_annotations(path, parse):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(parse(line))
            except FormatError as exc:
                raise FormatError(f"{path}: {exc}", lineno) from None
    return out


def load_document(directory, doc_id: str) -> Document:
    d = Path(directory)
    with open(d / f"{doc_id}.txt", encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh.read().split("\n")]
    while lines and not lines[-1]:
        lines.pop()
    concepts = _read_annotations(d / f"{doc_id}.con", parse_concept_line)
    by_key = {c.key: c for c in concepts}
    relations = []
    if (d / f"{doc_id}.rel").exists():
        relations = _read_annotations(d / f"{doc_id}.rel",
                                      lambda ln: parse_relation_line(ln, by_key))
    relations = [RelationRecord(r.first, r.second, r.label, doc_id) for r in relations]
    sentences = None
    if (d / f"{doc_id}.conllu").exists():
        sentences = read_conllu(d / f"{doc_id}.conllu", require_heads=False).sentences
    return Document(doc_id, lines, concepts, relations, sentences)


def load_corpus(directory) -> List[Document]:
    """All documents in ``directory`` (any ``<id>.txt`` with a ``<id>.con``), sorted by id."""
    d = Path(directory)
    ids = sorted(p.stem for p in d.glob("*.txt") if (d / f"{p.stem}.con").exists())
    return [load_document(d, i) for i in ids]


def _format_span(c: ConceptSpan):
    return f'c="{c.text}" {c.sentence_line}:{c.start_token} {c.sentence_line}:{c.end_token}'


def format_concept_line(c: ConceptSpan) -> str:
    return f'{_format_span(c)}||t="{c.concept_type}"'


def format_relation_line(r: RelationRecord) -> str:
    return f'{_format_span(r.first)}||r="{r.label}"||{_format_span(r.second)}'


def write_document(doc: Document, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{doc.doc_id}.txt").write_text("".join(" ".join(t) + "\n" for t in doc.lines),
                                         encoding="utf-8")
    (d / f"{doc.doc_id}.con").write_text("".join(format_concept_line(c) + "\n"
                                                 for c in doc.concepts), encoding="utf-8")
    (d / f"{doc.doc_id}.rel").write_text("".join(format_relation_line(r) + "\n"
                                                 for r in doc.relations), encoding="utf-8")
    if doc.sentences is not None:
        (d / f"{doc.doc_id}.conllu").write_bytes(write_conllu(doc.sentences))


def normalize_pair(a: ConceptSpan, b: ConceptSpan):
    """Order a pair as (treatment|test, problem), or by position for two problems."""
    pair = (a.concept_type, b.concept_type)
    if pair in ADMISSIBLE and a.concept_type != b.concept_type:
        return a, b
    if (b.concept_type, a.concept_type) in ADMISSIBLE and a.concept_type != b.concept_type:
        return b, a
    if pair == ("problem", "problem"):
        return (a, b) if a.start_token < b.start_token else (b, a)
    return None


def generate_candidates(doc: Document, stats: Optional[dict] = None) -> List[RelationRecord]:
    """Every admissible co-sentential concept pair, gold-labelled or NONE.

    Sentences with fewer than two concepts contribute nothing; pairs whose
    types no relation can link (e.g. treatment-treatment) are skipped and
    counted in ``stats["inadmissible"]``.
    """
    gold = {}
    for r in doc.relations:
        key = frozenset((r.first.key, r.second.key))
        if key in gold and gold[key] != r.label:
            raise FormatError(f"{doc.doc_id}: conflicting labels {gold[key]} and {r.label} for "
                              f"({r.first.text!r}, {r.second.text!r})")
        gold[key] = r.label

    by_line: Dict[int, List[ConceptSpan]] = {}
    for c in doc.concepts:
        by_line.setdefault(c.sentence_line, []).append(c)

    out, skipped = [], 0
    for line in sorted(by_line):
        concepts = sorted(set(by_line[line]), key=lambda c: (c.start_token, c.end_token))
        if len(concepts) < 2:
            continue
        for a, b in itertools.combinations(concepts, 2):
            pair = normalize_pair(a, b)
            if pair is None:
                skipped += 1
                continue
            label = gold.pop(frozenset((a.key, b.key)), NONE)
            out.append(RelationRecord(pair[0], pair[1], label, doc.doc_id))
    if gold:
        raise FormatError(f"{doc.doc_id}: {len(gold)} gold relations have no candidate pair")
    if stats is not None:
        stats["inadmissible"] = stats.get("inadmissible", 0) + skipped
        stats["candidates"] = stats.get("candidates", 0) + len(out)
    if skipped:
        logger.debug("%s: skipped %d inadmissible pairs", doc.doc_id, skipped)
    return out


# -- consolidated candidate file ---------------------------------------------

CANDIDATE_COLUMNS = ("doc_id", "line", "span1", "type1", "span2", "type2", "label")


def format_candidate(r: RelationRecord) -> str:
    a, b = r.first, r.second
    return "\t".join([r.doc_id, str(a.sentence_line), f"{a.start_token}:{a.end_token}",
                      a.concept_type, f"{b.start_token}:{b.end_token}", b.concept_type, r.label])


def parse_candidate(line: str) -> RelationRecord:
    cols = line.rstrip("\r\n").split("\t")
    if len(cols) != len(CANDIDATE_COLUMNS):
        raise FormatError(f"candidate line needs {len(CANDIDATE_COLUMNS)} columns, got {len(cols)}")
    doc_id, ln, s1, t1, s2, t2, label = cols
    try:
        line_no = int(ln)
        a0, a1 = map(int, s1.split(":"))
        b0, b1 = map(int, s2.split(":"))
    except ValueError:
        raise FormatError(f"bad candidate offsets in {line.rstrip()!r}") from None
    return RelationRecord(ConceptSpan(line_no, a0, a1, t1), ConceptSpan(line_no, b0, b1, t2),
                          label, doc_id)


def write_candidates(records: Iterable[RelationRecord], fh):
    for r in records:
        fh.write(format_candidate(r) + "\n")


def read_candidates(fh) -> List[RelationRecord]:
    out = []
    for lineno, line in enumerate(fh, start=1):
        if line.strip():
            try:
                out.append(parse_candidate(line))
            except FormatError as exc:
                raise FormatError(str(exc), lineno) from None
    return out
