import io
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from sdprelex.corpus import (LABELS, NONE, Document, RelationRecord, format_concept_line,
                             format_relation_line, generate_candidates, load_corpus,
                             load_document, parse_candidate, parse_concept_line,
                             parse_relation_line, read_candidates, write_candidates,
                             write_document)
from sdprelex.errors import FormatError
from sdprelex.sdp import ConceptSpan

DATA = Path(__file__).parent / "data" / "i2b2"
CONCEPT_75 = 'c="burst of atrial fibrillation" 75:3 75:6||t="problem"'
RELATION_75 = ('c="a amiodarone gtt" 75:11 75:13||r="TrAP"||'
               'c="burst of atrial fibrillation" 75:3 75:6')


def test_table_concept_line():
    c = parse_concept_line(CONCEPT_75)
    assert (c.sentence_line, c.start_token, c.end_token, c.concept_type) == (75, 3, 6, "problem")
    assert c.text == "burst of atrial fibrillation"
    assert format_concept_line(c) == CONCEPT_75


def test_table_relation_line():
    r = parse_relation_line(RELATION_75)
    assert r.label == "TrAP"
    assert (r.first.sentence_line, r.first.start_token, r.first.end_token) == (75, 11, 13)
    assert r.first.concept_type == "treatment"
    assert (r.second.start_token, r.second.end_token, r.second.concept_type) == (3, 6, "problem")
    assert format_relation_line(r) == RELATION_75


def test_single_token_concept():
    c = parse_concept_line('c="x" 1:0 1:0||t="test"')
    assert c.start_token == c.end_token == 0 and list(c.token_indices()) == [1]


@pytest.mark.parametrize("line", [
    'c="x" 75:3 76:6||t="problem"',
    'c="x" 75:6 75:3||t="problem"',
    'c="x" 75:3 75:6||t="disease"',
    'c="x" 75:3||t="problem"',
])
def test_bad_concept_lines(line):
    with pytest.raises(FormatError):
        parse_concept_line(line)


@pytest.mark.parametrize("line", [
    RELATION_75.replace("TrAP", "XYZ"),
    RELATION_75.replace("75:3 75:6", "76:3 76:6"),
    'c="a" 1:0 1:0||r="TrAP"',
])
def test_bad_relation_lines(line):
    with pytest.raises(FormatError):
        parse_relation_line(line)


def test_relation_argument_types_checked():
    t, p = ConceptSpan(1, 0, 0, "test"), ConceptSpan(1, 2, 2, "problem")
    RelationRecord(t, p, "TeRP")
    with pytest.raises(FormatError):
        RelationRecord(t, p, "TrAP")
    with pytest.raises(FormatError):
        RelationRecord(t, p, "MAYBE")
    assert len(LABELS) == 9 and LABELS[-1] == NONE


# the error-analysis sentence: one test and four problems
EXAMPLE3 = ("# Neurologic - The patient was seen by the Neurology consult service and underwent "
            "MRI head which revealed lesions suspicious for metastases , possible hemorrhages , "
            "and findings consistent with hypoxic brain injury .").split()


def _example3_doc():
    def at(*words):
        start = EXAMPLE3.index(words[0])
        assert EXAMPLE3[start:start + len(words)] == list(words)
        return start, start + len(words) - 1

    mri = ConceptSpan(1, *at("MRI", "head"), "test", "mri head")
    lesions = ConceptSpan(1, *at("lesions"), "problem", "lesions")
    mets = ConceptSpan(1, *at("metastases"), "problem", "metastases")
    hem = ConceptSpan(1, *at("hemorrhages"), "problem", "hemorrhages")
    hyp = ConceptSpan(1, *at("hypoxic", "brain", "injury"), "problem", "hypoxic brain injury")
    rels = [RelationRecord(lesions, mets, "PIP")] + \
           [RelationRecord(mri, p, "TeRP") for p in (hyp, hem, mets, lesions)]
    return Document("ex3", [EXAMPLE3], [mri, lesions, mets, hem, hyp], rels)


def test_example_sentence_candidates():
    cands = generate_candidates(_example3_doc())
    assert len(cands) == 10
    labels = sorted(c.label for c in cands)
    assert labels.count(NONE) == 5 and labels.count("TeRP") == 4 and labels.count("PIP") == 1
    for c in cands:
        if c.first.concept_type == "test":
            assert c.second.concept_type == "problem"
        else:
            assert c.first.start_token < c.second.start_token


def test_small_sentences_contribute_nothing():
    lines = [["aspirin", "helps"], ["aspirin", "and", "heparin"]]
    concepts = [ConceptSpan(1, 0, 0, "treatment"),
                ConceptSpan(2, 0, 0, "treatment"), ConceptSpan(2, 2, 2, "treatment")]
    stats = {}
    assert generate_candidates(Document("d", lines, concepts), stats) == []
    assert stats["inadmissible"] == 1


def test_conflicting_gold_labels():
    lines = [["ct", "shows", "mass"]]
    t, p = ConceptSpan(1, 0, 0, "test"), ConceptSpan(1, 2, 2, "problem")
    doc = Document("d", lines, [t, p], [RelationRecord(t, p, "TeRP"), RelationRecord(t, p, "TeCP")])
    with pytest.raises(FormatError, match="conflicting"):
        generate_candidates(doc)


def test_relation_to_unknown_concept_rejected():
    t, p = ConceptSpan(1, 0, 0, "test"), ConceptSpan(1, 2, 2, "problem")
    with pytest.raises(FormatError):
        Document("d", [["ct", "shows", "mass"]], [t], [RelationRecord(t, p, "TeRP")])


TYPES = ("problem", "treatment", "test")


@settings(max_examples=150, deadline=None)
@given(st.lists(st.sampled_from(TYPES), min_size=0, max_size=8), st.integers(0, 10**6))
def test_candidate_count_formula_and_no_drops(types, seed):
    rng = random.Random(seed)
    words = [f"w{i}" for i in range(len(types))]
    concepts = [ConceptSpan(1, i, i, t) for i, t in enumerate(types)]
    rels = []
    for a in concepts:
        for b in concepts:
            if a.start_token < b.start_token and rng.random() < 0.3:
                if (a.concept_type, b.concept_type) == ("test", "problem"):
                    rels.append(RelationRecord(a, b, "TeRP"))
                elif (a.concept_type, b.concept_type) == ("problem", "treatment"):
                    rels.append(RelationRecord(b, a, "TrAP"))
                elif (a.concept_type, b.concept_type) == ("problem", "problem"):
                    rels.append(RelationRecord(b, a, "PIP"))  # later-first order is accepted
    doc = Document("d", [words or ["x"]], concepts, rels)
    cands = generate_candidates(doc)
    p, t, e = (types.count(k) for k in TYPES)
    assert len(cands) == p * t + p * e + p * (p - 1) // 2
    labelled = {(frozenset((c.first.key, c.second.key)), c.label) for c in cands
                if c.label != NONE}
    assert labelled == {(frozenset((r.first.key, r.second.key)), r.label) for r in rels}
    shuffled = Document("d", [words or ["x"]], concepts[::-1], rels[::-1])
    assert sorted(map(repr, generate_candidates(shuffled))) == sorted(map(repr, cands))


def test_golden_files_round_trip(tmp_path):
    doc = load_document(DATA, "record-75")
    assert len(doc.concepts) == 4 and len(doc.relations) == 2
    assert doc.sentences is None
    write_document(doc, tmp_path)
    for ext in (".txt", ".con", ".rel"):
        assert (tmp_path / f"record-75{ext}").read_bytes() == \
               (DATA / f"record-75{ext}").read_bytes()
    assert [d.doc_id for d in load_corpus(DATA)] == ["record-75"]


def test_annotation_errors_name_file_and_line(tmp_path):
    (tmp_path / "x.txt").write_text("a b c\n")
    (tmp_path / "x.con").write_text('c="a" 1:0 1:0||t="test"\nc="b" 1:1 1:9||t="nope"\n')
    with pytest.raises(FormatError, match=r"x\.con.*|line 2"):
        load_document(tmp_path, "x")


def test_offsets_beyond_line_rejected(tmp_path):
    (tmp_path / "x.txt").write_text("a b c\n")
    (tmp_path / "x.con").write_text('c="b" 1:1 1:9||t="test"\n')
    with pytest.raises(FormatError, match="beyond"):
        load_document(tmp_path, "x")


def test_candidate_tsv_round_trip():
    cands = generate_candidates(_example3_doc())
    buf = io.StringIO()
    write_candidates(cands, buf)
    buf.seek(0)
    back = read_candidates(buf)
    assert [(c.first.key, c.second.key, c.label) for c in back] == \
           [(c.first.key, c.second.key, c.label) for c in cands]
    with pytest.raises(FormatError):
        parse_candidate("too\tfew")
