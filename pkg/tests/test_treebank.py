import io
from pathlib import Path

import pytest
from hypothesis import given, settings

from conftest import any_trees, crossing_projective, projective_sentences, sentence_from_heads
from sdprelex.errors import FormatError, TreeError
from sdprelex.treebank import (DepSentence, Token, Treebank, check_tree, is_projective,
                               read_conllu, write_conllu)

DATA = Path(__file__).parent / "data"
HE_SLEEPS = (b"1\tHe\t_\tPRP\t_\t_\t2\tnsubj\t_\t_\n"
             b"2\tsleeps\t_\tVBZ\t_\t_\t0\troot\t_\t_\n")


def test_minimal_two_token_sentence():
    tb = read_conllu(HE_SLEEPS)
    assert len(tb) == 1
    s = tb[0]
    assert s.forms == ["He", "sleeps"]
    assert s.tags == ["PRP", "VBZ"]
    assert s.heads == [2, 0]
    assert s.deprels == ["nsubj", "root"]


def test_out_of_range_head_is_structural_error():
    text = (b"# sent_id = s3\n"
            b"1\ta\t_\tDT\t_\t_\t2\tdet\t_\t_\n"
            b"2\tb\t_\tNN\t_\t_\t0\troot\t_\t_\n"
            b"3\tc\t_\tNN\t_\t_\t5\tdep\t_\t_\n")
    with pytest.raises(TreeError, match="s3"):
        read_conllu(text)


def test_empty_input():
    assert len(read_conllu(b"")) == 0
    assert write_conllu(Treebank([])) == b""


def test_round_trip_token_fields():
    tb = read_conllu(HE_SLEEPS)
    again = read_conllu(write_conllu(tb))
    assert [(t.index, t.form, t.pos, t.head, t.deprel) for t in again[0]] == \
           [(t.index, t.form, t.pos, t.head, t.deprel) for t in tb[0]]
    assert write_conllu(again) == HE_SLEEPS + b"\n"


def test_comment_passthrough():
    out = write_conllu(read_conllu(b"# sent_id = 7\n" + HE_SLEEPS))
    assert out.startswith(b"# sent_id = 7\n1\tHe\t")


def test_golden_file_byte_equal():
    raw = (DATA / "golden.conllu").read_bytes()
    tb = read_conllu(DATA / "golden.conllu")
    assert len(tb) == 2
    assert tb[0].sent_id == "7"
    assert write_conllu(tb) == raw


def test_xpos_fallback_keeps_upos_empty():
    tb = read_conllu(DATA / "golden.conllu")
    s = tb[1]
    assert s.tags == ["JJ", "NNS", "VBD", "ADV", "PUNCT"]
    assert s.forms[0] == "Naïve"


def test_multiword_and_empty_nodes_skipped():
    text = (b"1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
            b"1\tdo\t_\tAUX\t_\t_\t0\troot\t_\t_\n"
            b"2\tn't\t_\tPART\t_\t_\t1\tadvmod\t_\t_\n"
            b"2.1\tx\t_\tX\t_\t_\t_\t_\t_\t_\n")
    s = read_conllu(text)[0]
    assert s.forms == ["do", "n't"]


def test_text_stream_and_path(tmp_path):
    p = tmp_path / "x.conllu"
    p.write_bytes(HE_SLEEPS)
    assert read_conllu(str(p))[0].forms == ["He", "sleeps"]
    assert read_conllu(io.StringIO(HE_SLEEPS.decode()))[0].heads == [2, 0]
    assert read_conllu(io.BytesIO(HE_SLEEPS))[0].heads == [2, 0]


@pytest.mark.parametrize("text, message", [
    (b"1\tHe\t_\tPRP\t_\t_\t2\tnsubj\t_\n", "10 tab-separated"),
    (b"x\tHe\t_\tPRP\t_\t_\t0\troot\t_\t_\n", "non-integer ID"),
    (b"1\tHe\t_\tPRP\t_\t_\tzz\troot\t_\t_\n", "non-integer HEAD"),
    (b"2\tHe\t_\tPRP\t_\t_\t0\troot\t_\t_\n", "out of sequence"),
    (b"# only a comment\n\n", "without tokens"),
])
def test_format_errors_carry_line_numbers(text, message):
    with pytest.raises(FormatError, match=message) as info:
        read_conllu(text)
    assert "line" in str(info.value)


@pytest.mark.parametrize("heads, message", [
    ([0, 0], "root"),
    ([2, 1], "root|cycle"),
    ([0, 3, 2], "cycle"),
    ([0, 7], "range|head"),
])
def test_check_tree_rejects(heads, message):
    with pytest.raises(TreeError, match=message):
        check_tree(heads)


def test_token_invariants():
    with pytest.raises(TreeError):
        Token(1, "a", "DT", head=1)
    with pytest.raises(TreeError):
        Token(0, "a", "DT")
    with pytest.raises(TreeError):
        Token(1, "", "DT")


def test_mixed_heads_rejected():
    with pytest.raises(TreeError):
        DepSentence([Token(1, "a", "DT", head=0), Token(2, "b", "NN")])


def test_unparsed_input_allowed_when_asked():
    text = b"1\tHe\t_\tPRP\t_\t_\t_\t_\t_\t_\n2\tsleeps\t_\tVBZ\t_\t_\t_\t_\t_\t_\n"
    s = read_conllu(text, require_heads=False)[0]
    assert not s.is_parsed
    with pytest.raises(FormatError):
        read_conllu(text)


def test_projectivity_examples():
    assert is_projective(sentence_from_heads([2, 3, 0]))
    assert not is_projective(sentence_from_heads([3, 4, 0, 3]))
    assert is_projective(sentence_from_heads([0]))


@settings(max_examples=300, deadline=None)
@given(any_trees(max_size=15))
def test_projectivity_matches_crossing_check(heads):
    assert is_projective(sentence_from_heads(heads)) == crossing_projective(heads)


@settings(max_examples=200, deadline=None)
@given(projective_sentences())
def test_round_trip_property(s):
    again = read_conllu(write_conllu([s]))[0]
    assert [(t.index, t.form, t.pos, t.head, t.deprel) for t in again] == \
           [(t.index, t.form, t.pos, t.head, t.deprel) for t in s]
