import io
import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from conftest import any_trees, bfs_path, random_tree, sentence_from_heads
from sdprelex.errors import TreeError
from sdprelex.sdp import (ConceptSpan, SdpInstance, build_undirected_graph, extract_sdp,
                          format_instance, make_instance, parse_instance, path_words,
                          read_instances, shortest_path, span_head, tree_path, write_instances)
from sdprelex.treebank import DepSentence


def span(start, end, ctype="problem", line=1):
    """Concept over 0-based token offsets, i2b2 style."""
    return ConceptSpan(line, start, end, ctype)


def test_example_sentence_path(biopsy_sentence):
    test, problem = span(0, 1, "test"), span(8, 8)
    g = build_undirected_graph(biopsy_sentence)
    path = shortest_path(g, test, problem, biopsy_sentence)
    assert path_words(path, biopsy_sentence) == ["biopsy", "consistent", "with", "hematoma"]
    inst = extract_sdp(biopsy_sentence, test, problem, "TeCP")
    assert " ".join(inst.words).lower() == "a biopsy consistent with hematoma"
    assert list(inst.concept_bio) == ["B_Test", "I_Test", "O", "O", "B_Problem"]
    assert list(inst.pos) == ["DT", "NN", "JJ", "IN", "NN"]
    # first token keeps its own relation; each later one takes the edge to its predecessor
    assert list(inst.deprels) == ["det", "nsubj", "nsubj", "prep", "pobj"]
    assert inst.label == "TeCP"


def test_graph_shapes():
    g = build_undirected_graph(sentence_from_heads([0, 1]))
    assert len(g.adjacency) == 3 and g.n_edges == 2
    chain = build_undirected_graph(sentence_from_heads([2, 3, 4, 5, 0]))
    degrees = sorted(len(v) for k, v in chain.adjacency.items())
    assert degrees == [1, 1, 2, 2, 2, 2]
    star = build_undirected_graph(sentence_from_heads([0, 1, 1, 1, 1]))
    assert len(star.adjacency[1]) == 5
    with pytest.raises(TreeError):
        build_undirected_graph(DepSentence.from_lists(["a"], ["X"]))


def test_adjacent_pair_gives_two_node_path():
    s = sentence_from_heads([2, 0, 2])
    inst = extract_sdp(s, span(0, 0, "treatment"), span(1, 1))
    assert len(inst) == 2
    assert list(inst.concept_bio) == ["B_Treatment", "B_Problem"]


def test_span_head_rules():
    s = sentence_from_heads([2, 0, 4, 2])
    assert span_head(span(0, 1), s) == 2        # token 2 heads the span
    assert span_head(span(2, 3), s) == 4
    flat = sentence_from_heads([0, 1, 1])
    assert span_head(span(1, 2), flat) == 3     # two tokens leave the span: fall back to last


def test_overlap_and_range_errors():
    s = sentence_from_heads([2, 0, 2])
    g = build_undirected_graph(s)
    with pytest.raises(ValueError):
        shortest_path(g, span(0, 1), span(1, 2), s)
    with pytest.raises(ValueError):
        shortest_path(g, span(0, 0), span(5, 5), s)


@settings(max_examples=300, deadline=None)
@given(any_trees(max_size=10), st.data())
def test_tree_path_matches_bfs(heads, data):
    g = build_undirected_graph(sentence_from_heads(heads))
    n = len(heads)
    u = data.draw(st.integers(0, n))
    v = data.draw(st.integers(0, n))
    assert tree_path(g, u, v) == bfs_path(heads, u, v)


def test_tree_path_matches_networkx():
    rng = random.Random(5)
    for _ in range(200):
        heads = random_tree(rng, rng.randint(1, 12))
        G = nx.Graph([(d, h) for d, h in enumerate(heads, start=1)])
        g = build_undirected_graph(sentence_from_heads(heads))
        u, v = rng.randrange(len(heads) + 1), rng.randrange(len(heads) + 1)
        assert tree_path(g, u, v) == nx.shortest_path(G, u, v)


def _disjoint_spans(rng, n):
    cuts = sorted(rng.sample(range(n + 1), 4))
    a0, a1, b0, b1 = cuts[0], cuts[1] - 1, cuts[2], cuts[3] - 1
    if a1 < a0 or b1 < b0:
        return None
    types = ("problem", "treatment", "test")
    return span(a0, a1, rng.choice(types)), span(b0, b1, rng.choice(types))


@settings(max_examples=300, deadline=None)
@given(st.integers(4, 14), st.integers(0, 10**9))
def test_reversal_and_alignment(n, seed):
    rng = random.Random(seed)
    s = sentence_from_heads(random_tree(rng, n), rng)
    pair = _disjoint_spans(rng, n)
    if pair is None:
        return
    c1, c2 = pair
    g = build_undirected_graph(s)
    fwd, back = shortest_path(g, c1, c2, s), shortest_path(g, c2, c1, s)
    assert back == fwd[::-1]
    inst, rev = make_instance(fwd, s, c1, c2), make_instance(back, s, c2, c1)
    assert len(inst.words) == len(inst.concept_bio) == len(inst.deprels) == len(inst.pos)
    assert inst.concept_bio[0].startswith("B_") and inst.concept_bio[-1] != "O"
    # mirrored channels: words, tags and POS reverse exactly (multi-token spans keep order)
    k1, k2 = c1.end_token - c1.start_token + 1, c2.end_token - c2.start_token + 1
    mid = inst.words[k1:len(inst) - k2]
    assert rev.words[k2:len(rev) - k1] == mid[::-1]
    assert rev.words[:k2] == inst.words[len(inst) - k2:]
    assert sorted(inst.words) == sorted(rev.words)


def test_instance_rejects_misaligned_channels():
    with pytest.raises(ValueError):
        SdpInstance(["a", "b"], ["B_Test"], ["det", "x"], ["DT", "NN"])


def test_debug_format_round_trip():
    inst = SdpInstance(["50%", "a|b", "x\ty"], ["B_Test", "O", "B_Problem"],
                       ["nsubj", "prep", "pobj"], ["CD", "NN", "NN"], "TeRP")
    assert parse_instance(format_instance(inst)) == inst
    buf = io.StringIO()
    write_instances([inst, SdpInstance(["a"], ["B_Test"], ["x"], ["DT"])], buf)
    buf.seek(0)
    back = read_instances(buf)
    assert back[0] == inst and back[1].label is None
