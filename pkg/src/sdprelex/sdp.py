"""Shortest dependency paths between concept pairs.

The dependency tree is read as an undirected graph.  Multi-token concepts
are anchored at their syntactic head, and their remaining tokens are spliced
back around the path ends so each concept appears whole.  Dependency labels
along the path follow one convention: every token carries the label of the
edge linking it to the previous path token, and tokens with no previous
path token (the first one, and spliced concept tokens) carry their own
label to their head.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import FormatError, TreeError
from .treebank import ROOT, DepSentence, check_tree

CONCEPT_TYPES = ("problem", "treatment", "test")
BIO_TAGS = ("B_Problem", "I_Problem", "B_Treatment", "I_Treatment", "B_Test", "I_Test", "O")


@dataclass(frozen=True)
class ConceptSpan:
    """A concept mention: 1-based line, 0-based inclusive whitespace-token offsets."""

    sentence_line: int
    start_token: int
    end_token: int
    concept_type: str
    text: str = ""

    def __post_init__(self):
        if self.start_token < 0 or self.start_token > self.end_token:
            raise FormatError(f"bad concept offsets {self.start_token}..{self.end_token}")
        if self.concept_type not in CONCEPT_TYPES:
            raise FormatError(f"unknown concept type {self.concept_type!r}")

    @property
    def key(self):
        return (self.sentence_line, self.start_token, self.end_token)

    def token_indices(self) -> range:
        """1-based indices of the span's tokens in the parsed sentence."""
        return range(self.start_token + 1, self.end_token + 2)

    def overlaps(self, other: "ConceptSpan") -> bool:
        return (self.sentence_line == other.sentence_line
                and self.start_token <= other.end_token
                and other.start_token <= self.end_token)


@dataclass(frozen=True)
class SdpInstance:
    words: tuple
    concept_bio: tuple
    deprels: tuple
    pos: tuple
    label: Optional[str] = None

    def __post_init__(self):
        for name in ("words", "concept_bio", "deprels", "pos"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        n = len(self.words)
        if not (len(self.concept_bio) == len(self.deprels) == len(self.pos) == n):
            raise ValueError("SDP channels must have equal length")

    def __len__(self):
        return len(self.words)


@dataclass
class UndirectedTree:
    """Undirected view of a dependency tree; nodes 0..n with 0 the root."""

    adjacency: Dict[int, List[Tuple[int, str]]]
    parent: List[int]  # parent[0] == -1

    @property
    def n_edges(self):
        return sum(len(v) for v in self.adjacency.values()) // 2


def build_undirected_graph(s: DepSentence) -> UndirectedTree:
    if not s.is_parsed:
        raise TreeError("sentence has no dependency tree")
    check_tree(s.heads)
    adj = {i: [] for i in range(len(s) + 1)}
    for t in s.tokens:
        adj[t.head].append((t.index, t.deprel))
        adj[t.index].append((t.head, t.deprel))
    return UndirectedTree(adj, [-1] + list(s.heads))


def span_head(span: ConceptSpan, s: DepSentence) -> int:
    """Token whose head lies outside the span; the last token when that is not unique."""
    inside = set(span.token_indices())
    heads = [i for i in inside if s.head_of(i) not in inside]
    return heads[0] if len(heads) == 1 else span.end_token + 1


def _check_span(span, s):
    if span.end_token + 1 > len(s):
        raise ValueError(f"concept {span.text!r} ({span.start_token}:{span.end_token}) "
                         f"outside a sentence of {len(s)} tokens")


def tree_path(g: UndirectedTree, u: int, v: int) -> List[int]:
    """The unique simple path from node u to node v."""
    up = [u]
    seen = {u: 0}
    while g.parent[up[-1]] != -1:
        up.append(g.parent[up[-1]])
        seen[up[-1]] = len(up) - 1
    down = [v]
    while down[-1] not in seen:
        down.append(g.parent[down[-1]])
    meet = seen[down[-1]]
    return up[:meet] + down[::-1]


def shortest_path(g: UndirectedTree, c1: ConceptSpan, c2: ConceptSpan, s: DepSentence) -> List[int]:
    """Token-index path from c1's head token to c2's head token."""
    _check_span(c1, s)
    _check_span(c2, s)
    if c1.overlaps(c2) or c1.key == c2.key:
        raise ValueError(f"concepts {c1.text!r} and {c2.text!r} overlap")
    return tree_path(g, span_head(c1, s), span_head(c2, s))


def bio_tags(span: ConceptSpan) -> List[str]:
    kind = span.concept_type.capitalize()
    n = span.end_token - span.start_token + 1
    return [f"B_{kind}"] + [f"I_{kind}"] * (n - 1)


def make_instance(path: Sequence[int], s: DepSentence, c1: ConceptSpan, c2: ConceptSpan,
                  label: Optional[str] = None) -> SdpInstance:
    span1, span2 = list(c1.token_indices()), list(c2.token_indices())
    in_spans = set(span1) | set(span2)
    interior = [i for i in path[1:-1] if i not in in_spans]
    order = span1 + interior + span2
    tags = bio_tags(c1) + ["O"] * len(interior) + bio_tags(c2)

    on_path = {node: k for k, node in enumerate(path)}
    deprels = []
    for k, i in enumerate(order):
        pk = on_path.get(i)
        if pk is None or pk == 0:
            deprels.append(s.tokens[i - 1].deprel)
            continue
        prev = path[pk - 1]
        # the edge label belongs to whichever endpoint is the dependent
        child = i if s.head_of(i) == prev else prev
        deprels.append(s.tokens[child - 1].deprel if child != ROOT else "root")
    return SdpInstance(
        words=[s.tokens[i - 1].form for i in order],
        concept_bio=tags,
        deprels=deprels,
        pos=[s.tokens[i - 1].pos for i in order],
        label=label,
    )


def extract_sdp(s: DepSentence, c1: ConceptSpan, c2: ConceptSpan,
                label: Optional[str] = None) -> SdpInstance:
    g = build_undirected_graph(s)
    return make_instance(shortest_path(g, c1, c2, s), s, c1, c2, label)


def path_words(path, s: DepSentence):
    return [s.tokens[i - 1].form for i in path]


# -- line-oriented debug format ----------------------------------------------

def _esc(x: str) -> str:
    return x.replace("%", "%25").replace("|", "%7C").replace("\t", "%09")


def _unesc(x: str) -> str:
    return x.replace("%09", "\t").replace("%7C", "|").replace("%25", "%")


def format_instance(inst: SdpInstance) -> str:
    cols = ["|".join(_esc(x) for x in seq)
            for seq in (inst.words, inst.concept_bio, inst.deprels, inst.pos)]
    return "\t".join(cols + [inst.label or "_"])


def parse_instance(line: str) -> SdpInstance:
    cols = line.rstrip("\r\n").split("\t")
    if len(cols) != 5:
        raise FormatError(f"SDP instance needs 5 tab-separated columns, got {len(cols)}")
    seqs = [[_unesc(x) for x in c.split("|")] for c in cols[:4]]
    try:
        return SdpInstance(*seqs, label=None if cols[4] == "_" else cols[4])
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def read_instances(fh) -> List[SdpInstance]:
    out = []
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            out.append(parse_instance(line))
        except FormatError as exc:
            raise FormatError(str(exc), lineno) from None
    return out


def write_instances(instances, fh):
    for inst in instances:
        fh.write(format_instance(inst) + "\n")

