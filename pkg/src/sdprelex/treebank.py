"""Tokens, dependency sentences and CoNLL-U input/output.

Only the ten-column CoNLL-U layout is supported.  Multiword-token ranges
(``3-4``) and empty nodes (``5.1``) are skipped on input so that standard
Universal Dependencies releases load without preprocessing.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional, Sequence, Union

from .errors import FormatError, TreeError

ROOT = 0
N_COLUMNS = 10

Source = Union[str, os.PathLike, bytes, IO[bytes], IO[str]]


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    pos: str
    head: Optional[int] = None
    deprel: str = "_"
    lemma: str = "_"
    xpos: str = "_"
    feats: str = "_"
    deps: str = "_"
    misc: str = "_"
    # set when UPOS was "_" and ``pos`` was taken from XPOS
    pos_from_xpos: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.index < 1:
            raise TreeError(f"token index must be >= 1, got {self.index}")
        if not self.form or not self.pos:
            raise TreeError(f"token {self.index}: form and pos must be non-empty")
        if self.head is not None:
            if self.head < 0:
                raise TreeError(f"token {self.index}: negative head {self.head}")
            if self.head == self.index:
                raise TreeError(f"token {self.index}: self-loop")


@dataclass(frozen=True)
class DepSentence:
    """An ordered list of tokens, optionally carrying a dependency tree.

    A sentence is either fully parsed (every token has a head) or unparsed
    (no token has one).  Parsed sentences are checked on construction: heads
    in range, exactly one root, no cycles.
    """

    tokens: tuple
    comments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "comments", tuple(self.comments))
        for i, tok in enumerate(self.tokens, start=1):
            if tok.index != i:
                raise TreeError(f"token {i} has index {tok.index}; indices must run 1..n")
        heads = [t.head for t in self.tokens]
        if any(h is None for h in heads):
            if not all(h is None for h in heads):
                raise TreeError("sentence mixes tokens with and without heads")
        else:
            check_tree(heads)

    def __len__(self):
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, i) -> Token:
        return self.tokens[i]

    @property
    def forms(self):
        return [t.form for t in self.tokens]

    @property
    def tags(self):
        return [t.pos for t in self.tokens]

    @property
    def heads(self):
        return [t.head for t in self.tokens]

    @property
    def deprels(self):
        return [t.deprel for t in self.tokens]

    @property
    def is_parsed(self):
        return bool(self.tokens) and self.tokens[0].head is not None

    @property
    def sent_id(self):
        for line in self.comments:
            key, _, value = line.lstrip("#").partition("=")
            if key.strip() == "sent_id":
                return value.strip()
        return None

    def head_of(self, index):
        """Head of a 1-based token index (0 is the artificial root)."""
        return self.tokens[index - 1].head

    def with_tree(self, heads: Sequence[int], deprels: Sequence[str]) -> "DepSentence":
        toks = [
            Token(t.index, t.form, t.pos, h, r, t.lemma, t.xpos, t.feats, t.deps, t.misc,
                  t.pos_from_xpos)
            for t, h, r in zip(self.tokens, heads, deprels)
        ]
        return DepSentence(toks, self.comments)

    def without_tree(self) -> "DepSentence":
        toks = [
            Token(t.index, t.form, t.pos, None, "_", t.lemma, t.xpos, t.feats, t.deps, t.misc,
                  t.pos_from_xpos)
            for t in self.tokens
        ]
        return DepSentence(toks, self.comments)

    @classmethod
    def from_lists(cls, forms, tags, heads=None, deprels=None, comments=()):
        n = len(forms)
        heads = heads if heads is not None else [None] * n
        deprels = deprels if deprels is not None else ["_"] * n
        toks = [Token(i + 1, f, p, h, r) for i, (f, p, h, r) in
                enumerate(zip(forms, tags, heads, deprels))]
        return cls(toks, comments)


@dataclass
class Treebank:
    sentences: list = field(default_factory=list)
    source_path: str = ""

    def __len__(self):
        return len(self.sentences)

    def __iter__(self) -> Iterator[DepSentence]:
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]


def check_tree(heads: Sequence[int]) -> None:
    """Raise :class:`TreeError` unless ``heads`` (1-based tokens, 0 = root) form a tree."""
    n = len(heads)
    roots = [i for i, h in enumerate(heads, start=1) if h == ROOT]
    for i, h in enumerate(heads, start=1):
        if not 0 <= h <= n:
            raise TreeError(f"token {i}: head {h} out of range 0..{n}")
    if len(roots) != 1:
        raise TreeError(f"expected exactly one root, found {len(roots)}")
    # 0 = unvisited, 1 = on current walk, 2 = known to reach root
    state = [0] * (n + 1)
    state[ROOT] = 2
    for start in range(1, n + 1):
        walk = []
        node = start
        while state[node] == 0:
            state[node] = 1
            walk.append(node)
            node = heads[node - 1]
        if state[node] == 1:
            raise TreeError(f"head cycle through token {node}")
        for w in walk:
            state[w] = 2


def is_projective(sentence: DepSentence) -> bool:
    """True iff no two arcs cross when drawn above the sentence.

    Checked by dominance: every token strictly inside an arc's span must be
    a descendant of that arc's head.
    """
    heads = [ROOT] + list(sentence.heads)
    n = len(sentence)
    for dep in range(1, n + 1):
        head = heads[dep]
        if head == ROOT:
            continue
        lo, hi = sorted((head, dep))
        for k in range(lo + 1, hi):
            node = k
            while node not in (head, ROOT):
                node = heads[node]
            if node != head:
                return False
    return True


def _open_text(source: Source):
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8")), True
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return io.StringIO(data), True


def _sentence_name(index, comments, line):
    for c in comments:
        key, _, value = c.lstrip("#").partition("=")
        if key.strip() == "sent_id":
            return f"sentence {value.strip()!r} (block {index}, line {line})"
    return f"sentence {index} (line {line})"


def _parse_token(cols, lineno, require_heads):
    try:
        index = int(cols[0])
    except ValueError:
        raise FormatError(f"non-integer ID {cols[0]!r}", lineno) from None
    upos, xpos = cols[3], cols[4]
    pos, from_xpos = (upos, False) if upos != "_" else (xpos, True)
    if cols[6] == "_" and not require_heads:
        head = None
    else:
        try:
            head = int(cols[6])
        except ValueError:
            raise FormatError(f"non-integer HEAD {cols[6]!r}", lineno) from None
    return dict(index=index, form=cols[1], pos=pos, head=head, deprel=cols[7],
                lemma=cols[2], xpos=xpos, feats=cols[5], deps=cols[8], misc=cols[9],
                pos_from_xpos=from_xpos)


def iter_conllu(source: Source, require_heads: bool = True) -> Iterator[DepSentence]:
    """Yield sentences from CoNLL-U text, one per blank-line separated block."""
    handle, owned = _open_text(source)
    try:
        comments: list = []
        rows: list = []
        start_line = 1
        count = 0

        def flush():
            nonlocal count
            count += 1
            name = _sentence_name(count, comments, start_line)
            try:
                toks = [Token(**r) for r in rows]
                return DepSentence(toks, comments)
            except TreeError as exc:
                raise TreeError(f"{name}: {exc}") from None

        lineno = 0
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                if rows:
                    yield flush()
                elif comments:
                    raise FormatError("comment block without tokens", lineno)
                comments, rows = [], []
                continue
            if not rows and not comments:
                start_line = lineno
            if line.startswith("#"):
                if rows:
                    raise FormatError("comment line inside token block", lineno)
                comments.append(line)
                continue
            cols = line.split("\t")
            if len(cols) != N_COLUMNS:
                raise FormatError(f"expected {N_COLUMNS} tab-separated columns, got {len(cols)}",
                                  lineno)
            if "-" in cols[0] or "." in cols[0]:
                continue
            row = _parse_token(cols, lineno, require_heads)
            if row["index"] != len(rows) + 1:
                raise FormatError(f"token ID {row['index']} out of sequence", lineno)
            rows.append(row)
        if rows:
            yield flush()
        elif comments:
            raise FormatError("comment block without tokens", lineno)
    finally:
        if owned:
            handle.close()


def read_conllu(source: Source, require_heads: bool = True) -> Treebank:
    """Read a whole CoNLL-U stream, path or byte string into a :class:`Treebank`.

    With ``require_heads=False`` a ``_`` HEAD column is accepted and the
    sentence is returned unparsed (input for the parser).
    """
    path = os.fspath(source) if isinstance(source, (str, os.PathLike)) else ""
    return Treebank(list(iter_conllu(source, require_heads)), source_path=path)


def format_sentence(sentence: DepSentence) -> str:
    lines = list(sentence.comments)
    for t in sentence.tokens:
        upos = "_" if t.pos_from_xpos else t.pos
        head = "_" if t.head is None else str(t.head)
        lines.append("\t".join([str(t.index), t.form, t.lemma, upos, t.xpos, t.feats, head,
                                t.deprel, t.deps, t.misc]))
    return "\n".join(lines) + "\n\n"


def write_conllu(treebank: Union[Treebank, Iterable[DepSentence]]) -> bytes:
    """Serialize sentences to UTF-8 CoNLL-U bytes."""
    chunks = []
    for i, sent in enumerate(treebank, start=1):
        try:
            if sent.is_parsed:
                check_tree(sent.heads)
        except TreeError as exc:
            raise TreeError(f"refusing to write sentence {i}: {exc}") from None
        chunks.append(format_sentence(sent))
    return "".join(chunks).encode("utf-8")
