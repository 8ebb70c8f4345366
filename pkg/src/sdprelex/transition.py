"""Arc-standard transition system and its static oracle.

Configurations are immutable; :func:`apply` returns a new one.  The stack
holds token indices with the artificial root (0) at the bottom.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, List

from .errors import FormatError, IllegalTransitionError, NonProjectiveError
from .treebank import ROOT, DepSentence, is_projective


class Kind(str, enum.Enum):
    LEFT_ARC = "LEFT_ARC"
    RIGHT_ARC = "RIGHT_ARC"
    SHIFT = "SHIFT"


@dataclass(frozen=True, order=True)
class Transition:
    kind: Kind
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if (self.kind is Kind.SHIFT) == bool(self.label):
            raise ValueError(f"{self.kind.value} {'takes no' if self.label else 'needs a'} label")

    def __str__(self):
        return self.kind.value if self.kind is Kind.SHIFT else f"{self.kind.value}:{self.label}"

    @classmethod
    def parse(cls, text: str) -> "Transition":
        kind, _, label = text.strip().partition(":")
        try:
            return cls(Kind(kind), label)
        except ValueError as exc:
            raise FormatError(f"bad transition {text!r}: {exc}") from None


SHIFT = Transition(Kind.SHIFT)


def left_arc(label):
    return Transition(Kind.LEFT_ARC, label)


def right_arc(label):
    return Transition(Kind.RIGHT_ARC, label)


@dataclass(frozen=True)
class ParserConfiguration:
    stack: tuple
    buffer: tuple
    arcs: frozenset = frozenset()  # of (head, label, dependent)

    def head_map(self):
        return {d: (h, lab) for h, lab, d in self.arcs}

    def dependents(self, head):
        """Attached dependents of ``head`` in increasing index order."""
        return sorted(d for h, _, d in self.arcs if h == head)


def initial_config(sentence) -> ParserConfiguration:
    n = len(sentence)
    if n == 0:
        raise ValueError("cannot parse an empty sentence")
    return ParserConfiguration((ROOT,), tuple(range(1, n + 1)), frozenset())


def legal_transitions(c: ParserConfiguration) -> set:
    """Transition kinds applicable to ``c``.

    Attaching a word to the root is only allowed as the final step, which
    forces exactly one root.
    """
    legal = set()
    if c.buffer:
        legal.add(Kind.SHIFT)
    if len(c.stack) >= 2:
        if c.stack[-2] != ROOT:
            legal.add(Kind.LEFT_ARC)
            legal.add(Kind.RIGHT_ARC)
        elif not c.buffer and len(c.stack) == 2:
            legal.add(Kind.RIGHT_ARC)
    return legal


def _violation(c: ParserConfiguration, kind: Kind) -> str:
    if kind is Kind.SHIFT:
        return "SHIFT requires a non-empty buffer"
    if len(c.stack) < 2:
        return f"{kind.value} requires at least two items on the stack"
    if kind is Kind.LEFT_ARC:
        return "LEFT_ARC cannot make the root a dependent"
    return "RIGHT_ARC onto the root is only legal with an empty buffer and stack [0, j]"


def apply(c: ParserConfiguration, t: Transition) -> ParserConfiguration:
    if t.kind not in legal_transitions(c):
        raise IllegalTransitionError(f"{t}: {_violation(c, t.kind)} "
                                     f"(stack={list(c.stack)}, buffer={list(c.buffer)})")
    if t.kind is Kind.SHIFT:
        return ParserConfiguration(c.stack + (c.buffer[0],), c.buffer[1:], c.arcs)
    i, j = c.stack[-2], c.stack[-1]
    if t.kind is Kind.LEFT_ARC:
        return ParserConfiguration(c.stack[:-2] + (j,), c.buffer, c.arcs | {(j, t.label, i)})
    return ParserConfiguration(c.stack[:-1], c.buffer, c.arcs | {(i, t.label, j)})


def is_terminal(c: ParserConfiguration) -> bool:
    return not c.buffer and c.stack == (ROOT,)


def oracle_sequence(sentence: DepSentence) -> List[Transition]:
    """Gold transition sequence (length 2n) deriving a projective tree."""
    if not sentence.is_parsed:
        raise ValueError("oracle needs a sentence with gold heads")
    if not is_projective(sentence):
        raise NonProjectiveError("arc-standard cannot derive a non-projective tree")
    heads = [ROOT] + sentence.heads
    labels = [""] + sentence.deprels
    pending = [0] * len(heads)  # gold dependents not yet attached
    for d in range(1, len(heads)):
        pending[heads[d]] += 1

    c = initial_config(sentence)
    seq = []
    while not is_terminal(c):
        t = SHIFT
        if len(c.stack) >= 2:
            i, j = c.stack[-2], c.stack[-1]
            if i != ROOT and heads[i] == j:
                t = left_arc(labels[i])
            elif heads[j] == i and pending[j] == 0:
                t = right_arc(labels[j])
        if t.kind is not Kind.SHIFT:
            pending[c.stack[-1] if t.kind is Kind.LEFT_ARC else c.stack[-2]] -= 1
        # apply() re-checks legality, so an oracle bug cannot go unnoticed
        c = apply(c, t)
        seq.append(t)
    return seq


def arcs_to_tree(c: ParserConfiguration, n: int):
    """Heads and labels (1-based token order) from a terminal configuration."""
    hm = c.head_map()
    heads = [hm[d][0] for d in range(1, n + 1)]
    labels = [hm[d][1] for d in range(1, n + 1)]
    return heads, labels


def format_transitions(seq: Iterable[Transition]) -> str:
    return "".join(f"{t}\n" for t in seq)


def parse_transitions(text: str) -> List[Transition]:
    return [Transition.parse(line) for line in text.splitlines() if line.strip()]
