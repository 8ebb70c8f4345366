"""Input checks shared by the estimators."""

from typing import Iterable, List

from .treebank import DepSentence, Treebank


def check_sentences(X, *, parsed: bool) -> List[DepSentence]:
    if isinstance(X, DepSentence):
        raise TypeError("expected a collection of sentences, got a single DepSentence")
    if isinstance(X, Treebank):
        sents = list(X.sentences)
    elif isinstance(X, Iterable):
        sents = list(X)
    else:
        raise TypeError(f"expected a Treebank or iterable of DepSentence, got {type(X).__name__}")
    for i, s in enumerate(sents):
        if not isinstance(s, DepSentence):
            raise TypeError(f"item {i} is {type(s).__name__}, not DepSentence")
        if len(s) == 0:
            raise ValueError(f"sentence {i} is empty")
        if parsed and not s.is_parsed:
            raise ValueError(f"sentence {i} has no gold tree")
    return sents


def check_positive_int(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")


def check_rate(name, value):
    if not 0.0 <= value < 1.0:
        raise ValueError(f"{name} must lie in [0, 1), got {value!r}")
