"""Shared tree generators and brute-force oracles.

Nothing here calls into the library's own graph or projectivity code, so the
oracles stay independent of what they check.
"""

import collections
import random

import numpy as np
import pytest
from hypothesis import strategies as st

from sdprelex.treebank import DepSentence

LABELS = ("nsubj", "dobj", "det", "amod", "prep", "pobj", "root", "punct")
TAGS = ("NN", "VB", "DT", "JJ", "IN", ".")


def random_tree(rng: random.Random, n: int):
    """Arbitrary (possibly non-projective) rooted tree as a 1-based head list."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = [0] * (n + 1)
    for k, node in enumerate(order):
        heads[node] = 0 if k == 0 else order[rng.randrange(k)]
    return heads[1:]


def random_projective_tree(rng: random.Random, n: int):
    """Projective tree built by recursive interval splitting."""
    heads = [0] * (n + 1)

    def build(lo, hi, parent):
        # each call roots one contiguous block [lo, hi] under ``parent``
        h = rng.randint(lo, hi)
        heads[h] = parent
        for a, b in ((lo, h - 1), (h + 1, hi)):
            while a <= b:
                cut = rng.randint(a, b)
                build(a, cut, h)
                a = cut + 1

    build(1, n, 0)
    return heads[1:]


def sentence_from_heads(heads, rng=None, labels=None):
    rng = rng or random.Random(0)
    n = len(heads)
    forms = [f"w{i}" for i in range(1, n + 1)]
    tags = [rng.choice(TAGS) for _ in range(n)]
    if labels is None:
        labels = ["root" if h == 0 else rng.choice(LABELS[:-2]) for h in heads]
    return DepSentence.from_lists(forms, tags, list(heads), list(labels))


def crossing_projective(heads) -> bool:
    """Brute force: no two arcs cross, counting the arc from the root at position 0."""
    arcs = [(min(h, d), max(h, d)) for d, h in enumerate(heads, start=1)]
    for a1, b1 in arcs:
        for a2, b2 in arcs:
            if a1 < a2 < b1 < b2:
                return False
    return True


def bfs_path(heads, u, v):
    """Breadth-first search over the undirected tree including the root node 0."""
    adj = collections.defaultdict(list)
    for d, h in enumerate(heads, start=1):
        adj[d].append(h)
        adj[h].append(d)
    prev = {u: None}
    queue = collections.deque([u])
    while queue:
        x = queue.popleft()
        if x == v:
            break
        for y in sorted(adj[x]):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    path = [v]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


@st.composite
def projective_sentences(draw, min_size=1, max_size=15):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_size, max_size))
    rng = random.Random(seed)
    return sentence_from_heads(random_projective_tree(rng, n), rng)


@st.composite
def any_trees(draw, min_size=1, max_size=15):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_size, max_size))
    return random_tree(random.Random(seed), n)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def biopsy_sentence():
    """Example sentence with a plausible tree: 'consistent' is the root predicate."""
    forms = "A biopsy of this mass was consistent with hematoma .".split()
    tags = ["DT", "NN", "IN", "DT", "NN", "VBD", "JJ", "IN", "NN", "."]
    heads = [2, 7, 2, 5, 3, 7, 0, 7, 8, 7]
    rels = ["det", "nsubj", "prep", "det", "pobj", "cop", "root", "prep", "pobj", "punct"]
    return DepSentence.from_lists(forms, tags, heads, rels)


def numeric_grad(loss, arr, eps=1e-5, index=None):
    """Central differences of ``loss()`` w.r.t. ``arr`` (modified in place and restored)."""
    out = np.zeros_like(arr)
    it = index if index is not None else np.ndindex(arr.shape)
    for ix in it:
        old = arr[ix]
        arr[ix] = old + eps
        up = loss()
        arr[ix] = old - eps
        down = loss()
        arr[ix] = old
        out[ix] = (up - down) / (2 * eps)
    return out


def relative_error(analytic, numeric):
    """Worst absolute disagreement over the tensor, relative to the tensor's gradient scale."""
    scale = max(np.abs(analytic).max(), np.abs(numeric).max())
    if scale == 0.0:
        return 0.0
    return float(np.abs(analytic - numeric).max() / scale)


_MARKER = {"TrIP": "improved", "TrWP": "worsened", "TrCP": "caused", "TrAP": "treated",
           "TrNAP": "avoided", "TeRP": "revealed", "TeCP": "evaluated", "PIP": "complicated",
           "NONE": "preceded"}
_FIRST = {"Tr": ("Treatment", ["aspirin", "heparin", "surgery"]),
          "Te": ("Test", ["ct", "mri", "biopsy"]),
          "PI": ("Problem", ["fever", "rash", "edema"]),
          "NO": ("Problem", ["pain", "cough", "anemia"])}


def separable_instances(n=40, seed=0):
    """SDP instances whose label is fixed by a single marker word on the path."""
    from sdprelex.sdp import SdpInstance

    rng = random.Random(seed)
    labels = sorted(_MARKER)
    out = []
    for k in range(n):
        label = labels[k % len(labels)]
        ctype, words = _FIRST[label[:2]]
        first = rng.choice(words)
        second = rng.choice(["infection", "bleeding", "nausea", "stroke"])
        out.append(SdpInstance(
            [first, _MARKER[label], "with", second],
            [f"B_{ctype}", "O", "O", "B_Problem"],
            ["nsubj", "root", "prep", "pobj"],
            ["NN", "VBD", "IN", "NN"], label))
    rng.shuffle(out)
    return out


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
