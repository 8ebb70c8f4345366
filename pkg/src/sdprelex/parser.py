"""Greedy neural arc-standard parser.

Each configuration is summarised by 12 word and 12 POS slots::

    0-3   stack items s1..s4 (s1 = top)
    4-5   leftmost / rightmost attached modifier of s1
    6-7   leftmost / rightmost attached modifier of s2
    8-11  buffer items b1..b4

A slot whose position does not exist gets the NULL id; the artificial root
gets the ROOT id.  The classifier is embedding lookup -> one ReLU hidden
layer -> softmax over the transitions seen in training.
"""

from __future__ import annotations

import logging
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _io
from ._validation import check_positive_int, check_rate, check_sentences
from .errors import NumericalError
from .transition import (
    Kind,
    ParserConfiguration,
    Transition,
    apply,
    arcs_to_tree,
    initial_config,
    is_terminal,
    legal_transitions,
    oracle_sequence,
)
from .treebank import ROOT, DepSentence, Treebank, is_projective
from .vocab import Vocabulary

logger = logging.getLogger(__name__)

NULL, UNK, ROOT_TOKEN = "<NULL>", "<UNK>", "<ROOT>"
NULL_ID, UNK_ID, ROOT_ID = 0, 1, 2
N_SLOTS = 12
FEATURE_LAYOUT_VERSION = 1
ADAGRAD_EPS = 1e-6

MAGIC = b"SDPRELEX-PARSER"
FORMAT_VERSION = 1


class ParserFeatureVector(NamedTuple):
    word_ids: Tuple[int, ...]
    pos_ids: Tuple[int, ...]


def _slot_positions(c: ParserConfiguration):
    """Token positions for the 12 slots; -1 marks an absent slot."""
    stack = c.stack
    slots = [stack[-k] if len(stack) >= k else -1 for k in range(1, 5)]
    deps = {}
    for h, _, d in c.arcs:
        deps.setdefault(h, []).append(d)
    for item in slots[:2]:
        if item == -1:
            slots += [-1, -1]
            continue
        kids = deps.get(item, ())
        left = [d for d in kids if d < item]
        right = [d for d in kids if d > item]
        slots.append(min(left) if left else -1)
        slots.append(max(right) if right else -1)
    buf = c.buffer
    slots += [buf[k] if len(buf) > k else -1 for k in range(4)]
    return slots


def extract_features(c: ParserConfiguration, words: List[int], tags: List[int]) -> ParserFeatureVector:
    """Feature ids for ``c`` given the sentence's word and POS ids (index 0 = root)."""
    w, p = [], []
    for pos in _slot_positions(c):
        if pos == -1:
            w.append(NULL_ID)
            p.append(NULL_ID)
        elif pos == ROOT:
            w.append(ROOT_ID)
            p.append(ROOT_ID)
        else:
            w.append(words[pos])
            p.append(tags[pos])
    return ParserFeatureVector(tuple(w), tuple(p))


def init_params(n_words, n_tags, n_out, dim, hidden, rng) -> dict:
    n_in = 2 * N_SLOTS * dim
    lim1 = np.sqrt(6.0 / (n_in + hidden))
    lim2 = np.sqrt(6.0 / (hidden + n_out))
    return {
        "E_word": rng.uniform(-0.1, 0.1, (n_words, dim)),
        "E_pos": rng.uniform(-0.1, 0.1, (n_tags, dim)),
        "W1": rng.uniform(-lim1, lim1, (n_in, hidden)),
        "b1": np.zeros(hidden),
        "W2": rng.uniform(-lim2, lim2, (hidden, n_out)),
        "b2": np.zeros(n_out),
    }


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def scores(params, word_ids, pos_ids):
    """Transition logits for a batch of feature rows."""
    B = word_ids.shape[0]
    x = np.concatenate([params["E_word"][word_ids].reshape(B, -1),
                        params["E_pos"][pos_ids].reshape(B, -1)], axis=1)
    h = np.maximum(x @ params["W1"] + params["b1"], 0.0)
    return h @ params["W2"] + params["b2"]


def loss_and_grads(params, word_ids, pos_ids, targets):
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    B = word_ids.shape[0]
    d = params["E_word"].shape[1]
    x = np.concatenate([params["E_word"][word_ids].reshape(B, -1),
                        params["E_pos"][pos_ids].reshape(B, -1)], axis=1)
    z1 = x @ params["W1"] + params["b1"]
    h = np.maximum(z1, 0.0)
    probs = _softmax(h @ params["W2"] + params["b2"])
    loss = -np.mean(np.log(probs[np.arange(B), targets]))

    dz2 = probs.copy()
    dz2[np.arange(B), targets] -= 1.0
    dz2 /= B
    grads = {"W2": h.T @ dz2, "b2": dz2.sum(axis=0)}
    dz1 = (dz2 @ params["W2"].T) * (z1 > 0)
    grads["W1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    dx = dz1 @ params["W1"].T
    half = N_SLOTS * d
    grads["E_word"] = np.zeros_like(params["E_word"])
    grads["E_pos"] = np.zeros_like(params["E_pos"])
    np.add.at(grads["E_word"], word_ids, dx[:, :half].reshape(B, N_SLOTS, d))
    np.add.at(grads["E_pos"], pos_ids, dx[:, half:].reshape(B, N_SLOTS, d))
    return loss, grads


def evaluate_uas_las(gold, pred) -> Tuple[float, float]:
    """Token-level unlabeled and labeled attachment scores, in percent."""
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} sentences, prediction has {len(pred)}")
    total = head_ok = both_ok = 0
    for i, (g, p) in enumerate(zip(gold, pred), start=1):
        if len(g) != len(p):
            name = g.sent_id or i
            raise ValueError(f"sentence {name}: gold has {len(g)} tokens, prediction {len(p)}")
        for gt, pt in zip(g, p):
            total += 1
            if gt.head == pt.head:
                head_ok += 1
                both_ok += gt.deprel == pt.deprel
    if total == 0:
        return 100.0, 100.0
    return 100.0 * head_ok / total, 100.0 * both_ok / total


class DependencyParser(BaseEstimator):
    """Greedy transition parser trained from gold projective trees.

    Parameters
    ----------
    embedding_dim : int
        Size of word and POS embeddings.
    hidden_size : int
        Units of the ReLU hidden layer.
    epochs : int
        Passes over the oracle configurations; 0 returns the initial model.
    batch_size, learning_rate :
        Mini-batch settings.
    optimizer : {"adagrad", "sgd"}
        Per-parameter AdaGrad scaling, or plain gradient descent.
    unk_rate : float
        Probability of replacing a singleton word by UNK during training.
    random_state : int
        Seed; training is bitwise reproducible for a fixed seed.
    """

    def __init__(self, embedding_dim=50, hidden_size=200, epochs=20, batch_size=64,
                 learning_rate=0.01, optimizer="adagrad", unk_rate=0.1, random_state=0):
        self.embedding_dim = embedding_dim
        self.hidden_size = hidden_size
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.unk_rate = unk_rate
        self.random_state = random_state

    # -- vocabulary helpers -------------------------------------------------

    def _sentence_ids(self, s: DepSentence):
        words = [ROOT_ID] + [self.word_vocab_.get(f.lower(), UNK_ID) for f in s.forms]
        tags = [ROOT_ID] + [self.pos_vocab_.get(t, UNK_ID) for t in s.tags]
        return words, tags

    def _build_examples(self, sents):
        rows_w, rows_p, targets = [], [], []
        for s in sents:
            words, tags = self._sentence_ids(s)
            c = initial_config(s)
            for t in oracle_sequence(s):
                fv = extract_features(c, words, tags)
                rows_w.append(fv.word_ids)
                rows_p.append(fv.pos_ids)
                targets.append(self.transition_index_[t])
                c = apply(c, t)
        return (np.array(rows_w, dtype=np.intp), np.array(rows_p, dtype=np.intp),
                np.array(targets, dtype=np.intp))

    def fit(self, X, y=None):
        check_positive_int("embedding_dim", self.embedding_dim)
        check_positive_int("hidden_size", self.hidden_size)
        check_positive_int("epochs", self.epochs, minimum=0)
        check_positive_int("batch_size", self.batch_size)
        check_rate("unk_rate", self.unk_rate)
        if self.optimizer not in ("adagrad", "sgd"):
            raise ValueError(f"optimizer must be 'adagrad' or 'sgd', got {self.optimizer!r}")
        sents = check_sentences(X, parsed=True)
        kept = [s for s in sents if is_projective(s)]
        self.n_nonprojective_ = len(sents) - len(kept)
        if self.n_nonprojective_:
            logger.info("excluded %d non-projective sentences of %d", self.n_nonprojective_,
                        len(sents))
        if not kept:
            raise ValueError("no projective training sentences")

        counts = {}
        for s in kept:
            for f in s.forms:
                counts[f.lower()] = counts.get(f.lower(), 0) + 1
        self.word_vocab_ = Vocabulary(sorted(counts), specials=(NULL, UNK, ROOT_TOKEN))
        self.pos_vocab_ = Vocabulary(sorted({t for s in kept for t in s.tags}),
                                     specials=(NULL, UNK, ROOT_TOKEN))
        transitions = sorted({t for s in kept for t in oracle_sequence(s)},
                             key=lambda t: (t.kind.value, t.label))
        self.transitions_ = transitions
        self.transition_index_ = {t: i for i, t in enumerate(transitions)}

        rng = np.random.default_rng(self.random_state)
        self.params_ = init_params(len(self.word_vocab_), len(self.pos_vocab_), len(transitions),
                                   self.embedding_dim, self.hidden_size, rng)
        W, P, T = self._build_examples(kept)
        singleton = np.zeros(len(self.word_vocab_), dtype=bool)
        for w, c in counts.items():
            singleton[self.word_vocab_[w]] = c == 1

        self.history_ = []
        lr, bs = self.learning_rate, self.batch_size
        sq = {k: np.zeros_like(v) for k, v in self.params_.items()}
        for epoch in range(1, self.epochs + 1):
            Wn = W.copy()
            if self.unk_rate > 0:
                drop = singleton[Wn] & (rng.random(Wn.shape) < self.unk_rate)
                Wn[drop] = UNK_ID
            order = rng.permutation(len(T))
            total = 0.0
            for b, start in enumerate(range(0, len(T), bs), start=1):
                idx = order[start:start + bs]
                loss, grads = loss_and_grads(self.params_, Wn[idx], P[idx], T[idx])
                if not np.isfinite(loss):
                    raise NumericalError(f"non-finite parser loss at epoch {epoch}, batch {b}")
                total += loss * len(idx)
                for k, g in grads.items():
                    if self.optimizer == "adagrad":
                        sq[k] += g * g
                        self.params_[k] -= lr * g / (np.sqrt(sq[k]) + ADAGRAD_EPS)
                    else:
                        self.params_[k] -= lr * g
            acc = float(np.mean(np.argmax(scores(self.params_, W, P), axis=1) == T))
            self.history_.append({"epoch": epoch, "loss": total / len(T), "accuracy": acc})
            logger.debug("parser epoch %d loss %.4f acc %.4f", epoch, total / len(T), acc)
        return self

    def training_accuracy(self, X) -> float:
        """Fraction of oracle transitions the model ranks first on gold configurations."""
        check_is_fitted(self, "params_")
        sents = [s for s in check_sentences(X, parsed=True) if is_projective(s)]
        W, P, T = self._build_examples(sents)
        return float(np.mean(np.argmax(scores(self.params_, W, P), axis=1) == T))

    def parse(self, sentence: DepSentence) -> DepSentence:
        """Greedy decode with illegal transitions masked out; always 2n steps."""
        check_is_fitted(self, "params_")
        words, tags = self._sentence_ids(sentence)
        kinds = np.array([t.kind for t in self.transitions_], dtype=object)
        # a kind missing from training still needs a fallback label
        fallback = {k: Transition(k, "dep" if k is not Kind.SHIFT else "") for k in Kind}
        c = initial_config(sentence)
        while not is_terminal(c):
            legal = legal_transitions(c)
            fv = extract_features(c, words, tags)
            z = scores(self.params_, np.array([fv.word_ids]), np.array([fv.pos_ids]))[0]
            mask = np.array([k in legal for k in kinds])
            if mask.any():
                z = np.where(mask, z, -np.inf)
                t = self.transitions_[int(np.argmax(z))]
            else:
                t = fallback[sorted(legal, key=lambda k: k.value)[0]]
            c = apply(c, t)
        heads, labels = arcs_to_tree(c, len(sentence))
        return sentence.with_tree(heads, labels)

    def predict(self, X) -> List[DepSentence]:
        return [self.parse(s) for s in check_sentences(X, parsed=False)]

    def score(self, X, y=None) -> float:
        """Unlabeled attachment score (fraction) of re-parsing gold sentences."""
        gold = check_sentences(X, parsed=True)
        uas, _ = evaluate_uas_las(gold, self.predict([s.without_tree() for s in gold]))
        return uas / 100.0

    # -- persistence --------------------------------------------------------

    def save(self, path):
        check_is_fitted(self, "params_")
        header = {"hyperparameters": self.get_params(), "feature_layout": FEATURE_LAYOUT_VERSION,
                  "n_nonprojective": self.n_nonprojective_, "history": self.history_}
        fh, owned = _io.open_for(path, "wb")
        try:
            w = _io.ModelWriter(fh, MAGIC, FORMAT_VERSION, header)
            w.strings(self.word_vocab_.itos)
            w.strings(self.pos_vocab_.itos)
            w.strings(str(t) for t in self.transitions_)
            for name in ("E_word", "E_pos", "W1", "b1", "W2", "b2"):
                w.matrix(self.params_[name])
        finally:
            if owned:
                fh.close()

    @classmethod
    def load(cls, path) -> "DependencyParser":
        fh, owned = _io.open_for(path, "rb")
        try:
            r = _io.ModelReader(fh, MAGIC, FORMAT_VERSION)
            model = cls(**r.header["hyperparameters"])
            model.n_nonprojective_ = r.header["n_nonprojective"]
            model.history_ = r.header["history"]
            model.word_vocab_ = Vocabulary(r.strings())
            model.pos_vocab_ = Vocabulary(r.strings())
            model.transitions_ = [Transition.parse(s) for s in r.strings()]
            model.transition_index_ = {t: i for i, t in enumerate(model.transitions_)}
            model.params_ = {n: r.matrix() for n in ("E_word", "E_pos", "W1", "b1", "W2", "b2")}
        finally:
            if owned:
                fh.close()
        return model


def parse_treebank(parser: DependencyParser, tb) -> Treebank:
    sents = parser.predict(tb)
    return Treebank(sents, getattr(tb, "source_path", ""))
