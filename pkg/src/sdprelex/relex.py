"""LSTM relation classifier over shortest-dependency-path instances.

Every path position is embedded as word ⊕ concept-tag ⊕ dependency-label ⊕
POS, the sequence runs through a single LSTM layer, and the last hidden
state feeds a ReLU dense layer and a softmax over the nine labels.
Training is instance-at-a-time backpropagation through time with RMSProp.
Everything is float64.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import _io
from ._validation import check_positive_int, check_rate
from .corpus import LABELS
from .errors import FormatError, NumericalError
from .sdp import BIO_TAGS, SdpInstance
from .vocab import Vocabulary

logger = logging.getLogger(__name__)

UNK = "<UNK>"
UNK_ID = 0
CHANNELS = ("word", "concept", "deprel", "pos")

MAGIC = b"SDPRELEX-RE"
FORMAT_VERSION = 1


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


# -- pretrained vectors --------------------------------------------------------

@dataclass
class WordVectors:
    words: List[str]
    vectors: np.ndarray
    n_duplicates: int = 0

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, w):
        return w in self.index

    def __getitem__(self, w):
        return self.vectors[self.index[w]]


def _read_source(source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    data = source.read()
    return data.encode("utf-8") if isinstance(data, str) else data


def _parse_header(line: bytes):
    parts = line.split()
    try:
        count, dim = int(parts[0]), int(parts[1])
        if len(parts) != 2 or count < 0 or dim <= 0:
            raise ValueError
    except (ValueError, IndexError):
        raise FormatError(f"bad word2vec header {line[:80]!r}", 1) from None
    return count, dim


def load_word_vectors(source, format: str = "text") -> WordVectors:
    """Read word2vec vectors in the text or binary layout.

    Duplicate words keep their first vector; the number dropped is reported
    as ``n_duplicates``.
    """
    data = _read_source(source)
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("missing word2vec header line", 1)
    count, dim = _parse_header(data[:nl])
    words, rows = [], []
    if format == "text":
        body = [ln for ln in data[nl + 1:].decode("utf-8").split("\n") if ln.strip()]
        if len(body) != count:
            raise FormatError(f"header declares {count} vectors, body has {len(body)}")
        for lineno, ln in enumerate(body, start=2):
            parts = ln.rstrip().split(" ")
            if len(parts) != dim + 1:
                raise FormatError(f"expected {dim} values, got {len(parts) - 1}", lineno)
            try:
                rows.append([float(v) for v in parts[1:]])
            except ValueError:
                raise FormatError("non-numeric vector value", lineno) from None
            words.append(parts[0])
    elif format == "binary":
        pos = nl + 1
        width = 4 * dim
        for k in range(count):
            while pos < len(data) and data[pos:pos + 1] in (b"\n", b"\r"):
                pos += 1
            sp = data.find(b" ", pos)
            if sp < 0:
                raise FormatError(f"entry {k + 1}: truncated before word end")
            try:
                word = data[pos:sp].decode("utf-8")
            except UnicodeDecodeError:
                raise FormatError(f"entry {k + 1}: word is not UTF-8 "
                                  "(dimension inconsistent with data?)") from None
            chunk = data[sp + 1:sp + 1 + width]
            if len(chunk) != width:
                raise FormatError(f"entry {k + 1} ({word!r}): expected {dim} floats, "
                                  f"found {len(chunk) // 4}")
            rows.append(np.frombuffer(chunk, dtype="<f4").astype(np.float64))
            words.append(word)
            pos = sp + 1 + width
        if data[pos:].strip():
            raise FormatError(f"data remains after the {count} declared vectors")
    else:
        raise ValueError(f"format must be 'text' or 'binary', got {format!r}")

    seen, keep = set(), []
    for i, w in enumerate(words):
        if w not in seen:
            seen.add(w)
            keep.append(i)
    dups = len(words) - len(keep)
    if dups:
        logger.warning("%d duplicate words in vector file; kept first occurrences", dups)
    vecs = np.array(rows, dtype=np.float64).reshape(len(rows), dim)[keep]
    return WordVectors([words[i] for i in keep], vecs, dups)


def write_word_vectors(wv: WordVectors, fh, format: str = "text"):
    """Write to a binary file handle in either layout."""
    fh.write(f"{len(wv)} {wv.dim}\n".encode())
    for w, v in zip(wv.words, wv.vectors):
        if format == "text":
            fh.write((w + " " + " ".join(repr(float(x)) for x in v) + "\n").encode("utf-8"))
        else:
            fh.write(w.encode("utf-8") + b" " + np.asarray(v, dtype="<f4").tobytes() + b"\n")


# -- model pieces ---------------------------------------------------------------

@dataclass
class EmbeddingTables:
    vocabs: Dict[str, Vocabulary]
    word: np.ndarray
    concept: np.ndarray
    deprel: np.ndarray
    pos: np.ndarray

    @property
    def input_dim(self):
        return sum(getattr(self, ch).shape[1] for ch in CHANNELS)

    def ids(self, inst: SdpInstance):
        wv = self.vocabs["word"]
        words = [wv.get(w, wv.get(w.lower(), UNK_ID)) for w in inst.words]
        out = [np.array(words, dtype=np.intp)]
        for ch, seq in zip(CHANNELS[1:], (inst.concept_bio, inst.deprels, inst.pos)):
            v = self.vocabs[ch]
            out.append(np.array([v.get(x, UNK_ID) for x in seq], dtype=np.intp))
        return out


def embed_input(tables: EmbeddingTables, inst: SdpInstance) -> np.ndarray:
    """Per-position concatenation of the four channel embeddings, shape (n, D)."""
    ids = tables.ids(inst)
    return np.concatenate([getattr(tables, ch)[i] for ch, i in zip(CHANNELS, ids)], axis=1)


@dataclass
class LstmParams:
    """Gate weights stacked as rows [forget; input; candidate; output] over [h, x]."""

    W: np.ndarray  # (4H, H + D)
    b: np.ndarray  # (4H,)

    @property
    def hidden_size(self):
        return self.W.shape[0] // 4

    def _gate(self, k):
        H = self.hidden_size
        return slice(k * H, (k + 1) * H)

    W_f = property(lambda self: self.W[self._gate(0)])
    W_i = property(lambda self: self.W[self._gate(1)])
    W_c = property(lambda self: self.W[self._gate(2)])
    W_o = property(lambda self: self.W[self._gate(3)])
    b_f = property(lambda self: self.b[self._gate(0)])
    b_i = property(lambda self: self.b[self._gate(1)])
    b_c = property(lambda self: self.b[self._gate(2)])
    b_o = property(lambda self: self.b[self._gate(3)])


@dataclass
class LstmCache:
    xs: np.ndarray
    hs: np.ndarray  # (n + 1, H), hs[0] = h_0
    cs: np.ndarray  # (n + 1, H), cs[0] = C_0
    gates: np.ndarray  # (n, 4H) post-activation f, i, C̄, o


def lstm_forward(p: LstmParams, xs: np.ndarray):
    """Run the recurrence from h_0 = C_0 = 0; returns (h_1..h_n, C_n, cache)."""
    xs = np.asarray(xs, dtype=np.float64)
    H = p.hidden_size
    if xs.ndim != 2 or xs.shape[0] < 1:
        raise ValueError("lstm_forward needs a non-empty (n, D) input")
    if xs.shape[1] != p.W.shape[1] - H:
        raise ValueError(f"input dimension {xs.shape[1]} does not match gate weights "
                         f"({p.W.shape[1] - H})")
    n = xs.shape[0]
    Wh, Wx = p.W[:, :H], p.W[:, H:]
    zx = xs @ Wx.T + p.b
    hs = np.zeros((n + 1, H))
    cs = np.zeros((n + 1, H))
    gates = np.empty((n, 4 * H))
    for t in range(n):
        z = zx[t] + Wh @ hs[t]
        f = sigmoid(z[:H])
        i = sigmoid(z[H:2 * H])
        cbar = np.tanh(z[2 * H:3 * H])
        o = sigmoid(z[3 * H:])
        # forget first, then add the gated candidate
        cs[t + 1] = cs[t] * f + i * cbar
        hs[t + 1] = np.tanh(cs[t + 1]) * o
        gates[t, :H], gates[t, H:2 * H], gates[t, 2 * H:3 * H], gates[t, 3 * H:] = f, i, cbar, o
    return hs[1:], cs[-1], LstmCache(xs, hs, cs, gates)


def lstm_backward(p: LstmParams, cache: LstmCache, dh_last: np.ndarray):
    """Gradients (dW, db, dxs) given dLoss/dh_n; no loss flows into earlier h_t directly."""
    H = p.hidden_size
    n = cache.xs.shape[0]
    Wh = p.W[:, :H]
    dz = np.empty((n, 4 * H))
    dh = dh_last
    dc = np.zeros(H)
    for t in range(n - 1, -1, -1):
        g = cache.gates[t]
        f, i, cbar, o = g[:H], g[H:2 * H], g[2 * H:3 * H], g[3 * H:]
        tc = np.tanh(cache.cs[t + 1])
        dc = dc + dh * o * (1.0 - tc * tc)
        dz[t, :H] = dc * cache.cs[t] * f * (1.0 - f)
        dz[t, H:2 * H] = dc * cbar * i * (1.0 - i)
        dz[t, 2 * H:3 * H] = dc * i * (1.0 - cbar * cbar)
        dz[t, 3 * H:] = dh * tc * o * (1.0 - o)
        dh = Wh.T @ dz[t]
        dc = dc * f
    hx = np.concatenate([cache.hs[:-1], cache.xs], axis=1)
    dW = dz.T @ hx
    db = dz.sum(axis=0)
    dxs = dz @ p.W[:, H:]
    return dW, db, dxs


@dataclass
class _Forward:
    ids: list
    lstm: LstmCache
    h_last: np.ndarray
    mask: Optional[np.ndarray]
    dense_in: np.ndarray
    dense_pre: np.ndarray
    dense_out: np.ndarray
    probs: np.ndarray


class LSTMRelationClassifier(BaseEstimator, ClassifierMixin):
    """Nine-way relation classifier over SDP instances.

    Parameters
    ----------
    hidden_size : int
        LSTM units.
    dense_size : int
        Units in the ReLU layer between the LSTM and the softmax.
    embedding_dim : int
        Dimension of the concept, dependency and POS embeddings, and of the
        word embeddings when no pretrained vectors are supplied.
    dropout : float
        Inverted dropout on the final LSTM state during training.
    epochs, learning_rate, rho, epsilon :
        RMSProp schedule; one update per instance.
    init_scale : float
        Half-width of the uniform initialisation of LSTM and dense weights.
    word_vectors : WordVectors, optional
        Pretrained word vectors, fine-tuned during training.
    random_state : int
        Seed for initialisation, shuffling and dropout masks.
    """

    def __init__(self, hidden_size=512, dense_size=256, embedding_dim=50, dropout=0.3, epochs=50,
                 learning_rate=0.001, rho=0.9, epsilon=1e-8, init_scale=0.08, word_vectors=None,
                 random_state=0):
        self.hidden_size = hidden_size
        self.dense_size = dense_size
        self.embedding_dim = embedding_dim
        self.dropout = dropout
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.rho = rho
        self.epsilon = epsilon
        self.init_scale = init_scale
        self.word_vectors = word_vectors
        self.random_state = random_state

    # -- construction -----------------------------------------------------

    def _init_model(self, instances, rng):
        wv = self.word_vectors
        words = sorted({w for inst in instances for w in inst.words})
        if wv is not None:
            words = sorted(set(words) | set(wv.words))
        vocabs = {
            "word": Vocabulary(words, specials=(UNK,)),
            "concept": Vocabulary(BIO_TAGS, specials=(UNK,)),
            "deprel": Vocabulary(sorted({d for i in instances for d in i.deprels}), specials=(UNK,)),
            "pos": Vocabulary(sorted({p for i in instances for p in i.pos}), specials=(UNK,)),
        }
        d = self.embedding_dim
        dw = wv.dim if wv is not None else d
        word = rng.uniform(-0.05, 0.05, (len(vocabs["word"]), dw))
        if wv is not None:
            for w, row in vocabs["word"].stoi.items():
                if w in wv:
                    word[row] = wv[w]
        self.tables_ = EmbeddingTables(
            vocabs, word,
            rng.uniform(-0.05, 0.05, (len(vocabs["concept"]), d)),
            rng.uniform(-0.05, 0.05, (len(vocabs["deprel"]), d)),
            rng.uniform(-0.05, 0.05, (len(vocabs["pos"]), d)),
        )
        H, D, s = self.hidden_size, self.tables_.input_dim, self.init_scale
        self.lstm_ = LstmParams(rng.uniform(-s, s, (4 * H, H + D)), np.zeros(4 * H))
        self.W_dense_ = rng.uniform(-s, s, (self.dense_size, H))
        self.b_dense_ = np.zeros(self.dense_size)
        self.W_out_ = rng.uniform(-s, s, (len(LABELS), self.dense_size))
        self.b_out_ = np.zeros(len(LABELS))

    def parameters(self) -> Dict[str, np.ndarray]:
        """Every trainable array by name (the live objects, not copies)."""
        t = self.tables_
        return {"E_word": t.word, "E_concept": t.concept, "E_deprel": t.deprel, "E_pos": t.pos,
                "W_lstm": self.lstm_.W, "b_lstm": self.lstm_.b,
                "W_dense": self.W_dense_, "b_dense": self.b_dense_,
                "W_out": self.W_out_, "b_out": self.b_out_}

    # -- forward / backward -----------------------------------------------

    def _forward(self, inst: SdpInstance, mask=None) -> _Forward:
        if len(inst) == 0:
            raise ValueError("empty SDP instance")
        ids = self.tables_.ids(inst)
        xs = np.concatenate([getattr(self.tables_, ch)[i] for ch, i in zip(CHANNELS, ids)], axis=1)
        hs, _, cache = lstm_forward(self.lstm_, xs)
        h = hs[-1]
        dense_in = h * mask if mask is not None else h
        pre = self.W_dense_ @ dense_in + self.b_dense_
        out = np.maximum(pre, 0.0)
        probs = softmax(self.W_out_ @ out + self.b_out_)
        return _Forward(ids, cache, h, mask, dense_in, pre, out, probs)

    def _backward(self, fw: _Forward, target: int):
        dlogits = fw.probs.copy()
        dlogits[target] -= 1.0
        grads = {"W_out": np.outer(dlogits, fw.dense_out), "b_out": dlogits}
        dpre = (self.W_out_.T @ dlogits) * (fw.dense_pre > 0)
        grads["W_dense"] = np.outer(dpre, fw.dense_in)
        grads["b_dense"] = dpre
        dh = self.W_dense_.T @ dpre
        if fw.mask is not None:
            dh = dh * fw.mask
        dW, db, dxs = lstm_backward(self.lstm_, fw.lstm, dh)
        grads["W_lstm"], grads["b_lstm"] = dW, db
        sparse = {}
        col = 0
        for ch, ids in zip(CHANNELS, fw.ids):
            width = getattr(self.tables_, ch).shape[1]
            sparse["E_" + ch] = (ids, dxs[:, col:col + width])
            col += width
        return grads, sparse

    def _dropout_mask(self, rng):
        if self.dropout <= 0:
            return None
        keep = 1.0 - self.dropout
        return (rng.random(self.hidden_size) < keep) / keep

    def loss_and_grads(self, inst: SdpInstance, label: str, mask=None):
        """Cross-entropy of one instance and dense gradients for every parameter."""
        target = LABELS.index(label)
        fw = self._forward(inst, mask)
        grads, sparse = self._backward(fw, target)
        params = self.parameters()
        for name, (ids, rows) in sparse.items():
            g = np.zeros_like(params[name])
            np.add.at(g, ids, rows)
            grads[name] = g
        return -np.log(fw.probs[target]), grads

    def forward(self, inst: SdpInstance, training: bool = False, rng=None) -> np.ndarray:
        """Class probabilities; with ``training`` a fresh dropout mask is drawn."""
        check_is_fitted(self, "lstm_")
        mask = None
        if training:
            mask = self._dropout_mask(rng if rng is not None else np.random.default_rng())
        return self._forward(inst, mask).probs

    # -- estimator API ----------------------------------------------------

    def fit(self, X: Sequence[SdpInstance], y=None):
        for name in ("hidden_size", "dense_size", "embedding_dim"):
            check_positive_int(name, getattr(self, name))
        check_positive_int("epochs", self.epochs, minimum=0)
        check_rate("dropout", self.dropout)
        instances = list(X)
        if not instances:
            raise ValueError("no training instances")
        labels = list(y) if y is not None else [inst.label for inst in instances]
        if len(labels) != len(instances):
            raise ValueError(f"{len(instances)} instances but {len(labels)} labels")
        for lab in labels:
            if lab not in LABELS:
                raise ValueError(f"unknown relation label {lab!r}")
        for k, inst in enumerate(instances):
            if len(inst) == 0:
                raise ValueError(f"instance {k} is empty")
        targets = np.array([LABELS.index(lab) for lab in labels])

        self.classes_ = np.array(LABELS)
        rng = np.random.default_rng(self.random_state)
        self._init_model(instances, rng)
        params = self.parameters()
        acc = {k: np.zeros_like(v) for k, v in params.items()}
        lr, rho, eps = self.learning_rate, self.rho, self.epsilon
        scratch = np.empty(max(v.size for k, v in params.items() if not k.startswith("E_")))
        self.history_ = []
        for epoch in range(1, self.epochs + 1):
            total = 0.0
            for k in rng.permutation(len(instances)):
                fw = self._forward(instances[k], self._dropout_mask(rng))
                loss = -np.log(fw.probs[targets[k]])
                if not np.isfinite(loss):
                    raise NumericalError(f"non-finite loss at epoch {epoch}, instance {k}")
                total += loss
                grads, sparse = self._backward(fw, targets[k])
                for name, g in grads.items():
                    _rmsprop(params[name], acc[name], g, lr, rho, eps, scratch)
                for name, (ids, rows) in sparse.items():
                    uniq, inv = np.unique(ids, return_inverse=True)
                    g = np.zeros((len(uniq), rows.shape[1]))
                    np.add.at(g, inv, rows)
                    a = acc[name][uniq]
                    a *= rho
                    a += (1.0 - rho) * g * g
                    acc[name][uniq] = a
                    params[name][uniq] -= lr * g / (np.sqrt(a) + eps)
            pred = np.array([np.argmax(self._forward(inst).probs) for inst in instances])
            record = {"epoch": epoch, "loss": float(total / len(instances)),
                      "accuracy": float(np.mean(pred == targets))}
            self.history_.append(record)
            logger.debug("relex epoch %(epoch)d loss %(loss).4f acc %(accuracy).4f", record)
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "lstm_")
        return np.array([self._forward(inst).probs for inst in X]).reshape(-1, len(LABELS))

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    # -- persistence ------------------------------------------------------

    def save(self, path):
        check_is_fitted(self, "lstm_")
        hyper = {k: v for k, v in self.get_params().items() if k != "word_vectors"}
        header = {"hyperparameters": hyper, "labels": list(LABELS), "history": self.history_,
                  "optimizer": {"name": "rmsprop", "learning_rate": self.learning_rate,
                                "rho": self.rho, "epsilon": self.epsilon}}
        fh, owned = _io.open_for(path, "wb")
        try:
            w = _io.ModelWriter(fh, MAGIC, FORMAT_VERSION, header)
            for ch in CHANNELS:
                w.strings(self.tables_.vocabs[ch].itos)
            for arr in self.parameters().values():
                w.matrix(arr)
        finally:
            if owned:
                fh.close()

    @classmethod
    def load(cls, path) -> "LSTMRelationClassifier":
        fh, owned = _io.open_for(path, "rb")
        try:
            r = _io.ModelReader(fh, MAGIC, FORMAT_VERSION)
            if r.header["labels"] != list(LABELS):
                raise FormatError("model label set differs from this library's")
            model = cls(**r.header["hyperparameters"])
            model.history_ = r.header["history"]
            vocabs = {ch: Vocabulary(r.strings()) for ch in CHANNELS}
            arrays = [r.matrix() for _ in range(10)]
        finally:
            if owned:
                fh.close()
        model.tables_ = EmbeddingTables(vocabs, *arrays[:4])
        model.lstm_ = LstmParams(arrays[4], arrays[5])
        model.W_dense_, model.b_dense_, model.W_out_, model.b_out_ = arrays[6:]
        model.classes_ = np.array(LABELS)
        return model


def _rmsprop(p, acc, g, lr, rho, eps, scratch=None):
    """In-place RMSProp step: acc <- rho*acc + (1-rho)*g^2; p <- p - lr*g/(sqrt(acc)+eps)."""
    tmp = scratch[:g.size].reshape(g.shape) if scratch is not None else np.empty_like(g)
    acc *= rho
    np.multiply(g, g, out=tmp)
    tmp *= 1.0 - rho
    acc += tmp
    np.sqrt(acc, out=tmp)
    tmp += eps
    np.divide(g, tmp, out=tmp)
    tmp *= lr
    p -= tmp
