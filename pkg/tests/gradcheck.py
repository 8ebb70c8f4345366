"""Finite-difference gradient checks for both networks (tiny configurations)."""

import numpy as np

from conftest import numeric_grad, relative_error
from sdprelex import parser as dp
from sdprelex.relex import LSTMRelationClassifier
from sdprelex.sdp import SdpInstance


def parser_gradient_errors(seed=0, n_words=10, n_tags=6, n_out=5, dim=3, hidden=4, batch=6):
    rng = np.random.default_rng(seed)
    params = dp.init_params(n_words, n_tags, n_out, dim, hidden, rng)
    # widen the weights so most ReLUs sit far from their kink
    for k in ("E_word", "E_pos"):
        params[k] *= 5.0
    W = rng.integers(0, n_words, (batch, dp.N_SLOTS))
    P = rng.integers(0, n_tags, (batch, dp.N_SLOTS))
    T = rng.integers(0, n_out, batch)
    _, grads = dp.loss_and_grads(params, W, P, T)
    errors = {}
    for name, arr in params.items():
        num = numeric_grad(lambda: dp.loss_and_grads(params, W, P, T)[0], arr)
        errors[name] = relative_error(grads[name], num)
    return errors


def tiny_instance():
    return SdpInstance(["aspirin", "treated", "severe", "headache"],
                       ["B_Treatment", "O", "B_Problem", "I_Problem"],
                       ["dobj", "root", "amod", "nsubj"],
                       ["NN", "VBD", "JJ", "NN"], "TrAP")


def relex_gradient_errors(seed=0, hidden=3, embed=2, dense=4):
    inst = tiny_instance()
    model = LSTMRelationClassifier(hidden_size=hidden, dense_size=dense, embedding_dim=embed,
                                   dropout=0.0, init_scale=0.5, random_state=seed)
    model._init_model([inst], np.random.default_rng(seed))
    params = model.parameters()
    for k in ("E_word", "E_concept", "E_deprel", "E_pos"):
        params[k] *= 10.0
    _, grads = model.loss_and_grads(inst, inst.label)
    errors = {}
    for name, arr in params.items():
        num = numeric_grad(lambda: model.loss_and_grads(inst, inst.label)[0], arr)
        errors[name] = relative_error(grads[name], num)
    return errors
