"""Relation extraction over shortest dependency paths in clinical text."""

from .corpus import LABELS, NONE, RELATION_TYPES, Document, RelationRecord, generate_candidates
from .crossval import FoldPlan, crossval, make_fold_plan
from .errors import (DegenerateTestError, FormatError, IllegalTransitionError, NonProjectiveError,
                     NumericalError, SdpRelexError, TreeError)
from .metrics import EvalReport, confusion_matrix, prf1
from .parser import DependencyParser, evaluate_uas_las
from .relex import LSTMRelationClassifier, WordVectors, load_word_vectors
from .sdp import ConceptSpan, SdpInstance, build_undirected_graph, extract_sdp, shortest_path
from .stats import paired_t_test
from .synth import generate_synthetic_corpus, generate_synthetic_treebank
from .transition import ParserConfiguration, apply, initial_config, oracle_sequence
from .treebank import DepSentence, Token, Treebank, is_projective, read_conllu, write_conllu

__version__ = "0.1.0"
