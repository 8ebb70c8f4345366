"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 malformed data, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .corpus import format_candidate, load_corpus
from .crossval import crossval, document_instances, make_fold_plan
from .errors import NumericalError, SdpRelexError
from .metrics import confusion_matrix, prf1, write_report
from .parser import DependencyParser, evaluate_uas_las, parse_treebank
from .relex import LSTMRelationClassifier, load_word_vectors
from .sdp import read_instances, write_instances
from .stats import paired_t_test
from .synth import generate_synthetic_corpus
from .treebank import Treebank, is_projective, read_conllu, write_conllu

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

log = logging.getLogger("sdprelex")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_out(path, data: bytes):
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _open_text_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _emit(report: dict, args):
    write_report(report, sys.stdout, args.report)


def _relex_estimator(args) -> LSTMRelationClassifier:
    wv = None
    if args.embeddings:
        wv = load_word_vectors(args.embeddings, args.format)
        log.info("loaded %d vectors of dim %d (%d duplicates skipped)", len(wv), wv.dim,
                 wv.n_duplicates)
    return LSTMRelationClassifier(hidden_size=args.hidden, dense_size=args.dense,
                                  embedding_dim=args.embedding_dim, dropout=args.dropout,
                                  epochs=args.epochs, learning_rate=args.learning_rate,
                                  word_vectors=wv, random_state=args.seed)


def _load_parser(path):
    return DependencyParser.load(path) if path else None


def _instances_from(path, parser_path):
    """(records or None, instances) from a corpus directory or an SDP instance file."""
    p = Path(path)
    if p.is_dir():
        parser = _load_parser(parser_path)
        pairs = [x for doc in load_corpus(p) for x in document_instances(doc, parser)]
        return [r for r, _ in pairs], [i for _, i in pairs]
    with open(p, encoding="utf-8") as fh:
        return None, read_instances(fh)


# -- subcommands ------------------------------------------------------------

def cmd_convert(args):
    tb = read_conllu(args.input)
    kept = [s for s in tb if not args.projective_only or is_projective(s)]
    log.info("%d sentences read, %d written", len(tb), len(kept))
    _write_out(args.output, write_conllu(Treebank(kept)))


def cmd_train_parser(args):
    tb = read_conllu(args.treebank)
    model = DependencyParser(embedding_dim=args.embedding_dim, hidden_size=args.hidden,
                             epochs=args.epochs, batch_size=args.batch_size,
                             learning_rate=args.learning_rate, random_state=args.seed)
    model.fit(list(tb))
    model.save(args.model)
    last = model.history_[-1] if model.history_ else {}
    _emit({"sentences": len(tb), "excluded_nonprojective": model.n_nonprojective_,
           "transitions": len(model.transitions_),
           "final_loss": float(last.get("loss", float("nan"))),
           "final_accuracy": float(last.get("accuracy", float("nan")))}, args)


def cmd_parse(args):
    model = DependencyParser.load(args.model)
    tb = read_conllu(args.input, require_heads=False)
    _write_out(args.output, write_conllu(parse_treebank(model, tb)))


def cmd_eval_parser(args):
    gold = read_conllu(args.gold)
    if args.predicted:
        pred = list(read_conllu(args.predicted))
    elif args.model:
        pred = list(parse_treebank(DependencyParser.load(args.model), gold))
    else:
        args._parser.error("eval-parser needs --model or --predicted")
    uas, las = evaluate_uas_las(list(gold), pred)
    _emit({"sentences": len(gold), "tokens": sum(len(s) for s in gold), "uas": uas,
           "las": las}, args)


def cmd_extract_sdp(args):
    parser = _load_parser(args.parser)
    fh, owned = _open_text_out(args.output)
    try:
        n = 0
        for doc in load_corpus(args.corpus):
            insts = [i for _, i in document_instances(doc, parser)]
            write_instances(insts, fh)
            n += len(insts)
    finally:
        if owned:
            fh.close()
    log.info("wrote %d SDP instances", n)


def cmd_train_re(args):
    _, instances = _instances_from(args.input, args.parser)
    model = _relex_estimator(args).fit(instances)
    model.save(args.model)
    last = model.history_[-1] if model.history_ else {}
    _emit({"instances": len(instances),
           "final_loss": float(last.get("loss", float("nan"))),
           "final_accuracy": float(last.get("accuracy", float("nan")))}, args)


def cmd_predict_re(args):
    model = LSTMRelationClassifier.load(args.model)
    records, instances = _instances_from(args.input, args.parser)
    pred = list(model.predict(instances)) if instances else []
    fh, owned = _open_text_out(args.output)
    try:
        if records is not None:
            # gold columns first, prediction appended; predictions need not fit the argument types
            for r, lab in zip(records, pred):
                fh.write(f"{format_candidate(r)}\t{lab}\n")
        else:
            write_instances([i.__class__(i.words, i.concept_bio, i.deprels, i.pos, lab)
                             for i, lab in zip(instances, pred)], fh)
    finally:
        if owned:
            fh.close()
    if args.evaluate:
        gold = [i.label for i in instances]
        if any(g is None for g in gold):
            raise ValueError("--evaluate needs gold labels on every instance")
        report = prf1(confusion_matrix(gold, pred))
        write_report(report.to_dict(), sys.stderr, args.report)


def cmd_crossval(args):
    docs = load_corpus(args.corpus)
    plan = make_fold_plan([d.doc_id for d in docs], k=args.folds, seed=args.seed)
    result = crossval(docs, plan, _load_parser(args.parser), _relex_estimator(args))
    _emit(result.to_dict(), args)


def _scores(spec: str):
    p = Path(spec)
    text = p.read_text(encoding="utf-8") if p.is_file() else spec
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as e:
        raise ValueError(f"cannot read scores from {spec!r}: {e}") from None


def cmd_ttest(args):
    res = paired_t_test(_scores(args.scores_a), _scores(args.scores_b))
    _emit({"t": res.t, "p": res.p, "df": res.df, "mean_difference": res.mean_difference}, args)


def cmd_synth(args):
    corpus = generate_synthetic_corpus(n_docs=args.docs, seed=args.seed)
    corpus.write(args.output)
    _emit({"documents": len(corpus.documents), "sentences": len(corpus.treebank),
           "relations": sum(len(d.relations) for d in corpus.documents),
           "seed": args.seed}, args)


# -- argument wiring --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sdprelex", description="Shortest-dependency-path relation extraction.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func, _parser=p)
        p.add_argument("--report", choices=("tsv", "json"), default="tsv")
        return p

    def relex_flags(p, epochs=50):
        p.add_argument("--epochs", type=int, default=epochs)
        p.add_argument("--hidden", type=int, default=512)
        p.add_argument("--dense", type=int, default=256)
        p.add_argument("--embedding-dim", type=int, default=50)
        p.add_argument("--dropout", type=float, default=0.3)
        p.add_argument("--learning-rate", type=float, default=0.001)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--embeddings", help="pretrained word2vec file")
        p.add_argument("--format", choices=("text", "binary"), default="text")
        p.add_argument("--parser", help="parser model; gold trees are used when omitted")

    p = add("convert", cmd_convert, "validate a CoNLL-U file and re-emit it canonically")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--projective-only", action="store_true")

    p = add("train-parser", cmd_train_parser, "train the transition parser on gold trees")
    p.add_argument("treebank")
    p.add_argument("--model", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--hidden", type=int, default=200)
    p.add_argument("--embedding-dim", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)

    p = add("parse", cmd_parse, "parse POS-tagged CoNLL-U")
    p.add_argument("input")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--output")

    p = add("eval-parser", cmd_eval_parser, "UAS/LAS against a gold treebank")
    p.add_argument("gold")
    p.add_argument("--model")
    p.add_argument("--predicted")

    p = add("extract-sdp", cmd_extract_sdp, "dump SDP instances for every candidate pair")
    p.add_argument("corpus")
    p.add_argument("--parser")
    p.add_argument("-o", "--output")

    p = add("train-re", cmd_train_re, "train the relation classifier")
    p.add_argument("input", help="i2b2 corpus directory or SDP instance file")
    p.add_argument("--model", required=True)
    relex_flags(p)

    p = add("predict-re", cmd_predict_re, "label candidate pairs")
    p.add_argument("input", help="i2b2 corpus directory or SDP instance file")
    p.add_argument("--model", required=True)
    p.add_argument("--parser")
    p.add_argument("-o", "--output")
    p.add_argument("--evaluate", action="store_true", help="score against gold labels (stderr)")

    p = add("crossval", cmd_crossval, "document-level k-fold cross-validation")
    p.add_argument("corpus")
    p.add_argument("--folds", type=int, default=5)
    relex_flags(p)

    p = add("ttest", cmd_ttest, "paired t-test on per-fold scores")
    p.add_argument("scores_a", help="file or comma-separated list")
    p.add_argument("scores_b", help="file or comma-separated list")

    p = add("synth", cmd_synth, "write a synthetic i2b2-style corpus")
    p.add_argument("output")
    p.add_argument("--docs", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except NumericalError as e:
        print(f"sdprelex: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SdpRelexError, ValueError, KeyError, OSError) as e:
        print(f"sdprelex: {e}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
