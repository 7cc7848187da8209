"""Command-line driver: embed, train, parse, eval, tune-rank.

Results go to ``OUT/{lang}/{mode}/`` (model.npz, train_log.tsv, config.json,
predictions.tsv); embeddings to ``OUT/{lang}/embeddings/``.

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .corpus import (TEST_SIZE, TRAIN_SIZE, CorpusFormatError, auxiliary_corpus, dev_split,
                     load_corpus, standard_split, tokenize)
from .embeddings import (COOC_MODES, DEFAULT_RANKS, build_cooc, load_embeddings,
                         load_embeddings_npz, unit_embeddings, write_embeddings)
from .evaluator import evaluate, write_predictions
from .hybridtree import GRAMMAR_MODES, decode
from .logic import MRLError, serialize_mrl
from .model_io import ModelVersionError, load_model, save_model
from .trainer import MAX_ITERATIONS, NumericalError, TrainConfig, train, tune_rank

MODES = ("ht-d", "ht-d+o", "ht-d+nn", "ht-d+nn+o")
DEFAULT_NN_WINDOW = 2
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("hybridsp")


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p, mode=True):
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--lang", required=True)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--train-size", type=int, default=TRAIN_SIZE)
    p.add_argument("--test-size", type=int, default=TEST_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    if mode:
        p.add_argument("--mode", choices=MODES, default="ht-d")


def _training(p):
    p.add_argument("--rank", type=int, help="embedding rank d (default: per-language table)")
    p.add_argument("--nn-window", type=int, choices=(0, 1, 2),
                   help=f"neural window J for +nn modes (default {DEFAULT_NN_WINDOW})")
    p.add_argument("--iterations", type=int, default=MAX_ITERATIONS)
    p.add_argument("--l2", type=float, default=0.01)
    p.add_argument("--cooc-mode", choices=COOC_MODES, default="freq")
    p.add_argument("--grammar", choices=GRAMMAR_MODES, default="observed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridsp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="build unit embeddings from the auxiliary languages")
    _common(p, mode=False)
    p.add_argument("--rank", type=int)
    p.add_argument("--cooc-mode", choices=COOC_MODES, default="freq")

    p = sub.add_parser("train", help="train a parser on the standard split")
    _common(p)
    _training(p)
    p.add_argument("--embeddings", type=Path, help="embedding table (.tsv or .npz) for +o modes")
    p.add_argument("--dev-select", action="store_true",
                   help="hold out 20%% of train as dev and keep the best-dev iteration")

    p = sub.add_parser("eval", help="decode the test split and score it")
    _common(p)
    p.add_argument("--model", type=Path)

    p = sub.add_parser("parse", help="parse one sentence")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("sentence")

    p = sub.add_parser("tune-rank", help="select the embedding rank on a dev split")
    _common(p)
    _training(p)
    p.add_argument("--candidates", type=int, nargs="+", default=[10, 20, 30])
    return parser


def _config(args) -> TrainConfig:
    nn = None
    if "+nn" in args.mode:
        nn = DEFAULT_NN_WINDOW if args.nn_window is None else args.nn_window
    return TrainConfig(max_iterations=args.iterations, l2=args.l2, seed=args.seed, nn_window=nn,
                       rank=args.rank, grammar=args.grammar, threads=args.threads,
                       cooc_mode=args.cooc_mode)


def _load(args):
    corpus = load_corpus(args.corpus)
    if args.lang not in corpus.languages:
        raise DataError(f"language {args.lang!r} not in corpus (have {', '.join(corpus.languages)})")
    return corpus


def _auxiliary_embeddings(corpus, lang, rank, cooc_mode):
    aux = auxiliary_corpus(corpus, lang)
    if not aux.instances:
        raise DataError(f"no auxiliary language data for target {lang!r}")
    cooc = build_cooc(aux, cooc_mode)
    limit = min(cooc.counts.shape)
    if rank is None:
        rank = min(DEFAULT_RANKS.get(lang, 10), limit)
    elif not 1 <= rank <= limit:
        raise DataError(f"rank {rank} outside 1..{limit} for a {cooc.counts.shape} co-occurrence matrix")
    return unit_embeddings(cooc, rank)


def cmd_embed(args) -> int:
    corpus = _load(args)
    emb = _auxiliary_embeddings(corpus, args.lang, args.rank, args.cooc_mode)
    path = write_embeddings(emb, args.out / args.lang / "embeddings")
    print(f"{len(emb.units)} units, rank {emb.rank} -> {path}")
    return EXIT_OK


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_train(args) -> int:
    corpus = _load(args)
    config = _config(args)
    split = standard_split(corpus, args.lang, args.train_size, args.test_size)
    dev = None
    if args.dev_select:
        split = dev_split(split, args.seed)
        dev = corpus.select(args.lang, split.dev_ids)
    data = corpus.select(args.lang, split.train_ids)
    emb = None
    if args.mode.endswith("+o"):
        if args.embeddings is not None:
            loader = load_embeddings_npz if args.embeddings.suffix == ".npz" else load_embeddings
            emb = loader(args.embeddings)
        else:
            emb = _auxiliary_embeddings(corpus, args.lang, args.rank, args.cooc_mode)
    report = train(data, config, emb, dev=dev)
    out = args.out / args.lang / args.mode
    out.mkdir(parents=True, exist_ok=True)
    snapshot = {"corpus": str(args.corpus), "lang": args.lang, "mode": args.mode,
                "train_size": args.train_size, "test_size": args.test_size,
                "dev_ids": list(split.dev_ids), "rank": None if emb is None else emb.rank,
                "max_iterations": config.max_iterations, "l2": config.l2, "seed": config.seed,
                "nn_window": config.nn_window, "grammar": config.grammar,
                "cooc_mode": config.cooc_mode, "iterations_run": len(report.objectives),
                "selected_iteration": report.best_iteration, "skipped": report.skipped}
    save_model(report.params, out / "model.npz", snapshot)
    (out / "train_log.tsv").write_text("\n".join(report.log_lines()) + "\n", encoding="utf-8")
    _write_json(out / "config.json", snapshot)
    print(f"trained {args.mode} on {len(data)} {args.lang} instances: "
          f"{len(report.objectives)} iterations, objective {report.objectives[-1]:.6f}, "
          f"{report.skipped} skipped -> {out / 'model.npz'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    corpus = _load(args)
    model = args.model or args.out / args.lang / args.mode / "model.npz"
    params, _ = load_model(model)
    split = standard_split(corpus, args.lang, args.train_size, args.test_size)
    test = corpus.select(args.lang, split.test_ids)
    preds = [decode(inst.tokens, params) for inst in test]
    golds = [inst.tree for inst in test]
    result = evaluate(preds, golds)
    out = Path(model).parent / "predictions.tsv"
    write_predictions(out, [inst.id for inst in test], preds, golds)
    print(f"{args.lang} {args.mode} exact match: {result.summary()}")
    print(f"predictions -> {out}")
    return EXIT_OK


def cmd_parse(args) -> int:
    params, _ = load_model(args.model)
    tree = decode(tokenize(args.sentence), params)
    if tree is None:
        print("no parse", file=sys.stderr)
        return EXIT_OK
    print(serialize_mrl(tree))
    return EXIT_OK


def cmd_tune_rank(args) -> int:
    corpus = _load(args)
    report = tune_rank(corpus, args.lang, args.candidates, _config(args),
                       train_size=args.train_size, test_size=args.test_size)
    out = args.out / args.lang
    out.mkdir(parents=True, exist_ok=True)
    lines = ["rank\tdev_f1"] + [f"{d}\t{f:.6f}" for d, f in sorted(report.dev_f1.items())]
    (out / "tune_rank.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines[1:]:
        print(line)
    print(f"selected rank {report.best}")
    return EXIT_OK


COMMANDS = {"embed": cmd_embed, "train": cmd_train, "eval": cmd_eval, "parse": cmd_parse,
            "tune-rank": cmd_tune_rank}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, CorpusFormatError, MRLError, ModelVersionError, OSError,
            KeyError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
