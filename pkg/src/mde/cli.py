"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.

Run settings resolve in three layers: TrainConfig defaults, then a
``key=value`` config file (--config), then explicit command-line flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import logging
import os
import sys
import typing

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint, save_optimizer_state
from .data import build_filter_index, load_triples
from .errors import ConfigError, DataError, NumericalError
from .evaluation import evaluate, format_reports, write_reports_csv
from .patterns import PATTERNS, PatternSpec, write_pattern_dataset
from .training import (TrainConfig, fit_ground_truth, ground_truth_config,
                       train)

logger = logging.getLogger(__name__)

_FIELD_TYPES = typing.get_type_hints(TrainConfig)
_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems by raising, so they map to exit 1."""

    def error(self, message):
        raise ConfigError(message)


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _coerce(name: str, raw: str):
    """Parse a raw string into the type of the named TrainConfig field."""
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    typ = _FIELD_TYPES[name]
    try:
        if typ is bool:
            return _parse_bool(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        # remaining fields are strings / optional strings
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from exc


def read_config_file(path) -> dict:
    """Flat key=value file; # starts a comment, blank lines are skipped."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    mapping = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(
                f"{path}:{lineno}: expected key=value, got {text!r}")
        key, raw = text.split("=", 1)
        mapping[key.strip()] = _coerce(key.strip(), raw.strip())
    return mapping


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group(
        "training options", "override config-file and built-in defaults")
    for name, field in _FIELDS.items():
        group.add_argument(f"--{name.replace('_', '-')}", dest=name,
                           metavar="V", default=argparse.SUPPRESS,
                           help=f"(default: {field.default})")


def resolve_config(args) -> TrainConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for name in _FIELDS:
        if hasattr(args, name):
            values[name] = _coerce(name, str(getattr(args, name)))
    try:
        return TrainConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(path, command: str, config: TrainConfig,
                    datasets: dict, extra: dict | None = None) -> None:
    """Record everything needed to reproduce a run, one key: value per line."""
    lines = [f"code_version: {__version__}", f"command: {command}"]
    for label, file_path in sorted(datasets.items()):
        lines.append(f"{label}_file: {file_path}")
        lines.append(f"{label}_sha256: {_sha256(file_path)}")
    for key, value in sorted((extra or {}).items()):
        lines.append(f"{key}: {value}")
    for key, value in sorted(config.to_dict().items()):
        lines.append(f"config.{key}: {value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_train(args) -> None:
    config = resolve_config(args)
    train_set, vocab = load_triples(args.train)
    datasets = {"train": args.train}
    triples = train_set.triples
    if args.valid:
        valid_set, vocab = load_triples(args.valid, vocab=vocab, role="valid")
        datasets["valid"] = args.valid
    os.makedirs(args.out, exist_ok=True)
    if config.checkpoint_dir is None:
        config = config.replace(
            checkpoint_dir=os.path.join(args.out, "checkpoints"))
    _write_manifest(
        os.path.join(args.out, "manifest.txt"),
        " ".join(["mde"] + (args.argv or [])), config, datasets,
        {"n_entities": vocab.n_entities, "n_relations": vocab.n_relations,
         "n_train_triples": len(train_set)})
    result = train(triples, vocab.n_entities, vocab.n_relations, config,
                   vocab=vocab)
    model_path = os.path.join(args.out, "model.mde")
    save_checkpoint(model_path, result.embeddings, config=config,
                    loss_state=result.loss_state, vocab=vocab,
                    epoch=len(result.history))
    if result.optimizer is not None:
        save_optimizer_state(model_path + ".opt", result.optimizer)
    result.history.write_csv(os.path.join(args.out, "history.csv"))
    last = len(result.history) - 1
    print(f"trained {len(result.history)} epochs on {len(triples)} triples")
    print(f"final loss_pos={result.history.loss_pos[last]:.4f} "
          f"loss_neg={result.history.loss_neg[last]:.4f} "
          f"total={result.history.total[last]:.4f}")
    print(f"final limits: positive={result.loss_state.positive_limit:.4f} "
          f"negative={result.loss_state.negative_limit:.4f}")
    print(f"model: {model_path}")


def _load_with_known_vocab(path, vocab, role):
    """Load a split whose names must already exist in the vocabulary."""
    before = (vocab.n_entities, vocab.n_relations)
    triple_set, vocab = load_triples(path, vocab=vocab, role=role)
    after = (vocab.n_entities, vocab.n_relations)
    if after != before:
        raise DataError(
            f"{path} mentions {after[0] - before[0]} entities and "
            f"{after[1] - before[1]} relations unknown to the model")
    return triple_set


def cmd_evaluate(args) -> None:
    ckpt = load_checkpoint(args.model)
    if ckpt.vocab is None:
        raise DataError(f"{args.model} stores no entity/relation names; "
                        "cannot map a named dataset onto it")
    vocab = ckpt.vocab
    test_set = _load_with_known_vocab(args.test, vocab, "test")
    if args.setting == "both":
        settings = ("raw", "filtered")
    else:
        settings = tuple(s.strip() for s in args.setting.split(","))
        for setting in settings:
            if setting not in ("raw", "filtered"):
                raise ConfigError(f"unknown setting {setting!r}; choose "
                                  "raw, filtered, both, or a comma list")
    filter_index = None
    if "filtered" in settings:
        if not args.train:
            raise ConfigError("filtered evaluation needs --train (and "
                              "optionally --valid) to build the filter")
        train_set = _load_with_known_vocab(args.train, vocab, "train")
        valid_set = None
        if args.valid:
            valid_set = _load_with_known_vocab(args.valid, vocab, "valid")
        filter_index = build_filter_index(train_set, valid_set, test_set)
    reports = evaluate(test_set.triples, ckpt.embeddings, ckpt.score_config,
                       filter_index=filter_index, settings=settings,
                       threads=args.threads)
    print(format_reports(reports))
    if args.csv:
        write_reports_csv(reports, args.csv)
        print(f"wrote {args.csv}")


def cmd_generate(args) -> None:
    n_relations = args.relations
    if n_relations is None:
        n_relations = {"inversion": 2, "composition": 3}.get(args.pattern, 1)
    spec = PatternSpec(n_entities=args.entities, pattern=args.pattern,
                       n_relations=n_relations, density=args.density,
                       holdout_fraction=args.holdout_fraction, seed=args.seed)
    manifest = write_pattern_dataset(spec, args.out)
    print(f"wrote {args.out}: {manifest['n_train']} train triples, "
          f"{manifest['n_holdout']} {manifest['holdout_kind']} holdout "
          f"triples, {manifest['n_entities']} entities, "
          f"{manifest['n_relations']} relations")


def cmd_fit_ground_truth(args) -> None:
    facts, vocab = load_triples(args.facts)
    config = ground_truth_config(len(facts), dim=args.dim,
                                 epochs=args.epochs, seed=args.seed,
                                 lr=args.lr, gamma1=args.gamma1,
                                 gamma2=args.gamma2)
    emb, report = fit_ground_truth(facts.triples, vocab.n_entities,
                                   vocab.n_relations, config=config)
    print(f"separated: {str(report.separated).lower()}")
    print(f"epochs_run: {report.epochs_run}")
    print(f"max_true_score: {report.max_true_score:.6f}")
    print(f"min_false_score: {report.min_false_score:.6f}")
    print(f"gap: {report.gap:.6f}")
    print(f"decision_threshold: {report.decision_threshold:.6f}")
    if args.out:
        save_checkpoint(args.out, emb, config=config, vocab=vocab,
                        epoch=report.epochs_run)
        print(f"model: {args.out}")


def cmd_inspect(args) -> None:
    ckpt = load_checkpoint(args.model)
    emb = ckpt.embeddings
    print(f"path: {args.model}")
    print(f"dim: {emb.dim}")
    print(f"n_entities: {emb.n_entities}")
    print(f"n_relations: {emb.n_relations}")
    print(f"families: {','.join(emb.families)}")
    print(f"epoch: {ckpt.epoch}")
    for key, value in sorted(dataclasses.asdict(ckpt.score_config).items()):
        print(f"score.{key}: {value}")
    if ckpt.loss_state is not None:
        for key, value in sorted(dataclasses.asdict(ckpt.loss_state).items()):
            print(f"loss.{key}: {value}")
    print(f"named: {str(ckpt.vocab is not None).lower()}")
    if ckpt.train_config:
        for key, value in sorted(ckpt.train_config.items()):
            print(f"config.{key}: {value}")


def build_parser() -> _Parser:
    parser = _Parser(prog="mde",
                     description="Multi-distance knowledge-graph embeddings")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--verbose", action="store_true",
                        help="log progress at INFO level")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_train = sub.add_parser("train", help="train a model on a triple file")
    p_train.add_argument("--train", required=True, metavar="TSV",
                         help="training triples (head<TAB>relation<TAB>tail)")
    p_train.add_argument("--valid", metavar="TSV",
                         help="optional validation triples (vocabulary only)")
    p_train.add_argument("--config", metavar="FILE",
                         help="key=value config file")
    p_train.add_argument("--out", default="run", metavar="DIR",
                         help="output directory (default: run)")
    _add_config_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="rank held-out triples")
    p_eval.add_argument("--model", required=True, metavar="CKPT")
    p_eval.add_argument("--test", required=True, metavar="TSV")
    p_eval.add_argument("--train", metavar="TSV",
                        help="training triples for the filtered setting")
    p_eval.add_argument("--valid", metavar="TSV",
                        help="validation triples for the filtered setting")
    p_eval.add_argument("--setting", default="both",
                        help="raw, filtered, both, or a comma list such as "
                             "raw,filtered (default: both)")
    p_eval.add_argument("--threads", type=int, default=1,
                        help="worker threads for ranking (default: 1)")
    p_eval.add_argument("--csv", metavar="FILE", help="also write metrics CSV")
    p_eval.set_defaults(func=cmd_evaluate)

    p_gen = sub.add_parser("generate-synthetic",
                           help="write a synthetic relational-pattern dataset")
    p_gen.add_argument("--pattern", required=True, choices=PATTERNS)
    p_gen.add_argument("--entities", type=int, required=True)
    p_gen.add_argument("--relations", type=int, default=None,
                       help="relation count (default: smallest the pattern "
                            "allows)")
    p_gen.add_argument("--density", type=float, default=1.0,
                       help="fraction of possible instances to sample "
                            "(default: 1.0)")
    p_gen.add_argument("--holdout-fraction", type=float, default=0.2,
                       help="fraction of instances held out (default: 0.2)")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True, metavar="DIR")
    p_gen.set_defaults(func=cmd_generate)

    p_fit = sub.add_parser("fit-ground-truth",
                           help="fit a small instance until facts and "
                                "non-facts separate")
    p_fit.add_argument("--facts", required=True, metavar="TSV")
    p_fit.add_argument("--dim", type=int, default=None,
                       help="embedding dimension (default: #facts + 1)")
    p_fit.add_argument("--epochs", type=int, default=2000)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--lr", type=float, default=10.0)
    p_fit.add_argument("--gamma1", type=float, default=1.0)
    p_fit.add_argument("--gamma2", type=float, default=2.0)
    p_fit.add_argument("--out", metavar="CKPT", help="save the fitted model")
    p_fit.set_defaults(func=cmd_fit_ground_truth)

    p_inspect = sub.add_parser("inspect", help="print checkpoint metadata")
    p_inspect.add_argument("model", metavar="CKPT")
    p_inspect.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s")
        if not getattr(args, "func", None):
            parser.print_help()
            return 1
        args.argv = list(argv)
        args.func(args)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
