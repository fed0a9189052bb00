"""Command-line entry point.

Every subcommand is reproducible: identical inputs and seed give
byte-identical primary outputs (CSV/JSON/JSONL); wall time and timestamps
live only in the run manifest written next to the primary output. Report
commands also render figures unless --no-figures is passed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import report
from .annotation import AnnotationError, corpus_agreement, load_annotations
from .corpus import (CorpusError, ROLES, corpus_stats, derive_shifts, load_corpus,
                     make_folds, shift_rate, write_corpus, write_stats_csv)
from .embeddings import EmbeddingError, HashEmbedder, embed_document, load_embedding_file
from .models import ConfigError, MarroConfig, MarroModel, build_model
from .prompts import (MockClient, PromptError, build_few_shot, build_zero_shot,
                      default_deck, run_llm_eval, select_exemplars)
from .synth import synth_corpus, write_synth_embeddings
from .training import (StatsError, TrainerConfig, TrainingError, cross_validate,
                       metrics_from_confusion, t_test, train, write_metrics_csv)

_USER_ERRORS = (CorpusError, AnnotationError, EmbeddingError, ConfigError, PromptError,
                TrainingError, StatsError, FileNotFoundError, ValueError)


def _default_seed() -> int:
    return int(os.environ.get("MARRO_SEED", "0"))


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(subcommand: str, args: argparse.Namespace, inputs: list,
                    outputs: list, started: float) -> None:
    primary = Path(outputs[0])
    manifest = {
        "subcommand": subcommand,
        "config": {k: v for k, v in sorted(vars(args).items())
                   if k not in ("func", "config") and not callable(v)},
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.time() - started, 3),
    }
    with open(primary.with_name(primary.name + ".manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _provider(args):
    if getattr(args, "embeddings", None):
        return load_embedding_file(args.embeddings)
    if getattr(args, "hash_dim", 0):
        return HashEmbedder(dim=args.hash_dim)
    raise ValueError("supply --embeddings FILE or --hash-dim N")


def _trainer_config(args) -> TrainerConfig:
    return TrainerConfig(learning_rate=args.lr, epochs=args.epochs,
                         clip_norm=args.clip_norm, seed=args.seed)


def _model_config(args) -> MarroConfig:
    kwargs = dict(variant=args.variant)
    if args.d_model:
        kwargs.update(d_model=args.d_model, heads=args.heads, enforce_head_range=False)
    if getattr(args, "loss_weight", None) is not None:
        kwargs["loss_weight"] = args.loss_weight
    return MarroConfig(**kwargs).validate() if args.d_model else MarroConfig.canonical(
        args.variant, **({"loss_weight": args.loss_weight}
                         if getattr(args, "loss_weight", None) is not None else {}))


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_stats(args) -> int:
    started = time.time()
    corpus = load_corpus(args.corpus)
    rows = corpus_stats(corpus)
    write_stats_csv(rows, args.out)
    outputs = [args.out]
    if not args.no_figures:
        fig = Path(args.out).with_suffix(".png")
        report.plot_label_distribution(rows, fig, title=f"Label distribution: {corpus.name}")
        outputs.append(fig)
    _write_manifest("stats", args, [args.corpus], outputs, started)
    return 0


def cmd_iaa(args) -> int:
    started = time.time()
    sets = load_annotations(args.annotations)
    agreement = corpus_agreement(sets)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(agreement.to_json() + "\n")
    outputs = [args.out]
    if not args.no_figures:
        fig = Path(args.out).with_suffix(".png")
        report.plot_pair_agreement(agreement.per_pair, fig)
        outputs.append(fig)
    _write_manifest("iaa", args, [args.annotations], outputs, started)
    return 0


def cmd_shifts(args) -> int:
    started = time.time()
    corpus = load_corpus(args.corpus)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus.documents:
            seq = derive_shifts(doc)
            fh.write(json.dumps({"doc_id": seq.doc_id, "shifts": seq.shifts}) + "\n")
    rate = shift_rate(corpus)
    print(f"same-label adjacent-pair rate: {rate:.4f}")
    _write_manifest("shifts", args, [args.corpus], [args.out], started)
    return 0


def cmd_folds(args) -> int:
    started = time.time()
    corpus = load_corpus(args.corpus)
    split = make_folds(corpus, args.k, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"k": split.k, "seed": split.seed,
                   "assignment": dict(sorted(split.assignment.items()))}, fh, indent=2)
        fh.write("\n")
    _write_manifest("folds", args, [args.corpus], [args.out], started)
    return 0


def cmd_train(args) -> int:
    started = time.time()
    corpus = load_corpus(args.corpus)
    provider = _provider(args)
    model = build_model(_model_config(args), seed=args.seed)
    result = train(model, provider, corpus.documents, _trainer_config(args))
    model.save(args.out)
    outputs = [args.out]
    curve_path = Path(args.out).with_suffix(".loss.csv")
    with open(curve_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,mean_loss\n")
        for e, v in enumerate(result.loss_curve, start=1):
            fh.write(f"{e},{v:.6f}\n")
    outputs.append(curve_path)
    if not args.no_figures:
        fig = Path(args.out).with_suffix(".loss.png")
        report.plot_loss_curve(result.loss_curve, fig)
        outputs.append(fig)
    inputs = [args.corpus] + ([args.embeddings] if args.embeddings else [])
    _write_manifest("train", args, inputs, outputs, started)
    print(f"final mean loss: {result.loss_curve[-1]:.6f}")
    return 0


def cmd_crossval(args) -> int:
    started = time.time()
    corpus = load_corpus(args.corpus)
    provider = _provider(args)
    folds = make_folds(corpus, args.k, args.seed)
    cv = cross_validate(_model_config(args), _trainer_config(args), corpus, folds,
                        provider, jobs=args.jobs)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(cv.to_json() + "\n")
    outputs = [args.out]
    pooled = metrics_from_confusion(sum(r.confusion for r in cv.per_fold),
                                    [r.name for r in ROLES])
    labels_csv = Path(args.out).with_suffix(".labels.csv")
    write_metrics_csv(pooled, labels_csv)
    outputs.append(labels_csv)
    if not args.no_figures:
        scores_fig = Path(args.out).with_suffix(".folds.png")
        report.plot_fold_scores([r.macro_f1 for r in cv.per_fold], scores_fig)
        conf_fig = Path(args.out).with_suffix(".confusion.png")
        report.plot_confusion(pooled.confusion, [r.name for r in ROLES], conf_fig,
                              title="Pooled held-out confusion")
        outputs += [scores_fig, conf_fig]
    inputs = [args.corpus] + ([args.embeddings] if args.embeddings else [])
    _write_manifest("crossval", args, inputs, outputs, started)
    print(f"macro-F1 {cv.macro_f1_mean:.4f} +/- {cv.macro_f1_std:.4f} over {folds.k} folds")
    return 0


def cmd_predict(args) -> int:
    started = time.time()
    corpus = load_corpus(args.corpus)
    provider = _provider(args)
    model = MarroModel.load(args.model)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus.documents:
            path = model.predict(embed_document(provider, doc))
            fh.write(json.dumps({"doc_id": doc.doc_id,
                                 "labels": [ROLES[i].name for i in path]}) + "\n")
    inputs = [args.corpus, args.model] + ([args.embeddings] if args.embeddings else [])
    _write_manifest("predict", args, inputs, [args.out], started)
    return 0


def cmd_ttest(args) -> int:
    started = time.time()
    a = [float(v) for v in args.a.split(",")]
    b = [float(v) for v in args.b.split(",")]
    result = t_test(a, b, paired=not args.unpaired)
    payload = json.dumps(result.to_dict(alpha=args.alpha), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
        _write_manifest("ttest", args, [], [args.out], started)
    print(payload)
    return 0


def cmd_prompt(args) -> int:
    started = time.time()
    deck = default_deck()
    if args.mode == "zero":
        text = build_zero_shot(deck, args.text)
    else:
        if not args.corpus:
            raise ValueError("few-shot prompts need --corpus to draw exemplars from")
        corpus = load_corpus(args.corpus)
        text = build_few_shot(deck, select_exemplars(corpus, args.seed), args.text)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        _write_manifest("prompt", args, [args.corpus] if args.corpus else [], [args.out], started)
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    started = time.time()
    corpus = synth_corpus(args.docs, args.sentences, args.seed)
    write_corpus(corpus, args.out)
    outputs = [args.out]
    if args.embeddings_out:
        write_synth_embeddings(corpus, args.dim, args.embeddings_out)
        outputs.append(args.embeddings_out)
    _write_manifest("synth", args, [], outputs, started)
    print(f"wrote {len(corpus)} documents, {corpus.total_sentences()} sentences")
    return 0


def cmd_llm_eval(args) -> int:
    started = time.time()
    corpus = load_corpus(args.corpus)
    client = MockClient.from_json_file(args.mock)
    result = run_llm_eval(client, corpus, mode=args.mode, exemplar_seed=args.seed)
    payload = result.report.to_dict()
    payload["unparseable"] = result.unparseable
    payload["total"] = result.total
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    _write_manifest("llm-eval", args, [args.corpus, args.mock], [args.out], started)
    print(f"macro-F1 {result.report.macro_f1:.4f}, {result.unparseable}/{result.total} unparseable")
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_model_flags(sub) -> None:
    sub.add_argument("--variant", choices=("base", "tf", "mtl", "mtl_tf"), default="base")
    sub.add_argument("--d-model", type=int, default=0,
                     help="override model width (default: canonical for the variant)")
    sub.add_argument("--heads", type=int, default=1, help="head count when --d-model is set")
    sub.add_argument("--loss-weight", type=float, default=None,
                     help="auxiliary shift-loss weight for MTL variants")
    sub.add_argument("--lr", type=float, default=0.1)
    sub.add_argument("--epochs", type=int, default=80)
    sub.add_argument("--clip-norm", type=float, default=5.0)


def _add_provider_flags(sub) -> None:
    sub.add_argument("--embeddings", help="binary embedding file")
    sub.add_argument("--hash-dim", type=int, default=0,
                     help="use the deterministic hash embedder at this width")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marro",
        description="Rhetorical-role labeling toolkit: corpora, agreement, taggers, evaluation.")
    parser.add_argument("--config", help="TOML file of flag defaults (flags win)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("stats", help="per-role sentence counts and fractions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("iaa", help="pairwise inter-annotator agreement report")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_iaa)

    p = sub.add_parser("shifts", help="per-document label-shift sequences")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shifts)

    p = sub.add_parser("folds", help="seeded document-level cross-validation split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_folds)

    p = sub.add_parser("train", help="train one model on a whole corpus")
    p.add_argument("--corpus", required=True)
    _add_provider_flags(p)
    _add_model_flags(p)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval", help="k-fold cross-validation")
    p.add_argument("--corpus", required=True)
    _add_provider_flags(p)
    _add_model_flags(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="CvResult JSON path")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("predict", help="label a corpus with a trained checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    _add_provider_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ttest", help="two-tailed t-test over two score lists")
    p.add_argument("--a", required=True, help="comma-separated scores")
    p.add_argument("--b", required=True, help="comma-separated scores")
    p.add_argument("--unpaired", action="store_true", help="Welch instead of paired")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser("prompt", help="build a zero- or few-shot labeling prompt")
    p.add_argument("--mode", choices=("zero", "few"), default="zero")
    p.add_argument("--text", required=True, help="input segment")
    p.add_argument("--corpus", help="labeled corpus for few-shot exemplars")
    p.add_argument("--out")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("synth", help="generate the deterministic synthetic corpus")
    p.add_argument("--docs", type=int, default=20)
    p.add_argument("--sentences", type=int, default=30)
    p.add_argument("--dim", type=int, default=200)
    p.add_argument("--out", required=True, help="corpus JSONL path")
    p.add_argument("--embeddings-out", help="also write hash embeddings here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("llm-eval", help="score a mock completion client on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mock", required=True, help="JSON prompt->completion map")
    p.add_argument("--mode", choices=("zero", "few"), default="zero")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_llm_eval)

    for name, command in sub.choices.items():
        command.add_argument("--seed", type=int, default=_default_seed(),
                             help="run seed (default: MARRO_SEED or 0)")
        command.add_argument("--no-figures", action="store_true",
                             help="skip figure rendering")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        return argv
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib  # type: ignore[no-redef]
    with open(path, "rb") as fh:
        values = tomllib.load(fh)
    for action_parser in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        known = {a.dest for a in action_parser._actions}
        action_parser.set_defaults(**{k: v for k, v in values.items() if k in known})
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
