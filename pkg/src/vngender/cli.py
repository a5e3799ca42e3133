"""Command-line entry points: train, evaluate, ablate, predict, serve, stats, synth."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import bundle as bundle_mod
from . import data_io, evaluation, lstm, names_core, service
from .errors import ToolkitError
from .evaluation import ModelSpec, SplitSpec
from .featurize import VectorizerConfig

MODEL_KINDS = (
    "multinomial_nb", "bernoulli_nb", "logistic_regression",
    "linear_svm", "decision_tree", "random_forest", "lstm",
)
ENV_BUNDLE = "GENDER_MODEL_PATH"


def _bundle_path(args) -> str:
    path = args.model or os.environ.get(ENV_BUNDLE)
    if not path:
        raise ToolkitError(
            f"no bundle path given (use --model or set {ENV_BUNDLE})"
        )
    return path


def _vectorizer_config(args) -> VectorizerConfig:
    max_features = args.max_features
    if max_features is None and args.vectorizer == "tfidf":
        max_features = 4000
    return VectorizerConfig(args.vectorizer, max_features)


def _model_spec(args) -> ModelSpec:
    kind = args.model_kind
    options: dict = {}
    if kind in ("multinomial_nb", "bernoulli_nb"):
        options["alpha"] = args.alpha
    elif kind == "logistic_regression":
        options.update(l2=args.l2, lr=args.lr, max_iter=args.max_iter, tol=args.tol)
    elif kind == "linear_svm":
        options.update(c=args.c, lr=args.svm_lr, epochs=args.epochs)
    elif kind == "decision_tree":
        options.update(max_depth=args.max_depth, min_leaf=args.min_leaf)
    elif kind == "random_forest":
        options.update(
            n_trees=args.trees, mtry=args.mtry, bootstrap=not args.no_bootstrap,
            max_depth=args.max_depth, min_leaf=args.min_leaf,
        )
    elif kind == "lstm":
        options.update(
            hidden=args.hidden, epochs=args.epochs, batch_size=args.batch_size,
            learning_rate=args.lr, max_seq_len=args.max_seq_len,
            embedding_dim=args.embedding_dim, embedding_seed=args.seed,
        )
        if args.embedding:
            options["embedding_path"] = args.embedding
    return ModelSpec(kind, seed=args.seed, options=options)


def cmd_train(args) -> int:
    dataset = data_io.load_dataset(args.data)
    mask = names_core.parse_mask(args.mask)
    spec = _model_spec(args)
    vcfg = None if spec.kind == "lstm" else _vectorizer_config(args)
    split = SplitSpec(seed=args.seed)
    result = evaluation.run_experiment(dataset, mask, spec, vcfg, split)
    train_meta = {
        "dataset": dataset.source_tag,
        "seed": args.seed,
        "mask": mask.label,
        "subset_sizes": result.subset_sizes,
        "skipped": result.skipped,
        "metrics": {
            "macro_f1": result.metrics.macro_f1,
            "macro_precision": result.metrics.macro_precision,
            "macro_recall": result.metrics.macro_recall,
        },
    }
    if spec.kind == "lstm":
        art = result.lstm_artifacts
        payload = bundle_mod.LstmPayload(art.params, art.cfg, art.embeddings.source)
        built = bundle_mod.make_bundle(payload, mask, train_meta=train_meta)
    else:
        built = bundle_mod.make_bundle(
            result.classifier, mask,
            vectorizer_cfg=vcfg, vocabulary=result.vocabulary,
            train_meta=train_meta,
        )
    bundle_mod.save_model(built, args.out)
    sys.stdout.write(evaluation.format_metrics(result.metrics, result.confusion))
    sys.stdout.write(f"bundle\t{args.out}\t{built.model_id}\n")
    return 0


def cmd_evaluate(args) -> int:
    loaded = bundle_mod.load_model(_bundle_path(args))
    dataset = data_io.load_dataset(args.data)
    y_true, y_pred, skipped = [], [], 0
    for rec in dataset.records:
        try:
            response = bundle_mod.bundle_predict(loaded, rec.full_name)
        except ToolkitError:
            skipped += 1
            continue
        y_true.append(rec.gender)
        y_pred.append(response["label"])
    if not y_true:
        raise ToolkitError("no records could be scored with this bundle")
    cm = evaluation.confusion(y_true, y_pred)
    sys.stdout.write(evaluation.format_metrics(evaluation.macro_metrics(cm), cm))
    if skipped:
        sys.stdout.write(f"skipped\t{skipped}\n")
    return 0


def _parse_model_list(text: str) -> tuple[list[ModelSpec], list[VectorizerConfig | None]]:
    specs, cfgs = [], []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        kind, _, mode = item.partition(":")
        if kind not in MODEL_KINDS:
            raise ToolkitError(f"unknown model kind {kind!r} in --models")
        if kind == "lstm":
            specs.append(ModelSpec("lstm"))
            cfgs.append(None)
            continue
        mode = mode or "count"
        max_features = 4000 if mode == "tfidf" else None
        specs.append(ModelSpec(kind))
        cfgs.append(VectorizerConfig(mode, max_features))
    if not specs:
        raise ToolkitError("--models selected no models")
    return specs, cfgs


def cmd_ablate(args) -> int:
    dataset = data_io.load_dataset(args.data)
    specs, cfgs = _parse_model_list(args.models)
    for spec in specs:
        spec.seed = args.seed
    report = evaluation.run_ablation(dataset, specs, cfgs, SplitSpec(seed=args.seed))
    sys.stdout.write(evaluation.format_ablation(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(evaluation.ablation_to_dict(report), fh, ensure_ascii=False, indent=2)
        sys.stdout.write(f"report\t{args.out}\n")
    return 0


def cmd_predict(args) -> int:
    loaded = bundle_mod.load_model(_bundle_path(args))
    for name in args.names:
        response = bundle_mod.bundle_predict(loaded, name)
        sys.stdout.write(
            f"{name}\t{response['gender']}\t{response['label']}\t{response['score']:.6f}\n"
        )
    return 0


def cmd_serve(args) -> int:
    loaded = bundle_mod.load_model(_bundle_path(args))
    sys.stderr.write(f"serving {loaded.model_id} on {args.bind}\n")
    service.serve(loaded, args.bind)
    return 0


def cmd_stats(args) -> int:
    dataset = data_io.load_dataset(args.data)
    text = data_io.format_stats(data_io.dataset_stats(dataset, args.top_k))
    if dataset.rejects:
        text += f"\nrejected_rows\t{len(dataset.rejects)}\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    dataset = data_io.generate_synthetic(args.n, args.fidelity, args.seed)
    if args.out:
        data_io.save_dataset(dataset, args.out)
    else:
        sys.stdout.write("full_name,gender\n")
        for rec in dataset.records:
            sys.stdout.write(f"{rec.full_name},{rec.gender}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vngender",
        description="Gender prediction from Vietnamese full names.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a model and write a bundle")
    train.add_argument("--data", required=True)
    train.add_argument("--model", dest="model_kind", required=True, choices=MODEL_KINDS)
    train.add_argument("--vectorizer", choices=("count", "tfidf"), default="count")
    train.add_argument("--max-features", type=int, default=None)
    train.add_argument("--mask", default="full", choices=sorted(names_core.MASKS))
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", required=True)
    train.add_argument("--alpha", type=float, default=1.0)
    train.add_argument("--l2", type=float, default=1e-4)
    train.add_argument("--lr", type=float, default=None)
    train.add_argument("--max-iter", type=int, default=1000)
    train.add_argument("--tol", type=float, default=1e-6)
    train.add_argument("--c", type=float, default=1.0)
    train.add_argument("--svm-lr", type=float, default=1.0)
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--trees", type=int, default=100)
    train.add_argument("--mtry", type=int, default=None)
    train.add_argument("--no-bootstrap", action="store_true")
    train.add_argument("--max-depth", type=int, default=None)
    train.add_argument("--min-leaf", type=int, default=1)
    train.add_argument("--hidden", type=int, default=128)
    train.add_argument("--batch-size", type=int, default=32)
    train.add_argument("--max-seq-len", type=int, default=8)
    train.add_argument("--embedding", default=None, help="pretrained .vec file")
    train.add_argument("--embedding-dim", type=int, default=300)
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("evaluate", help="score a dataset with a saved bundle")
    ev.add_argument("--model", default=None)
    ev.add_argument("--data", required=True)
    ev.set_defaults(func=cmd_evaluate)

    ab = sub.add_parser("ablate", help="run the 7-way component ablation")
    ab.add_argument("--data", required=True)
    ab.add_argument("--models", default="linear_svm:count,bernoulli_nb:tfidf")
    ab.add_argument("--seed", type=int, default=0)
    ab.add_argument("--out", default=None, help="write the report as JSON")
    ab.set_defaults(func=cmd_ablate)

    pr = sub.add_parser("predict", help="predict gender for one or more names")
    pr.add_argument("--model", default=None)
    pr.add_argument("names", nargs="+")
    pr.set_defaults(func=cmd_predict)

    sv = sub.add_parser("serve", help="serve predictions over HTTP")
    sv.add_argument("--model", default=None)
    sv.add_argument("--bind", default="127.0.0.1:8000")
    sv.set_defaults(func=cmd_serve)

    st = sub.add_parser("stats", help="dataset label and token statistics")
    st.add_argument("--data", required=True)
    st.add_argument("--top-k", type=int, default=10)
    st.add_argument("--out", default=None)
    st.set_defaults(func=cmd_stats)

    sy = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    sy.add_argument("n", type=int)
    sy.add_argument("fidelity", type=float)
    sy.add_argument("seed", type=int)
    sy.add_argument("--out", default=None)
    sy.set_defaults(func=cmd_synth)

    return parser


def _normalize_defaults(args) -> None:
    # Per-kind defaults for flags shared across model kinds.
    if getattr(args, "command", None) != "train":
        return
    if args.epochs is None:
        args.epochs = 2 if args.model_kind == "lstm" else 5
    if args.lr is None:
        args.lr = 0.05 if args.model_kind == "lstm" else 0.1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _normalize_defaults(args)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
