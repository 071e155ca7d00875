"""Operator command line: train models, run the evaluation protocol, serve
the REST API + UI, replay a recorded stream, and generate the synthetic
corpus.

Exit codes: 0 success, 2 usage/validation error, 1 runtime failure. Reports
go to stdout; configuration and progress go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import httpx

from tweetriage import classify, evalkit, nertag, wire
from tweetriage.domain import EntitySpan, HelpLabel, Tweet, spans_to_bio, validate_spans
from tweetriage.geoloc import BoundingBox
from tweetriage.server import ServerConfig, ModelLoadError, build_pipeline, create_app
from tweetriage.store import Store
from tweetriage.textfeat import fit_tfidf, tfidf_transform, tokenize

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    pass


def _log(*parts: object) -> None:
    print(*parts, file=sys.stderr)


def _print_config(name: str, values: dict) -> None:
    _log(f"{name} config: {json.dumps(values, ensure_ascii=False, default=str)}")


LabeledRecord = tuple[Tweet, HelpLabel, list[EntitySpan]]


def load_annotation_file(path: str | Path) -> list[LabeledRecord]:
    """Read labeled-data JSONL: {"tweet": {...}, "label": str, "spans": [...]}."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"labeled data file not found: {path}")
    records: list[LabeledRecord] = []
    bad = 0
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            tweet = wire.tweet_from_dict(obj["tweet"])
            label = HelpLabel(obj["label"])
            spans = [wire.span_from_dict(s) for s in obj.get("spans", [])]
            validate_spans(tweet.text, spans)
        except (KeyError, TypeError, ValueError):
            bad += 1
            continue
        records.append((tweet, label, spans))
    if bad:
        _log(f"skipped {bad} malformed line(s) in {path}")
    if not records:
        raise UsageError(f"no usable records in {path}")
    return records


def write_annotation_file(path: str | Path, records: Sequence[LabeledRecord]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for tweet, label, spans in records:
            handle.write(
                json.dumps(
                    {
                        "tweet": wire.tweet_to_dict(tweet),
                        "label": label.value,
                        "spans": [wire.span_to_dict(s) for s in spans],
                        "annotator": "synthetic",
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_tweet_file(path: str | Path, tweets: Sequence[Tweet]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for tweet in tweets:
            handle.write(json.dumps(wire.tweet_to_dict(tweet), ensure_ascii=False) + "\n")


def _resolve(path: str, data_dir: Optional[str]) -> str:
    p = Path(path)
    if data_dir and not p.is_absolute():
        return str(Path(data_dir) / p)
    return str(p)


def _add_model_hyperparams(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-df", type=int, default=1, help="TF-IDF min document frequency")
    parser.add_argument("--lambda", dest="lam", type=float, default=1e-4,
                        help="classifier L2 strength")
    parser.add_argument("--epochs", type=int, default=50, help="classifier SGD epochs")
    parser.add_argument("--iterations", type=int, default=1000, help="CRF SGD passes")
    parser.add_argument("--l2", type=float, default=0.1, help="CRF L2 coefficient")
    parser.add_argument("--learning-rate", type=float, default=0.05, help="CRF base step size")


def _tagging_examples(records: Sequence[LabeledRecord]) -> list[tuple[str, list[EntitySpan]]]:
    return [
        (tweet.text, spans)
        for tweet, label, spans in records
        if label == HelpLabel.CALL_FOR_HELP
    ]


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    _print_config("gen-corpus", {"n": args.n, "seed": args.seed, "out": args.out,
                                 "tweets_out": args.tweets_out})
    try:
        records = evalkit.synthetic_records(args.n, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _resolve(args.out, args.data_dir)
    write_annotation_file(out, records)
    _log(f"wrote {len(records)} labeled tweets to {out}")
    if args.tweets_out:
        tweets_out = _resolve(args.tweets_out, args.data_dir)
        write_tweet_file(tweets_out, [tweet for tweet, _, _ in records])
        _log(f"wrote raw tweet stream to {tweets_out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    data_path = _resolve(args.data, args.data_dir)
    out_dir = Path(_resolve(args.out_dir, args.data_dir))
    _print_config("train", {
        "data": data_path, "out_dir": str(out_dir), "seed": args.seed,
        "min_df": args.min_df, "lambda": args.lam, "epochs": args.epochs,
        "iterations": args.iterations, "l2": args.l2, "learning_rate": args.learning_rate,
    })
    try:
        cls_cfg = classify.TrainConfig(lam=args.lam, epochs=args.epochs, seed=args.seed)
        crf_cfg = nertag.CrfTrainConfig(
            iterations=args.iterations, l2=args.l2,
            learning_rate=args.learning_rate, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(f"invalid hyper-parameter: {exc}") from exc
    records = load_annotation_file(data_path)
    labels = [label for _, label, _ in records]
    if len(set(labels)) < 2:
        raise UsageError("training data must contain both classes")

    docs = [[t.surface for t in tokenize(tweet.text)] for tweet, _, _ in records]
    vectorizer = fit_tfidf(docs, min_df=args.min_df)
    X = [tfidf_transform(vectorizer, doc) for doc in docs]
    model = classify.train_classifier(
        X, labels, cls_cfg,
        feature_size=vectorizer.feature_size,
        fingerprint=vectorizer.fingerprint(),
    )
    final_objective = classify.objective(model, X, labels, cls_cfg.lam)

    tagging = _tagging_examples(records)
    if not tagging:
        raise UsageError("training data has no call-for-help examples to train the tagger")
    sequences = []
    for text, spans in tagging:
        tokens = tokenize(text)
        sequences.append((nertag.sequence_features(tokens), spans_to_bio(tokens, spans)))
    crf = nertag.train_crf(sequences, crf_cfg)
    accuracy = nertag.token_accuracy(crf, sequences)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "vectorizer.json").write_text(vectorizer.to_json(), encoding="utf-8")
    (out_dir / "classifier.json").write_text(model.to_json(), encoding="utf-8")
    (out_dir / "crf.json").write_text(crf.to_json(), encoding="utf-8")
    _log(f"vectorizer: {vectorizer.feature_size} terms")
    _log(f"classifier final objective: {final_objective:.6f}")
    _log(f"CRF training token accuracy: {accuracy:.4f}")
    _log(f"artifacts written to {out_dir}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    data_path = _resolve(args.data, args.data_dir)
    _print_config("eval", {
        "data": data_path, "folds": args.folds, "seed": args.seed,
        "min_df": args.min_df, "lambda": args.lam, "epochs": args.epochs,
        "iterations": args.iterations, "l2": args.l2, "learning_rate": args.learning_rate,
    })
    try:
        cls_cfg = classify.TrainConfig(lam=args.lam, epochs=args.epochs, seed=args.seed)
        crf_cfg = nertag.CrfTrainConfig(
            iterations=args.iterations, l2=args.l2,
            learning_rate=args.learning_rate, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(f"invalid hyper-parameter: {exc}") from exc
    records = load_annotation_file(data_path)
    texts = [tweet.text for tweet, _, _ in records]
    labels = [label for _, label, _ in records]
    tagging = _tagging_examples(records)
    if args.folds > len(records) or args.folds > len(tagging):
        raise UsageError(f"folds={args.folds} exceeds the available examples")
    report = {
        "classification": evalkit.crossval_classification(
            texts, labels, args.folds, args.seed, cls_cfg, min_df=args.min_df
        ),
        "tagging": evalkit.crossval_tagging(tagging, args.folds, args.seed, crf_cfg),
    }
    payload = json.dumps(report, ensure_ascii=False, indent=2)
    if args.out:
        Path(_resolve(args.out, args.data_dir)).write_text(payload + "\n", encoding="utf-8")
        _log(f"report written to {args.out}")
    else:
        print(payload)
    mean_cls = report["classification"]["mean_f1"]
    mean_tag = report["tagging"]["mean_weighted_f1"]
    _log(f"mean classification F1: {mean_cls:.4f}; mean tagging weighted F1: {mean_tag:.4f}")
    return EXIT_OK


def _server_config_from_args(args: argparse.Namespace) -> ServerConfig:
    cfg = ServerConfig.from_env()
    if args.port is not None:
        cfg.port = args.port
    if args.store is not None:
        cfg.store_path = _resolve(args.store, args.data_dir)
    if args.models_dir is not None:
        models = Path(_resolve(args.models_dir, args.data_dir))
        cfg.vectorizer_path = str(models / "vectorizer.json")
        cfg.classifier_path = str(models / "classifier.json")
        cfg.crf_path = str(models / "crf.json")
    if args.cities is not None:
        cfg.cities_path = _resolve(args.cities, args.data_dir)
    if args.bbox is not None:
        cfg.bbox = BoundingBox.parse(args.bbox)
    if args.ui_dir is not None:
        cfg.ui_dir = _resolve(args.ui_dir, args.data_dir)
    if args.max_batch is not None:
        cfg.max_batch = args.max_batch
    return cfg


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        cfg = _server_config_from_args(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _print_config("serve", {
        "port": cfg.port, "store": cfg.store_path, "vectorizer": cfg.vectorizer_path,
        "classifier": cfg.classifier_path, "crf": cfg.crf_path,
        "cities": cfg.cities_path or "(built-in)",
        "bbox": [cfg.bbox.min_lat, cfg.bbox.max_lat, cfg.bbox.min_lon, cfg.bbox.max_lon],
        "geocoder": cfg.geocoder_url or "(mock)", "ui_dir": cfg.ui_dir or "(none)",
    })
    import logging

    import uvicorn

    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(message)s")
    store = Store(cfg.store_path)
    try:
        pipeline = build_pipeline(cfg, store)
    except ModelLoadError as exc:
        _log(f"startup failed: {exc}")
        store.close()
        return EXIT_RUNTIME
    app = create_app(cfg, store=store, pipeline=pipeline)
    try:
        uvicorn.run(app, host=args.host, port=cfg.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        _log(f"server failed: {exc}")
        return EXIT_RUNTIME
    finally:
        store.close()
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    from tweetriage.ingest import read_tweets

    if args.rate <= 0:
        raise UsageError("rate must be > 0")
    if args.batch_size < 1:
        raise UsageError("batch size must be >= 1")
    path = _resolve(args.file, args.data_dir)
    _print_config("simulate", {
        "url": args.url, "file": path, "rate": args.rate, "batch_size": args.batch_size,
    })
    try:
        batch = read_tweets(path)
    except OSError as exc:
        raise UsageError(f"cannot read tweet file: {exc}") from exc
    ordered = sorted(batch.tweets, key=lambda t: (t.created_at, t.id))
    endpoint = args.url.rstrip("/") + "/api/v1/tweets"
    accepted = duplicates = rejected = 0
    try:
        with httpx.Client(timeout=60.0) as client:
            for i in range(0, len(ordered), args.batch_size):
                chunk = ordered[i : i + args.batch_size]
                response = client.post(
                    endpoint, json=[wire.tweet_to_dict(t) for t in chunk]
                )
                response.raise_for_status()
                summary = response.json()
                accepted += summary["accepted"]
                duplicates += summary["duplicates"]
                rejected += summary.get("rejected", 0)
                if i + args.batch_size < len(ordered):
                    time.sleep(len(chunk) / args.rate)
            stats = client.get(args.url.rstrip("/") + "/api/v1/stats")
            stats.raise_for_status()
    except httpx.HTTPError as exc:
        _log(f"simulation failed: {exc}")
        return EXIT_RUNTIME
    _log(f"posted {len(ordered)} tweets: accepted={accepted}"
         f" duplicates={duplicates} rejected={rejected}")
    print(json.dumps(stats.json(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweetriage",
        description="Crisis-tweet triage: train, evaluate, serve, simulate.",
    )
    parser.add_argument("--data-dir", default=None,
                        help="root for relative data paths")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-corpus", help="generate the synthetic labeled corpus")
    gen.add_argument("--n", type=int, default=1000)
    gen.add_argument("--seed", type=int, default=7)
    gen.add_argument("--out", required=True, help="annotation JSONL output path")
    gen.add_argument("--tweets-out", default=None, help="optional raw tweet JSONL")
    gen.set_defaults(func=cmd_gen_corpus)

    train = sub.add_parser("train", help="train vectorizer, classifier, and CRF")
    train.add_argument("--data", required=True, help="annotation JSONL")
    train.add_argument("--out-dir", default="models")
    train.add_argument("--seed", type=int, default=7)
    _add_model_hyperparams(train)
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="stratified k-fold evaluation of both tasks")
    ev.add_argument("--data", required=True, help="annotation JSONL")
    ev.add_argument("--folds", type=int, default=5)
    ev.add_argument("--seed", type=int, default=7)
    ev.add_argument("--out", default=None, help="write the JSON report here")
    _add_model_hyperparams(ev)
    ev.set_defaults(func=cmd_eval)

    serve = sub.add_parser("serve", help="run the REST service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--store", default=None)
    serve.add_argument("--models-dir", default=None)
    serve.add_argument("--cities", default=None)
    serve.add_argument("--bbox", default=None, help="min_lat,max_lat,min_lon,max_lon")
    serve.add_argument("--ui-dir", default=None)
    serve.add_argument("--max-batch", type=int, default=None)
    serve.set_defaults(func=cmd_serve)

    sim = sub.add_parser("simulate", help="replay a tweet file against a server")
    sim.add_argument("--url", default="http://127.0.0.1:8000")
    sim.add_argument("--file", required=True, help="tweet JSONL")
    sim.add_argument("--rate", type=float, default=50.0, help="tweets per second")
    sim.add_argument("--batch-size", type=int, default=100)
    sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        _log("interrupted")
        return EXIT_OK
    except Exception as exc:  # runtime failures map to exit 1
        _log(f"failed: {exc}")
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
