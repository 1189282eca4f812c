"""Command-line entry point wiring the pipeline into reproducible runs.

Config files are JSON objects with flat dotted keys (e.g. "model.d_model");
command-line flags override file values, and the fully resolved config is
written next to each output for provenance. All randomness flows from
explicit seeds. Progress goes to stderr (level via SKELCAP_LOG); results go
to the -o path, or to stdout as JSON when -o is absent.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import corpus, metrics, synth, tokenizer, training
from .errors import SkelcapError
from .model import ModelConfig, init_model, param_count
from .skeleton import preprocess_sequence
from .training import TrainConfig

log = logging.getLogger("skelcap")


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("SKELCAP_LOG", "info").lower(), logging.INFO
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise SkelcapError(f"config file {path} must hold a JSON object")
    return data


def _resolve(file_config: dict, overrides: dict) -> dict:
    resolved = dict(file_config)
    for key, value in overrides.items():
        if value is not None:
            resolved[key] = value
    return resolved


def _write_snapshot(resolved: dict, output: str | None) -> None:
    if output is not None:
        snapshot = Path(str(output) + ".config.json")
        snapshot.write_text(json.dumps(resolved, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _emit(payload: str, output: str | None) -> None:
    if output is None:
        print(payload)
    else:
        Path(output).write_text(payload + "\n", encoding="utf-8")


def _model_config(resolved: dict, vocab_size: int) -> ModelConfig:
    keys = {f: resolved.get(f"model.{f}") for f in (
        "d_model", "n_heads", "n_encoder_layers", "n_decoder_layers",
        "d_ff", "dropout_p", "max_src_len", "max_tgt_len",
    )}
    return ModelConfig(vocab_size=vocab_size, **{k: v for k, v in keys.items() if v is not None})


def _train_config(resolved: dict) -> TrainConfig:
    keys = {f: resolved.get(f"train.{f}") for f in (
        "learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
        "batch_size", "max_steps", "seed", "gradient_clip_norm", "log_every",
    )}
    return TrainConfig(**{k: v for k, v in keys.items() if v is not None})


def _cmd_gen_data(args) -> int:
    resolved = _resolve(_load_config_file(args.config), {
        "gen.signs": args.signs, "gen.signers": args.signers,
        "gen.per_pair": args.per_pair, "gen.seed": args.seed,
    })
    samples = synth.synth_generate(
        n_signs=int(resolved.get("gen.signs", 12)),
        n_signers=int(resolved.get("gen.signers", 8)),
        samples_per_pair=int(resolved.get("gen.per_pair", 1)),
        seed=int(resolved.get("gen.seed", 0)),
    )
    corpus.write_samples(samples, args.output, "raw")
    _write_snapshot(resolved, args.output)
    log.info("wrote %d raw samples to %s", len(samples), args.output)
    return 0


def _cmd_preprocess(args) -> int:
    samples = corpus.read_samples(args.input, "raw")
    for sample in samples:
        sample.frames = preprocess_sequence(sample.frames)
    corpus.write_samples(samples, args.output, "preprocessed")
    _write_snapshot({"preprocess.input": args.input}, args.output)
    log.info("preprocessed %d samples", len(samples))
    return 0


def _cmd_split(args) -> int:
    samples = corpus.read_samples(args.input, args.variant)
    splitter = {
        "signer": corpus.split_signer_agnostic,
        "sign": corpus.split_sign_agnostic,
    }[args.mode]
    result = splitter(samples, args.fraction, args.seed)
    corpus.write_split_manifest(result, args.output)
    _write_snapshot({
        "split.input": args.input, "split.mode": args.mode,
        "split.fraction": args.fraction, "split.seed": args.seed,
    }, args.output)
    log.info("split: %d train / %d test", len(result.train), len(result.test))
    return 0


def _cmd_train(args) -> int:
    resolved = _resolve(_load_config_file(args.config), {
        "train.max_steps": args.max_steps, "train.learning_rate": args.learning_rate,
        "train.batch_size": args.batch_size, "train.seed": args.seed,
        "data.min_freq": args.min_freq,
    })
    samples = corpus.read_samples(args.input, "preprocessed")
    if args.split is not None:
        manifest = corpus.read_split_manifest(args.split)
        samples = corpus.select_samples(samples, manifest["train"])
    vocab = tokenizer.build_vocab(
        (s.description for s in samples), min_freq=int(resolved.get("data.min_freq", 1))
    )
    model_config = _model_config(resolved, len(vocab))
    train_config = _train_config(resolved)
    model = init_model(model_config, int(resolved.get("train.seed", train_config.seed)))
    model, state, history = training.train(model, samples, vocab, train_config)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    training.save_checkpoint(model, state, out_dir / "checkpoint.bin")
    tokenizer.save_vocab(vocab, out_dir / "vocab.txt")
    with open(out_dir / "train_log.csv", "w", encoding="utf-8") as handle:
        handle.write("step,loss\n")
        for step, value in history:
            handle.write(f"{step},{value!r}\n")
    (out_dir / "config.resolved.json").write_text(
        json.dumps(resolved, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    final = history[-1][1] if history else float("nan")
    log.info("trained %d steps, final batch loss %.6f", len(history), final)
    return 0


def _cmd_decode(args) -> int:
    model, _ = training.load_checkpoint(args.checkpoint)
    vocab = tokenizer.load_vocab(args.vocab)
    samples = corpus.read_samples(args.input, "preprocessed")
    if args.sample_id is not None:
        samples = [s for s in samples if s.sample_id == args.sample_id]
        if not samples:
            raise SkelcapError(f"sample id {args.sample_id!r} not found in {args.input}")
    lines = []
    for sample_id, generated in training.decode_corpus(model, samples, vocab):
        lines.append(json.dumps({"sample_id": sample_id, "generated": generated}))
    _emit("\n".join(lines), args.output)
    _write_snapshot({"decode.checkpoint": args.checkpoint, "decode.input": args.input}, args.output)
    return 0


def _cmd_eval(args) -> int:
    model, _ = training.load_checkpoint(args.checkpoint)
    vocab = tokenizer.load_vocab(args.vocab)
    samples = corpus.read_samples(args.input, "preprocessed")
    if args.split is not None:
        manifest = corpus.read_split_manifest(args.split)
        samples = corpus.select_samples(samples, manifest[args.subset])
    decoded = training.decode_corpus(model, samples, vocab)
    candidates = [text for _, text in decoded]
    references = [s.description for s in samples]
    report = metrics.evaluate(candidates, references)
    log.info("\n%s", report.to_table())
    _emit(report.to_json(), args.output)
    _write_snapshot({
        "eval.checkpoint": args.checkpoint, "eval.input": args.input,
        "eval.split": args.split, "eval.subset": args.subset,
    }, args.output)
    return 0


def _cmd_baseline_metrics(args) -> int:
    samples = corpus.read_samples(args.input, args.variant)
    report = corpus.corpus_baseline(samples, max_pairs=args.max_pairs, seed=args.seed)
    log.info("\n%s", report.to_table())
    _emit(report.to_json(), args.output)
    _write_snapshot({
        "baseline.input": args.input, "baseline.max_pairs": args.max_pairs,
        "baseline.seed": args.seed,
    }, args.output)
    return 0


def _cmd_stats(args) -> int:
    samples = corpus.read_samples(args.input, "preprocessed")
    hist_x, hist_y = corpus.coord_stats(samples, args.bins)
    corpus.write_histogram_csv(hist_x, f"{args.output}_x.csv")
    corpus.write_histogram_csv(hist_y, f"{args.output}_y.csv")
    _write_snapshot({"stats.input": args.input, "stats.bins": args.bins}, args.output)
    log.info("wrote %s_x.csv and %s_y.csv", args.output, args.output)
    return 0


def _cmd_grad_check(args) -> int:
    config = ModelConfig(
        vocab_size=16, d_model=8, n_heads=2, n_encoder_layers=1,
        n_decoder_layers=1, d_ff=16, dropout_p=0.0, max_src_len=8, max_tgt_len=8,
    )
    error = training.gradient_check(config, eps=args.eps, seed=args.seed)
    payload = json.dumps({
        "max_relative_error": error,
        "eps": args.eps,
        "parameters": param_count(config),
    })
    _emit(payload, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelcap",
        description="Skeleton-sequence-to-text pipeline: data, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic raw corpus")
    p.add_argument("--signs", type=int)
    p.add_argument("--signers", type=int)
    p.add_argument("--per-pair", type=int, dest="per_pair")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("preprocess", help="impute, normalize, and flatten a raw corpus")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("split", help="write a leakage-controlled split manifest")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--mode", choices=("signer", "sign"), required=True)
    p.add_argument("--fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=("raw", "preprocessed"), default="preprocessed")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train the captioner on a preprocessed corpus")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--split", help="train on the manifest's train side")
    p.add_argument("--config")
    p.add_argument("--max-steps", type=int, dest="max_steps")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--seed", type=int)
    p.add_argument("--min-freq", type=int, dest="min_freq")
    p.add_argument("-o", "--output", required=True, help="output run directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("decode", help="greedy-decode samples with a trained model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--sample-id", dest="sample_id")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("eval", help="decode and score a corpus or split subset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--split")
    p.add_argument("--subset", choices=("train", "test"), default="test")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("baseline-metrics", help="average metrics between dataset samples")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--variant", choices=("raw", "preprocessed"), default="raw")
    p.add_argument("--max-pairs", type=int, default=100_000, dest="max_pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_baseline_metrics)

    p = sub.add_parser("stats", help="normalized coordinate histograms as CSV")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("grad-check", help="finite-difference check of the analytic gradients")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_grad_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SkelcapError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
