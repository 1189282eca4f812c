"""Training loop, Adam, gradient checking, checkpoints, greedy decoding.

Every source of randomness (batch order, dropout masks) is derived from the
training seed and the absolute step index, so runs are reproducible and a
run resumed from a checkpoint at step k replays the exact remainder of an
uninterrupted run.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .corpus import CaptionSample
from .errors import CheckpointError, ConfigError, SkelcapError, TrainingDivergedError
from .model import (
    Batch,
    ModelConfig,
    Seq2SeqModel,
    _loss_with_grad,
    forward,
    init_model,
    loss_and_grads,
)
from .skeleton import FRAME_VECTOR_SIZE, PreprocessedFrame
from .tokenizer import BOS_ID, EOS_ID, PAD_ID, Vocabulary, decode, encode

log = logging.getLogger("skelcap")

_CHECKPOINT_MAGIC = b"SKELCKPT"
_CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 8
    max_steps: int = 1000
    seed: int = 0
    gradient_clip_norm: Optional[float] = None
    log_every: int = 50

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be nonnegative, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.max_steps < 0:
            raise ConfigError(f"max_steps must be nonnegative, got {self.max_steps}")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


def init_adam(model: Seq2SeqModel) -> AdamState:
    return AdamState(
        m={name: np.zeros_like(p) for name, p in model.params.items()},
        v={name: np.zeros_like(p) for name, p in model.params.items()},
    )


@dataclass
class PreparedSample:
    sample_id: str
    source: np.ndarray      # (L, 150) with L <= max_src_len
    target: list[int]       # [BOS, ..., EOS]
    description: str


def subsample_indices(length: int, limit: int) -> np.ndarray:
    """Uniform temporal subsampling for sequences longer than the limit."""
    if length <= limit:
        return np.arange(length)
    return np.round(np.arange(limit) * (length - 1) / (limit - 1)).astype(int)


def prepare_samples(
    samples: Sequence[CaptionSample], vocab: Vocabulary, config: ModelConfig
) -> list[PreparedSample]:
    if not samples:
        raise SkelcapError("training requires a nonempty sample list")
    prepared = []
    for sample in samples:
        if not sample.frames or not isinstance(sample.frames[0], PreprocessedFrame):
            raise SkelcapError(
                f"sample {sample.sample_id}: model input must be a preprocessed corpus"
            )
        vectors = np.stack([f.points for f in sample.frames])
        vectors = vectors[subsample_indices(len(vectors), config.max_src_len)]
        prepared.append(
            PreparedSample(
                sample_id=sample.sample_id,
                source=vectors,
                target=encode(vocab, sample.description, config.max_tgt_len),
                description=sample.description,
            )
        )
    return prepared


def assemble_batch(prepared: Sequence[PreparedSample]) -> Batch:
    """Pad a group of prepared samples to their max source/target lengths."""
    b = len(prepared)
    s = max(len(p.source) for p in prepared)
    t = max(len(p.target) for p in prepared) - 1
    source = np.zeros((b, s, FRAME_VECTOR_SIZE))
    source_mask = np.zeros((b, s), dtype=bool)
    target_in = np.full((b, t), PAD_ID, dtype=np.int64)
    target_out = np.full((b, t), PAD_ID, dtype=np.int64)
    target_mask = np.zeros((b, t), dtype=bool)
    for i, p in enumerate(prepared):
        source[i, : len(p.source)] = p.source
        source_mask[i, : len(p.source)] = True
        ids = np.asarray(p.target, dtype=np.int64)
        n = len(ids) - 1
        target_in[i, :n] = ids[:-1]
        target_out[i, :n] = ids[1:]
        target_mask[i, :n] = True
    return Batch(source, source_mask, target_in, target_out, target_mask)


def _batch_indices(seed: int, n: int, batch_size: int, step: int) -> np.ndarray:
    steps_per_epoch = max(1, math.ceil(n / batch_size))
    epoch, offset = divmod(step, steps_per_epoch)
    perm = np.random.default_rng([seed, 11, epoch]).permutation(n)
    return perm[offset * batch_size : offset * batch_size + batch_size]


def _global_norm(grads: dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float((g * g).sum()) for g in grads.values()))


def backward_and_step(
    model: Seq2SeqModel,
    batch: Batch,
    config: TrainConfig,
    state: AdamState,
    step: int = 0,
) -> float:
    """One training step: exact gradients, optional clipping, Adam update."""
    rng = None
    if model.config.dropout_p > 0:
        rng = np.random.default_rng([config.seed, 7, step])
    value, grads = loss_and_grads(model, batch, mode="train", rng=rng)
    if not math.isfinite(value):
        raise TrainingDivergedError(step, "loss")
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise TrainingDivergedError(step, f"gradient of {name}")
    if config.gradient_clip_norm is not None:
        norm = _global_norm(grads)
        if norm > config.gradient_clip_norm:
            factor = config.gradient_clip_norm / norm
            for g in grads.values():
                g *= factor
    state.t += 1
    bc1 = 1.0 - config.adam_beta1**state.t
    bc2 = 1.0 - config.adam_beta2**state.t
    for name in model.params:
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= config.adam_beta1
        m += (1.0 - config.adam_beta1) * g
        v *= config.adam_beta2
        v += (1.0 - config.adam_beta2) * (g * g)
        model.params[name] -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.adam_eps)
    return value


def train(
    model: Seq2SeqModel,
    samples: Sequence[CaptionSample],
    vocab: Vocabulary,
    config: TrainConfig,
    state: Optional[AdamState] = None,
    start_step: int = 0,
    on_step: Optional[Callable[[int, float], None]] = None,
    checkpoint_path: Optional[str | Path] = None,
) -> tuple[Seq2SeqModel, AdamState, list[tuple[int, float]]]:
    """Run seeded mini-batch training from start_step to max_steps.

    When checkpoint_path is given the final model and optimizer state are
    saved there.
    """
    prepared = prepare_samples(samples, vocab, model.config)
    if state is None:
        state = init_adam(model)
    history: list[tuple[int, float]] = []
    for step in range(start_step, config.max_steps):
        indices = _batch_indices(config.seed, len(prepared), config.batch_size, step)
        batch = assemble_batch([prepared[i] for i in indices])
        value = backward_and_step(model, batch, config, state, step)
        history.append((step, value))
        if on_step is not None:
            on_step(step, value)
        if config.log_every and step % config.log_every == 0:
            log.info("step %d loss %.6f", step, value)
    if checkpoint_path is not None:
        save_checkpoint(model, state, checkpoint_path)
    return model, state, history


def eval_loss(model: Seq2SeqModel, samples: Sequence[CaptionSample], vocab: Vocabulary,
              batch_size: int = 32) -> float:
    """Dropout-free mean cross entropy over a sample set (token-weighted)."""
    prepared = prepare_samples(samples, vocab, model.config)
    total, count = 0.0, 0
    for i in range(0, len(prepared), batch_size):
        batch = assemble_batch(prepared[i : i + batch_size])
        logits = forward(model, batch, mode="eval")
        value, _ = _loss_with_grad(logits, batch.target_out, batch.target_mask)
        n = int(batch.target_mask.sum())
        total += value * n
        count += n
    return total / count


def gradient_check(
    config: ModelConfig,
    batch: Optional[Batch] = None,
    eps: float = 1e-5,
    seed: int = 0,
    corrupt: bool = False,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Checks every parameter. `corrupt=True` zeroes the largest analytic
    gradient entry first and reports the resulting error (negative control).
    """
    if config.dropout_p != 0.0:
        raise ConfigError("gradient_check requires dropout_p == 0")
    model = init_model(config, seed)
    if batch is None:
        batch = _random_batch(config, seed)
    _, analytic = loss_and_grads(model, batch, mode="train", rng=None)
    if corrupt:
        worst = max(
            ((name, int(np.abs(g).argmax())) for name, g in analytic.items()),
            key=lambda item: float(np.abs(analytic[item[0]]).flat[item[1]]),
        )
        analytic[worst[0]].flat[worst[1]] = 0.0

    def loss_at() -> float:
        logits = forward(model, batch, mode="eval")
        value, _ = _loss_with_grad(logits, batch.target_out, batch.target_mask)
        return value

    max_rel = 0.0
    for name in sorted(model.params):
        param = model.params[name]
        grad = analytic[name]
        flat = param.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + eps
            up = loss_at()
            flat[idx] = original - eps
            down = loss_at()
            flat[idx] = original
            numeric = (up - down) / (2.0 * eps)
            a = float(grad.reshape(-1)[idx])
            rel = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            if rel > max_rel:
                max_rel = rel
    return max_rel


def _random_batch(config: ModelConfig, seed: int) -> Batch:
    """Small random batch with genuine padding on both streams."""
    rng = np.random.default_rng([seed, 3])
    b, s, t = 2, 4, 5
    source = rng.normal(0.0, 1.0, size=(b, s, FRAME_VECTOR_SIZE))
    source_mask = np.ones((b, s), dtype=bool)
    source_mask[1, 2:] = False
    source[~source_mask] = 0.0
    high = config.vocab_size
    target = rng.integers(4, max(5, high), size=(b, t + 1))
    target[:, 0] = BOS_ID
    target_in = target[:, :-1].astype(np.int64)
    target_out = target[:, 1:].astype(np.int64)
    target_mask = np.ones((b, t), dtype=bool)
    target_mask[1, 3:] = False
    target_in[1, 3:] = PAD_ID
    target_out[1, 3:] = PAD_ID
    return Batch(source, source_mask, target_in, target_out, target_mask)


def greedy_decode(
    model: Seq2SeqModel,
    frames: Sequence[PreprocessedFrame],
    vocab: Vocabulary,
    max_tgt_len: Optional[int] = None,
) -> str:
    """Argmax decoding from BOS until EOS or the length cap; deterministic."""
    if max_tgt_len is None:
        max_tgt_len = model.config.max_tgt_len
    vectors = np.stack([f.points for f in frames])
    vectors = vectors[subsample_indices(len(vectors), model.config.max_src_len)]
    source = vectors[None]
    source_mask = np.ones((1, len(vectors)), dtype=bool)
    ids = [BOS_ID]
    while len(ids) < max_tgt_len:
        target = np.asarray([ids], dtype=np.int64)
        batch = Batch(
            source=source,
            source_mask=source_mask,
            target_in=target,
            target_out=np.zeros_like(target),
            target_mask=np.ones_like(target, dtype=bool),
        )
        logits = forward(model, batch, mode="eval")
        next_id = int(logits[0, -1].argmax())  # argmax breaks ties toward smaller id
        ids.append(next_id)
        if next_id == EOS_ID:
            break
    return decode(vocab, ids)


def decode_corpus(
    model: Seq2SeqModel, samples: Sequence[CaptionSample], vocab: Vocabulary
) -> list[tuple[str, str]]:
    """Greedy-decode every sample; returns (sample_id, generated text) pairs."""
    return [(s.sample_id, greedy_decode(model, s.frames, vocab)) for s in samples]


def save_checkpoint(model: Seq2SeqModel, state: Optional[AdamState], path: str | Path) -> None:
    """Fixed-layout binary: magic, version, JSON header, little-endian float64 data."""
    manifest = [{"name": name, "shape": list(p.shape)} for name, p in model.params.items()]
    header = {
        "format_version": _CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "manifest": manifest,
        "adam_t": None if state is None else state.t,
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(_CHECKPOINT_MAGIC)
        handle.write(struct.pack("<I", _CHECKPOINT_VERSION))
        handle.write(struct.pack("<Q", len(header_bytes)))
        handle.write(header_bytes)
        for entry in manifest:
            handle.write(model.params[entry["name"]].astype("<f8").tobytes())
        if state is not None:
            for entry in manifest:
                handle.write(state.m[entry["name"]].astype("<f8").tobytes())
            for entry in manifest:
                handle.write(state.v[entry["name"]].astype("<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[Seq2SeqModel, Optional[AdamState]]:
    raw = Path(path).read_bytes()
    if len(raw) < len(_CHECKPOINT_MAGIC) + 12 or not raw.startswith(_CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path} is not a checkpoint file")
    offset = len(_CHECKPOINT_MAGIC)
    (version,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if version != _CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (header_len,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header in {path}") from exc
    offset += header_len
    config = ModelConfig(**header["config"])
    manifest = header["manifest"]
    copies = 3 if header["adam_t"] is not None else 1
    expected = sum(int(np.prod(m["shape"])) for m in manifest) * 8 * copies
    if len(raw) - offset != expected:
        raise CheckpointError(
            f"checkpoint {path} is truncated or padded: expected {expected} data bytes, "
            f"found {len(raw) - offset}"
        )

    def take(shape) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape))
        array = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += count * 8
        return array

    params = {m["name"]: take(m["shape"]) for m in manifest}
    model = Seq2SeqModel(config=config, params=params)
    state = None
    if header["adam_t"] is not None:
        m = {entry["name"]: take(entry["shape"]) for entry in manifest}
        v = {entry["name"]: take(entry["shape"]) for entry in manifest}
        state = AdamState(m=m, v=v, t=int(header["adam_t"]))
    return model, state


__all__ = [
    "TrainConfig",
    "AdamState",
    "PreparedSample",
    "init_adam",
    "prepare_samples",
    "assemble_batch",
    "subsample_indices",
    "backward_and_step",
    "train",
    "eval_loss",
    "gradient_check",
    "greedy_decode",
    "decode_corpus",
    "save_checkpoint",
    "load_checkpoint",
]
