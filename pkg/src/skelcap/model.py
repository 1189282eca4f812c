"""Skeleton-to-text transformer: config, parameters, forward, loss, backward.

A linear layer embeds each 150-element frame vector into the model width;
a token embedding does the same for target tokens. Both streams get fixed
sinusoidal positions, then run through a pre-norm transformer encoder and
decoder (masked self-attention, cross-attention, GELU feed-forward) and a
final projection onto the vocabulary.

All math is float64 numpy. Parameters live in a flat name->array dict and
gradients mirror it; the backward pass is hand-derived and is validated
against central finite differences (see training.gradient_check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import ConfigError
from .skeleton import FRAME_VECTOR_SIZE

_LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_encoder_layers: int = 2
    n_decoder_layers: int = 2
    d_ff: int = 128
    dropout_p: float = 0.1
    max_src_len: int = 64
    max_tgt_len: int = 32

    def __post_init__(self):
        positive = ("vocab_size", "d_model", "n_heads", "n_encoder_layers",
                    "n_decoder_layers", "d_ff", "max_src_len", "max_tgt_len")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model {self.d_model} must be divisible by n_heads {self.n_heads}"
            )
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def full_scale_config(vocab_size: int = 250_112) -> ModelConfig:
    """Full-size configuration; for shape and parameter-count checks only."""
    return ModelConfig(
        vocab_size=vocab_size, d_model=768, n_heads=12, n_encoder_layers=12,
        n_decoder_layers=12, d_ff=2048, dropout_p=0.1, max_src_len=512, max_tgt_len=64,
    )


def _param_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    d, f, v = config.d_model, config.d_ff, config.vocab_size
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("src_embed.w", (FRAME_VECTOR_SIZE, d)),
        ("src_embed.b", (d,)),
        ("tok_embed.w", (v, d)),
    ]

    def attn(prefix: str):
        for name in ("wq", "wk", "wv", "wo"):
            shapes.append((f"{prefix}.{name}", (d, d)))
        for name in ("bq", "bk", "bv", "bo"):
            shapes.append((f"{prefix}.{name}", (d,)))

    def norm(prefix: str):
        shapes.append((f"{prefix}.g", (d,)))
        shapes.append((f"{prefix}.b", (d,)))

    def ff(prefix: str):
        shapes.append((f"{prefix}.w1", (d, f)))
        shapes.append((f"{prefix}.b1", (f,)))
        shapes.append((f"{prefix}.w2", (f, d)))
        shapes.append((f"{prefix}.b2", (d,)))

    for i in range(config.n_encoder_layers):
        norm(f"enc.{i}.ln1")
        attn(f"enc.{i}.attn")
        norm(f"enc.{i}.ln2")
        ff(f"enc.{i}.ff")
    norm("enc_norm")
    for i in range(config.n_decoder_layers):
        norm(f"dec.{i}.ln1")
        attn(f"dec.{i}.self_attn")
        norm(f"dec.{i}.ln2")
        attn(f"dec.{i}.cross_attn")
        norm(f"dec.{i}.ln3")
        ff(f"dec.{i}.ff")
    norm("dec_norm")
    shapes.append(("out.w", (d, v)))
    shapes.append(("out.b", (v,)))
    return shapes


def param_count(config: ModelConfig) -> int:
    """Total parameter count; a pure function of the configuration."""
    return sum(int(np.prod(shape)) for _, shape in _param_shapes(config))


@dataclass
class Seq2SeqModel:
    config: ModelConfig
    params: dict[str, np.ndarray] = field(default_factory=dict)


def init_model(config: ModelConfig, seed: int) -> Seq2SeqModel:
    """Seeded scaled-uniform init: bound sqrt(6 / (fan_in + fan_out)) per map.

    Biases and norm offsets start at zero, norm gains at one; the draw order
    is the manifest order, so equal (config, seed) gives identical parameters.
    """
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(config):
        leaf = name.rsplit(".", 1)[1]
        if leaf == "g":
            params[name] = np.ones(shape)
        elif leaf.startswith("b"):
            params[name] = np.zeros(shape)
        else:
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-bound, bound, size=shape)
    return Seq2SeqModel(config=config, params=params)


@dataclass
class Batch:
    """Padded model inputs; masks are True on real (unpadded) positions."""

    source: np.ndarray        # (B, S, 150) float64
    source_mask: np.ndarray   # (B, S) bool
    target_in: np.ndarray     # (B, T) int64
    target_out: np.ndarray    # (B, T) int64
    target_mask: np.ndarray   # (B, T) bool


@lru_cache(maxsize=8)
def _positional_encoding(length: int, d_model: int) -> np.ndarray:
    positions = np.arange(length)[:, None]
    dims = np.arange(0, d_model, 2)[None, :]
    angles = positions / np.power(10000.0, dims / d_model)
    pe = np.zeros((length, d_model))
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles[:, : pe[:, 1::2].shape[1]])
    return pe


def _gelu(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.tanh(_GELU_C * (x + _GELU_A * x**3))
    return 0.5 * x * (1.0 + t), t


def _gelu_backward(x: np.ndarray, t: np.ndarray, dout: np.ndarray) -> np.ndarray:
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return dout * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * du)


def _dropout(x: np.ndarray, p: float, train: bool, rng: Optional[np.random.Generator]):
    if not train or p <= 0.0:
        return x, None
    if rng is None:
        raise ConfigError("train-mode forward with dropout needs a random generator")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask, mask


def _linear(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w + b


def _linear_backward(x: np.ndarray, w: np.ndarray, dout: np.ndarray):
    x2 = x.reshape(-1, x.shape[-1])
    d2 = dout.reshape(-1, dout.shape[-1])
    dw = x2.T @ d2
    db = d2.sum(axis=0)
    dx = dout @ w.T
    return dx, dw, db


def _layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = (x - mean) * inv_std
    return g * xhat + b, (xhat, inv_std)


def _layer_norm_backward(cache, g: np.ndarray, dout: np.ndarray):
    xhat, inv_std = cache
    axes = tuple(range(dout.ndim - 1))
    dg = (dout * xhat).sum(axis=axes)
    db = dout.sum(axis=axes)
    dxhat = dout * g
    dx = inv_std * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    b, l, d = x.shape
    return x.reshape(b, l, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, l, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, l, h * dh)


def _attention(params: dict, prefix: str, q_in: np.ndarray, kv_in: np.ndarray,
               bias: np.ndarray, n_heads: int):
    """Multi-head attention; bias is additive (-inf on masked keys)."""
    q = _split_heads(_linear(q_in, params[f"{prefix}.wq"], params[f"{prefix}.bq"]), n_heads)
    k = _split_heads(_linear(kv_in, params[f"{prefix}.wk"], params[f"{prefix}.bk"]), n_heads)
    v = _split_heads(_linear(kv_in, params[f"{prefix}.wv"], params[f"{prefix}.bv"]), n_heads)
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = q @ k.transpose(0, 1, 3, 2) * scale + bias
    scores_max = scores.max(axis=-1, keepdims=True)
    exp = np.exp(scores - scores_max)
    probs = exp / exp.sum(axis=-1, keepdims=True)
    context = _merge_heads(probs @ v)
    out = _linear(context, params[f"{prefix}.wo"], params[f"{prefix}.bo"])
    cache = (q_in, kv_in, q, k, v, probs, context, scale)
    return out, cache


def _attention_backward(params: dict, prefix: str, cache, dout: np.ndarray,
                        grads: dict, n_heads: int):
    q_in, kv_in, q, k, v, probs, context, scale = cache
    dcontext, dwo, dbo = _linear_backward(context, params[f"{prefix}.wo"], dout)
    grads[f"{prefix}.wo"] += dwo
    grads[f"{prefix}.bo"] += dbo
    dctx = _split_heads(dcontext, n_heads)
    dprobs = dctx @ v.transpose(0, 1, 3, 2)
    dv = probs.transpose(0, 1, 3, 2) @ dctx
    dscores = probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))
    dq = dscores @ k * scale
    dk = dscores.transpose(0, 1, 3, 2) @ q * scale
    dq_in, dwq, dbq = _linear_backward(q_in, params[f"{prefix}.wq"], _merge_heads(dq))
    dk_in, dwk, dbk = _linear_backward(kv_in, params[f"{prefix}.wk"], _merge_heads(dk))
    dv_in, dwv, dbv = _linear_backward(kv_in, params[f"{prefix}.wv"], _merge_heads(dv))
    grads[f"{prefix}.wq"] += dwq
    grads[f"{prefix}.bq"] += dbq
    grads[f"{prefix}.wk"] += dwk
    grads[f"{prefix}.bk"] += dbk
    grads[f"{prefix}.wv"] += dwv
    grads[f"{prefix}.bv"] += dbv
    return dq_in, dk_in + dv_in


def _ff(params: dict, prefix: str, x: np.ndarray):
    h = _linear(x, params[f"{prefix}.w1"], params[f"{prefix}.b1"])
    a, t = _gelu(h)
    out = _linear(a, params[f"{prefix}.w2"], params[f"{prefix}.b2"])
    return out, (x, h, a, t)


def _ff_backward(params: dict, prefix: str, cache, dout: np.ndarray, grads: dict):
    x, h, a, t = cache
    da, dw2, db2 = _linear_backward(a, params[f"{prefix}.w2"], dout)
    grads[f"{prefix}.w2"] += dw2
    grads[f"{prefix}.b2"] += db2
    dh = _gelu_backward(h, t, da)
    dx, dw1, db1 = _linear_backward(x, params[f"{prefix}.w1"], dh)
    grads[f"{prefix}.w1"] += dw1
    grads[f"{prefix}.b1"] += db1
    return dx


def _sublayer_norm(params, prefix, x):
    out, cache = _layer_norm(x, params[f"{prefix}.g"], params[f"{prefix}.b"])
    return out, cache


def _sublayer_norm_backward(params, prefix, cache, dout, grads):
    dx, dg, db = _layer_norm_backward(cache, params[f"{prefix}.g"], dout)
    grads[f"{prefix}.g"] += dg
    grads[f"{prefix}.b"] += db
    return dx


def _key_bias(mask: np.ndarray) -> np.ndarray:
    """(B, L) key validity -> additive (B, 1, 1, L) bias."""
    return np.where(mask[:, None, None, :], 0.0, -np.inf)


def _causal_bias(length: int) -> np.ndarray:
    allowed = np.tril(np.ones((length, length), dtype=bool))
    return np.where(allowed[None, None], 0.0, -np.inf)


def _validate_batch(config: ModelConfig, batch: Batch) -> None:
    b, s, width = batch.source.shape
    if width != FRAME_VECTOR_SIZE:
        raise ConfigError(f"source frame vectors must have width {FRAME_VECTOR_SIZE}, got {width}")
    if s > config.max_src_len:
        raise ConfigError(f"source length {s} exceeds max_src_len {config.max_src_len}")
    if batch.source_mask.shape != (b, s):
        raise ConfigError("source_mask shape does not match source")
    if batch.target_in.shape != batch.target_out.shape or batch.target_in.shape[0] != b:
        raise ConfigError("target_in/target_out shapes are inconsistent with the batch")
    if batch.target_in.shape[1] > config.max_tgt_len:
        raise ConfigError(
            f"target length {batch.target_in.shape[1]} exceeds max_tgt_len {config.max_tgt_len}"
        )
    if batch.target_mask.shape != batch.target_in.shape:
        raise ConfigError("target_mask shape does not match targets")
    if int(batch.target_in.max(initial=0)) >= config.vocab_size:
        raise ConfigError("target token id outside vocabulary")


def forward(model: Seq2SeqModel, batch: Batch, mode: str = "eval",
            rng: Optional[np.random.Generator] = None, return_cache: bool = False):
    """Run the full encoder-decoder; returns (B, T, vocab) logits.

    Dropout is active only in train mode and draws its masks from `rng` in a
    fixed order, so a seeded generator makes training steps reproducible.
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    _validate_batch(model.config, batch)
    cfg = model.config
    params = model.params
    train = mode == "train"
    p = cfg.dropout_p
    cache: dict = {"attn_probs": []}

    src_bias = _key_bias(batch.source_mask)
    tgt_len = batch.target_in.shape[1]
    tgt_bias = _causal_bias(tgt_len) + _key_bias(batch.target_mask)

    # encoder
    e = _linear(batch.source, params["src_embed.w"], params["src_embed.b"])
    e = e + _positional_encoding(e.shape[1], cfg.d_model)[None]
    x, m = _dropout(e, p, train, rng)
    cache["src_drop"] = m
    cache["enc"] = []
    for i in range(cfg.n_encoder_layers):
        pre = f"enc.{i}"
        a, ln1 = _sublayer_norm(params, f"{pre}.ln1", x)
        sa, attn_cache = _attention(params, f"{pre}.attn", a, a, src_bias, cfg.n_heads)
        sa_d, m1 = _dropout(sa, p, train, rng)
        x1 = x + sa_d
        c, ln2 = _sublayer_norm(params, f"{pre}.ln2", x1)
        ffo, ff_cache = _ff(params, f"{pre}.ff", c)
        ffo_d, m2 = _dropout(ffo, p, train, rng)
        x = x1 + ffo_d
        cache["enc"].append((ln1, attn_cache, m1, ln2, ff_cache, m2))
        cache["attn_probs"].append(attn_cache[5])
    enc_out, enc_norm_cache = _sublayer_norm(params, "enc_norm", x)
    cache["enc_norm"] = enc_norm_cache

    # decoder
    t = params["tok_embed.w"][batch.target_in]
    t = t + _positional_encoding(tgt_len, cfg.d_model)[None]
    y, m = _dropout(t, p, train, rng)
    cache["tgt_drop"] = m
    cache["dec"] = []
    for i in range(cfg.n_decoder_layers):
        pre = f"dec.{i}"
        a, ln1 = _sublayer_norm(params, f"{pre}.ln1", y)
        sa, self_cache = _attention(params, f"{pre}.self_attn", a, a, tgt_bias, cfg.n_heads)
        sa_d, m1 = _dropout(sa, p, train, rng)
        y1 = y + sa_d
        c, ln2 = _sublayer_norm(params, f"{pre}.ln2", y1)
        ca, cross_cache = _attention(params, f"{pre}.cross_attn", c, enc_out, src_bias, cfg.n_heads)
        ca_d, m2 = _dropout(ca, p, train, rng)
        y2 = y1 + ca_d
        d_, ln3 = _sublayer_norm(params, f"{pre}.ln3", y2)
        ffo, ff_cache = _ff(params, f"{pre}.ff", d_)
        ffo_d, m3 = _dropout(ffo, p, train, rng)
        y = y2 + ffo_d
        cache["dec"].append((ln1, self_cache, m1, ln2, cross_cache, m2, ln3, ff_cache, m3))
        cache["attn_probs"].extend([self_cache[5], cross_cache[5]])
    dec_out, dec_norm_cache = _sublayer_norm(params, "dec_norm", y)
    cache["dec_norm"] = dec_norm_cache

    logits = _linear(dec_out, params["out.w"], params["out.b"])
    if return_cache:
        cache["dec_out"] = dec_out
        cache["logits"] = logits
        return logits, cache
    return logits


def loss(logits: np.ndarray, target_out: np.ndarray, target_mask: np.ndarray) -> float:
    """Mean token-level cross entropy over unpadded positions."""
    value, _ = _loss_with_grad(logits, target_out, target_mask)
    return value


def _loss_with_grad(logits: np.ndarray, target_out: np.ndarray, target_mask: np.ndarray):
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    logsumexp = np.log(np.exp(shifted).sum(axis=-1, keepdims=True)) + m
    logp = logits - logsumexp
    mask = target_mask.astype(np.float64)
    n = mask.sum()
    if n == 0:
        raise ConfigError("batch has no unpadded target positions")
    b_idx, t_idx = np.indices(target_out.shape)
    picked = logp[b_idx, t_idx, target_out]
    value = float(-(picked * mask).sum() / n)
    dlogits = np.exp(logp)
    dlogits[b_idx, t_idx, target_out] -= 1.0
    dlogits *= (mask / n)[..., None]
    return value, dlogits


def backward(model: Seq2SeqModel, batch: Batch, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of the loss for every parameter, in a dict mirroring params."""
    cfg = model.config
    params = model.params
    grads = {name: np.zeros_like(value) for name, value in params.items()}

    ddec_out, dw, db = _linear_backward(cache["dec_out"], params["out.w"], dlogits)
    grads["out.w"] += dw
    grads["out.b"] += db
    dy = _sublayer_norm_backward(params, "dec_norm", cache["dec_norm"], ddec_out, grads)

    denc_out = np.zeros_like(cache["enc_norm"][0])  # accumulated via cross-attention
    for i in reversed(range(cfg.n_decoder_layers)):
        pre = f"dec.{i}"
        ln1, self_cache, m1, ln2, cross_cache, m2, ln3, ff_cache, m3 = cache["dec"][i]
        dffo = dy * m3 if m3 is not None else dy
        dd = _ff_backward(params, f"{pre}.ff", ff_cache, dffo, grads)
        dy2 = dy + _sublayer_norm_backward(params, f"{pre}.ln3", ln3, dd, grads)
        dca = dy2 * m2 if m2 is not None else dy2
        dc, denc = _attention_backward(params, f"{pre}.cross_attn", cross_cache, dca, grads, cfg.n_heads)
        denc_out += denc
        dy1 = dy2 + _sublayer_norm_backward(params, f"{pre}.ln2", ln2, dc, grads)
        dsa = dy1 * m1 if m1 is not None else dy1
        da, da_kv = _attention_backward(params, f"{pre}.self_attn", self_cache, dsa, grads, cfg.n_heads)
        dy = dy1 + _sublayer_norm_backward(params, f"{pre}.ln1", ln1, da + da_kv, grads)
    if cache["tgt_drop"] is not None:
        dy = dy * cache["tgt_drop"]
    np.add.at(grads["tok_embed.w"], batch.target_in, dy)

    dx = _sublayer_norm_backward(params, "enc_norm", cache["enc_norm"], denc_out, grads)
    for i in reversed(range(cfg.n_encoder_layers)):
        pre = f"enc.{i}"
        ln1, attn_cache, m1, ln2, ff_cache, m2 = cache["enc"][i]
        dffo = dx * m2 if m2 is not None else dx
        dc = _ff_backward(params, f"{pre}.ff", ff_cache, dffo, grads)
        dx1 = dx + _sublayer_norm_backward(params, f"{pre}.ln2", ln2, dc, grads)
        dsa = dx1 * m1 if m1 is not None else dx1
        da, da_kv = _attention_backward(params, f"{pre}.attn", attn_cache, dsa, grads, cfg.n_heads)
        dx = dx1 + _sublayer_norm_backward(params, f"{pre}.ln1", ln1, da + da_kv, grads)
    if cache["src_drop"] is not None:
        dx = dx * cache["src_drop"]
    _, dw, db = _linear_backward(batch.source, params["src_embed.w"], dx)
    grads["src_embed.w"] += dw
    grads["src_embed.b"] += db
    return grads


def loss_and_grads(model: Seq2SeqModel, batch: Batch, mode: str = "train",
                   rng: Optional[np.random.Generator] = None):
    """Convenience wrapper: forward with cache, loss, and full backward."""
    logits, cache = forward(model, batch, mode=mode, rng=rng, return_cache=True)
    value, dlogits = _loss_with_grad(logits, batch.target_out, batch.target_mask)
    grads = backward(model, batch, cache, dlogits)
    return value, grads


__all__ = [
    "ModelConfig",
    "Seq2SeqModel",
    "Batch",
    "full_scale_config",
    "param_count",
    "init_model",
    "forward",
    "loss",
    "loss_and_grads",
    "backward",
]
