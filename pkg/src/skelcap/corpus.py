"""Dataset schema, JSONL serialization, leakage-controlled splits, statistics.

A corpus file holds one JSON object per line. Raw samples carry per-frame
landmark groups (nullable, 33/21/21 points); preprocessed samples carry the
150-vector plus the scale/origin the normalization removed. Serialization is
canonical: fixed key order, compact separators, and shortest round-trip
float rendering, so rewriting an unchanged corpus is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import CorpusFormatError, SkelcapError, SplitError
from .metrics import MetricReport, evaluate
from .skeleton import (
    BODY_POINTS,
    FRAME_VECTOR_SIZE,
    HAND_POINTS,
    NormalizationParams,
    PreprocessedFrame,
    SkeletonFrame,
    validate_frame,
)

Variant = Literal["raw", "preprocessed"]


@dataclass
class CaptionSample:
    """One dataset unit: a described skeleton sequence from one signer."""

    sample_id: str
    signer_id: str
    sign_id: str
    description: str
    frames: list  # list[SkeletonFrame] or list[PreprocessedFrame]

    def validate(self) -> None:
        if not self.sample_id:
            raise SkelcapError("sample_id must be nonempty")
        if not self.description:
            raise SkelcapError(f"sample {self.sample_id}: description must be nonempty")
        if not self.frames:
            raise SkelcapError(f"sample {self.sample_id}: frames must be nonempty")


@dataclass
class SplitResult:
    train: list[CaptionSample]
    test: list[CaptionSample]
    mode: str
    seed: int


@dataclass
class Histogram:
    bin_centers: np.ndarray
    counts: np.ndarray


def _group_to_json(group: np.ndarray | None):
    return None if group is None else [[float(x), float(y)] for x, y in group]


def _frame_to_json(frame, variant: Variant) -> dict:
    if variant == "raw":
        return {
            "body": _group_to_json(frame.body),
            "left_hand": _group_to_json(frame.left_hand),
            "right_hand": _group_to_json(frame.right_hand),
        }
    return {
        "points": [float(v) for v in frame.points],
        "scale": float(frame.params.scale),
        "origin": [float(frame.params.origin[0]), float(frame.params.origin[1])],
        "degenerate": bool(frame.params.degenerate),
    }


def _group_from_json(values, rows: int, name: str, line: int) -> np.ndarray | None:
    if values is None:
        return None
    if not isinstance(values, list) or len(values) != rows:
        raise CorpusFormatError(f"{name} group must hold {rows} points", line)
    return np.asarray(values, dtype=np.float64)


def _frame_from_json(data: dict, variant: Variant, line: int):
    if variant == "raw":
        frame = SkeletonFrame(
            body=_group_from_json(data.get("body"), BODY_POINTS, "body", line),
            left_hand=_group_from_json(data.get("left_hand"), HAND_POINTS, "left_hand", line),
            right_hand=_group_from_json(data.get("right_hand"), HAND_POINTS, "right_hand", line),
        )
        validate_frame(frame)
        return frame
    points = data.get("points")
    if not isinstance(points, list) or len(points) != FRAME_VECTOR_SIZE:
        raise CorpusFormatError(f"points must hold {FRAME_VECTOR_SIZE} values", line)
    vec = np.asarray(points, dtype=np.float64)
    if not np.isfinite(vec).all():
        raise CorpusFormatError("non-finite value in points", line)
    params = NormalizationParams(
        scale=float(data["scale"]),
        origin=np.asarray(data["origin"], dtype=np.float64),
        degenerate=bool(data.get("degenerate", False)),
    )
    return PreprocessedFrame(vec, params)


def sample_to_json(sample: CaptionSample, variant: Variant) -> str:
    record = {
        "sample_id": sample.sample_id,
        "signer_id": sample.signer_id,
        "sign_id": sample.sign_id,
        "description": sample.description,
        "frames": [_frame_to_json(f, variant) for f in sample.frames],
    }
    return json.dumps(record, separators=(",", ":"))


def write_samples(samples: Sequence[CaptionSample], path: str | Path, variant: Variant) -> None:
    """Write one canonical JSON record per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for sample in samples:
            sample.validate()
            handle.write(sample_to_json(sample, variant))
            handle.write("\n")


def read_samples(path: str | Path, variant: Variant) -> list[CaptionSample]:
    """Order-preserving load with schema validation and per-line error reporting."""
    samples: list[CaptionSample] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw_line in enumerate(handle, start=1):
            if not raw_line.strip():
                continue
            try:
                record = json.loads(raw_line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", lineno) from exc
            try:
                sample = CaptionSample(
                    sample_id=str(record["sample_id"]),
                    signer_id=str(record["signer_id"]),
                    sign_id=str(record["sign_id"]),
                    description=str(record["description"]),
                    frames=[_frame_from_json(f, variant, lineno) for f in record["frames"]],
                )
            except KeyError as exc:
                raise CorpusFormatError(f"missing field {exc}", lineno) from exc
            if sample.sample_id in seen:
                raise CorpusFormatError(f"duplicate sample_id {sample.sample_id!r}", lineno)
            seen.add(sample.sample_id)
            try:
                sample.validate()
            except SkelcapError as exc:
                raise CorpusFormatError(str(exc), lineno) from exc
            samples.append(sample)
    return samples


def _split_by_group(
    samples: Sequence[CaptionSample],
    key: str,
    test_fraction: float,
    seed: int,
    mode: str,
) -> SplitResult:
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must be in (0, 1), got {test_fraction}")
    groups = sorted({getattr(s, key) for s in samples})
    if len(groups) < 2:
        raise SplitError(f"need at least 2 distinct {key} values to split, got {len(groups)}")
    rng = np.random.default_rng(seed)
    order = [groups[i] for i in rng.permutation(len(groups))]
    counts = {g: 0 for g in groups}
    for s in samples:
        counts[getattr(s, key)] += 1
    target = test_fraction * len(samples)
    test_groups: set[str] = set()
    covered = 0
    for group in order:
        # never let the test side swallow every group; train must stay nonempty
        if covered >= target or len(test_groups) == len(groups) - 1:
            break
        test_groups.add(group)
        covered += counts[group]
    train = [s for s in samples if getattr(s, key) not in test_groups]
    test = [s for s in samples if getattr(s, key) in test_groups]
    return SplitResult(train=train, test=test, mode=mode, seed=seed)


def split_signer_agnostic(
    samples: Sequence[CaptionSample], test_fraction: float, seed: int
) -> SplitResult:
    """Hold out whole signers: no signer_id appears on both sides."""
    return _split_by_group(samples, "signer_id", test_fraction, seed, "signer_agnostic")


def split_sign_agnostic(
    samples: Sequence[CaptionSample], test_fraction: float, seed: int
) -> SplitResult:
    """Hold out whole signs: no sign_id appears on both sides."""
    return _split_by_group(samples, "sign_id", test_fraction, seed, "sign_agnostic")


def write_split_manifest(split: SplitResult, path: str | Path) -> None:
    manifest = {
        "mode": split.mode,
        "seed": split.seed,
        "train": [s.sample_id for s in split.train],
        "test": [s.sample_id for s in split.test],
    }
    Path(path).write_text(json.dumps(manifest, separators=(",", ":")) + "\n", encoding="utf-8")


def read_split_manifest(path: str | Path) -> dict:
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    for field_name in ("mode", "seed", "train", "test"):
        if field_name not in manifest:
            raise CorpusFormatError(f"split manifest missing field {field_name!r}")
    return manifest


def select_samples(samples: Sequence[CaptionSample], sample_ids: Iterable[str]) -> list[CaptionSample]:
    by_id = {s.sample_id: s for s in samples}
    try:
        return [by_id[sid] for sid in sample_ids]
    except KeyError as exc:
        raise SkelcapError(f"sample id {exc} not present in corpus") from exc


def _pair_from_index(k: int, n: int) -> tuple[int, int]:
    # unrank k over pairs (i, j), i < j, enumerated row by row
    i = int(n - 2 - math.floor((math.sqrt(8.0 * (n * (n - 1) // 2 - 1 - k) + 1) - 1) / 2))
    i = max(0, min(i, n - 2))
    while i * n - i * (i + 1) // 2 > k:
        i -= 1
    while (i + 1) * n - (i + 1) * (i + 2) // 2 <= k:
        i += 1
    j = i + 1 + (k - (i * n - i * (i + 1) // 2))
    return i, j


def corpus_baseline(
    samples: Sequence[CaptionSample], max_pairs: int = 100_000, seed: int = 0
) -> MetricReport:
    """Average all eight metrics over unordered pairs of distinct samples.

    The lexicographically smaller sample_id plays the candidate. When there
    are more than max_pairs pairs a seeded uniform subsample is scored.
    """
    if len(samples) < 2:
        raise SkelcapError("corpus_baseline requires at least 2 samples")
    ordered = sorted(samples, key=lambda s: s.sample_id)
    n = len(ordered)
    total_pairs = n * (n - 1) // 2
    if total_pairs > max_pairs:
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.choice(total_pairs, size=max_pairs, replace=False))
        pairs = [_pair_from_index(int(k), n) for k in chosen]
    else:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    candidates = [ordered[i].description for i, _ in pairs]
    references = [ordered[j].description for _, j in pairs]
    return evaluate(candidates, references)


def coord_stats(samples: Sequence[CaptionSample], n_bins: int) -> tuple[Histogram, Histogram]:
    """Equal-width histograms of all normalized x and y coordinates."""
    if not samples:
        raise SkelcapError("coord_stats requires a nonempty corpus")
    if n_bins < 1:
        raise SkelcapError(f"n_bins must be positive, got {n_bins}")
    vectors = np.concatenate([np.stack([f.points for f in s.frames]) for s in samples])
    histograms = []
    for axis in (0, 1):
        values = vectors[:, axis::2].reshape(-1)
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
        centers = (edges[:-1] + edges[1:]) / 2.0
        histograms.append(Histogram(bin_centers=centers, counts=counts))
    return histograms[0], histograms[1]


def write_histogram_csv(hist: Histogram, path: str | Path) -> None:
    """Two-column CSV: bin_center, count."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("bin_center,count\n")
        for center, count in zip(hist.bin_centers, hist.counts):
            handle.write(f"{float(center)!r},{int(count)}\n")


__all__ = [
    "CaptionSample",
    "SplitResult",
    "Histogram",
    "Variant",
    "read_samples",
    "write_samples",
    "sample_to_json",
    "split_signer_agnostic",
    "split_sign_agnostic",
    "write_split_manifest",
    "read_split_manifest",
    "select_samples",
    "corpus_baseline",
    "coord_stats",
    "write_histogram_csv",
]
