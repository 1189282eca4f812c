"""Raw and preprocessed skeleton frames: imputation, normalization, flattening.

A frame holds up to three landmark groups detected per video image: 33 body
points and 21 points per hand, each a (x, y) row of a float64 array. Any
group may be missing; imputation makes frames dense, normalization maps them
to shoulder-width units centered between the shoulders, and flattening packs
a dense frame into the 150-element vector consumed by the model.

All arithmetic is 64-bit; the 1e-9 round-trip guarantees assume doubles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import SkeletonError

BODY_POINTS = 33
HAND_POINTS = 21
TOTAL_POINTS = BODY_POINTS + 2 * HAND_POINTS  # 75
FRAME_VECTOR_SIZE = 2 * TOTAL_POINTS  # 150

LEFT_SHOULDER = 11
RIGHT_SHOULDER = 12

# Shoulder distances below this are treated as degenerate rather than
# inverted into an unbounded scale.
DEGENERATE_SHOULDER_DIST = 1e-6

# Fallback body joint for each hand landmark when a whole hand went
# undetected: wrist, then thumb / index / pinky knuckle markers of the body
# group, fanned out over the finger chains.
LEFT_HAND_BODY_SOURCE = (15,) + (21,) * 4 + (19,) * 8 + (17,) * 8
RIGHT_HAND_BODY_SOURCE = (16,) + (22,) * 4 + (20,) * 8 + (18,) * 8


def _as_points(values, rows: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (rows, 2):
        raise SkeletonError(f"expected {rows} (x, y) landmarks, got shape {arr.shape}")
    return arr


@dataclass
class SkeletonFrame:
    """One time step of detected landmarks; groups are None when undetected."""

    body: Optional[np.ndarray] = None
    left_hand: Optional[np.ndarray] = None
    right_hand: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.body is not None:
            self.body = _as_points(self.body, BODY_POINTS)
        if self.left_hand is not None:
            self.left_hand = _as_points(self.left_hand, HAND_POINTS)
        if self.right_hand is not None:
            self.right_hand = _as_points(self.right_hand, HAND_POINTS)

    @property
    def dense(self) -> bool:
        return self.body is not None and self.left_hand is not None and self.right_hand is not None

    def copy(self) -> "SkeletonFrame":
        return SkeletonFrame(
            body=None if self.body is None else self.body.copy(),
            left_hand=None if self.left_hand is None else self.left_hand.copy(),
            right_hand=None if self.right_hand is None else self.right_hand.copy(),
        )


@dataclass
class NormalizationParams:
    """Similarity transform removed from a frame: scale and shoulder midpoint.

    `scale` multiplies centered coordinates (unit: 1/shoulder-width in source
    units); `origin` is the pre-normalization shoulder midpoint. `degenerate`
    marks frames where the shoulders were too close to derive either.
    """

    scale: float
    origin: np.ndarray = field(default_factory=lambda: np.zeros(2))
    degenerate: bool = False

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(2)


@dataclass
class PreprocessedFrame:
    """Dense normalized frame as a 150-vector plus the transform it removed."""

    points: np.ndarray
    params: NormalizationParams

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.shape != (FRAME_VECTOR_SIZE,):
            raise SkeletonError(
                f"preprocessed frame must hold {FRAME_VECTOR_SIZE} values, got shape {self.points.shape}"
            )


def impute_hands(frame: SkeletonFrame) -> SkeletonFrame:
    """Fill missing hand groups from the body's wrist/knuckle markers.

    Requires the body group (body imputation runs first). Present hands pass
    through unchanged; calling this twice equals calling it once.
    """
    if frame.body is None:
        raise SkeletonError("impute_hands requires the body group; run impute_body first")
    left = frame.left_hand
    right = frame.right_hand
    if left is None:
        left = frame.body[list(LEFT_HAND_BODY_SOURCE)].copy()
    if right is None:
        right = frame.body[list(RIGHT_HAND_BODY_SOURCE)].copy()
    return SkeletonFrame(body=frame.body.copy(), left_hand=left, right_hand=right)


def impute_body(frame: SkeletonFrame, previous: Optional[SkeletonFrame] = None) -> SkeletonFrame:
    """Substitute a missing body group with the previous dense frame, or zeros.

    When the body is absent the entire previous frame replaces this one; with
    no previous frame every landmark of every group becomes (0, 0).
    """
    if frame.body is not None:
        return frame.copy()
    if previous is not None:
        if not previous.dense:
            raise SkeletonError("previous frame passed to impute_body must be dense")
        return previous.copy()
    return SkeletonFrame(
        body=np.zeros((BODY_POINTS, 2)),
        left_hand=np.zeros((HAND_POINTS, 2)),
        right_hand=np.zeros((HAND_POINTS, 2)),
    )


def _require_dense(frame: SkeletonFrame, op: str) -> None:
    if not frame.dense:
        raise SkeletonError(f"{op} requires a dense frame; apply imputation first")


def _transform(frame: SkeletonFrame, scale: float, origin: np.ndarray) -> SkeletonFrame:
    return SkeletonFrame(
        body=(frame.body - origin) * scale,
        left_hand=(frame.left_hand - origin) * scale,
        right_hand=(frame.right_hand - origin) * scale,
    )


def normalize_frame(
    frame: SkeletonFrame,
    fallback: Optional[NormalizationParams] = None,
) -> tuple[SkeletonFrame, NormalizationParams]:
    """Map a dense frame to shoulder-width units centered between the shoulders.

    Every landmark p becomes (p - origin) * scale with origin the midpoint of
    body points 11 and 12 and scale the inverse of their distance, so the
    normalized shoulders sit at distance 1 around (0, 0). Near-coincident
    shoulders fall back to `fallback` (the previous frame's params) or to the
    identity transform, and the returned params are flagged degenerate.
    """
    _require_dense(frame, "normalize_frame")
    left = frame.body[LEFT_SHOULDER]
    right = frame.body[RIGHT_SHOULDER]
    dist = float(np.hypot(*(left - right)))
    if dist < DEGENERATE_SHOULDER_DIST:
        if fallback is not None:
            params = NormalizationParams(fallback.scale, fallback.origin.copy(), degenerate=True)
        else:
            params = NormalizationParams(1.0, np.zeros(2), degenerate=True)
    else:
        params = NormalizationParams(1.0 / dist, (left + right) / 2.0)
    return _transform(frame, params.scale, params.origin), params


def denormalize_frame(frame: SkeletonFrame, params: NormalizationParams) -> SkeletonFrame:
    """Invert normalize_frame: p -> p / scale + origin."""
    if params.scale <= 0:
        raise SkeletonError(f"denormalize_frame requires a positive scale, got {params.scale}")
    _require_dense(frame, "denormalize_frame")
    return SkeletonFrame(
        body=frame.body / params.scale + params.origin,
        left_hand=frame.left_hand / params.scale + params.origin,
        right_hand=frame.right_hand / params.scale + params.origin,
    )


def flatten_frame(frame: SkeletonFrame) -> np.ndarray:
    """Pack a dense frame into the 150-vector: body, left hand, right hand, (x, y) interleaved."""
    _require_dense(frame, "flatten_frame")
    return np.concatenate([frame.body, frame.left_hand, frame.right_hand]).reshape(-1).copy()


def unflatten_frame(vector: np.ndarray) -> SkeletonFrame:
    """Inverse of flatten_frame."""
    vec = np.asarray(vector, dtype=np.float64)
    if vec.shape != (FRAME_VECTOR_SIZE,):
        raise SkeletonError(f"expected a {FRAME_VECTOR_SIZE}-vector, got shape {vec.shape}")
    pts = vec.reshape(TOTAL_POINTS, 2)
    return SkeletonFrame(
        body=pts[:BODY_POINTS].copy(),
        left_hand=pts[BODY_POINTS : BODY_POINTS + HAND_POINTS].copy(),
        right_hand=pts[BODY_POINTS + HAND_POINTS :].copy(),
    )


def preprocess_frame(
    frame: SkeletonFrame,
    previous: Optional[SkeletonFrame] = None,
    fallback: Optional[NormalizationParams] = None,
) -> tuple[PreprocessedFrame, SkeletonFrame]:
    """Run the per-frame pipeline; also returns the dense pre-normalization frame."""
    dense = impute_hands(impute_body(frame, previous))
    normalized, params = normalize_frame(dense, fallback)
    return PreprocessedFrame(flatten_frame(normalized), params), dense


def preprocess_sequence(frames: Sequence[SkeletonFrame]) -> list[PreprocessedFrame]:
    """Impute, normalize, and flatten a whole sequence in temporal order.

    Missing bodies reuse the previous dense frame; degenerate shoulders reuse
    the previous frame's normalization params. Output length equals input
    length.
    """
    if len(frames) == 0:
        raise SkeletonError("preprocess_sequence requires a nonempty sequence")
    out: list[PreprocessedFrame] = []
    previous: Optional[SkeletonFrame] = None
    fallback: Optional[NormalizationParams] = None
    for frame in frames:
        processed, dense = preprocess_frame(frame, previous, fallback)
        out.append(processed)
        previous = dense
        fallback = processed.params
    return out


def validate_frame(frame: SkeletonFrame) -> None:
    """Reject non-finite coordinates in any present group."""
    for name in ("body", "left_hand", "right_hand"):
        group = getattr(frame, name)
        if group is not None and not np.isfinite(group).all():
            raise SkeletonError(f"non-finite coordinate in {name} group")


__all__ = [
    "BODY_POINTS",
    "HAND_POINTS",
    "TOTAL_POINTS",
    "FRAME_VECTOR_SIZE",
    "LEFT_SHOULDER",
    "RIGHT_SHOULDER",
    "LEFT_HAND_BODY_SOURCE",
    "RIGHT_HAND_BODY_SOURCE",
    "SkeletonFrame",
    "NormalizationParams",
    "PreprocessedFrame",
    "impute_hands",
    "impute_body",
    "normalize_frame",
    "denormalize_frame",
    "flatten_frame",
    "unflatten_frame",
    "preprocess_sequence",
    "validate_frame",
]
