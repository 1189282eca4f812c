"""Synthetic sign-grammar corpus generator.

Each sign is a (hand shape, movement, location, handedness, repetitions)
combination; its description is a fixed lowercase template of those
attributes, and its skeleton sequence animates a canonical 2D body template:
the acting wrist follows the movement path anchored at the location, hand
landmarks come from a per-shape offset table, and per-signer style (shoulder
width, limb proportions, speed, noise, global offset) varies the rendering.

Everything is a pure function of the seed, so equal seeds give byte-equal
corpora.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import CaptionSample
from .errors import SynthError
from .skeleton import BODY_POINTS, HAND_POINTS, LEFT_SHOULDER, RIGHT_SHOULDER, SkeletonFrame


class HandShape(Enum):
    C_HAND = "c_hand"
    T_HAND = "t_hand"
    L_HAND = "l_hand"
    U_HAND = "u_hand"
    P_HAND = "p_hand"
    V_HAND = "v_hand"
    FINGERS_OPEN = "fingers_open"
    FINGERS_OPEN_STRAIGHT = "fingers_open_straight"
    FINGERS_OPEN_STRAIGHT_MIDDLE_TOUCH = "fingers_open_straight_middle_touch"


class MovementType(Enum):
    CONTINUOUS_STRAIGHT = "continuous_straight"
    CONTINUATION_SAME_DIRECTION = "continuation_same_direction"
    PARALLEL_SAME_DIRECTION = "parallel_same_direction"
    PARALLEL_OPPOSITE_DIRECTION = "parallel_opposite_direction"
    OPEN_TO_CLOSED = "open_to_closed"
    CLOSED_TO_OPEN = "closed_to_open"
    CURVED = "curved"
    CIRCULAR = "circular"


LOCATIONS = ("chest", "chin", "cheek", "forehead", "neutral")
HANDEDNESS = ("right", "left", "both")
REPETITIONS = (1, 2)

SPEC_SPACE_SIZE = len(HandShape) * len(MovementType) * len(LOCATIONS) * len(HANDEDNESS) * len(REPETITIONS)


@dataclass(frozen=True)
class SyntheticSignSpec:
    hand_shape: HandShape
    movement: MovementType
    location: str
    handedness: str
    repetitions: int


def spec_from_index(index: int) -> SyntheticSignSpec:
    """Unrank a spec from the mixed-radix product space."""
    if not 0 <= index < SPEC_SPACE_SIZE:
        raise SynthError(f"spec index {index} outside [0, {SPEC_SPACE_SIZE})")
    index, rep = divmod(index, len(REPETITIONS))
    index, handed = divmod(index, len(HANDEDNESS))
    index, loc = divmod(index, len(LOCATIONS))
    shape, move = divmod(index, len(MovementType))
    return SyntheticSignSpec(
        hand_shape=list(HandShape)[shape],
        movement=list(MovementType)[move],
        location=LOCATIONS[loc],
        handedness=HANDEDNESS[handed],
        repetitions=REPETITIONS[rep],
    )


_SUBJECT = {
    "right": ("the right hand is", "the hand", "moves"),
    "left": ("the left hand is", "the hand", "moves"),
    "both": ("both hands are", "the hands", "move"),
}

_LOCATION_PHRASE = {
    "chest": "at chest level",
    "chin": "at chin level",
    "cheek": "at cheek level",
    "forehead": "at forehead level",
    "neutral": "in the neutral space",
}

_SHAPE_PHRASE = {
    HandShape.C_HAND: "shaped like a c hand",
    HandShape.T_HAND: "shaped like a t hand",
    HandShape.L_HAND: "shaped like an l hand",
    HandShape.U_HAND: "shaped like a u hand",
    HandShape.P_HAND: "shaped like a p hand",
    HandShape.V_HAND: "shaped like a v hand",
    HandShape.FINGERS_OPEN: "with the fingers open",
    HandShape.FINGERS_OPEN_STRAIGHT: "with the fingers open and straight",
    HandShape.FINGERS_OPEN_STRAIGHT_MIDDLE_TOUCH: "with the fingers open and the middle finger touching",
}


def describe(spec: SyntheticSignSpec) -> str:
    """Canonical description text; a pure function of the spec."""
    intro, subj, verb = _SUBJECT[spec.handedness]
    movement = {
        MovementType.CONTINUOUS_STRAIGHT: f"{subj} {verb} straight to the side",
        MovementType.CONTINUATION_SAME_DIRECTION: f"{subj} {verb} straight and further in the same direction",
        MovementType.PARALLEL_SAME_DIRECTION: f"{subj} {verb} parallel in the same direction",
        MovementType.PARALLEL_OPPOSITE_DIRECTION: f"{subj} {verb} parallel in opposite directions",
        MovementType.OPEN_TO_CLOSED: "the fingers begin open and end closed",
        MovementType.CLOSED_TO_OPEN: "the fingers begin closed and end open",
        MovementType.CURVED: f"{subj} {verb} in a curve",
        MovementType.CIRCULAR: f"{subj} {verb} in a circle",
    }[spec.movement]
    times = "once" if spec.repetitions == 1 else "twice"
    return (
        f"{intro} {_LOCATION_PHRASE[spec.location]} {_SHAPE_PHRASE[spec.hand_shape]} . "
        f"{movement} {times} ."
    )


# Canonical body template: shoulder width 1.2 source units, y up, the
# subject's left side on +x (facing the viewer). Only arms and hands animate.
_BODY_TEMPLATE = np.array(
    [
        (0.00, 0.95),  # nose
        (0.08, 1.05), (0.14, 1.06), (0.20, 1.05),     # left eye inner/center/outer
        (-0.08, 1.05), (-0.14, 1.06), (-0.20, 1.05),  # right eye inner/center/outer
        (0.28, 1.00), (-0.28, 1.00),                  # ears
        (0.07, 0.84), (-0.07, 0.84),                  # mouth corners
        (0.60, 0.00), (-0.60, 0.00),                  # shoulders (11, 12)
        (0.78, -0.62), (-0.78, -0.62),                # elbows
        (0.84, -1.18), (-0.84, -1.18),                # wrists (15, 16)
        (0.92, -1.38), (-0.92, -1.38),                # pinky knuckles
        (0.82, -1.40), (-0.82, -1.40),                # index knuckles
        (0.76, -1.30), (-0.76, -1.30),                # thumb knuckles
        (0.42, -1.60), (-0.42, -1.60),                # hips
        (0.46, -2.55), (-0.46, -2.55),                # knees
        (0.48, -3.40), (-0.48, -3.40),                # ankles
        (0.52, -3.52), (-0.52, -3.52),                # heels
        (0.38, -3.60), (-0.38, -3.60),                # foot tips
    ],
    dtype=np.float64,
)

CANONICAL_SHOULDER_WIDTH = 1.2
_HAND_SIZE = 0.30

_ANCHORS = {
    "chest": (0.30, -0.30),
    "chin": (0.12, 0.68),
    "cheek": (0.30, 0.80),
    "forehead": (0.12, 1.15),
    "neutral": (0.80, -0.55),
}


def _rot(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _finger(base: np.ndarray, angle_deg: float, lengths: tuple[float, ...], curl: float) -> list[np.ndarray]:
    """Joint chain from a knuckle: each successive segment rotates with curl."""
    joints = [base]
    direction = _rot(math.radians(angle_deg)) @ np.array([0.0, 1.0])
    for i, length in enumerate(lengths):
        if i > 0:
            direction = _rot(-math.radians(55.0) * curl) @ direction
        joints.append(joints[-1] + length * direction)
    return joints[1:]


def _hand_pose(finger_params: dict) -> np.ndarray:
    """21x2 offsets from the wrist for a left hand, fingers up, thumb toward -x."""
    pose = np.zeros((HAND_POINTS, 2))
    thumb_angle, thumb_curl = finger_params["thumb"]
    thumb = _finger(np.array([-0.30, 0.18]), thumb_angle, (0.11, 0.10, 0.09), thumb_curl)
    pose[1:5] = [np.array([-0.30, 0.18])] + thumb
    bases = {
        "index": np.array([-0.22, 0.52]),
        "middle": np.array([-0.07, 0.55]),
        "ring": np.array([0.07, 0.52]),
        "pinky": np.array([0.21, 0.46]),
    }
    rows = {"index": 5, "middle": 9, "ring": 13, "pinky": 17}
    for name in ("index", "middle", "ring", "pinky"):
        angle, curl, stretch = finger_params[name]
        lengths = tuple(l * stretch for l in (0.16, 0.12, 0.09))
        joints = _finger(bases[name], angle, lengths, curl)
        pose[rows[name]] = bases[name]
        pose[rows[name] + 1 : rows[name] + 4] = joints
    return pose * _HAND_SIZE


def _shape_table() -> dict:
    f = {
        HandShape.FINGERS_OPEN_STRAIGHT: dict(
            thumb=(-55, 0.1), index=(-18, 0.0, 1.0), middle=(-6, 0.0, 1.0),
            ring=(6, 0.0, 1.0), pinky=(18, 0.0, 1.0),
        ),
        HandShape.FINGERS_OPEN: dict(
            thumb=(-55, 0.2), index=(-18, 0.15, 1.0), middle=(-6, 0.15, 1.0),
            ring=(6, 0.15, 1.0), pinky=(18, 0.15, 1.0),
        ),
        HandShape.FINGERS_OPEN_STRAIGHT_MIDDLE_TOUCH: dict(
            thumb=(-55, 0.1), index=(-18, 0.0, 1.0), middle=(-6, 0.0, 1.35),
            ring=(6, 0.0, 1.0), pinky=(18, 0.0, 1.0),
        ),
        HandShape.C_HAND: dict(
            thumb=(-70, 0.45), index=(-12, 0.45, 1.0), middle=(-4, 0.45, 1.0),
            ring=(4, 0.45, 1.0), pinky=(12, 0.45, 1.0),
        ),
        HandShape.T_HAND: dict(
            thumb=(-10, 0.25), index=(-6, 0.95, 1.0), middle=(-2, 0.95, 1.0),
            ring=(2, 0.95, 1.0), pinky=(6, 0.95, 1.0),
        ),
        HandShape.L_HAND: dict(
            thumb=(-90, 0.0), index=(-12, 0.0, 1.0), middle=(-2, 0.95, 1.0),
            ring=(2, 0.95, 1.0), pinky=(6, 0.95, 1.0),
        ),
        HandShape.U_HAND: dict(
            thumb=(-40, 0.6), index=(-4, 0.0, 1.0), middle=(4, 0.0, 1.0),
            ring=(4, 0.95, 1.0), pinky=(8, 0.95, 1.0),
        ),
        HandShape.P_HAND: dict(
            thumb=(-5, 0.15), index=(-14, 0.1, 1.0), middle=(10, 0.1, 1.0),
            ring=(4, 0.95, 1.0), pinky=(8, 0.95, 1.0),
        ),
        HandShape.V_HAND: dict(
            thumb=(-40, 0.6), index=(-20, 0.0, 1.0), middle=(20, 0.0, 1.0),
            ring=(4, 0.95, 1.0), pinky=(8, 0.95, 1.0),
        ),
    }
    table = {shape: _hand_pose(params) for shape, params in f.items()}
    table["fist"] = _hand_pose(
        dict(thumb=(-20, 0.7), index=(-6, 1.0, 1.0), middle=(-2, 1.0, 1.0),
             ring=(2, 1.0, 1.0), pinky=(6, 1.0, 1.0))
    )
    table["rest"] = table[HandShape.FINGERS_OPEN] * np.array([1.0, -1.0])
    return table


HAND_POSES = _shape_table()


@dataclass(frozen=True)
class SignerStyle:
    """Persistent per-signer rendering parameters."""

    shoulder_width: float
    limb_scale: float
    speed: float
    noise_sigma: float
    offset: tuple[float, float]


def _phase(u: float, repetitions: int) -> float:
    if u >= 1.0:
        return 1.0
    w = u * repetitions
    return w - math.floor(w)


def _wrist_path(movement: MovementType, anchor: np.ndarray, side: float, v: float, opposite: bool) -> np.ndarray:
    if movement is MovementType.CONTINUOUS_STRAIGHT:
        return anchor + np.array([(v - 0.5) * 0.5 * side, 0.0])
    if movement is MovementType.CONTINUATION_SAME_DIRECTION:
        if v < 0.45:
            g = v / 0.45 * 0.35
        elif v < 0.55:
            g = 0.35
        else:
            g = 0.35 + (v - 0.55) / 0.45 * 0.35
        return anchor + np.array([(g - 0.35) * side, 0.0])
    if movement is MovementType.PARALLEL_SAME_DIRECTION:
        return anchor + np.array([0.0, (v - 0.5) * 0.5])
    if movement is MovementType.PARALLEL_OPPOSITE_DIRECTION:
        direction = -1.0 if opposite else 1.0
        return anchor + np.array([0.0, (0.5 - v) * 0.5 * direction])
    if movement is MovementType.CURVED:
        return anchor + np.array([-0.3 * math.cos(math.pi * v) * side, 0.24 * math.sin(math.pi * v)])
    if movement is MovementType.CIRCULAR:
        center = anchor - np.array([0.22 * side, 0.0])
        return center + 0.22 * np.array([math.cos(2 * math.pi * v) * side, math.sin(2 * math.pi * v)])
    # open/close movements keep the wrist parked at the anchor
    return anchor.copy()


def _hand_blend(spec: SyntheticSignSpec, v: float) -> np.ndarray:
    shape_pose = HAND_POSES[spec.hand_shape]
    if spec.movement is MovementType.OPEN_TO_CLOSED:
        return (1.0 - v) * shape_pose + v * HAND_POSES["fist"]
    if spec.movement is MovementType.CLOSED_TO_OPEN:
        return (1.0 - v) * HAND_POSES["fist"] + v * shape_pose
    return shape_pose


def _elbow(shoulder: np.ndarray, wrist: np.ndarray, side: float) -> np.ndarray:
    direction = wrist - shoulder
    norm = float(np.hypot(*direction))
    if norm < 1e-9:
        return shoulder.copy()
    perp = np.array([-direction[1], direction[0]]) / norm
    return shoulder + 0.5 * direction + 0.2 * norm * perp * side


def render_frames(spec: SyntheticSignSpec, style: SignerStyle, n_frames: int, rng: np.random.Generator) -> list[SkeletonFrame]:
    """Animate one sample: n_frames dense raw frames in source units."""
    acting = {"right": (-1.0,), "left": (1.0,), "both": (1.0, -1.0)}[spec.handedness]
    scale = style.shoulder_width / CANONICAL_SHOULDER_WIDTH
    offset = np.asarray(style.offset)
    frames = []
    for k in range(n_frames):
        u = k / (n_frames - 1) if n_frames > 1 else 0.0
        v = _phase(u, spec.repetitions)
        body = _BODY_TEMPLATE.copy()
        hands = {1.0: None, -1.0: None}
        for side in (1.0, -1.0):
            shoulder = body[LEFT_SHOULDER if side > 0 else RIGHT_SHOULDER]
            wrist_row = 15 if side > 0 else 16
            if side in acting:
                anchor = np.array(_ANCHORS[spec.location]) * np.array([side, 1.0])
                opposite = side < 0 and len(acting) == 2
                wrist = _wrist_path(spec.movement, anchor, side, v, opposite)
                pose = _hand_blend(spec, v)
            else:
                wrist = body[wrist_row].copy()
                pose = HAND_POSES["rest"]
            # limb proportions deviate from a pure similarity per signer
            wrist = shoulder + style.limb_scale * (wrist - shoulder)
            pose = style.limb_scale * pose * np.array([side, 1.0])
            body[wrist_row] = wrist
            body[wrist_row - 2] = _elbow(shoulder, wrist, side)
            hand = wrist + pose
            body[wrist_row + 2] = hand[17]  # pinky knuckle marker
            body[wrist_row + 4] = hand[5]   # index knuckle marker
            body[wrist_row + 6] = hand[1]   # thumb knuckle marker
            hands[side] = hand
        points = np.concatenate([body, hands[1.0], hands[-1.0]]) * scale + offset
        if style.noise_sigma > 0:
            points = points + rng.normal(0.0, style.noise_sigma, size=points.shape)
        frames.append(
            SkeletonFrame(
                body=points[:BODY_POINTS],
                left_hand=points[BODY_POINTS : BODY_POINTS + HAND_POINTS],
                right_hand=points[BODY_POINTS + HAND_POINTS :],
            )
        )
    return frames


def synth_generate(
    n_signs: int,
    n_signers: int,
    samples_per_pair: int = 1,
    seed: int = 0,
    *,
    noise_sigma: float = 0.005,
    limb_jitter: float = 0.10,
    speed_range: tuple[float, float] = (0.75, 1.25),
    shoulder_range: tuple[float, float] = (0.8, 1.6),
) -> list[CaptionSample]:
    """Generate a deterministic corpus of n_signs x n_signers x samples_per_pair.

    The keyword knobs exist so variation sources can be switched off one at a
    time (e.g. noise_sigma=0, limb_jitter=0, speed_range=(1, 1) leaves only
    the similarity transform that normalization removes).
    """
    if n_signs < 1:
        raise SynthError(f"n_signs must be at least 1, got {n_signs}")
    if n_signers < 2:
        raise SynthError(f"n_signers must be at least 2, got {n_signers}")
    if samples_per_pair < 1:
        raise SynthError(f"samples_per_pair must be at least 1, got {samples_per_pair}")
    if n_signs > SPEC_SPACE_SIZE:
        raise SynthError(
            f"n_signs {n_signs} exceeds the {SPEC_SPACE_SIZE} distinct sign combinations"
        )
    sign_rng = np.random.default_rng([seed, 0])
    spec_indices = sign_rng.choice(SPEC_SPACE_SIZE, size=n_signs, replace=False)
    specs = [spec_from_index(int(i)) for i in spec_indices]
    base_frames = sign_rng.integers(28, 53, size=n_signs)

    style_rng = np.random.default_rng([seed, 1])
    styles = []
    for _ in range(n_signers):
        styles.append(
            SignerStyle(
                shoulder_width=float(style_rng.uniform(*shoulder_range)),
                limb_scale=float(style_rng.uniform(1.0 - limb_jitter, 1.0 + limb_jitter)),
                speed=float(style_rng.uniform(*speed_range)),
                noise_sigma=noise_sigma,
                offset=(float(style_rng.uniform(-2.0, 2.0)), float(style_rng.uniform(-2.0, 2.0))),
            )
        )

    samples = []
    for si, spec in enumerate(specs):
        description = describe(spec)
        for gi, style in enumerate(styles):
            n_frames = int(np.clip(round(int(base_frames[si]) / style.speed), 20, 60))
            for rep in range(samples_per_pair):
                noise_rng = np.random.default_rng([seed, 2, si, gi, rep])
                samples.append(
                    CaptionSample(
                        sample_id=f"sign{si:03d}_signer{gi:02d}_r{rep}",
                        signer_id=f"signer{gi:02d}",
                        sign_id=f"sign{si:03d}",
                        description=description,
                        frames=render_frames(spec, style, n_frames, noise_rng),
                    )
                )
    return samples


__all__ = [
    "HandShape",
    "MovementType",
    "LOCATIONS",
    "HANDEDNESS",
    "REPETITIONS",
    "SPEC_SPACE_SIZE",
    "SyntheticSignSpec",
    "SignerStyle",
    "spec_from_index",
    "describe",
    "render_frames",
    "synth_generate",
]
