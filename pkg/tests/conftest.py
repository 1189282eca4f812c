from __future__ import annotations

import numpy as np
import pytest

from skelcap.skeleton import BODY_POINTS, HAND_POINTS, SkeletonFrame


def random_dense_frame(rng: np.random.Generator, spread: float = 10.0) -> SkeletonFrame:
    """Dense frame with well-separated shoulders."""
    frame = SkeletonFrame(
        body=rng.uniform(-spread, spread, size=(BODY_POINTS, 2)),
        left_hand=rng.uniform(-spread, spread, size=(HAND_POINTS, 2)),
        right_hand=rng.uniform(-spread, spread, size=(HAND_POINTS, 2)),
    )
    while np.hypot(*(frame.body[11] - frame.body[12])) < 1e-3:
        frame.body[11] = rng.uniform(-spread, spread, size=2)
    return frame


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
