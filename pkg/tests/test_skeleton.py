from __future__ import annotations

import numpy as np
import pytest

from skelcap.errors import SkeletonError
from skelcap.skeleton import (
    BODY_POINTS,
    FRAME_VECTOR_SIZE,
    HAND_POINTS,
    NormalizationParams,
    SkeletonFrame,
    denormalize_frame,
    flatten_frame,
    impute_body,
    impute_hands,
    normalize_frame,
    preprocess_sequence,
    unflatten_frame,
    validate_frame,
)
from conftest import random_dense_frame

# Fallback body joint for every hand landmark, by hand landmark index.
LEFT_GOLDEN = {0: 15, 1: 21, 2: 21, 3: 21, 4: 21}
LEFT_GOLDEN.update({i: 19 for i in range(5, 13)})
LEFT_GOLDEN.update({i: 17 for i in range(13, 21)})
RIGHT_GOLDEN = {0: 16, 1: 22, 2: 22, 3: 22, 4: 22}
RIGHT_GOLDEN.update({i: 20 for i in range(5, 13)})
RIGHT_GOLDEN.update({i: 18 for i in range(13, 21)})


def distinct_body() -> np.ndarray:
    # every body landmark gets a unique coordinate so mappings are traceable
    return np.stack([np.array([i * 1.0, i * 1.0 + 0.5]) for i in range(BODY_POINTS)])


class TestImputeHands:
    @pytest.mark.parametrize("hand_index,body_index", sorted(LEFT_GOLDEN.items()))
    def test_left_hand_mapping(self, hand_index, body_index):
        frame = SkeletonFrame(body=distinct_body(), right_hand=np.zeros((HAND_POINTS, 2)))
        out = impute_hands(frame)
        assert np.array_equal(out.left_hand[hand_index], frame.body[body_index])

    @pytest.mark.parametrize("hand_index,body_index", sorted(RIGHT_GOLDEN.items()))
    def test_right_hand_mapping(self, hand_index, body_index):
        frame = SkeletonFrame(body=distinct_body(), left_hand=np.zeros((HAND_POINTS, 2)))
        out = impute_hands(frame)
        assert np.array_equal(out.right_hand[hand_index], frame.body[body_index])

    def test_left_index_block_shares_one_point(self):
        body = distinct_body()
        body[19] = (0.3, 0.1)
        out = impute_hands(SkeletonFrame(body=body, right_hand=np.zeros((HAND_POINTS, 2))))
        for i in range(5, 13):
            assert np.array_equal(out.left_hand[i], np.array([0.3, 0.1]))

    def test_right_hand_blocks(self):
        body = distinct_body()
        body[16] = (1, 2)
        body[22] = (3, 4)
        body[20] = (5, 6)
        body[18] = (7, 8)
        out = impute_hands(SkeletonFrame(body=body, left_hand=np.zeros((HAND_POINTS, 2))))
        assert np.array_equal(out.right_hand[0], [1, 2])
        assert all(np.array_equal(out.right_hand[i], [3, 4]) for i in range(1, 5))
        assert all(np.array_equal(out.right_hand[i], [5, 6]) for i in range(5, 13))
        assert all(np.array_equal(out.right_hand[i], [7, 8]) for i in range(13, 21))

    def test_present_hands_pass_through(self, rng):
        frame = random_dense_frame(rng)
        out = impute_hands(frame)
        assert np.array_equal(out.left_hand, frame.left_hand)
        assert np.array_equal(out.right_hand, frame.right_hand)

    def test_requires_body(self):
        with pytest.raises(SkeletonError):
            impute_hands(SkeletonFrame(left_hand=np.zeros((HAND_POINTS, 2))))

    def test_idempotent(self, rng):
        frame = SkeletonFrame(body=distinct_body())
        once = impute_hands(frame)
        twice = impute_hands(once)
        assert np.array_equal(once.left_hand, twice.left_hand)
        assert np.array_equal(once.right_hand, twice.right_hand)


class TestImputeBody:
    def test_body_present_unchanged(self, rng):
        frame = random_dense_frame(rng)
        out = impute_body(frame, previous=None)
        assert np.array_equal(out.body, frame.body)

    def test_previous_frame_substituted_whole(self, rng):
        previous = random_dense_frame(rng)
        missing = SkeletonFrame(left_hand=np.ones((HAND_POINTS, 2)))
        out = impute_body(missing, previous=previous)
        assert np.array_equal(out.body, previous.body)
        assert np.array_equal(out.left_hand, previous.left_hand)
        assert np.array_equal(out.right_hand, previous.right_hand)

    def test_no_previous_gives_zeros(self):
        out = impute_body(SkeletonFrame(), previous=None)
        assert out.dense
        assert np.count_nonzero(flatten_frame(out)) == 0

    def test_rejects_sparse_previous(self):
        with pytest.raises(SkeletonError):
            impute_body(SkeletonFrame(), previous=SkeletonFrame(body=distinct_body()))


class TestNormalize:
    def test_hand_computed_example(self):
        body = np.zeros((BODY_POINTS, 2))
        body[11] = (2, 0)
        body[12] = (4, 0)
        body[0] = (3, 1)
        frame = SkeletonFrame(body=body, left_hand=np.zeros((HAND_POINTS, 2)), right_hand=np.zeros((HAND_POINTS, 2)))
        out, params = normalize_frame(frame)
        assert params.scale == pytest.approx(0.5, abs=1e-12)
        assert params.origin == pytest.approx([3.0, 0.0], abs=1e-12)
        assert out.body[0] == pytest.approx([0.0, 0.5], abs=1e-12)
        assert out.body[11] == pytest.approx([-0.5, 0.0], abs=1e-12)
        assert out.body[12] == pytest.approx([0.5, 0.0], abs=1e-12)

    def test_already_normalized_is_fixed_point(self, rng):
        frame = random_dense_frame(rng)
        once, params = normalize_frame(frame)
        again, params2 = normalize_frame(once)
        assert params2.scale == pytest.approx(1.0, abs=1e-9)
        assert params2.origin == pytest.approx([0.0, 0.0], abs=1e-9)
        np.testing.assert_allclose(again.body, once.body, atol=1e-9)

    def test_postconditions_1000_random_frames(self):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            frame = random_dense_frame(rng)
            out, params = normalize_frame(frame)
            assert not params.degenerate
            dist = np.hypot(*(out.body[11] - out.body[12]))
            mid = (out.body[11] + out.body[12]) / 2
            assert abs(dist - 1.0) <= 1e-9
            assert np.abs(mid).max() <= 1e-9

    def test_similarity_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            frame = random_dense_frame(rng)
            scale = rng.uniform(0.25, 4.0)
            shift = rng.uniform(-50, 50, size=2)
            moved = SkeletonFrame(
                body=frame.body * scale + shift,
                left_hand=frame.left_hand * scale + shift,
                right_hand=frame.right_hand * scale + shift,
            )
            base, _ = normalize_frame(frame)
            other, _ = normalize_frame(moved)
            np.testing.assert_allclose(other.body, base.body, atol=1e-9)
            np.testing.assert_allclose(other.left_hand, base.left_hand, atol=1e-9)
            np.testing.assert_allclose(other.right_hand, base.right_hand, atol=1e-9)

    def test_degenerate_uses_fallback(self):
        body = np.zeros((BODY_POINTS, 2))
        frame = SkeletonFrame(body=body, left_hand=np.zeros((HAND_POINTS, 2)), right_hand=np.zeros((HAND_POINTS, 2)))
        fallback = NormalizationParams(scale=2.0, origin=np.array([1.0, -1.0]))
        out, params = normalize_frame(frame, fallback)
        assert params.degenerate
        assert params.scale == 2.0
        assert params.origin == pytest.approx([1.0, -1.0])
        _, identity = normalize_frame(frame)
        assert identity.degenerate and identity.scale == 1.0

    def test_roundtrip(self, rng):
        for _ in range(50):
            frame = random_dense_frame(rng)
            normalized, params = normalize_frame(frame)
            restored = denormalize_frame(normalized, params)
            np.testing.assert_allclose(restored.body, frame.body, atol=1e-9)
            np.testing.assert_allclose(restored.left_hand, frame.left_hand, atol=1e-9)
            np.testing.assert_allclose(restored.right_hand, frame.right_hand, atol=1e-9)

    def test_denormalize_examples(self):
        frame = SkeletonFrame(
            body=np.zeros((BODY_POINTS, 2)),
            left_hand=np.zeros((HAND_POINTS, 2)),
            right_hand=np.zeros((HAND_POINTS, 2)),
        )
        frame.body[0] = (0.0, 0.5)
        out = denormalize_frame(frame, NormalizationParams(scale=0.5, origin=np.array([3.0, 0.0])))
        assert out.body[0] == pytest.approx([3.0, 1.0], abs=1e-12)
        identity = denormalize_frame(frame, NormalizationParams(scale=1.0, origin=np.zeros(2)))
        np.testing.assert_array_equal(identity.body, frame.body)

    def test_denormalize_nonpositive_scale(self):
        frame = impute_body(SkeletonFrame())
        params = NormalizationParams(scale=1.0, origin=np.zeros(2))
        params.scale = 0.0
        with pytest.raises(SkeletonError):
            denormalize_frame(frame, params)


class TestFlatten:
    def test_zero_frame(self):
        frame = impute_body(SkeletonFrame())
        vec = flatten_frame(frame)
        assert vec.shape == (FRAME_VECTOR_SIZE,)
        assert np.count_nonzero(vec) == 0

    def test_layout_first_landmark(self):
        frame = impute_body(SkeletonFrame())
        frame.body[0] = (1.0, 2.0)
        vec = flatten_frame(frame)
        assert vec[0] == 1.0 and vec[1] == 2.0
        assert np.count_nonzero(vec[2:]) == 0

    def test_layout_group_order(self):
        frame = impute_body(SkeletonFrame())
        frame.left_hand[0] = (3.0, 4.0)
        frame.right_hand[20] = (5.0, 6.0)
        vec = flatten_frame(frame)
        assert vec[66] == 3.0 and vec[67] == 4.0  # 33 body points come first
        assert vec[148] == 5.0 and vec[149] == 6.0

    def test_roundtrip_exact(self, rng):
        for _ in range(20):
            frame = random_dense_frame(rng)
            back = unflatten_frame(flatten_frame(frame))
            assert np.array_equal(back.body, frame.body)
            assert np.array_equal(back.left_hand, frame.left_hand)
            assert np.array_equal(back.right_hand, frame.right_hand)


class TestPreprocessSequence:
    def test_empty_rejected(self):
        with pytest.raises(SkeletonError):
            preprocess_sequence([])

    def test_first_frame_all_missing(self):
        out = preprocess_sequence([SkeletonFrame()])
        assert len(out) == 1
        assert np.count_nonzero(out[0].points) == 0
        assert out[0].params.scale == 1.0
        assert out[0].params.origin == pytest.approx([0.0, 0.0])
        assert out[0].params.degenerate

    def test_identical_frames_identical_outputs(self, rng):
        frame = random_dense_frame(rng)
        out = preprocess_sequence([frame, frame.copy(), frame.copy()])
        for later in out[1:]:
            assert np.array_equal(later.points, out[0].points)

    def test_carry_forward(self, rng):
        frame = random_dense_frame(rng)
        out = preprocess_sequence([frame, SkeletonFrame()])
        assert np.array_equal(out[1].points, out[0].points)

    def test_length_and_determinism(self, rng):
        frames = [random_dense_frame(rng) for _ in range(7)]
        first = preprocess_sequence(frames)
        second = preprocess_sequence([f.copy() for f in frames])
        assert len(first) == len(frames)
        for a, b in zip(first, second):
            assert np.array_equal(a.points, b.points)

    def test_imputation_totality(self, rng):
        # any subset of missing groups still yields a dense, valid output
        body = distinct_body()
        cases = [
            SkeletonFrame(),
            SkeletonFrame(body=body.copy()),
            SkeletonFrame(body=body.copy(), left_hand=np.ones((HAND_POINTS, 2))),
            SkeletonFrame(left_hand=np.ones((HAND_POINTS, 2)), right_hand=np.ones((HAND_POINTS, 2))),
        ]
        out = preprocess_sequence(cases)
        assert len(out) == len(cases)
        for pf in out:
            assert np.isfinite(pf.points).all()


def test_validate_frame_rejects_nan():
    body = distinct_body()
    body[5, 0] = np.nan
    with pytest.raises(SkeletonError):
        validate_frame(SkeletonFrame(body=body))
