from __future__ import annotations

import json
import math

import numpy as np
import pytest

from skelcap import kernels
from skelcap.errors import SkelcapError
from skelcap.kernels import _pure
from skelcap.metrics import (
    MetricReport,
    bleu_composite,
    bleu_individual,
    evaluate,
    metric_tokenize,
    rouge_l,
    rouge_n,
)


class TestRougeN:
    def test_identical(self):
        assert rouge_n(["a b c"], ["a b c"], 1) == pytest.approx(1.0, abs=1e-12)

    def test_hand_counted_f1(self):
        # cand 3 unigrams all matched, ref has 4: P=1, R=3/4, F1=6/7
        score = rouge_n(["the right hand"], ["the right hand moves"], 1)
        assert score == pytest.approx(6.0 / 7.0, abs=1e-12)

    def test_disjoint(self):
        assert rouge_n(["a b"], ["c d"], 1) == 0.0

    def test_symmetric_f1(self):
        rng = np.random.default_rng(5)
        words = ["a", "b", "c", "d", "e"]
        for _ in range(50):
            x = " ".join(rng.choice(words, size=rng.integers(1, 8)))
            y = " ".join(rng.choice(words, size=rng.integers(1, 8)))
            for n in (1, 2):
                assert rouge_n([x], [y], n) == pytest.approx(rouge_n([y], [x], n), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(SkelcapError):
            rouge_n(["a"], ["a", "b"], 1)


class TestRougeL:
    def test_identical(self):
        assert rouge_l(["x y z"], ["x y z"]) == pytest.approx(1.0, abs=1e-12)

    def test_hand_run_dp(self):
        # LCS("a c b d", "a b c d") = 3, R = P = 3/4, F1 = 3/4
        assert rouge_l(["a c b d"], ["a b c d"]) == pytest.approx(0.75, abs=1e-12)

    def test_empty_candidate(self):
        assert rouge_l([""], ["a b"]) == 0.0

    def test_symmetric(self):
        assert rouge_l(["a c b d"], ["a b c d"]) == pytest.approx(
            rouge_l(["a b c d"], ["a c b d"]), abs=1e-12
        )

    def test_subsequence_recall_monotone(self):
        # a candidate that is a strict subsequence with equal matches
        ref = ["a b c d e"]
        shorter = rouge_l(["a c e"], ref)
        # recall for "a c e" (LCS 3) vs "a x c x e" style candidate with same LCS
        longer = rouge_l(["a f c f e"], ref)
        assert shorter >= longer  # equal matches, shorter candidate has better precision


class TestBleuIndividual:
    def test_identical_corpus(self):
        cands = ["a b c d e", "f g h i"]
        for n in range(1, 5):
            assert bleu_individual(cands, list(cands), n) == pytest.approx(1.0, abs=1e-12)

    def test_hand_counted_precisions(self):
        cand, ref = ["a b c d"], ["a b x d"]
        assert bleu_individual(cand, ref, 1) == pytest.approx(3.0 / 4.0, abs=1e-12)
        assert bleu_individual(cand, ref, 2) == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert bleu_individual(cand, ref, 3) == pytest.approx(0.0, abs=1e-12)

    def test_repeated_word_clipping(self):
        assert bleu_individual(["a a a"], ["a b"], 1) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_no_candidate_ngrams(self):
        assert bleu_individual(["a"], ["a b c"], 2) == 0.0


class TestBleuComposite:
    def test_identical(self):
        assert bleu_composite(["a b c d e"], ["a b c d e"]) == pytest.approx(1.0, abs=1e-12)

    def test_zero_when_any_precision_zero(self):
        assert bleu_composite(["a b c d"], ["a b x d"]) == 0.0

    def test_composition_identity(self):
        cands = ["the right hand moves in a circle twice", "both hands are at chest level now ok"]
        refs = ["the right hand moves in a curve twice", "both hands are at chin level now ok"]
        precisions = [bleu_individual(cands, refs, n) for n in range(1, 5)]
        assert all(p > 0 for p in precisions)
        report = evaluate(cands, refs)
        expected_gm = math.exp(sum(math.log(p) for p in precisions) / 4)
        # equal corpus lengths here, so BP = 1
        assert report.bleu == pytest.approx(expected_gm, abs=1e-12)

    def test_brevity_penalty_applies(self):
        # candidate shorter than reference: BP = exp(1 - ref/cand)
        score = bleu_composite(["a b c d"], ["a b c d e"])
        assert score == pytest.approx(math.exp(1.0 - 5.0 / 4.0), abs=1e-12)


class TestTableConsistency:
    """The published-number arithmetic the composite formula must reproduce."""

    def geometric_mean(self, ps):
        return math.exp(sum(math.log(p) for p in ps) / len(ps))

    def test_signer_agnostic_test_row(self):
        gm = self.geometric_mean([0.98, 0.96, 0.95, 0.94])
        assert gm == pytest.approx(0.957, abs=5e-4)
        assert abs(gm - 0.96) <= 0.01  # BP = 1

    def test_sign_agnostic_test_row(self):
        gm = self.geometric_mean([0.48, 0.21, 0.11, 0.06])
        assert gm == pytest.approx(0.161, abs=5e-4)
        implied_bp = 0.15 / gm
        assert 0.90 <= implied_bp <= 1.0

    def test_sign_agnostic_train_row(self):
        gm = self.geometric_mean([0.79, 0.62, 0.50, 0.42])
        assert gm == pytest.approx(0.566, abs=5e-4)
        implied_bp = 0.55 / gm
        assert 0.90 <= implied_bp <= 1.0


class TestEvaluate:
    def test_identity_all_ones(self):
        texts = ["a b c d", "e f g h i"]
        report = evaluate(texts, list(texts))
        for name in ("rouge1", "rouge2", "rougeL", "bleu", "bleu1", "bleu2", "bleu3", "bleu4"):
            assert getattr(report, name) == pytest.approx(1.0, abs=1e-12)
        assert report.n_pairs == 2

    def test_compositional_consistency(self):
        cands = ["the right hand", "a c b d", "a b c d"]
        refs = ["the right hand moves", "a b c d", "a b x d"]
        report = evaluate(cands, refs)
        assert report.rouge1 == pytest.approx(rouge_n(cands, refs, 1), abs=1e-12)
        assert report.rouge2 == pytest.approx(rouge_n(cands, refs, 2), abs=1e-12)
        assert report.rougeL == pytest.approx(rouge_l(cands, refs), abs=1e-12)
        for n in range(1, 5):
            assert getattr(report, f"bleu{n}") == pytest.approx(
                bleu_individual(cands, refs, n), abs=1e-12
            )
        assert report.bleu == pytest.approx(bleu_composite(cands, refs), abs=1e-12)

    def test_range_fuzz(self):
        rng = np.random.default_rng(17)
        words = list("abcdefgh")
        for _ in range(1000):
            k = rng.integers(1, 4)
            cands = [" ".join(rng.choice(words, size=rng.integers(1, 10))) for _ in range(k)]
            refs = [" ".join(rng.choice(words, size=rng.integers(1, 10))) for _ in range(k)]
            report = evaluate(cands, refs)
            for name in ("rouge1", "rouge2", "rougeL", "bleu", "bleu1", "bleu2", "bleu3", "bleu4"):
                assert 0.0 <= getattr(report, name) <= 1.0
            gm_ok = all(getattr(report, f"bleu{n}") > 0 for n in range(1, 5))
            if gm_ok:
                gm = math.exp(sum(math.log(getattr(report, f"bleu{n}")) for n in range(1, 5)) / 4)
                assert report.bleu <= gm + 1e-9

    def test_json_and_table(self):
        report = evaluate(["a b"], ["a b"])
        parsed = json.loads(report.to_json())
        assert parsed["rouge1"] == 1.0 and parsed["n_pairs"] == 1
        assert MetricReport.from_json(report.to_json()) == report
        table = report.to_table()
        lines = table.splitlines()
        assert len(lines) == 2
        assert lines[0].split() == ["ROUGE-1", "ROUGE-2", "ROUGE-L", "BLEU", "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4"]


def test_metric_tokenize_examples():
    assert metric_tokenize("The right Hand.") == ["the", "right", "hand", "."]
    assert metric_tokenize("") == []


class TestKernelBackends:
    def test_pure_lcs_against_known(self):
        assert _pure.lcs_length([1, 3, 2, 4], [1, 2, 3, 4]) == 3
        assert _pure.lcs_length([], [1]) == 0

    def test_pure_clipped(self):
        assert _pure.clipped_matches([1, 1, 1], [1, 2], 1) == 1
        assert _pure.clipped_matches([1, 2, 3], [1, 2, 3], 2) == 2

    def test_backend_parity(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            a = rng.integers(0, 6, size=rng.integers(0, 15)).tolist()
            b = rng.integers(0, 6, size=rng.integers(0, 15)).tolist()
            assert kernels.lcs_length(a, b) == _pure.lcs_length(a, b)
            for n in (1, 2, 3, 4):
                assert kernels.clipped_matches(a, b, n) == _pure.clipped_matches(a, b, n)
