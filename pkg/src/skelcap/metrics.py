"""Corpus-level ROUGE-1/2/L and the BLEU family.

ROUGE-n and ROUGE-L are reported as the mean per-pair F1. BLEU-n is the
corpus-level modified n-gram precision (clipped matches pooled over all
pairs, no brevity penalty); the composite BLEU is the brevity-penalized
geometric mean of BLEU-1..4 and is 0 whenever any of them is 0.

Text is tokenized exactly like model targets (see tokenizer.normalize_text).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from typing import Sequence

from . import kernels
from .errors import SkelcapError
from .tokenizer import normalize_text

metric_tokenize = normalize_text

REPORT_COLUMNS = ("rouge1", "rouge2", "rougeL", "bleu", "bleu1", "bleu2", "bleu3", "bleu4")
_HEADERS = ("ROUGE-1", "ROUGE-2", "ROUGE-L", "BLEU", "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4")


@dataclass(frozen=True)
class MetricReport:
    rouge1: float
    rouge2: float
    rougeL: float
    bleu: float
    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    n_pairs: int

    def to_json(self) -> str:
        return json.dumps({f.name: getattr(self, f.name) for f in fields(self)})

    def to_table(self) -> str:
        """Fixed-width two-line table in the conventional column order."""
        header = "".join(f"{h:>9}" for h in _HEADERS)
        values = "".join(f"{getattr(self, c):>9.4f}" for c in REPORT_COLUMNS)
        return header + "\n" + values

    @classmethod
    def from_json(cls, line: str) -> "MetricReport":
        data = json.loads(line)
        return cls(**{f.name: data[f.name] for f in fields(cls)})


def _tokenize_corpora(
    candidates: Sequence[str], references: Sequence[str]
) -> tuple[list[list[int]], list[list[int]]]:
    if len(candidates) != len(references):
        raise SkelcapError(
            f"candidate/reference length mismatch: {len(candidates)} vs {len(references)}"
        )
    if len(candidates) == 0:
        raise SkelcapError("metrics require at least one candidate/reference pair")
    interned: dict[str, int] = {}

    def ids(text: str) -> list[int]:
        return [interned.setdefault(tok, len(interned)) for tok in metric_tokenize(text)]

    return [ids(c) for c in candidates], [ids(r) for r in references]


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _rouge_n_pair(cand: list[int], ref: list[int], n: int) -> float:
    cand_total = max(0, len(cand) - n + 1)
    ref_total = max(0, len(ref) - n + 1)
    if cand_total == 0 or ref_total == 0:
        return 0.0
    matches = kernels.clipped_matches(cand, ref, n)
    return _f1(matches / cand_total, matches / ref_total)


def rouge_n(candidates: Sequence[str], references: Sequence[str], n: int) -> float:
    """Mean per-pair n-gram F1 with clipped counts."""
    cands, refs = _tokenize_corpora(candidates, references)
    return sum(_rouge_n_pair(c, r, n) for c, r in zip(cands, refs)) / len(cands)


def _rouge_l_pair(cand: list[int], ref: list[int]) -> float:
    if not cand or not ref:
        return 0.0
    lcs = kernels.lcs_length(cand, ref)
    return _f1(lcs / len(cand), lcs / len(ref))


def rouge_l(candidates: Sequence[str], references: Sequence[str]) -> float:
    """Mean per-pair longest-common-subsequence F1."""
    cands, refs = _tokenize_corpora(candidates, references)
    return sum(_rouge_l_pair(c, r) for c, r in zip(cands, refs)) / len(cands)


def _modified_precision(cands: list[list[int]], refs: list[list[int]], n: int) -> float:
    matches = 0
    total = 0
    for cand, ref in zip(cands, refs):
        total += max(0, len(cand) - n + 1)
        matches += kernels.clipped_matches(cand, ref, n)
    return matches / total if total > 0 else 0.0


def bleu_individual(candidates: Sequence[str], references: Sequence[str], n: int) -> float:
    """Corpus-level modified n-gram precision, no brevity penalty."""
    cands, refs = _tokenize_corpora(candidates, references)
    return _modified_precision(cands, refs, n)


def _brevity_penalty(cands: list[list[int]], refs: list[list[int]]) -> float:
    cand_len = sum(len(c) for c in cands)
    ref_len = sum(len(r) for r in refs)
    if cand_len == 0:
        return 0.0
    if cand_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def _composite(cands: list[list[int]], refs: list[list[int]]) -> float:
    precisions = [_modified_precision(cands, refs, n) for n in range(1, 5)]
    if any(p == 0.0 for p in precisions):
        return 0.0
    return _brevity_penalty(cands, refs) * math.exp(sum(math.log(p) for p in precisions) / 4.0)


def bleu_composite(candidates: Sequence[str], references: Sequence[str]) -> float:
    """Brevity-penalized geometric mean of the four modified precisions."""
    cands, refs = _tokenize_corpora(candidates, references)
    return _composite(cands, refs)


def evaluate(candidates: Sequence[str], references: Sequence[str]) -> MetricReport:
    """All eight metrics over aligned candidate/reference corpora."""
    cands, refs = _tokenize_corpora(candidates, references)
    return MetricReport(
        rouge1=sum(_rouge_n_pair(c, r, 1) for c, r in zip(cands, refs)) / len(cands),
        rouge2=sum(_rouge_n_pair(c, r, 2) for c, r in zip(cands, refs)) / len(cands),
        rougeL=sum(_rouge_l_pair(c, r) for c, r in zip(cands, refs)) / len(cands),
        bleu=_composite(cands, refs),
        bleu1=_modified_precision(cands, refs, 1),
        bleu2=_modified_precision(cands, refs, 2),
        bleu3=_modified_precision(cands, refs, 3),
        bleu4=_modified_precision(cands, refs, 4),
        n_pairs=len(cands),
    )


__all__ = [
    "MetricReport",
    "REPORT_COLUMNS",
    "metric_tokenize",
    "rouge_n",
    "rouge_l",
    "bleu_individual",
    "bleu_composite",
    "evaluate",
]
