"""Pure-Python metric kernels; the reference and fallback backend."""

from __future__ import annotations

from collections import Counter
from typing import Sequence


def lcs_length(a: Sequence[int], b: Sequence[int]) -> int:
    """Length of the longest common subsequence of two token-id sequences."""
    if not len(a) or not len(b):
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b):
            if x == y:
                curr.append(prev[j] + 1)
            else:
                curr.append(max(prev[j + 1], curr[j]))
        prev = curr
    return prev[-1]


def clipped_matches(cand: Sequence[int], ref: Sequence[int], n: int) -> int:
    """Candidate n-gram matches clipped by reference counts."""
    if len(cand) < n or len(ref) < n:
        return 0
    cand_grams = Counter(tuple(cand[i : i + n]) for i in range(len(cand) - n + 1))
    ref_grams = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
    return sum((cand_grams & ref_grams).values())
