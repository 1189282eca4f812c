"""Benchmark the compiled metric kernels against the pure-Python fallback.

Times LCS and clipped n-gram matching over a realistic pairwise workload
(every description pair of a synthetic corpus), which is exactly the inner
loop of corpus_baseline and of post-training evaluation.

Run:  python benchmarks/bench_kernels.py [--signs 12 --signers 8 --pairs 20000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from skelcap import kernels
from skelcap.kernels import _pure
from skelcap.metrics import metric_tokenize
from skelcap.synth import describe, spec_from_index


def build_pairs(n_signs: int, n_pairs: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    rng = np.random.default_rng(seed)
    spec_ids = rng.choice(2160, size=n_signs, replace=False)
    texts = [describe(spec_from_index(int(i))) for i in spec_ids]
    interned: dict[str, int] = {}
    token_ids = [
        np.asarray([interned.setdefault(t, len(interned)) for t in metric_tokenize(text)], dtype=np.int64)
        for text in texts
    ]
    lhs = rng.integers(0, n_signs, size=n_pairs)
    rhs = rng.integers(0, n_signs, size=n_pairs)
    return [(token_ids[i], token_ids[j]) for i, j in zip(lhs, rhs)]


def bench(fn_lcs, fn_clip, pairs) -> tuple[float, int]:
    start = time.perf_counter()
    acc = 0
    for a, b in pairs:
        acc += fn_lcs(a, b)
        for n in (1, 2, 3, 4):
            acc += fn_clip(a, b, n)
    return time.perf_counter() - start, acc


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--signs", type=int, default=12)
    parser.add_argument("--pairs", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    pairs = build_pairs(args.signs, args.pairs, args.seed)
    pure_time, pure_acc = bench(_pure.lcs_length, _pure.clipped_matches, pairs)
    rows = [("pure python", pure_time, 1.0)]
    if kernels.backend() == "c":
        c_time, c_acc = bench(kernels.lcs_length, kernels.clipped_matches, pairs)
        assert c_acc == pure_acc, "backends disagree"
        rows.append(("compiled", c_time, pure_time / c_time))
    else:
        print("compiled backend unavailable; showing fallback only")

    print(f"\n{args.pairs} pairs x (LCS + clipped 1..4-gram matches)")
    print(f"{'backend':<14}{'seconds':>10}{'speedup':>10}")
    for name, seconds, speedup in rows:
        print(f"{name:<14}{seconds:>10.3f}{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
