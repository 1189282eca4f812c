# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled metric kernels: LCS and clipped n-gram matching over token ids.

Both take contiguous int64 arrays; the dispatcher in __init__ handles the
conversion, so these stay free of any numpy C-API dependency.
"""

from libc.stdlib cimport free, malloc
from libc.stdint cimport int64_t


def lcs_length(const int64_t[::1] a, const int64_t[::1] b):
    """Length of the longest common subsequence of two token-id sequences."""
    cdef Py_ssize_t na = a.shape[0]
    cdef Py_ssize_t nb = b.shape[0]
    if na == 0 or nb == 0:
        return 0
    cdef int64_t *prev = <int64_t *> malloc((nb + 1) * sizeof(int64_t))
    cdef int64_t *curr = <int64_t *> malloc((nb + 1) * sizeof(int64_t))
    if prev == NULL or curr == NULL:
        free(prev)
        free(curr)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int64_t *tmp
    cdef int64_t best
    try:
        for j in range(nb + 1):
            prev[j] = 0
        for i in range(na):
            curr[0] = 0
            for j in range(nb):
                if a[i] == b[j]:
                    curr[j + 1] = prev[j] + 1
                else:
                    curr[j + 1] = prev[j + 1] if prev[j + 1] >= curr[j] else curr[j]
            tmp = prev
            prev = curr
            curr = tmp
        best = prev[nb]
    finally:
        free(prev)
        free(curr)
    return best


def clipped_matches(const int64_t[::1] cand, const int64_t[::1] ref, Py_ssize_t n):
    """Candidate n-gram matches clipped by reference counts.

    Greedy one-to-one matching of candidate n-grams against unused reference
    positions computes exactly sum_g min(count_cand(g), count_ref(g)).
    """
    cdef Py_ssize_t nc = cand.shape[0] - n + 1
    cdef Py_ssize_t nr = ref.shape[0] - n + 1
    if nc <= 0 or nr <= 0:
        return 0
    cdef unsigned char *used = <unsigned char *> malloc(nr)
    if used == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j, k
    cdef int64_t matches = 0
    cdef bint equal
    try:
        for j in range(nr):
            used[j] = 0
        for i in range(nc):
            for j in range(nr):
                if used[j]:
                    continue
                equal = True
                for k in range(n):
                    if cand[i + k] != ref[j + k]:
                        equal = False
                        break
                if equal:
                    used[j] = 1
                    matches += 1
                    break
    finally:
        free(used)
    return matches
