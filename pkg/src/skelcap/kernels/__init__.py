"""Metric kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when it importable; set SKELCAP_KERNELS=py to
force the fallback (or =c to require the extension). `lcs_length` and
`clipped_matches` accept any integer sequence; token ids are interned to
int64 arrays before hitting the compiled code.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

from . import _pure

_requested = os.environ.get("SKELCAP_KERNELS", "").lower()
_impl = None
if _requested in ("", "c"):
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _requested == "c":
            raise
        _impl = None

BACKEND = "c" if _impl is not None else "py"


def backend() -> str:
    """Name of the active backend: 'c' (compiled) or 'py' (pure Python)."""
    return BACKEND


def _ids(seq: Sequence[int]) -> np.ndarray:
    return np.ascontiguousarray(seq, dtype=np.int64)


if _impl is not None:

    def lcs_length(a: Sequence[int], b: Sequence[int]) -> int:
        return _impl.lcs_length(_ids(a), _ids(b))

    def clipped_matches(cand: Sequence[int], ref: Sequence[int], n: int) -> int:
        return _impl.clipped_matches(_ids(cand), _ids(ref), n)

else:
    lcs_length = _pure.lcs_length
    clipped_matches = _pure.clipped_matches

lcs_length.__doc__ = _pure.lcs_length.__doc__
clipped_matches.__doc__ = _pure.clipped_matches.__doc__

__all__ = ["BACKEND", "backend", "lcs_length", "clipped_matches"]
