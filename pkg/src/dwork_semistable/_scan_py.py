"""Pure-Python (numpy) polynomial evaluation over a block of F_q^m.

Grid points are numbered lexicographically, the first variable being the
most significant digit.  Each polynomial is a pair ``(coeffs, exps)`` with
``coeffs`` of shape ``(t,)`` and ``exps`` of shape ``(t, m)``.
"""

from __future__ import annotations

import numpy as np


def grid_digits(q: int, m: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((stop - start, m), dtype=np.int64)
    for v in range(m - 1, -1, -1):
        out[:, v] = idx % q
        idx //= q
    return out


def evaluate_grid(add, mul, powt, m, start, stop, polys):
    digits = grid_digits(add.shape[0], m, start, stop)
    out = np.zeros((stop - start, len(polys)), dtype=np.int64)
    for p, (coeffs, exps) in enumerate(polys):
        acc = np.zeros(stop - start, dtype=np.int64)
        for c, row in zip(coeffs, exps):
            t = np.full(stop - start, c, dtype=np.int64)
            for v in np.flatnonzero(row):
                t = mul[t, powt[digits[:, v], row[v]]]
            acc = add[acc, t]
        out[:, p] = acc
    return out
