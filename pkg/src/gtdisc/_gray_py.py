"""Pure-Python twin of the compiled Gray-code scan (same contract as ``_gray``)."""

import numpy as np


def gray_scan(W, start, stop):
    W = np.ascontiguousarray(W, dtype=np.float64)
    n = W.shape[0]
    if stop <= start:
        raise ValueError("empty counter range")
    g = start ^ (start >> 1)
    x = np.ones(n)
    for j in range(1, n):
        if (g >> (j - 1)) & 1:
            x[j] = -1.0
    c = x @ W
    best = float(np.abs(c).sum())
    best_i = start
    for i in range(start + 1, stop):
        r = (i & -i).bit_length()
        c -= (2.0 * x[r]) * W[r]
        x[r] = -x[r]
        val = float(np.abs(c).sum())
        if val > best:
            best = val
            best_i = i
    return best, best_i
