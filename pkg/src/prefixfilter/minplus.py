"""Min-plus (tropical) convolutions used to merge sibling DP tables."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

INF = np.inf


def minplus(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``out[k] = min_j a[k-j] + b[j]`` and the smallest minimizing ``j``.

    Both inputs are 1-D float arrays; the output has ``len(a) + len(b) - 1``
    entries.  Work is ``O(min(len) * (len(a) + len(b)))`` via a padded,
    diagonally strided matrix whose column minima are the answer.
    """
    na, nb = len(a), len(b)
    n = na + nb - 1
    if na == 1:
        return a[0] + b, np.arange(nb)
    if nb == 1:
        return a + b[0], np.zeros(na, dtype=np.intp)
    if nb <= na:
        # row j holds a + b[j] shifted right by j
        pad = np.full((nb, n), INF)
        s = pad.itemsize
        as_strided(pad, shape=(nb, na), strides=((n + 1) * s, s), writeable=True)[...] = \
            b[:, None] + a[None, :]
        j = pad.argmin(axis=0)
        return pad[j, np.arange(n)], j
    # row r holds a[na-1-r] + b shifted right by na-1-r, so the first
    # minimizing row has the largest i, i.e. the smallest j
    pad = np.full((na, n), INF)
    s = pad.itemsize
    flat = pad.reshape(-1)[na - 1:]
    as_strided(flat, shape=(na, nb), strides=((n - 1) * s, s), writeable=True)[...] = \
        a[::-1, None] + b[None, :]
    r = pad.argmin(axis=0)
    k = np.arange(n)
    return pad[r, k], k - (na - 1 - r)


def minplus2d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``out[f, c] = min_{n, m} a[f-n, c-m] + b[n, m]`` over 2-D tables."""
    if a.size > b.size:
        a, b = b, a
    fa, ca = a.shape
    fb, cb = b.shape
    out = np.full((fa + fb - 1, ca + cb - 1), INF)
    for n in range(fa):
        row = a[n]
        for m in np.flatnonzero(np.isfinite(row)).tolist():
            view = out[n:n + fb, m:m + cb]
            np.minimum(view, b + row[m], out=view)
    return out
