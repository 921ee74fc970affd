"""Numpy implementations of the inner loops in :mod:`fracspec._ckernels`."""

from math import comb

import numpy as np


def caputo_rows(g, conv, far, out):
    n = g.shape[1]
    # lower-triangular Toeplitz operator, applied to all rows at once
    idx = np.arange(n)
    lag = idx[:, None] - idx[None, :]
    T = np.where(lag >= 0, conv[np.clip(lag, 0, n - 1)], 0.0)
    T[:, 0] = 0.0
    T[1:, 0] = far[: n - 1]
    T[0, 0] = 0.0
    out[...] = g @ T.T


def _cubic(f, t):
    n = f.shape[1]
    i0 = np.floor(t).astype(np.intp)
    fr = t - i0
    at_node = (fr < 1e-12) | (i0 >= n - 1)
    b = np.clip(i0 - 1, 0, n - 4)
    u = t - b
    w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
    w1 = u * (u - 2.0) * (u - 3.0) / 2.0
    w2 = -u * (u - 1.0) * (u - 3.0) / 2.0
    w3 = u * (u - 1.0) * (u - 2.0) / 6.0
    val = w0 * f[:, b] + w1 * f[:, b + 1] + w2 * f[:, b + 2] + w3 * f[:, b + 3]
    node = f[:, np.minimum(i0, n - 1)]
    return np.where(at_node, node, val)


def shifted_difference_rows(f, shift, order, out):
    n = f.shape[1]
    jmax = np.floor(n - 1 - order * shift + 1e-9)
    n_valid = int(min(jmax + 1, n)) if jmax >= 0 else 0
    out[...] = 0.0
    if n_valid == 0:
        return 0
    j = np.arange(n_valid, dtype=float)
    acc = np.zeros((f.shape[0], n_valid))
    for s in range(order + 1):
        c = comb(order, s) * (1.0 if (order - s) % 2 == 0 else -1.0)
        acc += c * _cubic(f, j + s * shift)
    out[:, :n_valid] = acc
    return n_valid


def duhamel_march(decay, w_prev, w_next, forcing, out):
    out[0] = 0.0
    for n in range(forcing.shape[0] - 1):
        out[n + 1] = decay * out[n] + w_prev * forcing[n] + w_next * forcing[n + 1]
