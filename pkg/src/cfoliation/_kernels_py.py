"""Pure numpy implementation of the truncated Leibniz product.

Jet coefficients live on the trailing axis with the layout
``[value | grad (n) | hess (n*n) | third (n*n*n)]``, truncated to ``order``.
"""

import numpy as np

NAME = "python"


def _split(a, n, order):
    lead = a.shape[:-1]
    parts = [a[..., 0]]
    off = 1
    for m in range(1, order + 1):
        size = n**m
        parts.append(a[..., off:off + size].reshape(lead + (n,) * m))
        off += size
    return parts


def mul(a, b, n, order):
    """Elementwise jet product of two arrays of identical shape ``(..., K)``."""
    av, bv = a[..., 0], b[..., 0]
    if order == 0:
        return (av * bv)[..., None]
    A = _split(a, n, order)
    B = _split(b, n, order)
    lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    out = [(av * bv).reshape(lead + (1,))]

    ag, bg = A[1], B[1]
    g = ag * bv[..., None] + av[..., None] * bg
    out.append(g.reshape(lead + (n,)))
    if order >= 2:
        ah, bh = A[2], B[2]
        gg = ag[..., :, None] * bg[..., None, :]
        h = ah * bv[..., None, None] + gg + np.swapaxes(gg, -1, -2) + av[..., None, None] * bh
        out.append(h.reshape(lead + (n * n,)))
    if order >= 3:
        at, bt = A[3], B[3]
        t = at * bv[..., None, None, None] + av[..., None, None, None] * bt
        t = t + ah[..., :, :, None] * bg[..., None, None, :]
        t = t + ah[..., :, None, :] * bg[..., None, :, None]
        t = t + ah[..., None, :, :] * bg[..., :, None, None]
        t = t + ag[..., :, None, None] * bh[..., None, :, :]
        t = t + ag[..., None, :, None] * bh[..., :, None, :]
        t = t + ag[..., None, None, :] * bh[..., :, :, None]
        out.append(t.reshape(lead + (n**3,)))
    return np.concatenate(out, axis=-1)


def mul_outer(a, b, n, order):
    """Outer jet product: ``(A, K) x (B, K) -> (A, B, K)``."""
    return mul(a[:, None, :], b[None, :, :], n, order)
