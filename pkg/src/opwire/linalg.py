"""Small dense routines for loop resolution.

The interconnection step needs a pivot-level verdict on whether
``I - E_y D`` is invertible, so the inverse is computed here by Gauss-Jordan
elimination with partial pivoting rather than delegated to LAPACK.
"""
import numpy as np


class SingularMatrix(ArithmeticError):
    def __init__(self, column, pivot):
        self.column = column
        self.pivot = pivot
        super().__init__(f"pivot {pivot:.3e} in column {column} below tolerance")


def inverse(a, eps=1e-10):
    """Invert square ``a``; raise :class:`SingularMatrix` if any pivot is
    smaller than ``eps`` in magnitude."""
    a = np.array(a, dtype=float)
    n, m = a.shape
    if n != m:
        raise ValueError(f"cannot invert a {n}x{m} matrix")
    aug = np.hstack([a, np.eye(n)])
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        if abs(aug[p, k]) < eps:
            raise SingularMatrix(k, abs(aug[p, k]))
        if p != k:
            aug[[k, p]] = aug[[p, k]]
        aug[k] /= aug[k, k]
        for i in range(n):
            if i != k and aug[i, k] != 0.0:
                aug[i] -= aug[i, k] * aug[k]
    return aug[:, n:]


def block_diag(blocks):
    """Block-diagonal stack that keeps zero-sized blocks in place."""
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out
