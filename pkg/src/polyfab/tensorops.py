"""Core dense tensor helpers: seeded RNG, Kronecker products, shape checks.

Everything in the package works in float64 on numpy arrays.  Batches are
carried on the leading axis, feature/state vectors on the last axis.
"""

import numpy as np

from .errors import ShapeError

DTYPE = np.float64


def make_rng(seed):
    """Deterministic generator; same seed gives a bit-identical stream."""
    return np.random.Generator(np.random.PCG64(seed))


def as_batch(x, m=None):
    """Coerce `x` to a (B, m) float64 array.

    A 1-d input of length m is treated as a single instance.  If `m` is
    given the last axis is checked against it.
    """
    x = np.asarray(x, dtype=DTYPE)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ShapeError(f"expected a vector or (batch, features) array, got shape {x.shape}")
    if m is not None and x.shape[1] != m:
        raise ShapeError(f"expected {m} features on the last axis, got {x.shape[1]}")
    return x


def kron(a, b):
    """Kronecker product of two matrices."""
    return np.kron(a, b)


def kron_rows(a, b):
    """Row-wise Kronecker product of two batched matrices.

    For each batch row i, output[i] = kron(a[i], b[i]).  Shapes
    (B, p) x (B, q) -> (B, p*q); matches the ordering of np.kron on vectors.
    """
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)


def check_finite(x, what="tensor"):
    if not np.all(np.isfinite(x)):
        raise ShapeError(f"{what} contains non-finite values")
    return x
