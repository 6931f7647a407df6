"""Bitmask helpers and fast transforms on the subset lattice.

A subset of an ordered site list of length ``n`` is an integer mask where
site ``k`` is bit ``k``.  Functions indexed by subsets are 1-D arrays of
length ``2**n``.
"""

import numpy as np

MAX_BITS = 30


def popcount(masks):
    """Number of set bits, elementwise for integer arrays."""
    masks = np.asarray(masks, dtype=np.int64)
    out = np.zeros(masks.shape, dtype=np.int64)
    m = masks.copy()
    while np.any(m):
        out += m & 1
        m >>= 1
    return out


def all_popcounts(n):
    """Popcount of every mask in ``range(2**n)``."""
    counts = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        counts = np.concatenate([counts, counts + 1])
    return counts


def bits_of(mask):
    """Indices of the set bits of ``mask``, ascending."""
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return out


def mask_of(indices):
    m = 0
    for k in indices:
        m |= 1 << int(k)
    return m


def is_subset(a, b):
    return a & ~b == 0


def _check_length(f):
    f = np.asarray(f)
    if f.ndim != 1:
        raise ValueError("subset-indexed array must be one-dimensional")
    n = int(f.size).bit_length() - 1
    if f.size != 1 << n:
        raise ValueError(f"length {f.size} is not a power of two")
    return n


def zeta_transform(f):
    """Subset sums: ``out[A] = sum(f[B] for B subset of A)``.

    Standard dimension sweep, ``O(n 2**n)``.
    """
    n = _check_length(f)
    out = np.array(f, dtype=np.float64, copy=True)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return out


def moebius_transform(g):
    """Inverse of :func:`zeta_transform`."""
    n = _check_length(g)
    out = np.array(g, dtype=np.float64, copy=True)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] -= view[:, 0, :]
    return out


def superset_sums(f):
    """``out[A] = sum(f[B] for B superset of A)``."""
    n = _check_length(f)
    out = np.array(f, dtype=np.float64, copy=True)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 0, :] += view[:, 1, :]
    return out


def complement_index(n):
    """Permutation ``A -> S \\ A`` on ``range(2**n)``."""
    full = (1 << n) - 1
    return full ^ np.arange(1 << n, dtype=np.int64)
