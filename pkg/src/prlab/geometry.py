"""Rectangular boxes of Z^d: coordinates, neighbour tables, window slicing."""

from functools import cached_property

import numpy as np


class Grid:
    """Rectangular box of ``Z^d`` stored row-major.

    ``shape`` gives the side lengths; coordinates are centred so that a
    side of length ``2n + 1`` covers ``[-n, n]``.
    """

    def __init__(self, shape):
        self.shape = tuple(int(s) for s in shape)
        if not self.shape or min(self.shape) < 1:
            raise ValueError("grid sides must be >= 1")
        self.offset = np.array([(s - 1) // 2 for s in self.shape], dtype=np.int64)

    @classmethod
    def cube(cls, d, n):
        """The box ``[-n, n]**d``."""
        return cls((2 * n + 1,) * d)

    def __repr__(self):
        return f"Grid({self.shape})"

    def __eq__(self, other):
        return isinstance(other, Grid) and other.shape == self.shape

    def __hash__(self):
        return hash(self.shape)

    @property
    def d(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @cached_property
    def coords(self):
        idx = np.indices(self.shape).reshape(self.d, -1).T
        return idx - self.offset

    def index(self, coord):
        coord = np.atleast_1d(np.asarray(coord, dtype=np.int64))
        pos = coord + self.offset
        if np.any(pos < 0) or np.any(pos >= np.array(self.shape)):
            raise IndexError(f"{tuple(coord)} outside {self}")
        return int(np.ravel_multi_index(tuple(pos), self.shape))

    def indices(self, coords):
        return np.array([self.index(c) for c in coords], dtype=np.int64)

    @cached_property
    def neighbors(self):
        """``(size, 2d)`` table of nearest-neighbour indices, ``-1`` outside."""
        coords = np.indices(self.shape).reshape(self.d, -1).T
        out = np.full((self.size, 2 * self.d), -1, dtype=np.int64)
        for axis in range(self.d):
            for k, step in enumerate((-1, 1)):
                nb = coords.copy()
                nb[:, axis] += step
                ok = (nb[:, axis] >= 0) & (nb[:, axis] < self.shape[axis])
                out[ok, 2 * axis + k] = np.ravel_multi_index(tuple(nb[ok].T), self.shape)
        return out

    @cached_property
    def directed_edges(self):
        """All ordered nearest-neighbour pairs ``(x, y)`` inside the grid."""
        nb = self.neighbors
        src = np.repeat(np.arange(self.size), nb.shape[1])
        dst = nb.ravel()
        ok = dst >= 0
        return np.stack([src[ok], dst[ok]], axis=1)

    def sup_norm(self):
        return np.abs(self.coords).max(axis=1)

    def missing_neighbors(self):
        """Number of neighbours of each site that fall outside the grid."""
        return (self.neighbors < 0).sum(axis=1)


def cube_offsets(d, n):
    """Coordinates of ``[-n, n]**d`` as an ``(k, d)`` array."""
    return Grid.cube(d, n).coords


def translate_counts(fields, zeros=(), ones=(), frame=None):
    """Pattern indicator over every translate that fits in the field.

    ``fields`` has shape ``(k, *grid)``; the pattern asks ``zeros`` to be 0
    and ``ones`` to be 1 (integer offset vectors).  Translates are anchored
    to the bounding box of ``frame`` (default: the pattern's own offsets),
    so patterns evaluated with a common frame share their translates.
    Returns a boolean array ``(k, *translates)``.
    """
    fields = np.asarray(fields)
    d = fields.ndim - 1
    zeros = np.asarray(zeros, dtype=np.int64).reshape(-1, d)
    ones = np.asarray(ones, dtype=np.int64).reshape(-1, d)
    if frame is None:
        frame = np.concatenate([zeros, ones])
    frame = np.asarray(frame, dtype=np.int64).reshape(-1, d)
    if frame.size == 0:
        return np.ones(fields.shape, dtype=bool)
    lo = frame.min(axis=0)
    extent = np.array(fields.shape[1:]) - (frame.max(axis=0) - lo)
    if np.any(extent < 1):
        raise ValueError("pattern does not fit in the field")
    out = np.ones((fields.shape[0], *extent), dtype=bool)
    for o, want in [(o, 0) for o in zeros] + [(o, 1) for o in ones]:
        start = o - lo
        sl = (slice(None),) + tuple(slice(s, s + e) for s, e in zip(start, extent))
        out &= fields[sl] == want
    return out
