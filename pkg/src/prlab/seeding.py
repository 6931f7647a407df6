"""Per-replicate seed derivation.

``derive_seed(master, i)`` is the first 8 bytes (little-endian) of
BLAKE2b over the 16-byte little-endian encodings of ``master`` and ``i``.
Each replicate's stream depends only on ``(master, i)``, never on the
order in which replicates run.
"""

import hashlib

import numpy as np

_MASK128 = (1 << 128) - 1


def derive_seed(master: int, index: int) -> int:
    h = hashlib.blake2b(digest_size=8, person=b"prlab-seed")
    h.update((int(master) & _MASK128).to_bytes(16, "little"))
    h.update((int(index) & _MASK128).to_bytes(16, "little"))
    return int.from_bytes(h.digest(), "little")


def replicate_rng(master: int, index: int):
    return np.random.default_rng(derive_seed(master, index))
