"""
Seed splitting: one 64-bit run seed fans out into named random streams.

A stream seed is the first eight bytes, read little-endian, of the BLAKE2b
digest of ``"{seed}/{part}/{part}..."``. The scheme only relies on UTF-8 and
BLAKE2b so other implementations can reproduce the streams.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, *parts: object) -> int:
    """Derive a 64-bit stream seed from a run seed and stream name parts."""
    label = "/".join(str(p) for p in (seed, *parts))
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int, *parts: object) -> np.random.Generator:
    """Generator for the named stream of a run seed."""
    return np.random.default_rng(derive_seed(seed, *parts))
