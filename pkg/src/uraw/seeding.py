"""Deterministic random streams keyed by (run seed, item key).

Streams use the counter-based Philox generator keyed by the run seed and a
stable 64-bit hash of the item key, so per-item work is reproducible
independent of processing order and safe to parallelize across items.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U64 = 0xFFFFFFFFFFFFFFFF


def key_hash(key: str) -> int:
    """Stable 64-bit hash of a corpus key (filename, image id, ...)."""
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def seeded_rng(seed: int, key: str | None = None) -> np.random.Generator:
    """Philox stream for one run, optionally sub-keyed per item."""
    subkey = key_hash(key) if key is not None else 0
    bitgen = np.random.Philox(key=[seed & _U64, subkey & _U64])
    return np.random.Generator(bitgen)
