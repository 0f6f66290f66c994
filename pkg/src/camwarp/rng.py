"""Seeded, named RNG streams (scheme "philox-xor-v1").

A stream key is blake2s(label0 + "\\0" + label1 + "\\0" + ...)[:8] read
little-endian, XORed with the user seed (mod 2**64), and used as a Philox
key. Philox is counter based, so streams for distinct labels are
independent and the same (seed, labels) always yields the same sequence.
"""

from __future__ import annotations

import hashlib

import numpy as np

SCHEME = "philox-xor-v1"

_MASK64 = (1 << 64) - 1


def derive_key(seed: int, *labels: str) -> int:
    """64-bit stream key for (seed, labels)."""
    h = hashlib.blake2s()
    for label in labels:
        h.update(label.encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest()[:8], "little") ^ (int(seed) & _MASK64)


def rng_from(seed: int, *labels: str) -> np.random.Generator:
    """Generator over an independent, reproducible stream."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *labels)))
