"""Deterministic RNG stream derivation.

Every stochastic component in the toolkit draws from a stream derived from a
tuple of keys (ints and strings), so results never depend on call order or
scheduling. Strings are hashed with BLAKE2b, which is stable across processes
and platforms (unlike the builtin ``hash``).
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1

SeedKey = int | str | tuple


def _entropy_ints(parts: tuple) -> list[int]:
    out: list[int] = []
    for part in parts:
        if isinstance(part, (int, np.integer)):
            out.append(int(part) & _MASK64)
        elif isinstance(part, str):
            digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
            out.append(int.from_bytes(digest, "big"))
        elif isinstance(part, (tuple, list)):
            out.extend(_entropy_ints(tuple(part)))
        else:
            raise TypeError(f"seed keys must be ints, strings, or tuples, got {type(part).__name__}")
    return out


def derive_rng(*keys: SeedKey) -> np.random.Generator:
    """Return a generator whose stream is a pure function of ``keys``."""
    if not keys:
        raise ValueError("at least one seed key is required")
    return np.random.default_rng(np.random.SeedSequence(_entropy_ints(keys)))


def derive_seed(*keys: SeedKey) -> int:
    """Collapse keys into a single non-negative 63-bit integer seed."""
    if not keys:
        raise ValueError("at least one seed key is required")
    h = hashlib.blake2b(digest_size=8)
    for value in _entropy_ints(keys):
        h.update(value.to_bytes(8, "big"))
    return int.from_bytes(h.digest(), "big") >> 1
