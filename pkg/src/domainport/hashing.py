"""Deterministic hashing primitives.

Everything that needs a stable identity (feature slots, config hashes,
cache keys) goes through the 64-bit FNV-1a function defined here, so
results are reproducible across platforms and process restarts.

Reference vectors with seed 0:

    fnv1a_64(b"")       == 0xcbf29ce484222325
    fnv1a_64(b"a")      == 0xaf63dc4c8601ec8c
    fnv1a_64(b"foobar") == 0x85944171f73967e8
"""

from __future__ import annotations

import json
from typing import Any

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes, seed: int = 0) -> int:
    """64-bit FNV-1a hash of ``data``.

    A nonzero ``seed`` is XORed into the offset basis, giving a family
    of independent hash functions while keeping seed 0 equal to the
    reference FNV-1a.
    """
    h = FNV_OFFSET_BASIS ^ (seed & _MASK64)
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def feature_slot(feature: str, dimension: int, seed: int = 0) -> tuple[int, float]:
    """Map a feature string to (index, sign) for signed feature hashing.

    Index is ``hash % dimension``; the sign comes from the top bit of
    the same hash so it is independent of the dimension.
    """
    if dimension < 1:
        raise ValueError("dimension must be positive")
    h = fnv1a_64(feature.encode("utf-8"), seed=seed)
    index = h % dimension
    sign = -1.0 if (h >> 63) & 1 else 1.0
    return index, sign


def canonical_json(obj: Any) -> str:
    """Serialize to a canonical JSON string: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def stable_hash(obj: Any) -> str:
    """16-hex-digit digest of an object's canonical JSON form."""
    return f"{fnv1a_64(canonical_json(obj).encode('utf-8')):016x}"
