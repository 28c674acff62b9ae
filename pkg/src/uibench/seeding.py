"""Deterministic seed derivation for independent pipeline stages.

A single user-facing seed fans out into per-stage, per-key sub-seeds via a
hash of the stage name and any extra key parts.  Changing one stage's key
never perturbs another stage's stream, and derivation is stable across
processes and platforms (no reliance on PYTHONHASHSEED).
"""

from __future__ import annotations

import hashlib
import random

_SEP = "\x1f"


def derive_seed(*parts) -> int:
    """Derive a 64-bit sub-seed from any hashable-as-text parts."""
    payload = _SEP.join(str(p) for p in parts)
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(*parts) -> random.Random:
    """A fresh Random instance seeded from the given parts."""
    return random.Random(derive_seed(*parts))


def choose_index(n: int, *parts) -> int:
    """Deterministically pick an index in [0, n) from the given parts."""
    if n <= 0:
        raise ValueError("cannot choose from an empty range")
    return derive_seed(*parts) % n
