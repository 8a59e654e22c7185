"""Deterministic seed derivation shared by pipeline stages.

Python's builtin hash() is salted per process, so anything that must be
reproducible across runs goes through blake2b instead.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step; a cheap, well-mixed 64-bit avalanche."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def stable_hash64(text: str) -> int:
    """First 8 bytes of blake2b(text), little-endian. Stable across runs."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def splitmix_stream(seed: int, index: int) -> int:
    """index-th output of a splitmix64 generator initialized at seed."""
    return splitmix64((seed + index * 0x9E3779B97F4A7C15) & _MASK64)


def stage_seed(global_seed: int, stage: str) -> int:
    """Derive a per-stage seed from the global one and the stage name."""
    return splitmix64((global_seed & _MASK64) ^ stable_hash64(stage))


def record_seed(stage_seed_value: int, record_id: str) -> int:
    """Derive a per-record seed (e.g. one RNG stream per image id)."""
    return splitmix64(stable_hash64(record_id) ^ (stage_seed_value & _MASK64))
