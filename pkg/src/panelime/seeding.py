"""Seed derivation. Every random stream traces back to one master seed."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *labels: object) -> int:
    """Stable 31-bit child seed for (master, labels...)."""
    key = ":".join([str(master), *(str(label) for label in labels)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


def rng_for(master: int, *labels: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))


__all__ = ["derive_seed", "rng_for"]
