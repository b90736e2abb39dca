"""Named, counter-based random streams.

Every random draw in the package flows through a Philox generator keyed by
an integer seed. Child seeds are derived from (seed, *labels) with SHA-256,
so streams are stable across platforms and insensitive to call order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *labels: object) -> int:
    """Derive a 64-bit child seed from a master seed and a label path."""
    text = "|".join([str(int(seed))] + [str(x) for x in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def generator(seed: int, *labels: object) -> np.random.Generator:
    """Counter-based generator for the stream named by (seed, *labels)."""
    if labels:
        seed = derive_seed(seed, *labels)
    return np.random.Generator(np.random.Philox(key=seed))
