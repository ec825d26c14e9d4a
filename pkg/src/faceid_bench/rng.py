"""Named deterministic random streams.

Every source of randomness in the package flows through ``stream``: a
counter-based Philox generator keyed by a hash of (seed, *scope). Streams for
distinct scopes are independent, and the stream for a given scope never
depends on how many other streams were used first, so parallel or reordered
execution cannot change any output.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def _digest(seed: int, scope: tuple) -> bytes:
    h = hashlib.sha256()
    h.update(repr(int(seed)).encode())
    for part in scope:
        if not isinstance(part, (str, int)):
            raise TypeError(f"scope parts must be str or int, got {type(part).__name__}")
        h.update(_SEP)
        h.update(repr(part).encode())
    return h.digest()


def stream(seed: int, *scope: str | int) -> np.random.Generator:
    """Return the generator for (seed, *scope); same arguments, same stream."""
    key = np.frombuffer(_digest(seed, scope)[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *scope: str | int) -> int:
    """Stable non-negative 63-bit sub-seed for (seed, *scope)."""
    return int.from_bytes(_digest(seed, scope)[16:24], "little") >> 1
