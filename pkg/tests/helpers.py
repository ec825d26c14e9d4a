"""Shared test oracles and generators, independent of the library's bookkeeping."""

from __future__ import annotations

import numpy as np

from faceid_bench.gallery import UNBOUNDED


def unit(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return v / np.linalg.norm(v)


def random_unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    mat = rng.standard_normal((count, dim))
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


def naive_threshold_replay(vectors, labels, window, sigma) -> list[float | None]:
    """From-scratch threshold recomputation over the same update scopes.

    Replays the registration sequence and, for every entry, collects every
    scaled impostor similarity it was ever paired with (its own registration
    plus each later registration whose scope contains it), then takes the
    plain maximum. No incremental state is carried between steps.
    """
    mat = np.asarray(vectors, dtype=np.float64)
    n = len(labels)
    candidates: list[list[float]] = [[] for _ in range(n)]
    for i in range(n):
        lo = 0 if window == UNBOUNDED else max(0, i - int(window))
        if lo >= i:
            continue
        scaled = sigma * (mat[lo:i] @ mat[i])
        for j in range(lo, i):
            if labels[j] != labels[i]:
                value = float(scaled[j - lo])
                candidates[i].append(value)
                candidates[j].append(value)
    return [max(c) if c else None for c in candidates]


def random_manifest_lines(rng: np.random.Generator, n_identities: int, max_images: int) -> list[str]:
    """Manifest lines with identity sizes drawn in [1, max_images]."""
    lines = []
    for k in range(n_identities):
        for j in range(int(rng.integers(1, max_images + 1))):
            lines.append(f"img_{k:04d}_{j:02d}\tperson_{k:04d}")
    return lines


def random_image(rng: np.random.Generator, height: int = 32, width: int = 32) -> np.ndarray:
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
