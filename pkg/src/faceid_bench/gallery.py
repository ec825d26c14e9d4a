"""Incremental identification gallery with adaptive per-entry thresholds.

The gallery stores unit-norm embeddings with identity labels in registration
order. Recognition scores a probe against the most recent ``query_window``
entries by cosine similarity and accepts the best match only if its score
reaches that entry's threshold. Registration appends the new embedding and
updates thresholds over the most recent ``update_window`` entries, pairing
each entry only with entries of *other* identities: the new entry's threshold
becomes ``sigma * max(similarity to differently-labeled entries in scope)``
and each such entry raises its own threshold to ``sigma * similarity`` when
that is higher. Thresholds thus track the strongest impostor score each entry
has seen, so enrolling more images of the same person never raises that
person's own bar. An entry with no differently-labeled peer in scope keeps an
unset threshold and can never be matched until a later registration sets it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

#: Window value meaning "no restriction".
UNBOUNDED = math.inf

#: Tolerance on the unit-norm invariant for ingested embeddings.
NORM_TOL = 1e-4

_INITIAL_CAPACITY = 64


def as_embedding(values, dim: int | None = None) -> np.ndarray:
    """Validate ``values`` as a finite unit-norm float64 vector and return it.

    Raises ValueError on wrong dimension, non-finite components, or an L2 norm
    outside 1 +/- NORM_TOL.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"embedding must be a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"embedding dimension mismatch: expected {dim}, got {v.shape[0]}")
    if not np.isfinite(v).all():
        raise ValueError("embedding has non-finite components")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"embedding norm {norm:.6g} is outside 1 +/- {NORM_TOL}")
    return v


def normalize(values) -> np.ndarray:
    """Scale a finite vector to unit L2 norm. Zero vectors are rejected."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError("vector has non-finite components")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def similarity(a, b) -> float:
    """Cosine similarity of two unit vectors: their inner product."""
    av = as_embedding(a)
    bv = as_embedding(b, dim=av.shape[0])
    return float(np.dot(av, bv))


@dataclass(frozen=True)
class Match:
    """Best gallery hit for a probe: registration ordinal and its score."""

    index: int
    score: float


@dataclass(frozen=True)
class Accepted:
    """The probe matched a stored entry at or above its threshold."""

    predicted: str
    match: Match


@dataclass(frozen=True)
class Rejected:
    """The probe was rejected; ``best`` is the best match, if any existed."""

    best: Match | None = None


Decision = Accepted | Rejected


@dataclass(frozen=True)
class GalleryEntry:
    """Snapshot of one stored entry. ``threshold`` is None while unset."""

    seq: int
    label: str
    threshold: float | None
    embedding: np.ndarray


def _check_window(name: str, value) -> float | int:
    if value == UNBOUNDED:
        return UNBOUNDED
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be a positive integer or UNBOUNDED, got {value!r}")
    if value < 1:
        raise ValueError(f"{name} must be a positive integer or UNBOUNDED, got {value!r}")
    return int(value)


class Gallery:
    """Registration-ordered identification database (see module docstring).

    A gallery is single-writer: interleave ``register``/``recognize`` calls on
    one instance sequentially. Distinct instances are independent.
    """

    def __init__(
        self,
        dim: int,
        *,
        window: float | int = 100,
        sigma: float = 1.0,
        query_window: float | int | None = None,
        update_window: float | int | None = None,
    ):
        if not isinstance(dim, (int, np.integer)) or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim!r}")
        if not (sigma > 0.0 and math.isfinite(sigma)):
            raise ValueError(f"sigma must be a positive finite real, got {sigma!r}")
        window = _check_window("window", window)
        self._dim = int(dim)
        self._sigma = float(sigma)
        self._query_window = window if query_window is None else _check_window("query_window", query_window)
        self._update_window = window if update_window is None else _check_window("update_window", update_window)
        self._size = 0
        self._vectors = np.empty((_INITIAL_CAPACITY, self._dim), dtype=np.float64)
        self._thresholds = np.empty(_INITIAL_CAPACITY, dtype=np.float64)
        self._labels: list[str] = []

    # -- introspection -------------------------------------------------------

    def __len__(self) -> int:
        return self._size

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def sigma(self) -> float:
        return self._sigma

    @property
    def query_window(self) -> float | int:
        return self._query_window

    @property
    def update_window(self) -> float | int:
        return self._update_window

    @property
    def known_labels(self) -> frozenset[str]:
        """Labels of every stored entry (not limited to any window)."""
        return frozenset(self._labels)

    def label(self, seq: int) -> str:
        return self._labels[self._index(seq)]

    def threshold(self, seq: int) -> float | None:
        """Current threshold of entry ``seq``; None while unset."""
        t = self._thresholds[self._index(seq)]
        return None if math.isnan(t) else float(t)

    def embedding(self, seq: int) -> np.ndarray:
        return self._vectors[self._index(seq)].copy()

    def entries(self) -> Iterator[GalleryEntry]:
        for seq in range(self._size):
            yield GalleryEntry(seq, self._labels[seq], self.threshold(seq), self.embedding(seq))

    def _index(self, seq: int) -> int:
        if not 0 <= seq < self._size:
            raise IndexError(f"no entry with seq {seq}")
        return seq

    def _scope_start(self, window: float | int) -> int:
        if window == UNBOUNDED:
            return 0
        return max(0, self._size - int(window))

    # -- operations ----------------------------------------------------------

    def register(self, embedding, label: str) -> int:
        """Append an entry, update thresholds in scope, return its seq."""
        if not isinstance(label, str) or not label:
            raise ValueError("label must be a non-empty string")
        v = as_embedding(embedding, self._dim)
        n = self._size
        if n == self._vectors.shape[0]:
            self._vectors = np.concatenate([self._vectors, np.empty_like(self._vectors)])
            self._thresholds = np.concatenate([self._thresholds, np.empty_like(self._thresholds)])
        lo = self._scope_start(self._update_window)
        new_threshold = math.nan
        if lo < n:
            impostor = np.fromiter(
                (stored != label for stored in self._labels[lo:n]), dtype=bool, count=n - lo
            )
            if impostor.any():
                scaled = self._sigma * (self._vectors[lo:n] @ v)
                new_threshold = float(scaled[impostor].max())
                # fmax treats NaN (unset) as -inf: an unset peer threshold is set.
                self._thresholds[lo:n][impostor] = np.fmax(
                    self._thresholds[lo:n][impostor], scaled[impostor]
                )
        self._vectors[n] = v
        self._thresholds[n] = new_threshold
        self._labels.append(label)
        self._size = n + 1
        return n

    def query(self, probe) -> Match | None:
        """Best entry in the query window, ties to the smallest seq; None if empty."""
        v = as_embedding(probe, self._dim)
        n = self._size
        if n == 0:
            return None
        lo = self._scope_start(self._query_window)
        scores = self._vectors[lo:n] @ v
        best = int(np.argmax(scores))
        return Match(index=lo + best, score=float(scores[best]))

    def decide(self, match: Match | None) -> Decision:
        """Accept iff the matched entry has a set threshold and score >= it."""
        if match is None:
            return Rejected(None)
        t = self._thresholds[self._index(match.index)]
        if not math.isnan(t) and match.score >= t:
            return Accepted(predicted=self._labels[match.index], match=match)
        return Rejected(best=match)

    def recognize(self, probe) -> Decision:
        """Query then decide. Does not modify the gallery."""
        return self.decide(self.query(probe))

    # -- debugging -----------------------------------------------------------

    def dumps(self) -> str:
        """Versioned text dump: seq, label, threshold, first 4 components."""
        win = "unbounded" if self._query_window == UNBOUNDED else self._query_window
        upd = "unbounded" if self._update_window == UNBOUNDED else self._update_window
        lines = [
            f"# gallery-dump/v1 dim={self._dim} sigma={self._sigma!r} "
            f"query_window={win} update_window={upd} size={self._size}"
        ]
        for e in self.entries():
            t = "unset" if e.threshold is None else format(e.threshold, ".8e")
            head = " ".join(format(c, ".8e") for c in e.embedding[:4])
            lines.append(f"{e.seq}\t{e.label}\t{t}\t{head}")
        return "\n".join(lines) + "\n"
