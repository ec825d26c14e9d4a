"""Identity-aware train/test splits of a labeled image manifest.

Two split styles are supported. The "unique" split keeps every identity
wholly on one side: identities are shuffled by seed and assigned to the test
side until the test image count first reaches the requested fraction, so the
test set contains only people never seen in training. The "both" split sends
exactly one seeded-random image of each multi-image identity to the test side
and everything else (including all single-image identities) to training, so
every test image shows a person the training side knows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .errors import ManifestError
from .rng import stream


class ManifestRecord(NamedTuple):
    image_id: str
    label: str


@dataclass(frozen=True)
class Manifest:
    """Non-empty list of (image_id, label) records with unique image ids."""

    records: tuple[ManifestRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise ManifestError("manifest is empty")
        seen: set[str] = set()
        for rec in self.records:
            if not rec.image_id:
                raise ManifestError("manifest contains an empty image_id")
            if not rec.label:
                raise ManifestError(f"image {rec.image_id!r} has an empty label")
            if rec.image_id in seen:
                raise ManifestError(f"duplicate image_id {rec.image_id!r}")
            seen.add(rec.image_id)

    def __len__(self) -> int:
        return len(self.records)

    def ids(self) -> list[str]:
        return [r.image_id for r in self.records]

    def by_label(self) -> dict[str, list[str]]:
        """Image ids per identity, keys sorted, ids sorted within each."""
        groups: dict[str, list[str]] = {}
        for rec in self.records:
            groups.setdefault(rec.label, []).append(rec.image_id)
        return {label: sorted(groups[label]) for label in sorted(groups)}


@dataclass(frozen=True)
class SplitResult:
    """Disjoint, exhaustive partition of the manifest's image ids."""

    kind: str
    train: frozenset[str]
    test: frozenset[str]
    seed: int

    @property
    def test_fraction(self) -> float:
        return len(self.test) / (len(self.train) + len(self.test))


def load_manifest(path) -> Manifest:
    """Parse a tab-separated ``image_id<TAB>label`` file.

    Blank lines and lines starting with '#' are skipped; anything else with
    other than two non-empty fields is an error naming the line number.
    """
    path = Path(path)
    records: list[ManifestRecord] = []
    with path.open("r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ManifestError(f"{path.name}:{lineno}: expected 'image_id<TAB>label', got {line!r}")
            records.append(ManifestRecord(parts[0], parts[1]))
    if not records:
        raise ManifestError(f"{path.name}: no records")
    try:
        return Manifest(tuple(records))
    except ManifestError as exc:
        raise ManifestError(f"{path.name}: {exc}") from exc


def split_unique(manifest: Manifest, seed: int, test_ratio: float = 0.1) -> SplitResult:
    """Whole-identity split targeting ``test_ratio`` of the images in test.

    Identities are shuffled by seed and moved to the test side until the test
    image count first reaches ``test_ratio * len(manifest)``. Actual fractions
    overshoot the target by at most one identity's images.
    """
    if not 0.0 < test_ratio < 1.0:
        raise ValueError(f"test_ratio must lie in (0, 1), got {test_ratio!r}")
    groups = manifest.by_label()
    if len(groups) < 2:
        raise ManifestError("unique split needs at least two identities")
    labels = sorted(groups)
    order = stream(seed, "split-unique").permutation(len(labels))
    target = test_ratio * len(manifest)
    test: set[str] = set()
    test_labels: set[str] = set()
    for idx in order:
        if len(test) >= target:
            break
        label = labels[int(idx)]
        test.update(groups[label])
        test_labels.add(label)
    if len(test_labels) == len(labels):
        raise ManifestError(f"test_ratio {test_ratio} consumes every identity; train side would be empty")
    train = set(manifest.ids()) - test
    return SplitResult(kind="unique", train=frozenset(train), test=frozenset(test), seed=int(seed))


def split_both(manifest: Manifest, seed: int) -> SplitResult:
    """One seeded image per multi-image identity to test; the rest to train.

    Single-image identities go wholly to train, so every test label is also a
    train label.
    """
    groups = manifest.by_label()
    train: set[str] = set()
    test: set[str] = set()
    for label, ids in groups.items():
        if len(ids) < 2:
            train.update(ids)
            continue
        pick = int(stream(seed, "split-both", label).integers(len(ids)))
        test.add(ids[pick])
        train.update(ids[:pick])
        train.update(ids[pick + 1 :])
    return SplitResult(kind="both", train=frozenset(train), test=frozenset(test), seed=int(seed))
