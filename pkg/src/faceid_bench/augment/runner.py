"""Batch execution of augmentation plans over image directories.

Per-image work is independent: chains and noise come from streams keyed by
(plan seed, image id, chain index), so output bytes do not depend on worker
count or processing order. Outputs are written as lossless PNG regardless of
the source container. Unreadable sources are recorded in the report and
processing continues.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .align import align_affine
from .plan import AugmentPlan
from .transforms import apply_chain, check_image

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")

_ATTR_STEM = re.compile(r"^(?P<id>.+)_attr(?P<index>\d+)$")


def load_image(path) -> np.ndarray:
    """Decode any supported container to (H, W, 3) uint8 RGB."""
    with PILImage.open(path) as pil:
        return np.array(pil.convert("RGB"))


def save_image(img, path) -> None:
    check_image(img)
    path = Path(path)
    if path.suffix.lower() == ".png":
        # low compression level: batch outputs favor encode speed over size
        PILImage.fromarray(img).save(path, compress_level=1)
    else:
        PILImage.fromarray(img).save(path)


def discover_sources(src_dir) -> list[tuple[str, Path]]:
    """(image id, path) pairs for supported files, sorted by id."""
    src_dir = Path(src_dir)
    if not src_dir.is_dir():
        raise FileNotFoundError(f"source directory not found: {src_dir}")
    found = [
        (p.stem, p)
        for p in src_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    ]
    return sorted(found)


@dataclass
class GenerationReport:
    """Counts and failure records for one augmentation run."""

    mode: str
    sources: int = 0
    outputs: int = 0
    failures: list = field(default_factory=list)
    missing: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "sources": self.sources,
            "outputs": self.outputs,
            "failures": self.failures,
            "missing": self.missing,
        }


def _map_ordered(fn, items, workers: int):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_basic(src_dir, plan: AugmentPlan, out_dir, workers: int = 1) -> GenerationReport:
    """Write ``plan.n_chains`` augmented PNGs per source: ``<id>_aug<k>.png``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sources = discover_sources(src_dir)

    def process(item):
        image_id, path = item
        try:
            img = load_image(path)
            height, width = img.shape[:2]
            written = 0
            for k in range(plan.n_chains):
                chain = plan.chain(image_id, k, width, height)
                out = apply_chain(img, chain, plan.apply_rng(image_id, k))
                save_image(out, out_dir / f"{image_id}_aug{k}.png")
                written += 1
            return image_id, written, None
        except Exception as exc:
            return image_id, 0, f"{type(exc).__name__}: {exc}"

    report = GenerationReport(mode="basic", sources=len(sources))
    for image_id, written, error in _map_ordered(process, sources, workers):
        report.outputs += written
        if error is not None:
            report.failures.append({"id": image_id, "error": error})
    return report


def _discover_attribute_sets(generated_dir) -> dict[str, dict[int, Path]]:
    generated_dir = Path(generated_dir)
    if not generated_dir.is_dir():
        raise FileNotFoundError(f"generated-image directory not found: {generated_dir}")
    groups: dict[str, dict[int, Path]] = {}
    for path in generated_dir.iterdir():
        if not path.is_file() or path.suffix.lower() not in IMAGE_EXTENSIONS:
            continue
        m = _ATTR_STEM.match(path.stem)
        if m is None:
            continue
        groups.setdefault(m.group("id"), {})[int(m.group("index"))] = path
    return groups


def run_combined(generated_dir, plan: AugmentPlan, out_dir, workers: int = 1) -> GenerationReport:
    """Apply chain k to attribute image k of each source id.

    Inputs are named ``<id>_attr<k>``; outputs keep the basic naming
    ``<id>_aug<k>.png``, so each source still yields ``plan.n_chains`` images.
    Absent attribute images are recorded per (id, index).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = _discover_attribute_sets(generated_dir)

    def process(item):
        image_id, by_index = item
        written = 0
        failures = []
        missing = []
        for k in range(plan.n_chains):
            path = by_index.get(k)
            if path is None:
                missing.append({"id": image_id, "index": k})
                continue
            try:
                img = load_image(path)
                height, width = img.shape[:2]
                chain = plan.chain(image_id, k, width, height)
                out = apply_chain(img, chain, plan.apply_rng(image_id, k))
                save_image(out, out_dir / f"{image_id}_aug{k}.png")
                written += 1
            except Exception as exc:
                failures.append({"id": image_id, "index": k, "error": f"{type(exc).__name__}: {exc}"})
        return written, failures, missing

    items = sorted(groups.items())
    report = GenerationReport(mode="combined", sources=len(items))
    for written, failures, missing in _map_ordered(process, items, workers):
        report.outputs += written
        report.failures.extend(failures)
        report.missing.extend(missing)
    return report


def run_align(src_dir, landmarks: dict[str, np.ndarray], template: np.ndarray, out_dir,
              workers: int = 1) -> GenerationReport:
    """Align each source with landmarks onto the template: ``<id>_aligned.png``.

    Sources without a landmark record are listed as missing.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sources = discover_sources(src_dir)

    def process(item):
        image_id, path = item
        points = landmarks.get(image_id)
        if points is None:
            return image_id, 0, None, True
        try:
            img = load_image(path)
            save_image(align_affine(img, points, template), out_dir / f"{image_id}_aligned.png")
            return image_id, 1, None, False
        except Exception as exc:
            return image_id, 0, f"{type(exc).__name__}: {exc}", False

    report = GenerationReport(mode="align", sources=len(sources))
    for image_id, written, error, absent in _map_ordered(process, sources, workers):
        report.outputs += written
        if absent:
            report.missing.append({"id": image_id, "index": None})
        if error is not None:
            report.failures.append({"id": image_id, "error": error})
    return report
