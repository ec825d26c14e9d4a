"""Landmark-driven affine alignment into a template frame.

``fit_alignment`` solves the least-squares 2x3 transform taking source
landmarks onto template landmarks via the normal equations (a 4-parameter
similarity transform when only two points are given). ``align_affine``
resamples the image into the template frame with bilinear interpolation:
output pixel q takes the source value at the fitted transform's inverse of q,
so the face lands on the template positions; samples outside the source are
black.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import LandmarkFileError
from .transforms import _to_uint8, bilinear_sample, check_image


def _check_points(name: str, points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError(f"{name} must be a (k, 2) array with k >= 2, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError(f"{name} has non-finite coordinates")
    return pts


def _fit_similarity(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    # x' = a*x - b*y + tx ; y' = b*x + a*y + ty
    k = src.shape[0]
    design = np.zeros((2 * k, 4))
    target = np.zeros(2 * k)
    design[0::2, 0] = src[:, 0]
    design[0::2, 1] = -src[:, 1]
    design[0::2, 2] = 1.0
    design[1::2, 0] = src[:, 1]
    design[1::2, 1] = src[:, 0]
    design[1::2, 3] = 1.0
    target[0::2] = dst[:, 0]
    target[1::2] = dst[:, 1]
    if np.linalg.matrix_rank(design) < 4:
        raise ValueError("degenerate landmark configuration: points are coincident")
    gram = design.T @ design
    a, b, tx, ty = np.linalg.solve(gram, design.T @ target)
    return np.array([[a, -b, tx], [b, a, ty]])


def _fit_affine(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    design = np.column_stack([src, np.ones(src.shape[0])])
    if np.linalg.matrix_rank(design) < 3:
        raise ValueError("degenerate landmark configuration: points are collinear")
    gram = design.T @ design
    coeffs = np.linalg.solve(gram, design.T @ dst)  # (3, 2)
    return coeffs.T


def fit_alignment(src, template) -> np.ndarray:
    """Least-squares 2x3 transform mapping ``src`` points onto ``template``.

    Two points give a similarity transform; three or more give a full affine.
    Degenerate configurations (coincident, or collinear for the affine case)
    raise ValueError.
    """
    src_pts = _check_points("src", src)
    dst_pts = _check_points("template", template)
    if src_pts.shape != dst_pts.shape:
        raise ValueError(f"point counts differ: {src_pts.shape[0]} vs {dst_pts.shape[0]}")
    if src_pts.shape[0] == 2:
        return _fit_similarity(src_pts, dst_pts)
    return _fit_affine(src_pts, dst_pts)


def align_affine(img, src, template, out_size: tuple[int, int] | None = None) -> np.ndarray:
    """Warp ``img`` so its landmarks land on the template landmarks.

    ``out_size`` is (height, width) of the template frame; it defaults to the
    input dimensions.
    """
    img = check_image(img)
    matrix = fit_alignment(src, template)
    full = np.vstack([matrix, [0.0, 0.0, 1.0]])
    try:
        inverse = np.linalg.inv(full)
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate alignment: fitted transform is not invertible") from exc
    out_h, out_w = out_size if out_size is not None else img.shape[:2]
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    xs = np.arange(out_w, dtype=np.float64)[None, :]
    ys = np.arange(out_h, dtype=np.float64)[:, None]
    sx = inverse[0, 0] * xs + inverse[0, 1] * ys + inverse[0, 2]
    sy = inverse[1, 0] * xs + inverse[1, 1] * ys + inverse[1, 2]
    sx, sy = np.broadcast_arrays(sx, sy)
    return _to_uint8(bilinear_sample(img, sx, sy))


def load_landmarks(path) -> dict[str, np.ndarray]:
    """Parse ``image_id x1 y1 ... xk yk`` lines into (k, 2) arrays."""
    path = Path(path)
    landmarks: dict[str, np.ndarray] = {}
    with path.open("r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            image_id, coords = tokens[0], tokens[1:]
            if image_id in landmarks:
                raise LandmarkFileError(f"{path.name}:{lineno}: duplicate image_id {image_id!r}")
            if len(coords) < 4 or len(coords) % 2:
                raise LandmarkFileError(
                    f"{path.name}:{lineno}: need an even number (>= 4) of coordinates, got {len(coords)}"
                )
            try:
                values = np.array([float(t) for t in coords], dtype=np.float64)
            except ValueError as exc:
                raise LandmarkFileError(f"{path.name}:{lineno}: bad coordinate: {exc}") from exc
            if not np.isfinite(values).all():
                raise LandmarkFileError(f"{path.name}:{lineno}: non-finite coordinate")
            landmarks[image_id] = values.reshape(-1, 2)
    if not landmarks:
        raise LandmarkFileError(f"{path.name}: no landmark records")
    return landmarks


def load_landmark_template(path) -> np.ndarray:
    """Parse a template file: a single line of ``x1 y1 ... xk yk``."""
    path = Path(path)
    rows = []
    with path.open("r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if rows:
                raise LandmarkFileError(f"{path.name}:{lineno}: template must have exactly one line")
            if len(tokens) < 4 or len(tokens) % 2:
                raise LandmarkFileError(
                    f"{path.name}:{lineno}: need an even number (>= 4) of coordinates, got {len(tokens)}"
                )
            try:
                rows = [float(t) for t in tokens]
            except ValueError as exc:
                raise LandmarkFileError(f"{path.name}:{lineno}: bad coordinate: {exc}") from exc
    if not rows:
        raise LandmarkFileError(f"{path.name}: no template coordinates")
    values = np.array(rows, dtype=np.float64)
    if not np.isfinite(values).all():
        raise LandmarkFileError(f"{path.name}: non-finite coordinate")
    return values.reshape(-1, 2)
