"""Chain sampling for the per-image augmentation plan, plus the attribute grid.

A plan is a compact recipe (seed, chain count, policy); the concrete chains
for an image are derived on demand from named random streams keyed by
(seed, image id, chain index), so executing a plan is reproducible regardless
of worker count or processing order. The attribute enumeration produces the
24-combination grid (4 hair x 2 eyeglasses x 3 facial hair) handed to an
external generative editor, with the remaining attributes assigned at random
per combination.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ..rng import stream
from .transforms import (
    Clahe,
    ColorJitter,
    Downscale,
    GaussianBlur,
    GaussNoise,
    GridDistortion,
    HFlip,
    Occlusion,
    OpticalDistortion,
    TransformSpec,
)

PLAN_FORMAT = "augment-plan/v1"
ATTRIBUTE_PLAN_FORMAT = "attribute-plan/v1"

PHOTOMETRIC_OPS = ("color_jitter", "clahe", "gauss_noise", "gaussian_blur", "downscale")
GEOMETRIC_OPS = ("optical_distortion", "grid_distortion")

_RANGE_FIELDS = (
    "occlusion_area",
    "brightness",
    "contrast",
    "saturation",
    "clahe_clip",
    "noise_std",
    "blur_sigma",
    "downscale_factor",
    "optical_k",
    "grid_limit",
)


@dataclass(frozen=True)
class AugmentPolicy:
    """Sampling policy for one chain.

    Chains are drawn in a fixed order: horizontal flip with ``hflip_prob``,
    one photometric op with ``photometric_prob`` (chosen by weight), one
    geometric warp with ``geometric_prob``, and an occlusion rectangle with
    ``occlusion_prob`` covering a fraction of the image drawn from
    ``occlusion_area``. A chain that comes out empty falls back to a neutral
    color jitter, so every chain has at least one transform and an all-zero
    policy yields identity chains.
    """

    hflip_prob: float = 0.5
    photometric_prob: float = 1.0
    photometric_weights: dict = field(default_factory=lambda: dict.fromkeys(PHOTOMETRIC_OPS, 1.0))
    geometric_prob: float = 0.5
    geometric_weights: dict = field(default_factory=lambda: dict.fromkeys(GEOMETRIC_OPS, 1.0))
    occlusion_prob: float = 0.3
    occlusion_area: tuple = (0.02, 0.20)
    brightness: tuple = (0.7, 1.3)
    contrast: tuple = (0.7, 1.3)
    saturation: tuple = (0.7, 1.3)
    clahe_clip: tuple = (1.5, 3.0)
    clahe_tiles: int = 8
    noise_std: tuple = (5.0, 20.0)
    blur_sigma: tuple = (0.5, 2.0)
    downscale_factor: tuple = (0.25, 0.75)
    optical_k: tuple = (-0.3, 0.3)
    grid_cells: int = 4
    grid_limit: tuple = (0.05, 0.3)

    def __post_init__(self):
        for name in ("hflip_prob", "photometric_prob", "geometric_prob", "occlusion_prob"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
        for name, allowed in (("photometric_weights", PHOTOMETRIC_OPS), ("geometric_weights", GEOMETRIC_OPS)):
            weights = getattr(self, name)
            unknown = set(weights) - set(allowed)
            if unknown:
                raise ValueError(f"{name} has unknown ops: {sorted(unknown)}")
            if any(w < 0 for w in weights.values()):
                raise ValueError(f"{name} must be non-negative")
        for name in _RANGE_FIELDS:
            pair = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, pair)
            if len(pair) != 2 or not all(math.isfinite(v) for v in pair) or pair[0] > pair[1]:
                raise ValueError(f"{name} must be a (low, high) pair with low <= high, got {pair!r}")

    @classmethod
    def neutral(cls) -> "AugmentPolicy":
        """Policy whose chains are all identity (neutral color jitter)."""
        return cls(hflip_prob=0.0, photometric_prob=0.0, geometric_prob=0.0, occlusion_prob=0.0)

    def to_dict(self) -> dict:
        payload = {}
        for f in fields(self):
            value = getattr(self, f.name)
            payload[f.name] = list(value) if isinstance(value, tuple) else value
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "AugmentPolicy":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown policy fields: {sorted(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in payload.items()}
        return cls(**kwargs)


def _uniform(rng: np.random.Generator, bounds: tuple) -> float:
    return float(rng.uniform(bounds[0], bounds[1]))


def _weighted_choice(rng: np.random.Generator, names: tuple, weights: dict) -> str | None:
    total = sum(weights.get(n, 0.0) for n in names)
    if total <= 0.0:
        return None
    r = rng.random() * total
    acc = 0.0
    for name in names:
        acc += weights.get(name, 0.0)
        if r < acc:
            return name
    return names[-1]


def _sample_photometric(rng: np.random.Generator, policy: AugmentPolicy) -> TransformSpec | None:
    name = _weighted_choice(rng, PHOTOMETRIC_OPS, policy.photometric_weights)
    if name == "color_jitter":
        return ColorJitter(
            brightness=_uniform(rng, policy.brightness),
            contrast=_uniform(rng, policy.contrast),
            saturation=_uniform(rng, policy.saturation),
        )
    if name == "clahe":
        return Clahe(clip_limit=_uniform(rng, policy.clahe_clip), tiles=policy.clahe_tiles)
    if name == "gauss_noise":
        return GaussNoise(std=_uniform(rng, policy.noise_std))
    if name == "gaussian_blur":
        return GaussianBlur(sigma=_uniform(rng, policy.blur_sigma))
    if name == "downscale":
        return Downscale(factor=_uniform(rng, policy.downscale_factor))
    return None


def _sample_geometric(rng: np.random.Generator, policy: AugmentPolicy) -> TransformSpec | None:
    name = _weighted_choice(rng, GEOMETRIC_OPS, policy.geometric_weights)
    if name == "optical_distortion":
        return OpticalDistortion(k=_uniform(rng, policy.optical_k))
    if name == "grid_distortion":
        return GridDistortion(cells=policy.grid_cells, limit=_uniform(rng, policy.grid_limit))
    return None


def _sample_occlusion(rng: np.random.Generator, policy: AugmentPolicy, width: int, height: int) -> Occlusion:
    frac = _uniform(rng, policy.occlusion_area)
    aspect = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
    area = frac * width * height
    w = min(width, max(1, round(math.sqrt(area * aspect))))
    h = min(height, max(1, round(area / w)))
    x = int(rng.integers(0, width - w + 1))
    y = int(rng.integers(0, height - h + 1))
    return Occlusion(x=x, y=y, w=w, h=h)


def _sample_chain(rng: np.random.Generator, policy: AugmentPolicy, width: int, height: int) -> tuple:
    ops: list[TransformSpec] = []
    if rng.random() < policy.hflip_prob:
        ops.append(HFlip())
    if rng.random() < policy.photometric_prob:
        op = _sample_photometric(rng, policy)
        if op is not None:
            ops.append(op)
    if rng.random() < policy.geometric_prob:
        op = _sample_geometric(rng, policy)
        if op is not None:
            ops.append(op)
    if rng.random() < policy.occlusion_prob:
        ops.append(_sample_occlusion(rng, policy, width, height))
    if not ops:
        ops.append(ColorJitter(1.0, 1.0, 1.0))
    return tuple(ops)


@dataclass(frozen=True)
class AugmentPlan:
    """Recipe for ``n_chains`` transform chains per source image."""

    seed: int
    n_chains: int = 24
    policy: AugmentPolicy = field(default_factory=AugmentPolicy)

    def chain(self, image_id: str, index: int, width: int, height: int) -> tuple:
        """Concrete chain ``index`` for an image of the given dimensions."""
        if not 0 <= index < self.n_chains:
            raise ValueError(f"chain index {index} outside [0, {self.n_chains})")
        if width < 1 or height < 1:
            raise ValueError(f"image dimensions must be positive, got {width}x{height}")
        rng = stream(self.seed, "plan", image_id, index)
        return _sample_chain(rng, self.policy, width, height)

    def chains_for(self, image_id: str, width: int, height: int) -> list[tuple]:
        return [self.chain(image_id, k, width, height) for k in range(self.n_chains)]

    def apply_rng(self, image_id: str, index: int) -> np.random.Generator:
        """Noise stream consumed while executing chain ``index``."""
        return stream(self.seed, "apply", image_id, index)

    def to_dict(self) -> dict:
        return {
            "format": PLAN_FORMAT,
            "seed": int(self.seed),
            "n_chains": self.n_chains,
            "policy": self.policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AugmentPlan":
        if payload.get("format") != PLAN_FORMAT:
            raise ValueError(f"expected format {PLAN_FORMAT!r}, got {payload.get('format')!r}")
        return cls(
            seed=int(payload["seed"]),
            n_chains=int(payload["n_chains"]),
            policy=AugmentPolicy.from_dict(payload["policy"]),
        )

    def save(self, path, *, extra: dict | None = None) -> None:
        payload = {**(extra or {}), **self.to_dict()}
        Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "AugmentPlan":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_plan(seed: int, n_chains: int = 24, policy: AugmentPolicy | None = None) -> AugmentPlan:
    """Validate arguments and build the plan (24 chains per image by default)."""
    if not isinstance(n_chains, int) or n_chains < 1:
        raise ValueError(f"n_chains must be a positive integer, got {n_chains!r}")
    return AugmentPlan(seed=int(seed), n_chains=n_chains, policy=policy or AugmentPolicy())


# -- attribute grid for the external generative editor -------------------------------


HAIR_OPTIONS = ("bald", "blond", "black", "brown")
EYEGLASSES_OPTIONS = ("yes", "no")
FACIAL_HAIR_OPTIONS = ("beard", "mustache", "none")
EXTRA_ATTRIBUTES = {
    "age": ("old", "young"),
    "bangs": ("yes", "no"),
    "eyebrows": ("usual", "bushy"),
    "gender": ("male", "female"),
    "mouth": ("open", "closed"),
    "skin": ("pale", "usual"),
}


@dataclass(frozen=True)
class AttributeCombo:
    """One cell of the hair x eyeglasses x facial-hair grid plus random extras."""

    hair: str
    eyeglasses: str
    facial_hair: str
    extras: tuple = ()

    def to_dict(self) -> dict:
        return {
            "hair": self.hair,
            "eyeglasses": self.eyeglasses,
            "facial_hair": self.facial_hair,
            "extras": dict(self.extras),
        }


def enumerate_attribute_combos(seed: int) -> list[AttributeCombo]:
    """All 24 core combinations, each with seeded random extra attributes.

    Each extra attribute is independently included with probability 1/2 and,
    when included, assigned a uniformly chosen value.
    """
    combos: list[AttributeCombo] = []
    grid = itertools.product(HAIR_OPTIONS, EYEGLASSES_OPTIONS, FACIAL_HAIR_OPTIONS)
    for index, (hair, eyeglasses, facial_hair) in enumerate(grid):
        rng = stream(seed, "attrs", index)
        extras = []
        for name in sorted(EXTRA_ATTRIBUTES):
            if rng.random() < 0.5:
                values = EXTRA_ATTRIBUTES[name]
                extras.append((name, values[int(rng.integers(len(values)))]))
        combos.append(
            AttributeCombo(hair=hair, eyeglasses=eyeglasses, facial_hair=facial_hair, extras=tuple(extras))
        )
    return combos


def save_attribute_plan(combos: list[AttributeCombo], path, *, seed: int, extra: dict | None = None) -> None:
    payload = {
        **(extra or {}),
        "format": ATTRIBUTE_PLAN_FORMAT,
        "seed": int(seed),
        "combos": [c.to_dict() for c in combos],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_attribute_plan(path) -> tuple[int, list[AttributeCombo]]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != ATTRIBUTE_PLAN_FORMAT:
        raise ValueError(f"expected format {ATTRIBUTE_PLAN_FORMAT!r}, got {payload.get('format')!r}")
    combos = [
        AttributeCombo(
            hair=c["hair"],
            eyeglasses=c["eyeglasses"],
            facial_hair=c["facial_hair"],
            extras=tuple(sorted(c["extras"].items())),
        )
        for c in payload["combos"]
    ]
    return int(payload["seed"]), combos
