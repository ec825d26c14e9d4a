"""Deterministic raster-image augmentation.

``transforms`` implements the individual pixel operations, ``plan`` samples
per-image chains of them (24 per source by default) and enumerates the
attribute grid handed to an external generative editor, ``align`` fits
landmark-based affine alignment, and ``runner`` executes plans over image
directories.
"""

from .align import align_affine, fit_alignment, load_landmark_template, load_landmarks
from .plan import (
    AttributeCombo,
    AugmentPlan,
    AugmentPolicy,
    build_plan,
    enumerate_attribute_combos,
    load_attribute_plan,
    save_attribute_plan,
)
from .runner import GenerationReport, load_image, run_align, run_basic, run_combined, save_image
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
    apply,
    apply_chain,
    spec_from_dict,
    spec_to_dict,
)

__all__ = [
    "AttributeCombo",
    "AugmentPlan",
    "AugmentPolicy",
    "Clahe",
    "ColorJitter",
    "Downscale",
    "GaussNoise",
    "GaussianBlur",
    "GenerationReport",
    "GridDistortion",
    "HFlip",
    "Occlusion",
    "OpticalDistortion",
    "TransformSpec",
    "align_affine",
    "apply",
    "apply_chain",
    "build_plan",
    "enumerate_attribute_combos",
    "fit_alignment",
    "load_attribute_plan",
    "load_image",
    "load_landmark_template",
    "load_landmarks",
    "run_align",
    "run_basic",
    "run_combined",
    "save_attribute_plan",
    "save_image",
    "spec_from_dict",
    "spec_to_dict",
]
