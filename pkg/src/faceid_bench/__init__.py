"""Desk-scale evaluation harness for open-set face identification.

The package covers the full bench loop: embedding ingestion or synthesis,
identity-aware train/test splitting, deterministic image augmentation, and
an online recognition protocol with adaptive per-entry thresholds plus the
accept/reject outcome metrics derived from it.
"""

__version__ = "0.1.0"

from .gallery import UNBOUNDED, Accepted, Gallery, Match, Rejected, similarity
from .protocol import (
    MetricsReport,
    Outcome,
    RunConfig,
    StreamItem,
    Tally,
    aggregate_runs,
    classify,
    metrics,
    run_protocol,
    run_stream,
)
from .splits import Manifest, SplitResult, load_manifest, split_both, split_unique

__all__ = [
    "UNBOUNDED",
    "Accepted",
    "Gallery",
    "Manifest",
    "Match",
    "MetricsReport",
    "Outcome",
    "Rejected",
    "RunConfig",
    "SplitResult",
    "StreamItem",
    "Tally",
    "aggregate_runs",
    "classify",
    "load_manifest",
    "metrics",
    "run_protocol",
    "run_stream",
    "similarity",
    "split_both",
    "split_unique",
    "__version__",
]
