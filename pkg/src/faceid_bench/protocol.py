"""Online evaluation protocol and its outcome metrics.

A run feeds a stream of labeled probes through an initially empty gallery:
each item is recognized against what has been enrolled so far, the decision is
classified into one of five outcomes, and the item is then registered under
its true label. Outcomes split accepted probes into true accepts, wrong
identifications, and false accepts of unknown people, and rejected probes into
false rejects of known people and true rejects of unknown people. Rates are
reported over the accepted and rejected pools, with accuracy the fraction of
true accepts plus true rejects over the whole stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .gallery import Accepted, Decision, Gallery, UNBOUNDED, _check_window
from .rng import derive_seed, stream


class Outcome(str, Enum):
    """Per-item result of one recognition decision."""

    TA = "TA"  # accepted, predicted label equals the true label
    FR = "FR"  # rejected although the true label is enrolled
    IE = "IE"  # accepted with the wrong label while the true label is enrolled
    FA = "FA"  # accepted although the true label is not enrolled
    TR = "TR"  # rejected and the true label is not enrolled


@dataclass(frozen=True)
class StreamItem:
    """One probe of the test stream."""

    id: str
    embedding: np.ndarray
    true_label: str


@dataclass(frozen=True)
class Tally:
    """Outcome counts for one run. ACP/REJ partition the stream: ACP+REJ=N."""

    ta: int = 0
    fr: int = 0
    ie: int = 0
    fa: int = 0
    tr: int = 0

    @property
    def n(self) -> int:
        return self.ta + self.fr + self.ie + self.fa + self.tr

    @property
    def acp(self) -> int:
        return self.ta + self.ie + self.fa

    @property
    def rej(self) -> int:
        return self.fr + self.tr

    def count(self, outcome: Outcome) -> int:
        return getattr(self, outcome.value.lower())


@dataclass(frozen=True)
class ItemLog:
    """Per-item trace: decision facts plus the classified outcome."""

    id: str
    outcome: Outcome
    accepted: bool
    predicted: str | None
    best_index: int | None
    best_score: float | None
    matched_threshold: float | None


@dataclass(frozen=True)
class RunConfig:
    """Protocol run parameters.

    ``window`` bounds both the query and threshold-update scopes of the
    gallery (a positive integer, or UNBOUNDED). With ``shuffle`` on, each run
    processes the stream in a seed-derived random order; ``runs`` repetitions
    use seeds derived from ``seed`` so that a multi-run average is
    reproducible as a set and each run individually re-runnable.
    """

    window: float | int = 100
    sigma: float = 1.0
    shuffle: bool = True
    seed: int = 0
    runs: int = 10

    def __post_init__(self):
        _check_window("window", self.window)
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise ValueError(f"runs must be a positive integer, got {self.runs!r}")

    def echo(self) -> dict:
        """JSON-ready description embedded in every report."""
        window = "unbounded" if self.window == UNBOUNDED else int(self.window)
        return {
            "window": window,
            "sigma": self.sigma,
            "shuffle": self.shuffle,
            "seed": int(self.seed),
            "runs": self.runs,
        }


@dataclass(frozen=True)
class MetricsReport:
    """Rates over one run (or the mean over several), plus raw tallies.

    Any rate whose denominator is zero is None, never 0. For aggregates,
    ``runs`` is the number of averaged runs and ``excluded`` counts, per
    metric, how many runs were left out of that mean because the value was
    None.
    """

    acc: float | None
    tar: float | None
    trr: float | None
    far: float | None
    frr: float | None
    war: float | None
    tally: Tally
    run_seed: int | None = None
    config: dict = field(default_factory=dict)
    runs: int = 1
    excluded: dict = field(default_factory=dict)


RATE_FIELDS = ("acc", "tar", "trr", "far", "frr", "war")


def classify(decision: Decision, true_label: str, known_labels: frozenset[str] | set[str]) -> Outcome:
    """Classify one decision given the labels enrolled before this item.

    Acceptances: TA when the predicted label is the true one, IE when it is
    wrong but the true label is enrolled, FA when the true label is unknown.
    Rejections: FR when the true label is enrolled, TR when it is unknown.
    """
    known = true_label in known_labels
    if isinstance(decision, Accepted):
        if decision.predicted == true_label:
            return Outcome.TA
        return Outcome.IE if known else Outcome.FA
    return Outcome.FR if known else Outcome.TR


def run_stream(items: Sequence[StreamItem], cfg: RunConfig) -> tuple[Tally, list[ItemLog]]:
    """Run the online protocol over ``items`` once.

    Each item is recognized, classified against the pre-registration label
    set, then registered under its true label; the final gallery holds every
    item. Returns the outcome tally and the per-item log in processing order.
    """
    items = list(items)
    if not items:
        return Tally(), []
    dim = np.asarray(items[0].embedding).shape
    if len(dim) != 1:
        raise ValueError(f"item {items[0].id!r}: embedding must be a 1-d vector")
    dim = dim[0]
    if cfg.shuffle:
        order = stream(cfg.seed, "shuffle").permutation(len(items))
        items = [items[i] for i in order]
    gallery = Gallery(dim, window=cfg.window, sigma=cfg.sigma)
    counts = {o: 0 for o in Outcome}
    log: list[ItemLog] = []
    for item in items:
        known = gallery.known_labels
        try:
            decision = gallery.recognize(item.embedding)
        except ValueError as exc:
            raise ValueError(f"item {item.id!r}: {exc}") from exc
        outcome = classify(decision, item.true_label, known)
        counts[outcome] += 1
        if isinstance(decision, Accepted):
            best = decision.match
            predicted = decision.predicted
        else:
            best = decision.best
            predicted = None
        log.append(
            ItemLog(
                id=item.id,
                outcome=outcome,
                accepted=isinstance(decision, Accepted),
                predicted=predicted,
                best_index=None if best is None else best.index,
                best_score=None if best is None else best.score,
                matched_threshold=None if best is None else gallery.threshold(best.index),
            )
        )
        try:
            gallery.register(item.embedding, item.true_label)
        except ValueError as exc:
            raise ValueError(f"item {item.id!r}: {exc}") from exc
    tally = Tally(**{o.value.lower(): counts[o] for o in Outcome})
    return tally, log


def metrics(tally: Tally, *, run_seed: int | None = None, config: dict | None = None) -> MetricsReport:
    """Compute the rate metrics for one tally; zero denominators give None."""

    def ratio(num: int, den: int) -> float | None:
        return num / den if den > 0 else None

    return MetricsReport(
        acc=ratio(tally.ta + tally.tr, tally.n),
        tar=ratio(tally.ta, tally.acp),
        trr=ratio(tally.tr, tally.rej),
        far=ratio(tally.fa, tally.acp),
        frr=ratio(tally.fr, tally.rej),
        war=ratio(tally.ie, tally.acp),
        tally=tally,
        run_seed=run_seed,
        config=dict(config or {}),
    )


def aggregate_runs(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Mean of each rate over ``reports``, excluding None values per metric.

    All reports must carry the same config echo. The aggregate's tally is the
    per-outcome sum, ``runs`` the total number of runs, and ``excluded`` the
    per-metric count of runs whose value was None.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    config = reports[0].config
    for r in reports[1:]:
        if r.config != config:
            raise ValueError("cannot aggregate reports with differing configs")
    means: dict[str, float | None] = {}
    excluded: dict[str, int] = {}
    for name in RATE_FIELDS:
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        means[name] = sum(values) / len(values) if values else None
        excluded[name] = len(reports) - len(values)
    tally = Tally(
        ta=sum(r.tally.ta for r in reports),
        fr=sum(r.tally.fr for r in reports),
        ie=sum(r.tally.ie for r in reports),
        fa=sum(r.tally.fa for r in reports),
        tr=sum(r.tally.tr for r in reports),
    )
    return MetricsReport(
        tally=tally,
        run_seed=None,
        config=dict(config),
        runs=sum(r.runs for r in reports),
        excluded=excluded,
        **means,
    )


@dataclass(frozen=True)
class ProtocolResult:
    """Output of a multi-run evaluation."""

    per_run: list[MetricsReport]
    aggregate: MetricsReport
    logs: list[list[ItemLog]] | None = None


def run_protocol(
    items: Sequence[StreamItem],
    cfg: RunConfig,
    *,
    keep_logs: bool = False,
    config_echo: dict | None = None,
) -> ProtocolResult:
    """Run ``cfg.runs`` independent repetitions and aggregate their reports.

    Run ``i`` uses the derived seed ``derive_seed(cfg.seed, "run", i)`` for its
    shuffle, so repetitions differ only in stream order. ``config_echo``
    overrides the config dict embedded in every report (callers may enrich it
    with tool metadata).
    """
    per_run: list[MetricsReport] = []
    logs: list[list[ItemLog]] = []
    echo = cfg.echo() if config_echo is None else dict(config_echo)
    for i in range(cfg.runs):
        run_seed = derive_seed(cfg.seed, "run", i)
        tally, log = run_stream(items, replace(cfg, seed=run_seed, runs=1))
        per_run.append(metrics(tally, run_seed=run_seed, config=echo))
        if keep_logs:
            logs.append(log)
    return ProtocolResult(
        per_run=per_run,
        aggregate=aggregate_runs(per_run),
        logs=logs if keep_logs else None,
    )
