"""End-to-end cross-check: the protocol against a pure-Python replay.

The oracle below re-implements the whole online loop with plain lists,
tuples, and float arithmetic (no numpy, no shared code paths beyond the
stream items), so agreement over random streams checks the gallery and
classification logic end to end.
"""

import math

import numpy as np

from faceid_bench.gallery import UNBOUNDED
from faceid_bench.protocol import Outcome, RunConfig, StreamItem, run_stream
from helpers import random_unit_vectors

OUTCOMES = ("TA", "FR", "IE", "FA", "TR")


def pure_python_protocol(items, window, sigma):
    """Replay the online loop with dicts and loops; returns outcome counts."""
    entries = []  # [vector tuple, label, threshold or None]
    counts = dict.fromkeys(OUTCOMES, 0)
    per_item = []
    for item in items:
        v = tuple(float(x) for x in item.embedding)
        lo = 0 if window == UNBOUNDED else max(0, len(entries) - window)
        best_index = None
        best_score = None
        for i in range(lo, len(entries)):
            score = sum(a * b for a, b in zip(entries[i][0], v))
            if best_score is None or score > best_score:
                best_index, best_score = i, score
        known = {label for _, label, _ in entries}
        accepted = False
        predicted = None
        if best_index is not None:
            threshold = entries[best_index][2]
            if threshold is not None and best_score >= threshold:
                accepted = True
                predicted = entries[best_index][1]
        if accepted:
            if predicted == item.true_label:
                outcome = "TA"
            elif item.true_label in known:
                outcome = "IE"
            else:
                outcome = "FA"
        else:
            outcome = "FR" if item.true_label in known else "TR"
        counts[outcome] += 1
        per_item.append(outcome)
        lo = 0 if window == UNBOUNDED else max(0, len(entries) - window)
        new_threshold = None
        for i in range(lo, len(entries)):
            if entries[i][1] == item.true_label:
                continue
            scaled = sigma * sum(a * b for a, b in zip(entries[i][0], v))
            if entries[i][2] is None or scaled > entries[i][2]:
                entries[i][2] = scaled
            if new_threshold is None or scaled > new_threshold:
                new_threshold = scaled
        entries.append([v, item.true_label, new_threshold])
    return counts, per_item


def test_run_stream_matches_pure_python_replay():
    rng = np.random.default_rng(99)
    for trial in range(25):
        length = int(rng.integers(2, 90))
        dim = int(rng.integers(3, 16))
        n_labels = int(rng.integers(1, 8))
        window = [4, 25, UNBOUNDED][trial % 3]
        sigma = [1.0, 0.75][trial % 2]
        vectors = random_unit_vectors(rng, length, dim)
        items = [
            StreamItem(f"i{k}", vectors[k], f"p{int(rng.integers(n_labels))}")
            for k in range(length)
        ]
        cfg = RunConfig(window=window, sigma=sigma, shuffle=False, seed=0, runs=1)
        tally, log = run_stream(items, cfg)
        counts, per_item = pure_python_protocol(items, window, sigma)
        assert [e.outcome.value for e in log] == per_item
        assert {o.value.lower(): counts[o.value] for o in Outcome} == {
            "ta": tally.ta, "fr": tally.fr, "ie": tally.ie, "fa": tally.fa, "tr": tally.tr,
        }


def test_replay_agrees_on_scores_and_thresholds():
    # the logged score and matched threshold agree with the oracle's floats
    # to addition-order rounding (the oracle sums in plain Python)
    rng = np.random.default_rng(7)
    vectors = random_unit_vectors(rng, 40, 6)
    items = [StreamItem(f"i{k}", vectors[k], f"p{k % 5}") for k in range(40)]
    cfg = RunConfig(window=10, sigma=1.0, shuffle=False, seed=0, runs=1)
    _, log = run_stream(items, cfg)
    entries = []
    for item, rec in zip(items, log):
        v = tuple(float(x) for x in item.embedding)
        lo = max(0, len(entries) - 10)
        best = None
        for i in range(lo, len(entries)):
            s = sum(a * b for a, b in zip(entries[i][0], v))
            if best is None or s > best[1]:
                best = (i, s)
        if best is None:
            assert rec.best_index is None
        else:
            assert rec.best_index == best[0]
            assert math.isclose(rec.best_score, best[1], rel_tol=0, abs_tol=1e-12)
        lo = max(0, len(entries) - 10)
        new_t = None
        for i in range(lo, len(entries)):
            if entries[i][1] == item.true_label:
                continue
            s = sum(a * b for a, b in zip(entries[i][0], v))
            if entries[i][2] is None or s > entries[i][2]:
                entries[i][2] = s
            if new_t is None or s > new_t:
                new_t = s
        entries.append([v, item.true_label, new_t])
