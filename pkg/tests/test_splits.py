import numpy as np
import pytest

from faceid_bench.errors import ManifestError
from faceid_bench.splits import Manifest, ManifestRecord, load_manifest, split_both, split_unique
from helpers import random_manifest_lines


def manifest_from_lines(lines):
    records = tuple(ManifestRecord(*line.split("\t")) for line in lines)
    return Manifest(records)


def label_of(image_id, manifest):
    return {r.image_id: r.label for r in manifest.records}[image_id]


class TestLoadManifest:
    def test_well_formed(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("a\tp1\nb\tp1\nc\tp2\n", encoding="utf-8")
        m = load_manifest(p)
        assert len(m) == 3
        assert m.by_label() == {"p1": ["a", "b"], "p2": ["c"]}

    def test_duplicate_id_names_it(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("a\tp1\na\tp2\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="'a'"):
            load_manifest(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("", encoding="utf-8")
        with pytest.raises(ManifestError):
            load_manifest(p)

    def test_malformed_line_reports_number(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("a\tp1\nbroken line\n", encoding="utf-8")
        with pytest.raises(ManifestError, match=":2"):
            load_manifest(p)

    def test_comments_and_blanks_skipped(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("# header\na\tp1\n\nb\tp2\n", encoding="utf-8")
        assert len(load_manifest(p)) == 2


class TestSplitUnique:
    def test_ten_identities_ratio_point_one(self):
        lines = [f"img{k}_{j}\tp{k}" for k in range(10) for j in range(10)]
        m = manifest_from_lines(lines)
        result = split_unique(m, seed=3, test_ratio=0.1)
        # greedy fill stops right at one 10-image identity
        assert len(result.test) == 10
        test_labels = {label_of(i, m) for i in result.test}
        assert len(test_labels) == 1

    def test_label_disjointness(self):
        rng = np.random.default_rng(0)
        m = manifest_from_lines(random_manifest_lines(rng, 40, 6))
        result = split_unique(m, seed=11, test_ratio=0.15)
        train_labels = {label_of(i, m) for i in result.train}
        test_labels = {label_of(i, m) for i in result.test}
        assert not train_labels & test_labels
        assert result.train | result.test == set(m.ids())
        assert not result.train & result.test

    def test_lfw_shaped_fraction(self):
        # identity sizes with a heavy singleton tail, ~13k images total
        rng = np.random.default_rng(5)
        lines = []
        k = 0
        while len(lines) < 13156:
            size = int(min(np.ceil(rng.pareto(1.2)), 50))
            for j in range(size):
                lines.append(f"img{k}_{j}\tp{k}")
            k += 1
        m = manifest_from_lines(lines)
        result = split_unique(m, seed=1, test_ratio=0.1)
        assert 0.08 <= result.test_fraction <= 0.12

    def test_single_identity_is_error(self):
        m = manifest_from_lines([f"img{j}\tonly" for j in range(5)])
        with pytest.raises(ManifestError):
            split_unique(m, seed=0)

    def test_ratio_validation(self):
        m = manifest_from_lines(["a\tp1", "b\tp2"])
        with pytest.raises(ValueError):
            split_unique(m, seed=0, test_ratio=0.0)
        with pytest.raises(ValueError):
            split_unique(m, seed=0, test_ratio=1.0)

    def test_determinism_and_seed_sensitivity(self):
        rng = np.random.default_rng(7)
        m = manifest_from_lines(random_manifest_lines(rng, 50, 5))
        a = split_unique(m, seed=42)
        b = split_unique(m, seed=42)
        c = split_unique(m, seed=43)
        assert a == b
        assert a.test != c.test


class TestSplitBoth:
    def test_singleton_goes_to_train(self):
        m = manifest_from_lines(["a\tp1", "b\tp2", "c\tp2"])
        result = split_both(m, seed=0)
        assert "a" in result.train
        assert label_of(next(iter(result.test)), m) == "p2"

    def test_multi_image_identity_contributes_exactly_one(self):
        m = manifest_from_lines([f"img{j}\tp1" for j in range(5)] + ["x\tp2", "y\tp2"])
        result = split_both(m, seed=9)
        test_p1 = [i for i in result.test if label_of(i, m) == "p1"]
        assert len(test_p1) == 1
        assert len(result.train & {f"img{j}" for j in range(5)}) == 4

    def test_test_labels_distinct_and_present_in_train(self):
        rng = np.random.default_rng(1)
        m = manifest_from_lines(random_manifest_lines(rng, 60, 7))
        result = split_both(m, seed=2)
        test_labels = [label_of(i, m) for i in result.test]
        assert len(test_labels) == len(set(test_labels))
        train_labels = {label_of(i, m) for i in result.train}
        assert set(test_labels) <= train_labels

    def test_partition(self):
        rng = np.random.default_rng(2)
        m = manifest_from_lines(random_manifest_lines(rng, 30, 4))
        result = split_both(m, seed=5)
        assert result.train | result.test == set(m.ids())
        assert not result.train & result.test

    def test_determinism(self):
        rng = np.random.default_rng(3)
        m = manifest_from_lines(random_manifest_lines(rng, 30, 4))
        assert split_both(m, seed=8) == split_both(m, seed=8)


class TestManifestValidation:
    def test_rejects_empty(self):
        with pytest.raises(ManifestError):
            Manifest(())

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ManifestError):
            Manifest((ManifestRecord("a", "p"), ManifestRecord("a", "q")))

    def test_rejects_empty_label(self):
        with pytest.raises(ManifestError):
            Manifest((ManifestRecord("a", ""),))
