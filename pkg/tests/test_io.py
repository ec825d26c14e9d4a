import numpy as np
import pytest

from faceid_bench.errors import EmbeddingFileError, ReportFormatError
from faceid_bench.gallery import similarity
from faceid_bench.io import (
    EmbeddingRecord,
    SyntheticSpec,
    gen_synthetic,
    load_embeddings,
    load_embeddings_auto,
    read_embeddings_binary,
    read_report,
    write_embeddings,
    write_embeddings_binary,
    write_report,
)
from faceid_bench.protocol import RunConfig, StreamItem, Tally, metrics, run_protocol
from helpers import unit


class TestTextFormat:
    def test_load_two_records(self, tmp_path):
        p = tmp_path / "e.tsv"
        p.write_text("a\tp1\t1 0 0 0\nb\tp2\t3 4 0 0\n", encoding="utf-8")
        records = load_embeddings(p)
        assert [r.id for r in records] == ["a", "b"]
        for r in records:
            assert abs(np.linalg.norm(r.vector) - 1.0) <= 1e-4

    def test_dimension_mismatch_names_both(self, tmp_path):
        p = tmp_path / "e.tsv"
        p.write_text("a\tp1\t1 0 0 0\nb\tp2\t1 0 0 0 0\n", encoding="utf-8")
        with pytest.raises(EmbeddingFileError, match="5 does not match first record's 4"):
            load_embeddings(p)

    def test_zero_vector_with_normalize(self, tmp_path):
        p = tmp_path / "e.tsv"
        p.write_text("a\tp1\t0 0 0\n", encoding="utf-8")
        with pytest.raises(EmbeddingFileError, match="zero vector"):
            load_embeddings(p)
        # without normalization the zero vector is kept as-is
        assert load_embeddings(p, normalize_vectors=False)[0].vector.tolist() == [0, 0, 0]

    def test_malformed_line_number(self, tmp_path):
        p = tmp_path / "e.tsv"
        p.write_text("a\tp1\t1 0\nnot-a-record\n", encoding="utf-8")
        with pytest.raises(EmbeddingFileError, match=":2"):
            load_embeddings(p)

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "e.tsv"
        p.write_text("a\tp1\t1 nan\n", encoding="utf-8")
        with pytest.raises(EmbeddingFileError, match="non-finite"):
            load_embeddings(p)

    def test_duplicate_id_rejected(self, tmp_path):
        p = tmp_path / "e.tsv"
        p.write_text("a\tp1\t1 0\na\tp1\t0 1\n", encoding="utf-8")
        with pytest.raises(EmbeddingFileError, match="duplicate"):
            load_embeddings(p)

    def test_round_trip_precision(self, tmp_path):
        rng = np.random.default_rng(0)
        records = [
            EmbeddingRecord(f"r{i}", f"p{i % 3}", unit(rng.standard_normal(24)))
            for i in range(10)
        ]
        p = tmp_path / "e.tsv"
        write_embeddings(records, p, header={"note": "test"})
        loaded = load_embeddings(p, normalize_vectors=False)
        for orig, back in zip(records, loaded):
            assert back.id == orig.id
            assert back.label == orig.label
            rel = np.abs(back.vector - orig.vector) / np.maximum(np.abs(orig.vector), 1e-30)
            assert rel.max() <= 1e-7


class TestBinaryFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        records = [
            EmbeddingRecord(f"r{i}", f"p{i}", unit(rng.standard_normal(16)))
            for i in range(5)
        ]
        p = tmp_path / "e.femb"
        write_embeddings_binary(records, p)
        loaded = read_embeddings_binary(p)
        for orig, back in zip(records, loaded):
            assert back.id == orig.id
            assert back.label == orig.label
            # float32 storage: relative error within half an ulp of float32
            assert np.allclose(back.vector, orig.vector, rtol=1e-7, atol=1e-9)

    def test_bit_exact_reload(self, tmp_path):
        rng = np.random.default_rng(2)
        records = [EmbeddingRecord("a", "p", unit(rng.standard_normal(8)))]
        p = tmp_path / "e.femb"
        write_embeddings_binary(records, p)
        first = read_embeddings_binary(p)
        write_embeddings_binary(first, tmp_path / "e2.femb")
        second = read_embeddings_binary(tmp_path / "e2.femb")
        assert np.array_equal(first[0].vector, second[0].vector)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "e.femb"
        p.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(EmbeddingFileError, match="not a packed"):
            read_embeddings_binary(p)

    def test_unsupported_version(self, tmp_path):
        import struct

        p = tmp_path / "e.femb"
        p.write_bytes(b"FEMB" + struct.pack("<III", 99, 4, 0))
        with pytest.raises(EmbeddingFileError, match="version 99"):
            read_embeddings_binary(p)

    def test_auto_sniffing(self, tmp_path):
        records = [EmbeddingRecord("a", "p", unit([1.0, 2.0, 2.0]))]
        write_embeddings_binary(records, tmp_path / "b.femb")
        write_embeddings(records, tmp_path / "t.tsv")
        assert load_embeddings_auto(tmp_path / "b.femb")[0].id == "a"
        assert load_embeddings_auto(tmp_path / "t.tsv")[0].id == "a"


class TestSynthetic:
    def test_zero_noise_identical_within_identity(self):
        spec = SyntheticSpec(identities=3, images_per_identity=4, dim=32, within_noise=0.0, seed=5)
        records = gen_synthetic(spec)
        assert len(records) == 12
        by_label = {}
        for r in records:
            by_label.setdefault(r.label, []).append(r.vector)
        for vectors in by_label.values():
            for v in vectors[1:]:
                assert np.array_equal(v, vectors[0])
            s = similarity(vectors[0], vectors[1])
            assert s == pytest.approx(1.0, abs=1e-12)

    def test_cross_identity_similarity_concentrates_near_zero(self):
        # mean over 100 seeds of the 2-identity cross similarity stays small
        sims = []
        for seed in range(100):
            spec = SyntheticSpec(identities=2, images_per_identity=1, dim=512, seed=seed)
            a, b = gen_synthetic(spec)
            sims.append(similarity(a.vector, b.vector))
        assert abs(float(np.mean(sims))) < 0.15

    def test_determinism(self):
        spec = SyntheticSpec(identities=4, images_per_identity=2, dim=16, within_noise=0.3, seed=9)
        first = gen_synthetic(spec)
        second = gen_synthetic(spec)
        assert first == second

    def test_per_identity_counts(self):
        spec = SyntheticSpec(identities=3, images_per_identity=(1, 2, 3), dim=8, seed=0)
        records = gen_synthetic(spec)
        assert [r.id for r in records] == ["id_0_0", "id_1_0", "id_1_1", "id_2_0", "id_2_1", "id_2_2"]

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SyntheticSpec(identities=0)
        with pytest.raises(ValueError):
            SyntheticSpec(identities=2, images_per_identity=(1,))
        with pytest.raises(ValueError):
            SyntheticSpec(identities=1, within_noise=-0.1)

    def test_noise_monotonicity_in_aggregate(self):
        # noiseless streams are at least as accurate as noisy ones on average
        deltas = []
        for seed in range(20):
            accs = {}
            for noise in (0.0, 0.6):
                spec = SyntheticSpec(identities=6, images_per_identity=3, dim=64,
                                     within_noise=noise, seed=seed)
                records = gen_synthetic(spec)
                items = [StreamItem(r.id, r.vector, r.label) for r in records]
                cfg = RunConfig(window=100, sigma=1.0, shuffle=True, seed=seed, runs=3)
                accs[noise] = run_protocol(items, cfg).aggregate.acc
            deltas.append(accs[0.0] - accs[0.6])
        assert float(np.mean(deltas)) >= 0.0


class TestReportPersistence:
    def test_round_trip(self, tmp_path):
        report = metrics(
            Tally(ta=3, fr=1, ie=2, fa=1, tr=3),
            run_seed=123,
            config={"window": 100, "sigma": 1.0, "shuffle": True, "seed": 5, "runs": 10},
        )
        p = tmp_path / "r.json"
        write_report(report, p)
        assert read_report(p) == report

    def test_null_rate_round_trips(self, tmp_path):
        report = metrics(Tally(tr=4))  # tar/far/war are None
        p = tmp_path / "r.json"
        write_report(report, p)
        back = read_report(p)
        assert back.tar is None
        assert back == report

    def test_unknown_version_rejected(self, tmp_path):
        p = tmp_path / "r.json"
        write_report(metrics(Tally(ta=1)), p)
        import json

        payload = json.loads(p.read_text())
        payload["format"] = "metrics-report/v999"
        p.write_text(json.dumps(payload))
        with pytest.raises(ReportFormatError):
            read_report(p)

    def test_not_json_rejected(self, tmp_path):
        p = tmp_path / "r.json"
        p.write_text("not json at all")
        with pytest.raises(ReportFormatError):
            read_report(p)
