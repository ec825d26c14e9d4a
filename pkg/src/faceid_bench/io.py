"""Embedding ingestion, synthetic embedding generation, report persistence.

Embedding files are line-delimited text (``id<TAB>label<TAB>v1 v2 ...``, '#'
comment lines allowed) with an optional packed binary variant for large
galleries. The synthetic generator stands in for a trained encoder: it draws
one unit-norm center per identity and perturbs it with seeded Gaussian noise,
giving streams whose difficulty is controlled by a single noise knob.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmbeddingFileError, ReportFormatError
from .gallery import normalize
from .protocol import MetricsReport, RATE_FIELDS, Tally
from .rng import stream

EMBEDDING_TEXT_FORMAT = "faceid-embeddings/v1"
EMBEDDING_BINARY_MAGIC = b"FEMB"
EMBEDDING_BINARY_VERSION = 1
REPORT_FORMAT = "metrics-report/v1"


@dataclass(eq=False)
class EmbeddingRecord:
    """One labeled embedding; vectors within a file share one dimension."""

    id: str
    label: str
    vector: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and np.array_equal(self.vector, other.vector)
        )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic embedding set.

    ``images_per_identity`` is either one count for all identities or a
    per-identity list of length ``identities``. ``within_noise`` is the
    standard deviation of the isotropic Gaussian perturbation added to the
    identity center before re-normalization; 0 makes all images of an
    identity identical.
    """

    identities: int
    images_per_identity: int | tuple[int, ...] = 1
    dim: int = 512
    within_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.identities, int) or self.identities < 1:
            raise ValueError(f"identities must be a positive integer, got {self.identities!r}")
        per = self.images_per_identity
        if isinstance(per, int):
            if per < 1:
                raise ValueError(f"images_per_identity must be >= 1, got {per!r}")
        else:
            per = tuple(int(p) for p in per)
            object.__setattr__(self, "images_per_identity", per)
            if len(per) != self.identities:
                raise ValueError(
                    f"per-identity counts ({len(per)}) do not match identities ({self.identities})"
                )
            if any(p < 1 for p in per):
                raise ValueError("every per-identity count must be >= 1")
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if not (self.within_noise >= 0.0 and math.isfinite(self.within_noise)):
            raise ValueError(f"within_noise must be a finite real >= 0, got {self.within_noise!r}")

    def counts(self) -> tuple[int, ...]:
        per = self.images_per_identity
        return (per,) * self.identities if isinstance(per, int) else per


def gen_synthetic(spec: SyntheticSpec) -> list[EmbeddingRecord]:
    """Generate clustered unit embeddings, deterministic per spec and seed.

    Identity ``k`` is labeled ``id_{k}`` and its images are ``id_{k}_{j}``.
    """
    records: list[EmbeddingRecord] = []
    for k, count in enumerate(spec.counts()):
        center = normalize(stream(spec.seed, "synth", "center", k).standard_normal(spec.dim))
        label = f"id_{k}"
        for j in range(count):
            noise = stream(spec.seed, "synth", "noise", k, j).standard_normal(spec.dim)
            vector = normalize(center + spec.within_noise * noise)
            records.append(EmbeddingRecord(id=f"{label}_{j}", label=label, vector=vector))
    return records


# -- line-delimited text format ------------------------------------------------


def load_embeddings(path, normalize_vectors: bool = True) -> list[EmbeddingRecord]:
    """Load ``id<TAB>label<TAB>components`` records, one per line.

    Components are space-separated reals. All records must share one
    dimension; vectors are scaled to unit norm unless ``normalize_vectors``
    is off. Blank lines and '#' comments are skipped.
    """
    path = Path(path)
    records: list[EmbeddingRecord] = []
    dim: int | None = None
    ids: set[str] = set()
    with path.open("r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not parts[0] or not parts[1]:
                raise EmbeddingFileError(
                    f"{path.name}:{lineno}: expected 'id<TAB>label<TAB>components', got {line!r}"
                )
            rec_id, label, payload = parts
            if rec_id in ids:
                raise EmbeddingFileError(f"{path.name}:{lineno}: duplicate id {rec_id!r}")
            ids.add(rec_id)
            try:
                vector = np.array([float(tok) for tok in payload.split()], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFileError(f"{path.name}:{lineno}: bad component: {exc}") from exc
            if vector.size == 0:
                raise EmbeddingFileError(f"{path.name}:{lineno}: empty vector")
            if not np.isfinite(vector).all():
                raise EmbeddingFileError(f"{path.name}:{lineno}: non-finite component")
            if dim is None:
                dim = vector.size
            elif vector.size != dim:
                raise EmbeddingFileError(
                    f"{path.name}:{lineno}: dimension {vector.size} does not match first record's {dim}"
                )
            if normalize_vectors:
                norm = float(np.linalg.norm(vector))
                if norm == 0.0:
                    raise EmbeddingFileError(f"{path.name}:{lineno}: zero vector cannot be normalized")
                vector = vector / norm
            records.append(EmbeddingRecord(id=rec_id, label=label, vector=vector))
    if not records:
        raise EmbeddingFileError(f"{path.name}: no records")
    return records


def write_embeddings(records: Sequence[EmbeddingRecord], path, *, header: dict | None = None) -> None:
    """Write the text format; components keep 9 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fp:
        fp.write(f"# {EMBEDDING_TEXT_FORMAT}\n")
        if header:
            fp.write(f"# {json.dumps(header, sort_keys=True)}\n")
        for rec in records:
            payload = " ".join(format(c, ".8e") for c in rec.vector)
            fp.write(f"{rec.id}\t{rec.label}\t{payload}\n")


# -- packed binary format --------------------------------------------------------


def write_embeddings_binary(records: Sequence[EmbeddingRecord], path) -> None:
    """Write the packed format: magic, version, dim, count, then records.

    Each record is a length-prefixed UTF-8 id and label followed by the
    vector as little-endian float32.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot write an empty record list")
    dim = records[0].vector.size
    path = Path(path)
    with path.open("wb") as fp:
        fp.write(EMBEDDING_BINARY_MAGIC)
        fp.write(struct.pack("<III", EMBEDDING_BINARY_VERSION, dim, len(records)))
        for rec in records:
            if rec.vector.size != dim:
                raise ValueError(f"record {rec.id!r} has dimension {rec.vector.size}, expected {dim}")
            for text in (rec.id, rec.label):
                raw = text.encode("utf-8")
                fp.write(struct.pack("<H", len(raw)))
                fp.write(raw)
            fp.write(np.asarray(rec.vector, dtype="<f4").tobytes())


def read_embeddings_binary(path) -> list[EmbeddingRecord]:
    """Read the packed format; vectors come back as float64."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != EMBEDDING_BINARY_MAGIC:
        raise EmbeddingFileError(f"{path.name}: not a packed embedding file")
    if len(data) < 16:
        raise EmbeddingFileError(f"{path.name}: truncated header")
    version, dim, count = struct.unpack_from("<III", data, 4)
    if version != EMBEDDING_BINARY_VERSION:
        raise EmbeddingFileError(f"{path.name}: unsupported version {version}")
    offset = 16
    records: list[EmbeddingRecord] = []
    try:
        for _ in range(count):
            texts = []
            for _ in range(2):
                (length,) = struct.unpack_from("<H", data, offset)
                offset += 2
                texts.append(data[offset : offset + length].decode("utf-8"))
                offset += length
            vector = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float64)
            if vector.size != dim:
                raise EmbeddingFileError(f"{path.name}: truncated vector data")
            offset += 4 * dim
            records.append(EmbeddingRecord(id=texts[0], label=texts[1], vector=vector))
    except (struct.error, UnicodeDecodeError) as exc:
        raise EmbeddingFileError(f"{path.name}: corrupt record data: {exc}") from exc
    return records


def load_embeddings_auto(path, normalize_vectors: bool = True) -> list[EmbeddingRecord]:
    """Load either format, sniffing the binary magic."""
    path = Path(path)
    with path.open("rb") as fp:
        magic = fp.read(4)
    if magic == EMBEDDING_BINARY_MAGIC:
        records = read_embeddings_binary(path)
        if normalize_vectors:
            for rec in records:
                rec.vector = normalize(rec.vector)
        return records
    return load_embeddings(path, normalize_vectors=normalize_vectors)


# -- metrics report persistence ---------------------------------------------------


def report_to_dict(report: MetricsReport) -> dict:
    t = report.tally
    return {
        "format": REPORT_FORMAT,
        "acc": report.acc,
        "tar": report.tar,
        "trr": report.trr,
        "far": report.far,
        "frr": report.frr,
        "war": report.war,
        "tally": {
            "ta": t.ta,
            "fr": t.fr,
            "ie": t.ie,
            "fa": t.fa,
            "tr": t.tr,
            "n": t.n,
            "acp": t.acp,
            "rej": t.rej,
        },
        "run_seed": report.run_seed,
        "config": report.config,
        "runs": report.runs,
        "excluded": report.excluded,
    }


def report_from_dict(payload: dict, *, source: str = "report") -> MetricsReport:
    if not isinstance(payload, dict) or payload.get("format") != REPORT_FORMAT:
        raise ReportFormatError(
            f"{source}: expected format {REPORT_FORMAT!r}, got {payload.get('format') if isinstance(payload, dict) else payload!r}"
        )
    try:
        tally = Tally(**{k: int(payload["tally"][k]) for k in ("ta", "fr", "ie", "fa", "tr")})
        return MetricsReport(
            tally=tally,
            run_seed=payload["run_seed"],
            config=payload["config"],
            runs=int(payload["runs"]),
            excluded={k: int(v) for k, v in payload["excluded"].items()},
            **{name: payload[name] for name in RATE_FIELDS},
        )
    except (KeyError, TypeError) as exc:
        raise ReportFormatError(f"{source}: missing or invalid field: {exc}") from exc


def write_report(report: MetricsReport, path) -> None:
    """Persist a report as deterministic JSON (None rates become null)."""
    path = Path(path)
    path.write_text(json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_report(path) -> MetricsReport:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ReportFormatError(f"{path.name}: not valid JSON: {exc}") from exc
    return report_from_dict(payload, source=path.name)
