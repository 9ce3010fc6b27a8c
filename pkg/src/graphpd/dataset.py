"""Canonical data model and on-disk formats for segment embeddings.

An embedding file is a 4-byte little-endian u32 header length, a UTF-8 JSON
header ``{n, m, dtype, byte_order, version}``, then an n*m row-major float32
payload. The companion manifest is a UTF-8 TSV (LF line endings) with columns
segment_id, speaker_id, label, row_index. Embeddings are stored as f32 but
promoted to f64 on load; all downstream math runs in 64-bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

FORMAT_VERSION = 1
MANIFEST_COLUMNS = ("segment_id", "speaker_id", "label", "row_index")

HEALTHY = 0
PD = 1


@dataclass(frozen=True)
class SegmentRecord:
    """One speech segment: id, owning speaker, class label, embedding."""

    segment_id: str
    speaker_id: str
    label: int
    embedding: np.ndarray
    utterance_id: str = ""

    def __post_init__(self):
        if self.label not in (HEALTHY, PD):
            raise DataError("bad-label", f"label must be 0 or 1, got {self.label!r}")


@dataclass
class SpeakerTable:
    """speaker_id -> (label, ordered segment ids); partitions the dataset."""

    labels: dict[str, int] = field(default_factory=dict)
    segments: dict[str, list[str]] = field(default_factory=dict)

    @property
    def speaker_ids(self) -> list[str]:
        return list(self.labels)

    def speakers_of_class(self, label: int) -> list[str]:
        return [s for s, lab in self.labels.items() if lab == label]


def speaker_table(records: list[SegmentRecord]) -> SpeakerTable:
    """Group records by speaker, checking label consistency per speaker."""
    table = SpeakerTable()
    for rec in records:
        prev = table.labels.get(rec.speaker_id)
        if prev is None:
            table.labels[rec.speaker_id] = rec.label
            table.segments[rec.speaker_id] = []
        elif prev != rec.label:
            raise DataError(
                "inconsistent-speaker-label",
                f"speaker {rec.speaker_id!r} has segments labeled both {prev} and {rec.label}",
            )
        table.segments[rec.speaker_id].append(rec.segment_id)
    return table


def validate_records(records: list[SegmentRecord]) -> None:
    if not records:
        raise DataError("empty-dataset", "no records")
    m = records[0].embedding.shape[0]
    if m == 0:
        raise DataError("zero-dimension", "embedding dimension is 0")
    seen: set[str] = set()
    for rec in records:
        if rec.embedding.ndim != 1 or rec.embedding.shape[0] != m:
            raise DataError(
                "dim-mismatch",
                f"segment {rec.segment_id!r} has embedding shape {rec.embedding.shape}, expected ({m},)",
            )
        if rec.segment_id in seen:
            raise DataError("duplicate-segment", f"duplicate segment_id {rec.segment_id!r}")
        seen.add(rec.segment_id)
    speaker_table(records)  # raises on inconsistent speaker labels


def feature_matrix(records: list[SegmentRecord]) -> np.ndarray:
    """Stack embeddings into an (n, m) float64 matrix in record order."""
    return np.stack([r.embedding for r in records]).astype(np.float64, copy=False)


def write_dataset(records: list[SegmentRecord], embedding_path, manifest_path) -> None:
    """Write the binary embedding file and TSV manifest for ``records``."""
    validate_records(records)
    n = len(records)
    m = records[0].embedding.shape[0]
    header = {
        "n": n,
        "m": m,
        "dtype": "f32",
        "byte_order": "little",
        "version": FORMAT_VERSION,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = feature_matrix(records).astype("<f4").tobytes(order="C")
    try:
        with open(embedding_path, "wb") as f:
            f.write(struct.pack("<I", len(header_bytes)))
            f.write(header_bytes)
            f.write(payload)
        lines = ["\t".join(MANIFEST_COLUMNS)]
        for row, rec in enumerate(records):
            lines.append(f"{rec.segment_id}\t{rec.speaker_id}\t{rec.label}\t{row}")
        Path(manifest_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError("unwritable-path", str(exc)) from exc


def _read_header(f) -> dict:
    prefix = f.read(4)
    if len(prefix) != 4:
        raise DataError("malformed-header", "file shorter than header length prefix")
    (hlen,) = struct.unpack("<I", prefix)
    raw = f.read(hlen)
    if len(raw) != hlen:
        raise DataError("malformed-header", "truncated header")
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError("malformed-header", f"header is not valid JSON: {exc}") from exc
    for key in ("n", "m", "dtype", "byte_order", "version"):
        if key not in header:
            raise DataError("malformed-header", f"header missing key {key!r}")
    if header["dtype"] != "f32" or header["byte_order"] != "little":
        raise DataError("malformed-header", "unsupported dtype or byte order")
    if not isinstance(header["n"], int) or not isinstance(header["m"], int) or header["n"] < 0 or header["m"] < 0:
        raise DataError("malformed-header", "n and m must be nonnegative integers")
    return header


def load_dataset(embedding_path, manifest_path) -> list[SegmentRecord]:
    """Load records; embeddings come back as float64."""
    try:
        with open(embedding_path, "rb") as f:
            header = _read_header(f)
            payload = f.read()
    except OSError as exc:
        raise DataError("missing-file", str(exc)) from exc
    n, m = header["n"], header["m"]
    if len(payload) != n * m * 4:
        raise DataError(
            "size-mismatch",
            f"payload is {len(payload)} bytes, expected n*m*4 = {n * m * 4}",
        )
    X = np.frombuffer(payload, dtype="<f4").reshape(n, m).astype(np.float64)

    try:
        text = Path(manifest_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError("missing-file", str(exc)) from exc
    lines = text.splitlines()
    if not lines or tuple(lines[0].split("\t")) != MANIFEST_COLUMNS:
        raise DataError("malformed-manifest", "missing or wrong manifest header row")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 4:
            raise DataError("malformed-manifest", f"line {lineno}: expected 4 columns")
        seg, spk, label_s, idx_s = parts
        try:
            label, idx = int(label_s), int(idx_s)
        except ValueError as exc:
            raise DataError("malformed-manifest", f"line {lineno}: non-integer field") from exc
        if label not in (HEALTHY, PD):
            raise DataError("bad-label", f"line {lineno}: label {label} outside {{0,1}}")
        rows.append((seg, spk, label, idx))
    if len(rows) != n:
        raise DataError("size-mismatch", f"manifest has {len(rows)} rows, header says n={n}")
    if sorted(r[3] for r in rows) != list(range(n)):
        raise DataError("duplicate-row", "manifest row_index values are not a permutation of 0..n-1")

    records = [
        SegmentRecord(segment_id=seg, speaker_id=spk, label=label, embedding=X[idx])
        for seg, spk, label, idx in rows
    ]
    validate_records(records)
    return records
