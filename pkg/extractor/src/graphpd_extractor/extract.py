"""Segmentation and wav2vec2 embedding extraction.

Utterances are cut into fixed-length windows (default 500 ms, 50% overlap).
Each window runs through a wav2vec2 model; the hidden states after
transformer block 1 are averaged across time to one f32 vector per segment.
Output is the graphpd binary embedding file plus manifest: a 4-byte LE u32
header-length prefix, a JSON header {n, m, dtype, byte_order, version}, an
n*m float32 payload, and a TSV manifest (segment_id, speaker_id, label,
row_index).

Corpus layout: corpus_dir/<speaker_id>/<utterance>.wav plus a labels.csv
(speaker_id,label header optional). Segment ids derive from the utterance
name and start sample; utterances shorter than one window yield a single
zero-padded segment whose id carries a "padded" marker.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np
import torch
from scipy.signal import resample_poly
from transformers import Wav2Vec2Config, Wav2Vec2Model

TARGET_SAMPLE_RATE = 16_000
XLSR53_NAME = "facebook/wav2vec2-large-xlsr-53"
FORMAT_VERSION = 1


class ExtractionError(Exception):
    pass


def segment_starts(n_samples: int, segment_len: int, hop: int) -> list[int]:
    """Window start offsets; [0] alone when the utterance is shorter than
    one window (that segment gets zero-padded)."""
    if n_samples < segment_len:
        return [0]
    return list(range(0, n_samples - segment_len + 1, hop))


class Wav2Vec2Embedder:
    """Wraps a wav2vec2 model; embeds a window as the time average of the
    hidden states after transformer block 1."""

    def __init__(self, model: Wav2Vec2Model):
        self.model = model.eval()

    @classmethod
    def pretrained(cls, name: str = XLSR53_NAME) -> "Wav2Vec2Embedder":
        return cls(Wav2Vec2Model.from_pretrained(name))

    @classmethod
    def from_config(cls, config: Wav2Vec2Config) -> "Wav2Vec2Embedder":
        """Randomly initialized model; for tests and dry runs."""
        torch.manual_seed(0)
        return cls(Wav2Vec2Model(config))

    @property
    def dim(self) -> int:
        return int(self.model.config.hidden_size)

    def embed(self, window: np.ndarray) -> np.ndarray:
        x = torch.from_numpy(np.ascontiguousarray(window, dtype=np.float32)).unsqueeze(0)
        with torch.no_grad():
            out = self.model(x, output_hidden_states=True)
        # hidden_states[0] is the pre-transformer feature projection;
        # hidden_states[1] is the output of transformer block 1
        states = out.hidden_states[1][0]
        return states.mean(dim=0).numpy().astype(np.float32)


def read_labels(path) -> dict[str, int]:
    labels: dict[str, int] = {}
    try:
        with open(path, newline="", encoding="utf-8") as f:
            for row in csv.reader(f):
                if not row or row[0].strip().lower() == "speaker_id":
                    continue
                labels[row[0].strip()] = int(row[1])
    except OSError as exc:
        raise ExtractionError(f"missing labels file: {exc}") from exc
    return labels


def load_audio(path) -> np.ndarray:
    """Mono float waveform at 16 kHz; resamples when needed."""
    from scipy.io import wavfile

    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise ExtractionError(f"unreadable audio {path}: {exc}") from exc
    was_int = np.issubdtype(data.dtype, np.integer)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if was_int:
        data = data / 32768.0
    if rate != TARGET_SAMPLE_RATE:
        data = resample_poly(data, TARGET_SAMPLE_RATE, rate)
    return data.astype(np.float32)


def extract(
    corpus_dir,
    out_dir,
    embedder: Wav2Vec2Embedder | None = None,
    segment_ms: int = 500,
    overlap: float = 0.5,
) -> None:
    """Walk the corpus and write embeddings.bin + manifest.tsv into out_dir."""
    corpus = Path(corpus_dir)
    labels = read_labels(corpus / "labels.csv")
    embedder = embedder or Wav2Vec2Embedder.pretrained()

    segment_len = int(TARGET_SAMPLE_RATE * segment_ms / 1000)
    hop = int(segment_len * (1.0 - overlap))
    if hop <= 0:
        raise ExtractionError("overlap must be < 1")

    rows = []  # (segment_id, speaker_id, label, embedding)
    wavs = sorted(corpus.glob("*/*.wav"))
    if not wavs:
        raise ExtractionError(f"no speaker_id/*.wav files under {corpus}")
    for wav in wavs:
        speaker_id = wav.parent.name
        if speaker_id not in labels:
            raise ExtractionError(f"speaker {speaker_id!r} missing from labels.csv")
        audio = load_audio(wav)
        for start in segment_starts(len(audio), segment_len, hop):
            window = audio[start : start + segment_len]
            padded = len(window) < segment_len
            if padded:
                window = np.pad(window, (0, segment_len - len(window)))
            seg_id = f"{wav.stem}_{start:08d}" + ("_padded" if padded else "")
            rows.append((seg_id, speaker_id, labels[speaker_id], embedder.embed(window)))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n, m = len(rows), embedder.dim
    header = {
        "n": n,
        "m": m,
        "dtype": "f32",
        "byte_order": "little",
        "version": FORMAT_VERSION,
        "preprocessing": f"mono, {TARGET_SAMPLE_RATE} Hz, {segment_ms} ms windows, {overlap:.0%} overlap",
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    matrix = np.stack([r[3] for r in rows]).astype("<f4")
    with open(out / "embeddings.bin", "wb") as f:
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        f.write(matrix.tobytes(order="C"))
    lines = ["segment_id\tspeaker_id\tlabel\trow_index"]
    lines += [f"{seg}\t{spk}\t{lab}\t{i}" for i, (seg, spk, lab, _) in enumerate(rows)]
    (out / "manifest.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
