"""Synthetic dataset generator: per-speaker Gaussian clusters inside class
super-clusters, with controllable overlap and injected label noise (PD
speakers carrying healthy-sounding segments that keep the PD label).

Gives the test suite a ground-truth world where separability and noise
fractions are known exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import HEALTHY, PD, SegmentRecord, write_dataset
from .errors import DataError


@dataclass(frozen=True)
class SynthConfig:
    speakers_per_class: int = 20
    segments_per_speaker: int = 20
    dim: int = 16
    class_separation: float = 5.0  # centroid distance in within-cluster stds
    speaker_spread: float = 1.0
    label_noise_rate: float = 0.0  # fraction of each PD speaker's segments drawn healthy
    seed: int = 0

    def __post_init__(self):
        if self.speakers_per_class < 1 or self.segments_per_speaker < 1 or self.dim < 1:
            raise DataError("bad-config", "counts and dim must be positive")
        if not 0.0 <= self.label_noise_rate < 1.0:
            raise DataError("bad-config", "label_noise_rate must be in [0, 1)")
        if self.class_separation < 0 or self.speaker_spread < 0:
            raise DataError("bad-config", "separation and spread must be nonnegative")


def generate(cfg: SynthConfig) -> tuple[list[SegmentRecord], dict[str, bool]]:
    """Returns (records, noise_flags). noise_flags[segment_id] is True for
    PD-labeled segments actually drawn from the healthy distribution."""
    rng = np.random.default_rng(cfg.seed)
    direction = rng.normal(size=cfg.dim)
    direction /= np.linalg.norm(direction)
    centroids = {
        HEALTHY: -0.5 * cfg.class_separation * direction,
        PD: +0.5 * cfg.class_separation * direction,
    }

    def healthy_draw() -> np.ndarray:
        # A fresh draw from the healthy class: speaker-level + segment-level noise.
        return (
            centroids[HEALTHY]
            + cfg.speaker_spread * rng.normal(size=cfg.dim)
            + rng.normal(size=cfg.dim)
        )

    records: list[SegmentRecord] = []
    noise_flags: dict[str, bool] = {}
    n_noised = int(np.floor(cfg.label_noise_rate * cfg.segments_per_speaker))
    for label, prefix in ((HEALTHY, "hc"), (PD, "pd")):
        for s in range(cfg.speakers_per_class):
            speaker_id = f"{prefix}_{s:03d}"
            sub_centroid = centroids[label] + cfg.speaker_spread * rng.normal(size=cfg.dim)
            noised_idx = set()
            if label == PD and n_noised > 0:
                noised_idx = set(rng.choice(cfg.segments_per_speaker, size=n_noised, replace=False).tolist())
            for g in range(cfg.segments_per_speaker):
                segment_id = f"{speaker_id}_seg{g:04d}"
                if g in noised_idx:
                    emb = healthy_draw()
                    noise_flags[segment_id] = True
                else:
                    emb = sub_centroid + rng.normal(size=cfg.dim)
                    noise_flags[segment_id] = False
                records.append(
                    SegmentRecord(segment_id=segment_id, speaker_id=speaker_id, label=label, embedding=emb)
                )
    return records, noise_flags


def write_noise_flags(noise_flags: dict[str, bool], path) -> None:
    lines = ["segment_id\tis_noised"]
    lines += [f"{seg}\t{int(flag)}" for seg, flag in noise_flags.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def generate_to_dir(cfg: SynthConfig, out_dir) -> None:
    """Emit embeddings.bin + manifest.tsv + noise_flags.tsv into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, flags = generate(cfg)
    write_dataset(records, out / "embeddings.bin", out / "manifest.tsv")
    write_noise_flags(flags, out / "noise_flags.tsv")
