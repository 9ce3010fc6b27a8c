"""Adapter from raw audio corpora to the graphpd embedding-file format."""

from .extract import Wav2Vec2Embedder, extract, segment_starts

__all__ = ["Wav2Vec2Embedder", "extract", "segment_starts"]
__version__ = "0.1.0"
