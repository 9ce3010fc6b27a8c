"""Transductive GCN node classification for pathological speech detection
from precomputed segment embeddings."""

from .backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
