"""Latent hybrid-tree semantic parsing with cross-lingual unit embeddings."""
from pathlib import Path

__version__ = "0.1.0"

DATA_DIR = Path(__file__).parent / "data"
TOY_CORPUS = DATA_DIR / "toy.txt"
GEO_FIXTURE = DATA_DIR / "geo50.txt"
