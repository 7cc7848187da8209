"""Cross-lingual distributed representations of semantic units.

Counts of (semantic unit, word) co-occurrences over auxiliary-language data
form a units x words matrix; the rank-d left factor ``U[:, :d] * s[:d]`` of its
SVD gives one d-dimensional vector per unit.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .logic import SemanticUnit, collect_units, parse_signature
from .svd import SvdResult, svd

COOC_MODES = ("freq", "binary")

# Ranks selected on the development split, per language.
DEFAULT_RANKS = {"en": 30, "th": 20, "de": 30, "el": 10, "zh": 10, "id": 30, "sv": 20, "fa": 10}


@dataclass
class CoocMatrix:
    units: list
    words: list
    counts: np.ndarray
    unit_index: dict = field(init=False, repr=False)
    word_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.unit_index = {u: i for i, u in enumerate(self.units)}
        self.word_index = {w: j for j, w in enumerate(self.words)}
        if self.counts.shape != (len(self.units), len(self.words)):
            raise ValueError("count matrix shape does not match the indices")

    def count(self, unit: SemanticUnit, word: str) -> int:
        return int(self.counts[self.unit_index[unit], self.word_index[word]])


def build_cooc(aux: Corpus, mode: str = "freq") -> CoocMatrix:
    """Unit-word co-occurrence counts over every instance of ``aux``.

    ``freq``: unit multiplicity times token frequency per instance.
    ``binary``: one per instance in which both occur.
    """
    if mode not in COOC_MODES:
        raise ValueError(f"unknown co-occurrence mode {mode!r}")
    per_instance = []
    units, words = set(), set()
    for inst in aux.instances:
        u_counts = Counter(collect_units(inst.tree))
        w_counts = Counter(inst.tokens)
        if mode == "binary":
            u_counts = Counter(dict.fromkeys(u_counts, 1))
            w_counts = Counter(dict.fromkeys(w_counts, 1))
        per_instance.append((u_counts, w_counts))
        units.update(u_counts)
        words.update(w_counts)
    unit_list = sorted(units, key=str)
    word_list = sorted(words)
    cooc = CoocMatrix(unit_list, word_list, np.zeros((len(unit_list), len(word_list)), np.int64))
    for u_counts, w_counts in per_instance:
        rows = [cooc.unit_index[u] for u in u_counts]
        cols = [cooc.word_index[w] for w in w_counts]
        cooc.counts[np.ix_(rows, cols)] += np.outer(list(u_counts.values()),
                                                    list(w_counts.values()))
    return cooc


@dataclass
class UnitEmbeddings:
    units: list
    vectors: np.ndarray
    unit_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.units):
            raise ValueError("one vector per unit required")
        if self.vectors.shape[1] < 1:
            raise ValueError("embedding rank must be >= 1")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding vectors must be finite")
        self.unit_index = {u: i for i, u in enumerate(self.units)}

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]


def truncate_embed(result: SvdResult, d: int, units) -> UnitEmbeddings:
    """Rows of ``U[:, :d] diag(s[:d])`` for the given row units."""
    k = len(result.singular_values)
    if not 1 <= d <= k:
        raise ValueError(f"rank {d} outside [1, {k}]")
    return UnitEmbeddings(list(units), result.U[:, :d] * result.singular_values[:d])


def unit_embeddings(cooc: CoocMatrix, d: int) -> UnitEmbeddings:
    if not cooc.units or not cooc.words:
        raise ValueError("cannot embed an empty co-occurrence matrix")
    return truncate_embed(svd(cooc.counts), d, cooc.units)


def lookup(emb: UnitEmbeddings, unit: SemanticUnit) -> np.ndarray:
    """The unit's vector, or zeros for a unit unseen in the auxiliary data."""
    i = emb.unit_index.get(unit)
    if i is None:
        return np.zeros(emb.rank)
    return emb.vectors[i].copy()


def zero_embeddings(units, d: int) -> UnitEmbeddings:
    units = list(units)
    return UnitEmbeddings(units, np.zeros((len(units), d)))


def export_embeddings(emb: UnitEmbeddings, path) -> None:
    """Write a TSV: canonical unit string, then the vector (9 significant digits)."""
    with open(path, "w", encoding="utf-8") as out:
        for unit, vec in zip(emb.units, emb.vectors):
            out.write("\t".join([str(unit)] + [f"{x:.9g}" for x in vec]) + "\n")


def load_embeddings(path) -> UnitEmbeddings:
    units, rows = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            try:
                units.append(parse_signature(fields[0]))
                rows.append([float(x) for x in fields[1:]])
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: {err}") from None
    if len({len(r) for r in rows}) > 1:
        raise ValueError(f"{path}: rows have different dimensions")
    return UnitEmbeddings(units, np.array(rows))


def save_embeddings_npz(emb: UnitEmbeddings, path) -> None:
    np.savez(path, vectors=emb.vectors,
             units=np.array(json.dumps([str(u) for u in emb.units])))


def load_embeddings_npz(path) -> UnitEmbeddings:
    with np.load(path, allow_pickle=False) as data:
        units = [parse_signature(s) for s in json.loads(str(data["units"]))]
        return UnitEmbeddings(units, data["vectors"])


def embed_auxiliary(aux: Corpus, d: int, mode: str = "freq") -> UnitEmbeddings:
    """Co-occurrence matrix of ``aux`` followed by its rank-``d`` embedding."""
    return unit_embeddings(build_cooc(aux, mode), d)


def write_embeddings(emb: UnitEmbeddings, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    export_embeddings(emb, directory / "embeddings.tsv")
    save_embeddings_npz(emb, directory / "embeddings.npz")
    return directory / "embeddings.tsv"
