"""Latent hybrid trees: patterns, features, parameters and inference.

A hybrid tree pairs every token of a sentence with exactly one semantic unit.
Each node chooses a pattern over ``W`` (one or more of its own words), ``X``
(its first child's subtree) and ``Y`` (its second child's subtree); the slots
tile the node's span left to right.

Feature templates, per word-unit association ``(t, u)``::

    EMIT(u, w_t)  EMIT-PREV(u, w_{t-1})  EMIT-NEXT(u, w_{t+1})
    EMBWORD(w_t, j) += E[u, j]   EMBBIAS(j) += E[u, j]     (when embeddings are set)

per node ``PATTERN(u, pattern)`` and per edge ``TRANS(parent, child, slot)``.
All of them decompose over the chart items, so a sentence reduces to a
:class:`chart.Grammar` of local scores.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import chart
from .chart import PATTERN_ARITY, PATTERN_INDEX, PATTERNS, PATTERNS_BY_ARITY
from .logic import MeaningTree, SemanticUnit

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
GRAMMAR_MODES = ("observed", "typed")
SLOT_NAMES = ("X", "Y")


class CoverageError(ValueError):
    """A hybrid tree does not tile its sentence exactly."""


class NoDerivationError(ValueError):
    """The sentence admits no hybrid tree for the requested meaning tree."""


# -- patterns and hybrid trees ---------------------------------------------

@dataclass(frozen=True)
class HybridPattern:
    arity: int
    slots: str

    def __str__(self):
        return self.slots


def enumerate_patterns(arity: int) -> list:
    if arity not in (0, 1, 2):
        raise ValueError(f"arity must be 0, 1 or 2, got {arity}")
    return [HybridPattern(arity, PATTERNS[k]) for k in PATTERNS_BY_ARITY[arity]]


@dataclass(frozen=True)
class HybridTree:
    unit: SemanticUnit
    pattern: str
    start: int
    end: int
    word_spans: tuple
    children: tuple = ()      # in argument order

    def meaning_tree(self) -> MeaningTree:
        return MeaningTree(self.unit, tuple(c.meaning_tree() for c in self.children))

    def associations(self) -> list:
        """``(token position, unit)`` for every word, in preorder."""
        out = [(t, self.unit) for p, q in self.word_spans for t in range(p, q)]
        for child in self.children:
            out.extend(child.associations())
        return out

    def nodes(self):
        yield self
        for child in self.children:
            yield from child.nodes()

    def validate(self, n_tokens: Optional[int] = None) -> None:
        if n_tokens is not None and (self.start, self.end) != (0, n_tokens):
            raise CoverageError(f"root covers [{self.start}, {self.end}), sentence has {n_tokens}")
        for node in self.nodes():
            node._check_tiling()

    def _check_tiling(self):
        if PATTERN_INDEX.get(self.pattern) is None or \
                PATTERN_ARITY[PATTERN_INDEX[self.pattern]] != self.unit.arity:
            raise CoverageError(f"pattern {self.pattern} invalid for {self.unit}")
        if len(self.children) != self.unit.arity:
            raise CoverageError(f"{self.unit} needs {self.unit.arity} children")
        words = iter(self.word_spans)
        pos = self.start
        for char in self.pattern:
            if char == "W":
                p, q = next(words, (None, None))
            else:
                c = self.children[0 if char == "X" else 1]
                p, q = c.start, c.end
            if p != pos or q is None or q <= p:
                raise CoverageError(f"slot {char} of {self.unit} does not continue at {pos}")
            pos = q
        if pos != self.end or next(words, None) is not None:
            raise CoverageError(f"slots of {self.unit} do not tile [{self.start}, {self.end})")


# -- vocabulary, inventory, weights ------------------------------------------

class Vocab:
    def __init__(self, words=()):
        self.words = [BOS, EOS, UNK]
        self.index = {w: i for i, w in enumerate(self.words)}
        for w in words:
            self.add(w)

    def add(self, word: str) -> int:
        if word not in self.index:
            self.index[word] = len(self.words)
            self.words.append(word)
        return self.index[word]

    def __len__(self):
        return len(self.words)

    def ids(self, tokens) -> np.ndarray:
        unk = self.index[UNK]
        return np.array([self.index.get(t, unk) for t in tokens], dtype=int)


@dataclass
class Inventory:
    """Units the decoder may use and which unit may fill which argument slot."""
    units: list
    roots: np.ndarray                 # (U,) bool
    children: tuple                   # per slot: (parent (E,), child (E,)) unit indices
    grammar: str = "observed"
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {u: i for i, u in enumerate(self.units)}

    def __len__(self):
        return len(self.units)

    @classmethod
    def from_trees(cls, trees, grammar: str = "observed") -> "Inventory":
        if grammar not in GRAMMAR_MODES:
            raise ValueError(f"unknown grammar mode {grammar!r}")
        units, roots, pairs = set(), set(), set()
        for tree in trees:
            roots.add(tree.unit)
            for node in tree.preorder():
                units.add(node.unit)
                for slot, child in enumerate(node.children):
                    pairs.add((node.unit, slot, child.unit))
        ordered = sorted(units, key=str)
        index = {u: i for i, u in enumerate(ordered)}
        if grammar == "typed":
            root_types = {u.return_type for u in roots}
            roots = {u for u in ordered if u.return_type in root_types}
            pairs = {(p, slot, c) for p in ordered for slot, t in enumerate(p.arg_types)
                     for c in ordered if c.return_type == t}
        root_mask = np.array([u in roots for u in ordered], dtype=bool)
        children = []
        for slot in range(2):
            edges = sorted((index[p], index[c]) for p, s, c in pairs if s == slot)
            children.append((np.array([e[0] for e in edges], dtype=int),
                             np.array([e[1] for e in edges], dtype=int)))
        return cls(ordered, root_mask, tuple(children), grammar)


WEIGHT_BLOCKS = ("emit", "prev", "next", "pattern", "trans", "embword", "embbias")


@dataclass
class Weights:
    """Dense blocks of the feature weight vector (also used for expectations)."""
    emit: np.ndarray      # (U, V)   EMIT(u, w)
    prev: np.ndarray      # (U, V)   EMIT-PREV(u, w)
    next: np.ndarray      # (U, V)   EMIT-NEXT(u, w)
    pattern: np.ndarray   # (U, P)   PATTERN(u, p)
    trans: np.ndarray     # (2, U, U) TRANS(parent, child, slot)
    embword: np.ndarray   # (V, d)   EMBWORD(w, j)
    embbias: np.ndarray   # (d,)     EMBBIAS(j)

    @classmethod
    def zeros(cls, n_units: int, n_words: int, rank: int = 0) -> "Weights":
        return cls(np.zeros((n_units, n_words)), np.zeros((n_units, n_words)),
                   np.zeros((n_units, n_words)), np.zeros((n_units, len(PATTERNS))),
                   np.zeros((2, n_units, n_units)), np.zeros((n_words, rank)), np.zeros(rank))

    def blocks(self) -> dict:
        return {name: getattr(self, name) for name in WEIGHT_BLOCKS}

    def copy(self) -> "Weights":
        return Weights(**{k: v.copy() for k, v in self.blocks().items()})

    def zeros_like(self) -> "Weights":
        return Weights(**{k: np.zeros_like(v) for k, v in self.blocks().items()})

    def __sub__(self, other):
        return Weights(**{k: v - getattr(other, k) for k, v in self.blocks().items()})

    def sqnorm(self) -> float:
        return float(sum(np.sum(v * v) for v in self.blocks().values()))


@dataclass
class ModelParams:
    inventory: Inventory
    vocab: Vocab
    weights: Weights
    unit_vectors: Optional[np.ndarray] = None   # (U, d) fixed embedding features
    neural: Optional[object] = None             # neural.NeuralParams

    @property
    def rank(self) -> int:
        return 0 if self.unit_vectors is None else self.unit_vectors.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.inventory, self.vocab, self.weights.copy(), self.unit_vectors,
                           None if self.neural is None else self.neural.copy())

    # feature key -> weight, for the explicit (non-chart) scoring path
    def weight(self, key) -> float:
        kind = key[0]
        inv, voc, w = self.inventory.index, self.vocab.index, self.weights
        try:
            if kind in ("EMIT", "EMIT-PREV", "EMIT-NEXT"):
                block = {"EMIT": w.emit, "EMIT-PREV": w.prev, "EMIT-NEXT": w.next}[kind]
                return float(block[inv[key[1]], voc[key[2]]])
            if kind == "PATTERN":
                return float(w.pattern[inv[key[1]], PATTERN_INDEX[key[2]]])
            if kind == "TRANS":
                return float(w.trans[SLOT_NAMES.index(key[3]), inv[key[1]], inv[key[2]]])
            if kind == "EMBWORD":
                return float(w.embword[voc[key[1]], key[2]])
            if kind == "EMBBIAS":
                return float(w.embbias[key[1]])
        except (KeyError, IndexError):
            return 0.0
        raise KeyError(f"unknown feature template {kind!r}")

    def unit_vector(self, unit: SemanticUnit) -> np.ndarray:
        i = self.inventory.index.get(unit)
        if self.unit_vectors is None or i is None:
            return np.zeros(self.rank)
        return self.unit_vectors[i]


def init_params(trees, sentences, grammar: str = "observed", unit_vectors=None,
                neural=None) -> ModelParams:
    """Zero weights over the inventory of ``trees`` and the words of ``sentences``.

    ``unit_vectors`` is a callable mapping a unit to its embedding (or None).
    """
    inventory = Inventory.from_trees(trees, grammar)
    vocab = Vocab(sorted({w for s in sentences for w in s}))
    vectors = None
    if unit_vectors is not None:
        vectors = np.array([unit_vectors(u) for u in inventory.units], dtype=np.float64)
    rank = 0 if vectors is None else vectors.shape[1]
    weights = Weights.zeros(len(inventory), len(vocab), rank)
    return ModelParams(inventory, vocab, weights, vectors, neural)


# -- explicit features ---------------------------------------------------------

def extract_features(tokens, h: HybridTree, params: Optional[ModelParams] = None) -> dict:
    """Sparse feature counts of a hybrid tree: feature key -> value."""
    tokens = list(tokens)
    h.validate(len(tokens))
    feats = defaultdict(float)
    padded = [BOS] + tokens + [EOS]
    for t, unit in h.associations():
        feats[("EMIT", unit, tokens[t])] += 1.0
        feats[("EMIT-PREV", unit, padded[t])] += 1.0
        feats[("EMIT-NEXT", unit, padded[t + 2])] += 1.0
        if params is not None and params.rank:
            vec = params.unit_vector(unit)
            for j, e in enumerate(vec):
                feats[("EMBWORD", tokens[t], j)] += float(e)
                feats[("EMBBIAS", j)] += float(e)
    for node in h.nodes():
        feats[("PATTERN", node.unit, node.pattern)] += 1.0
        for slot, child in enumerate(node.children):
            feats[("TRANS", node.unit, child.unit, SLOT_NAMES[slot])] += 1.0
    return dict(feats)


def score(tokens, h: HybridTree, params: ModelParams) -> float:
    """Weight-feature dot product plus the neural score, if any."""
    feats = extract_features(tokens, h, params)
    total = sum(params.weight(k) * v for k, v in feats.items())
    if params.neural is not None:
        from .neural import tree_score
        total += tree_score(tokens, h, params.neural)
    return float(total)


# -- chart construction --------------------------------------------------------

@dataclass
class SentenceScores:
    tokens: tuple
    word_ids: np.ndarray
    assoc: np.ndarray          # (U, N)
    neural_cache: object = None


def sentence_scores(tokens, params: ModelParams) -> SentenceScores:
    """Association score of every (unit, token) pair."""
    tokens = tuple(tokens)
    w = params.weights
    ids = params.vocab.ids(tokens)
    bos, eos = params.vocab.index[BOS], params.vocab.index[EOS]
    prev_ids = np.r_[bos, ids[:-1]]
    next_ids = np.r_[ids[1:], eos]
    assoc = w.emit[:, ids] + w.prev[:, prev_ids] + w.next[:, next_ids]
    if params.rank:
        assoc = assoc + params.unit_vectors @ (w.embword[ids] + w.embbias).T
    cache = None
    if params.neural is not None:
        from .neural import forward
        nn_scores, cache = forward(tokens, params.neural)
        assoc = assoc + nn_scores.T
    return SentenceScores(tokens, ids, assoc, cache)


def _labels(units):
    return tuple(u.function for u in units)


def full_grammar(scores: SentenceScores, params: ModelParams) -> chart.Grammar:
    inv = params.inventory
    w = params.weights
    edges = []
    for slot in range(2):
        parent, child = inv.children[slot]
        edges.append((parent, child, w.trans[slot, parent, child]))
    root = np.where(inv.roots, 0.0, -np.inf)
    arity = np.array([u.arity for u in inv.units], dtype=int)
    return chart.Grammar(arity, scores.assoc, w.pattern, tuple(edges), root, _labels(inv.units))


@dataclass
class TreeIndex:
    """Preorder nodes of a meaning tree as unit indices, with parent->child edges."""
    units: np.ndarray
    edges: tuple    # per slot: (parent node (E,), child node (E,))

    @classmethod
    def build(cls, tree: MeaningTree, inventory: Inventory) -> "TreeIndex":
        units, edges = [], ([], [])

        def visit(node):
            k = len(units)
            if node.unit not in inventory.index:
                raise KeyError(f"unit {node.unit} is not in the model inventory")
            units.append(inventory.index[node.unit])
            for slot, child in enumerate(node.children):
                edges[slot].append((k, visit(child)))
            return k

        visit(tree)
        return cls(np.array(units, dtype=int),
                   tuple((np.array([e[0] for e in es], dtype=int),
                          np.array([e[1] for e in es], dtype=int)) for es in edges))


def constrained_grammar(index: TreeIndex, scores: SentenceScores,
                        params: ModelParams) -> chart.Grammar:
    w = params.weights
    units = index.units
    edges = []
    for slot in range(2):
        parent, child = index.edges[slot]
        edges.append((parent, child, w.trans[slot, units[parent], units[child]]))
    root = np.full(len(units), -np.inf)
    root[0] = 0.0
    arity = np.array([params.inventory.units[u].arity for u in units], dtype=int)
    return chart.Grammar(arity, scores.assoc[units], w.pattern[units], tuple(edges), root,
                         _labels([params.inventory.units[u] for u in units]))


# -- inference -----------------------------------------------------------------

def log_partition_constrained(tokens, tree: MeaningTree, params: ModelParams) -> float:
    """log of the summed exp-scores over all hybrid trees of (tokens, tree)."""
    scores = sentence_scores(tokens, params)
    g = constrained_grammar(TreeIndex.build(tree, params.inventory), scores, params)
    return chart.Chart(g).value


def log_partition_full(tokens, params: ModelParams) -> float:
    """log of the summed exp-scores over every meaning tree and hybrid tree."""
    scores = sentence_scores(tokens, params)
    return chart.Chart(full_grammar(scores, params)).value


@dataclass
class Expectations:
    """Expected feature counts of one chart, as dense weight blocks."""
    log_z: float
    features: Weights
    assoc: np.ndarray     # (U, N) expected association counts per unit and token


def _expectations(scores, g, unit_of, params) -> Expectations:
    c = chart.Chart(g)
    if not np.isfinite(c.value):
        raise NoDerivationError("no hybrid tree covers the sentence")
    m = chart.outside(c)
    U = len(params.inventory)
    ids = scores.word_ids
    assoc = np.zeros((U, len(ids)))
    np.add.at(assoc, unit_of, m.assoc)
    f = params.weights.zeros_like()
    bos, eos = params.vocab.index[BOS], params.vocab.index[EOS]
    np.add.at(f.emit.T, ids, assoc.T)
    np.add.at(f.prev.T, np.r_[bos, ids[:-1]], assoc.T)
    np.add.at(f.next.T, np.r_[ids[1:], eos], assoc.T)
    np.add.at(f.pattern, unit_of, m.pattern)
    for slot in range(2):
        parent, child, _ = g.edges[slot]
        np.add.at(f.trans[slot], (unit_of[parent], unit_of[child]), m.edges[slot])
    if params.rank:
        per_token = assoc.T @ params.unit_vectors          # (N, d)
        np.add.at(f.embword, ids, per_token)
        f.embbias += per_token.sum(axis=0)
    return Expectations(c.value, f, assoc)


def expected_features(tokens, tree: MeaningTree, params: ModelParams, scores=None):
    """(E[features | tokens, tree], E[features | tokens]) as :class:`Expectations`."""
    scores = scores or sentence_scores(tokens, params)
    index = TreeIndex.build(tree, params.inventory)
    constrained = _expectations(scores, constrained_grammar(index, scores, params),
                                index.units, params)
    full = _expectations(scores, full_grammar(scores, params),
                         np.arange(len(params.inventory)), params)
    return constrained, full


def _to_hybrid(d: chart.Derivation, units) -> HybridTree:
    return HybridTree(units[d.symbol], d.pattern, d.start, d.end, d.word_spans,
                      tuple(_to_hybrid(c, units) for c in d.children))


def viterbi(tokens, params: ModelParams):
    """Best (score, HybridTree) over all meaning trees, or (-inf, None)."""
    tokens = tuple(tokens)
    if not tokens:
        return -np.inf, None
    scores = sentence_scores(tokens, params)
    value, d = chart.viterbi(full_grammar(scores, params))
    if d is None:
        return value, None
    return value, _to_hybrid(d, params.inventory.units)


def decode(tokens, params: ModelParams) -> Optional[MeaningTree]:
    """The meaning tree of the best hybrid tree, or None when nothing parses."""
    _, h = viterbi(tokens, params)
    return None if h is None else h.meaning_tree()


def features_to_dict(f: Weights, params: ModelParams) -> dict:
    """Non-zero entries of a dense block set, keyed like :func:`extract_features`."""
    units, words = params.inventory.units, params.vocab.words
    out = {}
    for name, template in (("emit", "EMIT"), ("prev", "EMIT-PREV"), ("next", "EMIT-NEXT")):
        for u, v in zip(*np.nonzero(getattr(f, name))):
            out[(template, units[u], words[v])] = float(getattr(f, name)[u, v])
    for u, k in zip(*np.nonzero(f.pattern)):
        out[("PATTERN", units[u], PATTERNS[k])] = float(f.pattern[u, k])
    for s, p, c in zip(*np.nonzero(f.trans)):
        out[("TRANS", units[p], units[c], SLOT_NAMES[s])] = float(f.trans[s, p, c])
    for v, j in zip(*np.nonzero(f.embword)):
        out[("EMBWORD", words[v], int(j))] = float(f.embword[v, j])
    for j in np.flatnonzero(f.embbias):
        out[("EMBBIAS", int(j))] = float(f.embbias[j])
    return out
