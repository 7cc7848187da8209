"""Window-based neural association scores.

score(t, u) = output[:, u] . tanh(concat(vec(w_{t-J}), ..., vec(w_{t+J})) @ hidden + hidden_bias)
              + output_bias[u]

Positions outside the sentence use one shared padding vector.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

PAD, UNK = "<pad>", "<unk>"
PARAM_BLOCKS = ("word_vectors", "hidden", "hidden_bias", "output", "output_bias")


@dataclass
class NeuralParams:
    words: list
    units: list
    window: int
    word_vectors: np.ndarray   # (V, k)
    hidden: np.ndarray         # ((2J+1)k, H)
    hidden_bias: np.ndarray    # (H,)
    output: np.ndarray         # (H, U)
    output_bias: np.ndarray    # (U,)

    def __post_init__(self):
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.unit_index = {u: i for i, u in enumerate(self.units)}
        k = self.word_vectors.shape[1]
        if self.window not in (0, 1, 2):
            raise ValueError(f"window must be 0, 1 or 2, got {self.window}")
        if self.hidden.shape[0] != (2 * self.window + 1) * k:
            raise ValueError("hidden layer width does not match the window")
        if self.output.shape != (self.hidden.shape[1], len(self.units)):
            raise ValueError("output layer does not match the unit inventory")

    @classmethod
    def init(cls, words, units, window: int, dim: int = 50, hidden: int = 100,
             seed: int = 0, scale: float = 0.1) -> "NeuralParams":
        words = [PAD, UNK] + [w for w in words if w not in (PAD, UNK)]
        rng = np.random.default_rng(seed)
        width = (2 * window + 1) * dim
        return cls(words, list(units), window,
                   rng.uniform(-scale, scale, (len(words), dim)),
                   rng.uniform(-scale, scale, (width, hidden)),
                   rng.uniform(-scale, scale, hidden),
                   rng.uniform(-scale, scale, (hidden, len(units))),
                   rng.uniform(-scale, scale, len(units)))

    def blocks(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_BLOCKS}

    def replace(self, **blocks) -> "NeuralParams":
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(blocks)
        return NeuralParams(**current)

    def copy(self) -> "NeuralParams":
        return self.replace(**{k: v.copy() for k, v in self.blocks().items()})

    def zeros_like(self) -> "NeuralParams":
        return self.replace(**{k: np.zeros_like(v) for k, v in self.blocks().items()})

    def sqnorm(self) -> float:
        return float(sum(np.sum(v * v) for v in self.blocks().values()))

    def window_ids(self, tokens) -> np.ndarray:
        """(N, 2J+1) word ids of each token's window, padded at both ends."""
        unk, pad = self.word_index[UNK], self.word_index[PAD]
        ids = [self.word_index.get(t, unk) for t in tokens]
        padded = [pad] * self.window + ids + [pad] * self.window
        return np.array([padded[t:t + 2 * self.window + 1] for t in range(len(ids))], dtype=int)


def forward(tokens, params: NeuralParams):
    """Scores for every (token, unit) pair, shape (N, U), and a backprop cache."""
    win = params.window_ids(tokens)
    x = params.word_vectors[win].reshape(len(win), -1)
    a = np.tanh(x @ params.hidden + params.hidden_bias)
    return a @ params.output + params.output_bias, (win, x, a)


def assoc_score(tokens, t: int, unit, params: NeuralParams) -> float:
    if not 0 <= t < len(tokens):
        raise IndexError(f"position {t} outside sentence of length {len(tokens)}")
    if unit not in params.unit_index:
        raise KeyError(f"unknown unit {unit}")
    u = params.unit_index[unit]
    pad = params.word_vectors[params.word_index[PAD]]
    vecs = []
    for s in range(t - params.window, t + params.window + 1):
        if 0 <= s < len(tokens):
            vecs.append(params.word_vectors[params.word_index.get(tokens[s], params.word_index[UNK])])
        else:
            vecs.append(pad)
    hidden = np.tanh(np.concatenate(vecs) @ params.hidden + params.hidden_bias)
    return float(hidden @ params.output[:, u] + params.output_bias[u])


def tree_score(tokens, h, params: NeuralParams) -> float:
    """Sum of association scores over the word-unit pairs of a hybrid tree."""
    h.validate(len(tokens))
    return float(sum(assoc_score(tokens, t, u, params) for t, u in h.associations()))


def grad_theta(tokens, expected, params: NeuralParams, cache=None) -> NeuralParams:
    """Gradient of sum_{t,u} expected[t, u] * score(t, u) with respect to every block.

    ``expected`` is an (N, U) array or a mapping ``(t, unit) -> weight``.
    """
    if not isinstance(expected, np.ndarray):
        dense = np.zeros((len(tokens), len(params.units)))
        for (t, unit), p in expected.items():
            dense[t, params.unit_index[unit]] += p
        expected = dense
    if cache is None:
        _, cache = forward(tokens, params)
    win, x, a = cache
    grad = params.zeros_like()
    grad.output[...] = a.T @ expected
    grad.output_bias[...] = expected.sum(axis=0)
    dz = (expected @ params.output.T) * (1.0 - a * a)
    grad.hidden[...] = x.T @ dz
    grad.hidden_bias[...] = dz.sum(axis=0)
    dx = (dz @ params.hidden.T).reshape(win.shape + (-1,))
    np.add.at(grad.word_vectors, win, dx)
    return grad
