import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hybridsp.hybridtree import Inventory, ModelParams, Vocab, Weights  # noqa: E402
from hybridsp.logic import SemanticUnit  # noqa: E402
from hybridsp.neural import NeuralParams  # noqa: E402

WORDS = ["a", "b", "c"]


def random_micro(rng, max_units=4, max_len=5, rank=2, neural=False, oov=True):
    """Random inventory (<= max_units units), random weights in [-1, 1] and a short sentence.

    Weights of the unknown-word entry stay zero: the explicit feature path
    keeps unknown words verbatim and gives them weight 0.
    """
    n_units = int(rng.integers(1, max_units + 1))
    units = []
    for k in range(n_units):
        arity = int(rng.choice([0, 0, 1, 1, 2])) if k else 0
        units.append(SemanticUnit("T", f"f{k}", ("T",) * arity))
    units.sort(key=str)
    U = len(units)
    roots = rng.random(U) < 0.6
    roots[rng.integers(U)] = True
    children = []
    for slot in range(2):
        ps, cs = [], []
        for p in range(U):
            if units[p].arity > slot:
                for c in range(U):
                    if rng.random() < 0.6:
                        ps.append(p)
                        cs.append(c)
        children.append((np.array(ps, dtype=int), np.array(cs, dtype=int)))
    vocab = Vocab(WORDS)
    w = Weights.zeros(U, len(vocab), rank)
    for arr in w.blocks().values():
        arr[...] = rng.uniform(-1, 1, arr.shape)
    unk = vocab.index["<unk>"]
    w.emit[:, unk] = w.prev[:, unk] = w.next[:, unk] = 0.0
    w.embword[unk] = 0.0
    vectors = rng.uniform(-1, 1, (U, rank)) if rank else None
    nn = None
    if neural:
        nn = NeuralParams.init(WORDS, units, int(rng.integers(0, 3)), dim=3, hidden=4,
                               seed=int(rng.integers(1000)), scale=0.5)
    params = ModelParams(Inventory(units, roots, tuple(children)), vocab, w, vectors, nn)
    n = int(rng.integers(1, max_len + 1))
    pool = WORDS + (["zz"] if oov else [])
    tokens = tuple(str(pool[i]) for i in rng.integers(0, len(pool), n))
    return params, tokens


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
