"""Model dumps: one ``.npz`` holding every array plus a JSON header."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .hybridtree import WEIGHT_BLOCKS, Inventory, ModelParams, Vocab, Weights
from .logic import parse_signature
from .neural import PARAM_BLOCKS, NeuralParams

FORMAT_VERSION = 1


class ModelVersionError(ValueError):
    pass


def save_model(params: ModelParams, path, config: dict | None = None) -> None:
    inv = params.inventory
    header = {
        "version": FORMAT_VERSION,
        "units": [str(u) for u in inv.units],
        "grammar": inv.grammar,
        "words": params.vocab.words,
        "neural": None,
        "config": config or {},
    }
    arrays = {f"w_{k}": v for k, v in params.weights.blocks().items()}
    arrays["roots"] = inv.roots
    for slot in range(2):
        arrays[f"edges_{slot}"] = np.stack(inv.children[slot])
    if params.unit_vectors is not None:
        arrays["unit_vectors"] = params.unit_vectors
    if params.neural is not None:
        header["neural"] = {"words": params.neural.words, "window": params.neural.window}
        arrays.update({f"nn_{k}": v for k, v in params.neural.blocks().items()})
    arrays["header"] = np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path):
    """Returns (params, config dict)."""
    with np.load(Path(path), allow_pickle=False) as data:
        if "header" not in data:
            raise ModelVersionError(f"{path}: not a model dump")
        header = json.loads(data["header"].tobytes().decode("utf-8"))
        if header.get("version") != FORMAT_VERSION:
            raise ModelVersionError(f"{path}: model format version {header.get('version')}, "
                                    f"expected {FORMAT_VERSION}")
        units = [parse_signature(s) for s in header["units"]]
        children = tuple((data[f"edges_{s}"][0].astype(int), data[f"edges_{s}"][1].astype(int))
                         for s in range(2))
        inventory = Inventory(units, data["roots"].astype(bool), children, header["grammar"])
        vocab = Vocab()
        for w in header["words"]:
            vocab.add(w)
        weights = Weights(**{k: data[f"w_{k}"].copy() for k in WEIGHT_BLOCKS})
        vectors = data["unit_vectors"].copy() if "unit_vectors" in data else None
        neural = None
        if header["neural"] is not None:
            nn = header["neural"]
            neural = NeuralParams(nn["words"], units, nn["window"],
                                  **{k: data[f"nn_{k}"].copy() for k in PARAM_BLOCKS})
    return ModelParams(inventory, vocab, weights, vectors, neural), header["config"]
