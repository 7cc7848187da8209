import json

import numpy as np
import pytest

from hybridsp.corpus import auxiliary_corpus, standard_split
from hybridsp.embeddings import embed_auxiliary
from hybridsp.hybridtree import decode
from hybridsp.model_io import ModelVersionError, load_model, save_model
from hybridsp.synthetic import toy_corpus
from hybridsp.trainer import TrainConfig, param_arrays, train


@pytest.mark.parametrize("window, rank", [(None, 0), (1, 3)])
def test_round_trip(tmp_path, window, rank):
    c = toy_corpus()
    split = standard_split(c, "en", 30, 10)
    data = c.select("en", split.train_ids)[:6]
    emb = embed_auxiliary(auxiliary_corpus(c, "en"), rank) if rank else None
    params = train(data, TrainConfig(max_iterations=3, nn_window=window, nn_dim=3, nn_hidden=4),
                   emb).params
    path = tmp_path / "m.npz"
    save_model(params, path, {"mode": "x"})
    back, config = load_model(path)
    assert config == {"mode": "x"}
    assert back.inventory.units == params.inventory.units
    assert back.vocab.words == params.vocab.words
    for a, b in zip(param_arrays(params), param_arrays(back)):
        assert np.array_equal(a, b)
    for inst in c.select("en", split.test_ids):
        assert decode(inst.tokens, back) == decode(inst.tokens, params)


def test_version_mismatch(tmp_path):
    c = toy_corpus()
    params = train(c.for_language("en")[:2], TrainConfig(max_iterations=1)).params
    path = tmp_path / "m.npz"
    save_model(params, path)
    with np.load(path) as data:
        arrays = dict(data)
    header = json.loads(arrays["header"].tobytes())
    header["version"] = 99
    arrays["header"] = np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)
    np.savez(path, **arrays)
    with pytest.raises(ModelVersionError):
        load_model(path)
    np.savez(path, x=np.zeros(1))
    with pytest.raises(ModelVersionError):
        load_model(path)
