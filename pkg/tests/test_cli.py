import json

import pytest

from hybridsp import TOY_CORPUS, cli
from hybridsp.corpus import load_corpus, save_corpus
from hybridsp.model_io import load_model
from hybridsp.synthetic import generate
from hybridsp.trainer import NumericalError

SIZES = ["--train-size", "30", "--test-size", "10"]


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_embed(tmp_path, capsys):
    assert run("embed", "--corpus", TOY_CORPUS, "--lang", "en", "--rank", "4", "--out", tmp_path) == 0
    tsv = tmp_path / "en" / "embeddings" / "embeddings.tsv"
    rows = tsv.read_text().splitlines()
    assert len(rows) == 10 and all(len(r.split("\t")) == 5 for r in rows)
    assert (tmp_path / "en" / "embeddings" / "embeddings.npz").exists()
    assert run("embed", "--corpus", TOY_CORPUS, "--lang", "en", "--rank", "4",
               "--cooc-mode", "binary", "--out", tmp_path / "b") == 0


def test_embed_without_auxiliary_language(tmp_path, capsys):
    corpus = load_corpus(TOY_CORPUS)
    corpus.instances = corpus.for_language("en")
    corpus.languages = ["en"]
    path = tmp_path / "en_only.txt"
    save_corpus(corpus, path)
    assert run("embed", "--corpus", path, "--lang", "en", "--out", tmp_path) == cli.EXIT_DATA
    assert "no auxiliary language data" in capsys.readouterr().err
    assert run("train", "--corpus", path, "--lang", "en", "--mode", "ht-d+o", *SIZES,
               "--out", tmp_path) == cli.EXIT_DATA


def test_train_eval_parse(tmp_path, capsys):
    args = ["--corpus", TOY_CORPUS, "--lang", "en", *SIZES, "--out", tmp_path]
    assert run("train", *args, "--iterations", "60") == 0
    out = tmp_path / "en" / "ht-d"
    for name in ("model.npz", "train_log.tsv", "config.json"):
        assert (out / name).exists()
    config = json.loads((out / "config.json").read_text())
    assert config["mode"] == "ht-d" and config["iterations_run"] <= 60
    assert run("eval", *args) == 0
    text = capsys.readouterr().out
    assert "acc=100.00" in text
    rows = (out / "predictions.tsv").read_text().splitlines()
    assert len(rows) == 11
    assert run("parse", "--model", out / "model.npz", "which biggest state ohio") == 0
    assert capsys.readouterr().out.strip() == "answer(largest(stateid('ohio')))"


def test_neural_mode_dump(tmp_path):
    assert run("train", "--corpus", TOY_CORPUS, "--lang", "en", "--mode", "ht-d+nn",
               "--nn-window", "2", *SIZES, "--iterations", "2", "--out", tmp_path) == 0
    params, config = load_model(tmp_path / "en" / "ht-d+nn" / "model.npz")
    assert params.neural is not None and params.neural.window == 2
    assert config["nn_window"] == 2


def test_disjoint_vocabulary_does_not_crash(tmp_path, capsys):
    base = ["--corpus", TOY_CORPUS, *SIZES, "--out", tmp_path]
    assert run("train", "--lang", "en", *base, "--iterations", "5") == 0
    model = tmp_path / "en" / "ht-d" / "model.npz"
    assert run("eval", "--lang", "xx", "--model", model, *base) == 0
    assert "total=10" in capsys.readouterr().out


def test_predictions_are_reproducible(tmp_path):
    files = []
    for name in ("a", "b"):
        args = ["--corpus", TOY_CORPUS, "--lang", "en", "--mode", "ht-d+o",
                *SIZES, "--out", tmp_path / name, "--seed", "5"]
        assert run("train", *args, "--rank", "3", "--iterations", "8") == 0
        assert run("eval", *args) == 0
        files.append((tmp_path / name / "en" / "ht-d+o" / "predictions.tsv").read_bytes())
    assert files[0] == files[1]


def test_tune_rank(tmp_path, capsys):
    corpus = tmp_path / "g.txt"
    save_corpus(generate(50, ("en", "de"), seed=2, max_depth=2), corpus)
    assert run("tune-rank", "--corpus", corpus, "--lang", "en", "--train-size", "20",
               "--test-size", "10", "--iterations", "2", "--candidates", "2", "3",
               "--out", tmp_path) == 0
    assert "selected rank" in capsys.readouterr().out
    assert len((tmp_path / "en" / "tune_rank.tsv").read_text().splitlines()) == 3


def test_exit_codes(tmp_path, monkeypatch, capsys):
    with pytest.raises(SystemExit) as err:
        run("train", "--lang", "en")
    assert err.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as err:
        run("train", "--corpus", TOY_CORPUS, "--lang", "en", "--mode", "bogus")
    assert err.value.code == cli.EXIT_USAGE
    assert run("train", "--corpus", tmp_path / "missing.txt", "--lang", "en") == cli.EXIT_DATA
    assert run("train", "--corpus", TOY_CORPUS, "--lang", "fr", "--out", tmp_path) == cli.EXIT_DATA
    assert run("train", "--corpus", TOY_CORPUS, "--lang", "en", "--out", tmp_path) == cli.EXIT_DATA

    def boom(*a, **k):
        raise NumericalError("objective became nan")
    monkeypatch.setattr(cli, "train", boom)
    assert run("train", "--corpus", TOY_CORPUS, "--lang", "en", *SIZES,
               "--out", tmp_path) == cli.EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err
