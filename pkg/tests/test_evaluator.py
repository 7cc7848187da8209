import pytest

from hybridsp.evaluator import EvalResult, evaluate, prediction_lines, write_predictions
from hybridsp.logic import Signatures, parse_mrl

SIGS = Signatures.from_lines(["QUERY:answer(STATE)", "STATE:state(STATE)", "STATE:loc(RIVER)",
                              "STATE:traverse(RIVER)", "RIVER:river(all)"])
GOLD = parse_mrl("answer(state(loc(river(all))))", SIGS)
WRONG = parse_mrl("answer(state(traverse(river(all))))", SIGS)


def test_all_correct():
    r = evaluate([GOLD, GOLD], [GOLD, GOLD])
    assert r.accuracy == r.f1 == 1.0


def test_traverse_is_not_loc():
    assert evaluate([WRONG], [GOLD]).correct == 0


def test_counts_with_no_parse():
    r = evaluate([GOLD, GOLD, WRONG, None], [GOLD] * 4)
    assert (r.total, r.parsed, r.correct) == (4, 3, 2)
    assert r.accuracy == 0.5
    assert r.precision == pytest.approx(2 / 3)
    assert r.recall == 0.5
    assert r.f1 == pytest.approx(4 / 7)
    assert round(100 * r.f1, 2) == 57.14
    assert r.accuracy <= r.precision


def test_invariants():
    with pytest.raises(ValueError):
        EvalResult(2, 1, 2)
    with pytest.raises(ValueError):
        evaluate([GOLD], [GOLD, GOLD])
    empty = evaluate([], [])
    assert empty.f1 == 0.0 and empty.accuracy == 0.0
    r = evaluate([GOLD, WRONG, WRONG], [GOLD] * 3)
    assert r.f1 == pytest.approx(r.accuracy)


def test_prediction_file(tmp_path):
    path = tmp_path / "p.tsv"
    write_predictions(path, [7, 8, 9], [GOLD, WRONG, None], [GOLD] * 3)
    rows = [line.split("\t") for line in path.read_text().splitlines()]
    assert rows[0] == ["id", "gold", "prediction", "verdict"]
    assert [r[3] for r in rows[1:]] == ["correct", "wrong", "noparse"]
    assert rows[3][2] == ""
    assert prediction_lines([7], [GOLD], [GOLD])[1].startswith("7\tanswer(")
