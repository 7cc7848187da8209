import pytest
from hypothesis import given, settings, strategies as st

from hybridsp import GEO_FIXTURE
from hybridsp.corpus import load_corpus
from hybridsp.logic import (MeaningTree, MRLError, MRLSyntaxError, SemanticUnit, Signatures,
                            TypeMismatchError, UnknownFunctionError, collect_units, parse_mrl,
                            parse_signature, parse_term, serialize_mrl, trees_equal)

GEO = Signatures.from_lines([
    "QUERY:answer(STATE)", "QUERY:answer(RIVER)", "STATE:state(STATE)", "STATE:loc(RIVER)",
    "STATE:traverse(RIVER)", "RIVER:river(all)", "RIVER:exclude(RIVER,RIVER)",
    "RIVER:traverse(STATE)", "STATE:stateid(STATENAME)", "STATENAME:'texas'",
])
GOLD = "answer(state(loc(river(all))))"
FIG1 = "answer(exclude(river(all), traverse(stateid('texas'))))"


def test_gold_form_parses_to_four_levels():
    tree = parse_mrl(GOLD, GEO)
    assert str(tree.unit) == "QUERY:answer(STATE)"
    depth, node = 1, tree
    while node.children:
        node, depth = node.children[0], depth + 1
    assert depth == 4
    assert str(node.unit) == "RIVER:river(all)"


def test_zero_arity_unit():
    sigs = Signatures.from_lines(["RIVER:all()"])
    tree = parse_mrl("all", sigs)
    assert tree == MeaningTree(SemanticUnit("RIVER", "all"))
    assert serialize_mrl(tree) == "all"


def test_constant_leaf_and_topology():
    tree = parse_mrl(FIG1, GEO)
    exclude = tree.children[0]
    assert exclude.unit.function == "exclude" and exclude.unit.arity == 2
    leaf = exclude.children[1].children[0].children[0]
    assert leaf.unit == SemanticUnit("STATENAME", "'texas'")
    assert leaf.unit.is_constant
    assert serialize_mrl(tree) == FIG1


def test_serialization_canonical():
    assert serialize_mrl(parse_mrl(GOLD, GEO)) == GOLD
    messy = "  ANSWER ( State(loc( river( all ) ) ) )"
    assert serialize_mrl(parse_mrl(messy, GEO)) == GOLD


def test_constants_keep_case():
    sigs = Signatures.from_lines(["STATE:stateid(STATENAME)"])
    a = parse_mrl("stateid('Texas')", sigs)
    b = parse_mrl("stateid('texas')", sigs)
    assert not trees_equal(a, b)
    assert serialize_mrl(a) == "stateid('Texas')"


def test_syntax_error_reports_position():
    with pytest.raises(MRLSyntaxError) as err:
        parse_mrl("answer(state(", GEO)
    assert err.value.position == 13
    with pytest.raises(MRLSyntaxError):
        parse_term("a b")
    with pytest.raises(MRLSyntaxError):
        parse_term("f('open")


def test_unknown_function_and_type_mismatch():
    with pytest.raises(UnknownFunctionError):
        parse_mrl("answer(city(all))", GEO)
    with pytest.raises(UnknownFunctionError):
        parse_mrl("answer(state(loc(river(all)), river(all)))", GEO)
    with pytest.raises(TypeMismatchError):
        parse_mrl("answer(loc(stateid('texas')))", GEO)
    with pytest.raises(TypeMismatchError):
        MeaningTree(parse_signature("QUERY:answer(STATE)"), (MeaningTree(parse_signature("RIVER:river(all)")),))


def test_ambiguous_typing_rejected():
    sigs = Signatures.from_lines(["A:f(B)", "A:f(C)", "B:x()", "C:x()"])
    with pytest.raises(MRLError):
        parse_mrl("f(x)", sigs)


def test_collect_units():
    tree = parse_mrl(GOLD, GEO)
    units = collect_units(tree)
    assert [u.function for u in units] == ["answer", "state", "loc", "river(all)"]
    assert len(units) == tree.size()
    twice = parse_mrl("answer(exclude(river(all), river(all)))", GEO)
    assert collect_units(twice).count(parse_signature("RIVER:river(all)")) == 2
    leaf = MeaningTree(SemanticUnit("RIVER", "all"))
    assert collect_units(leaf) == [leaf.unit]


def test_trees_equal():
    gold = parse_mrl(GOLD, GEO)
    assert trees_equal(gold, gold)
    assert not trees_equal(gold, parse_mrl("answer(state(traverse(river(all))))", GEO))
    a = parse_mrl("answer(exclude(river(all), traverse(stateid('texas'))))", GEO)
    b = parse_mrl("answer(exclude(traverse(stateid('texas')), river(all)))", GEO)
    assert not trees_equal(a, b)


def test_unit_identity_includes_types():
    assert parse_signature("STATE:traverse(RIVER)") != parse_signature("RIVER:traverse(STATE)")
    assert str(parse_signature("STATE:loc(RIVER)")) == "STATE:loc(RIVER)"
    assert parse_signature("RIVER:river(all)").is_folded
    with pytest.raises(MRLError):
        parse_signature("lowercase:f(A)")


def test_fixture_round_trip():
    corpus = load_corpus(GEO_FIXTURE)
    assert len(corpus) == 50
    for inst in corpus.instances:
        text = serialize_mrl(inst.tree)
        again = parse_mrl(text, corpus.signatures)
        assert again == inst.tree
        assert serialize_mrl(again) == text


FIXTURE_FORMS = [serialize_mrl(i.tree) for i in load_corpus(GEO_FIXTURE).instances]
FIXTURE_SIGS = load_corpus(GEO_FIXTURE).signatures


def _check_typed(tree):
    for node in tree.preorder():
        assert len(node.children) == node.unit.arity
        for child, want in zip(node.children, node.unit.arg_types):
            assert child.unit.return_type == want


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(FIXTURE_FORMS), st.integers(0, 200), st.integers(0, 200),
       st.sampled_from(["", "(", ")", ",", "'", "all", "river", "x", "state(", "))"]))
def test_mutated_forms_parse_or_fail_cleanly(form, i, j, insert):
    i, j = sorted((i % (len(form) + 1), j % (len(form) + 1)))
    mutated = form[:i] + insert + form[j:]
    try:
        tree = parse_mrl(mutated, FIXTURE_SIGS, infer_constants=False)
    except MRLError:
        return
    _check_typed(tree)
    assert parse_mrl(serialize_mrl(tree), FIXTURE_SIGS, infer_constants=False) == tree
