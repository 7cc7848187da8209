"""Deterministic synthetic corpora.

Every semantic unit is realised by its own word, sentences list those words in
tree preorder (or reversed preorder for "reversed" languages), so the correct
parse of a sentence is fully determined by its words.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, Instance, format_corpus
from .logic import MeaningTree, Signatures, parse_signature

STATES = ("texas", "ohio", "utah", "maine", "iowa", "idaho", "nevada", "oregon", "alaska", "kansas")
CITIES = ("austin", "dallas", "boston", "denver", "salem", "dover", "reno", "tulsa")
RIVERS = ("mississippi", "missouri", "colorado", "red", "hudson", "ohio")


@dataclass(frozen=True)
class Grammar:
    """Unit signatures with their surface word, grouped by return type."""
    entries: tuple   # (signature line, word)

    def units(self):
        return [(parse_signature(sig), word) for sig, word in self.entries]


def _names(type_name, fn, names, tag):
    out = [(f"{type_name}:{fn}({type_name}NAME)", f"{tag}id")]
    out += [(f"{type_name}NAME:'{n}'", f"{n}_{tag}") for n in names]
    return out


TOY = Grammar(tuple(
    [("QUERY:answer(STATE)", "which"), ("STATE:next_to(STATE)", "bordering"),
     ("STATE:largest(STATE)", "biggest"), ("STATE:smallest(STATE)", "tiniest"),
     ("STATE:stateid(STATENAME)", "state")]
    + [(f"STATENAME:'{n}'", n) for n in STATES[:5]]))

LARGE = Grammar(tuple(
    [("QUERY:answer(STATE)", "which"), ("QUERY:answer(CITY)", "what"), ("QUERY:answer(RIVER)", "name"),
     ("STATE:next_to(STATE)", "bordering"), ("STATE:largest(STATE)", "biggest"),
     ("STATE:smallest(STATE)", "tiniest"), ("STATE:loc(CITY)", "containing"),
     ("STATE:traverse(RIVER)", "crossed"), ("STATE:exclude(STATE,STATE)", "except"),
     ("CITY:capital(STATE)", "capital"), ("CITY:loc(STATE)", "in"), ("CITY:largest(CITY)", "major"),
     ("RIVER:traverse(STATE)", "through"), ("RIVER:longest(RIVER)", "longest")]
    + _names("STATE", "stateid", STATES, "state")
    + _names("CITY", "cityid", CITIES, "city")
    + _names("RIVER", "riverid", RIVERS, "river")))


def _lexicon(language, word):
    if language == "en":
        return word
    # a fixed, invertible respelling keeps languages lexically disjoint
    return f"{word[::-1]}{language}"


def _random_tree(rng, by_type, type_name, depth, max_depth):
    options = by_type[type_name]
    if depth >= max_depth:
        options = [o for o in options if o[0].arity == 0 or o[0].function.endswith("id")] or options
    unit, _ = rng.choice(options)
    kids = tuple(_random_tree(rng, by_type, t, depth + 1, max_depth) for t in unit.arg_types)
    return MeaningTree(unit, kids)


def _words(tree, lexicon, language):
    out = [_lexicon(language, lexicon[tree.unit])]
    for child in tree.children:
        out.extend(_words(child, lexicon, language))
    return out


def generate(n_instances: int, languages=("en", "de"), seed: int = 0, grammar: Grammar = LARGE,
             max_depth: int = 4, reversed_languages=()) -> Corpus:
    """Random trees shared across languages (same id), one sentence per language."""
    rng = random.Random(seed)
    entries = grammar.units()
    lexicon = {u: w for u, w in entries}
    by_type = {}
    for u, w in entries:
        by_type.setdefault(u.return_type, []).append((u, w))
    sigs = Signatures()
    for u, _ in entries:
        sigs.add(u)
    trees = [_random_tree(rng, by_type, "QUERY", 0, max_depth) for _ in range(n_instances)]
    instances = []
    for lang in languages:
        for i, tree in enumerate(trees, 1):
            words = _words(tree, lexicon, lang)
            if lang in reversed_languages:
                words.reverse()
            instances.append(Instance(i, lang, tuple(words), tree))
    return Corpus(instances, sigs, tuple(languages))


def toy_corpus() -> Corpus:
    """30 training + 10 test instances in "en" plus the same trees in auxiliary "xx"."""
    return generate(40, ("en", "xx"), seed=7, grammar=TOY, max_depth=3)


def toy_text() -> str:
    return format_corpus(toy_corpus())
