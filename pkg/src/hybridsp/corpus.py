"""Multilingual (sentence, logical form) corpora and the experimental splits.

File format (UTF-8), three sections separated by a line ``%%``::

    lang en
    lang de
    %%
    QUERY:answer(STATE)
    STATE:state(STATE)
    %%
    id 0 en
    nl: which states have a river ?
    mrl: answer(state(loc(river(all))))

Blank lines and lines starting with ``#`` are ignored.  Instance ids are
shared across languages (translations of one logical form carry the same id),
so an instance is keyed by ``(id, language)``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .logic import (MeaningTree, MRLError, Signatures, collect_units, parse_mrl,
                    parse_signature, serialize_mrl)

TRAIN_SIZE = 600
TEST_SIZE = 280
DEV_FRACTION = 0.2


class CorpusFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path=None):
        self.line = line
        where = f"{path or '<corpus>'}:{line}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Instance:
    id: int
    language: str
    tokens: tuple
    tree: MeaningTree

    @property
    def sentence(self) -> str:
        return " ".join(self.tokens)


@dataclass
class Corpus:
    instances: list
    signatures: Signatures
    languages: list = field(default_factory=list)

    def __len__(self):
        return len(self.instances)

    def for_language(self, language: str) -> list:
        return [inst for inst in self.instances if inst.language == language]

    def select(self, language: str, ids) -> list:
        """Instances of ``language`` with the given ids, in the order of ``ids``."""
        by_id = {inst.id: inst for inst in self.for_language(language)}
        return [by_id[i] for i in ids]


@dataclass(frozen=True)
class SplitSpec:
    language: str
    train_ids: tuple
    dev_ids: tuple = ()
    test_ids: tuple = ()
    seed: Optional[int] = None

    def __post_init__(self):
        sets = [set(self.train_ids), set(self.dev_ids), set(self.test_ids)]
        if sum(map(len, sets)) != len(sets[0] | sets[1] | sets[2]):
            raise ValueError("split id sets must be disjoint")


def tokenize(sentence: str) -> tuple:
    return tuple(tok.lower() for tok in sentence.split())


def parse_corpus(text: str, path=None) -> Corpus:
    sections = [[]]
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line == "%%":
            sections.append([])
        elif line and not line.startswith("#"):
            sections[-1].append((lineno, line))
    if len(sections) != 3:
        raise CorpusFormatError(f"expected 3 sections separated by '%%', found {len(sections)}",
                                path=path)
    header, sig_lines, records = sections

    languages = []
    for lineno, line in header:
        parts = line.split()
        if len(parts) != 2 or parts[0] != "lang":
            raise CorpusFormatError(f"malformed header line {line!r}", lineno, path)
        if parts[1] not in languages:
            languages.append(parts[1])

    signatures = Signatures()
    for lineno, line in sig_lines:
        try:
            signatures.add(parse_signature(line))
        except MRLError as err:
            raise CorpusFormatError(str(err), lineno, path) from None

    if len(records) % 3:
        lineno = records[-(len(records) % 3)][0]
        raise CorpusFormatError("incomplete instance record", lineno, path)
    instances = []
    seen = set()
    for k in range(0, len(records), 3):
        (l_id, id_line), (l_nl, nl_line), (l_mrl, mrl_line) = records[k:k + 3]
        parts = id_line.split()
        if len(parts) != 3 or parts[0] != "id":
            raise CorpusFormatError(f"expected 'id <int> <lang>', got {id_line!r}", l_id, path)
        try:
            inst_id = int(parts[1])
        except ValueError:
            raise CorpusFormatError(f"non-integer id {parts[1]!r}", l_id, path) from None
        lang = parts[2]
        if lang not in languages:
            raise CorpusFormatError(f"undeclared language {lang!r}", l_id, path)
        if (inst_id, lang) in seen:
            raise CorpusFormatError(f"duplicate id {inst_id} for language {lang}", l_id, path)
        seen.add((inst_id, lang))
        if not nl_line.startswith("nl:"):
            raise CorpusFormatError("expected 'nl:' line", l_nl, path)
        if not mrl_line.startswith("mrl:"):
            raise CorpusFormatError("expected 'mrl:' line", l_mrl, path)
        tokens = tokenize(nl_line[3:])
        if not tokens:
            raise CorpusFormatError("empty sentence", l_nl, path)
        try:
            tree = parse_mrl(mrl_line[4:].strip(), signatures)
        except MRLError as err:
            raise CorpusFormatError(str(err), l_mrl, path) from None
        for unit in collect_units(tree):
            signatures.add(unit)  # inferred constants join the table
        instances.append(Instance(inst_id, lang, tokens, tree))
    return Corpus(instances, signatures, languages)


def load_corpus(path) -> Corpus:
    path = Path(path)
    return parse_corpus(path.read_text(encoding="utf-8"), path=path)


def format_corpus(corpus: Corpus) -> str:
    lines = [f"lang {lang}" for lang in corpus.languages]
    lines.append("%%")
    lines.extend(str(unit) for unit in corpus.signatures)
    lines.append("%%")
    for inst in corpus.instances:
        lines.append(f"id {inst.id} {inst.language}")
        lines.append(f"nl: {inst.sentence}")
        lines.append(f"mrl: {serialize_mrl(inst.tree)}")
    return "\n".join(lines) + "\n"


def save_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(format_corpus(corpus), encoding="utf-8")


def standard_split(corpus: Corpus, language: str, train_size: int = TRAIN_SIZE,
                   test_size: int = TEST_SIZE) -> SplitSpec:
    """First ``train_size`` instances (file order) train, the next ``test_size`` test."""
    ids = [inst.id for inst in corpus.for_language(language)]
    if len(ids) < train_size + test_size:
        raise ValueError(f"language {language!r} has {len(ids)} instances, "
                         f"{train_size + test_size} required")
    return SplitSpec(language, tuple(ids[:train_size]), (),
                     tuple(ids[train_size:train_size + test_size]))


def dev_split(split: SplitSpec, seed: int, dev_fraction: float = DEV_FRACTION) -> SplitSpec:
    """Hold out a random ``dev_fraction`` of the training ids for development."""
    n_dev = round(len(split.train_ids) * dev_fraction)
    dev = set(random.Random(seed).sample(split.train_ids, n_dev))
    learn = tuple(i for i in split.train_ids if i not in dev)
    dev_ids = tuple(i for i in split.train_ids if i in dev)
    return SplitSpec(split.language, learn, dev_ids, split.test_ids, seed)


def auxiliary_corpus(corpus: Corpus, target: str) -> Corpus:
    """All instances in languages other than ``target``."""
    return Corpus([inst for inst in corpus.instances if inst.language != target],
                  corpus.signatures, [lang for lang in corpus.languages if lang != target])
