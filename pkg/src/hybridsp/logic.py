"""Variable-free tree-shaped logical forms.

Logical forms are functional terms such as ``answer(state(loc(river(all))))``.
Every node is a typed :class:`SemanticUnit`; the typing comes from a signature
table (:class:`Signatures`) with one line per unit::

    QUERY:answer(STATE)      structural unit, one child of type STATE
    RIVER:all()              structural unit without children
    RIVER:river(all)         folded unit: the whole term ``river(all)`` is a leaf
    STATENAME:'texas'        constant leaf

Arguments written as upper-case type names make a structural unit; any other
argument list makes the whole term a single folded leaf.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterator, NamedTuple, Optional

TYPE_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")
_IDENT_RE = re.compile(r"[A-Za-z0-9_.\-]+")
_WS_RE = re.compile(r"\s*")


class MRLError(ValueError):
    """Base class for logical-form errors."""


class MRLSyntaxError(MRLError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))


class UnknownFunctionError(MRLError):
    pass


class TypeMismatchError(MRLError):
    pass


@dataclass(frozen=True)
class SemanticUnit:
    """A typed production ``RET : function(ARG...)``.

    Identity is the triple (return_type, function, arg_types).
    """

    return_type: str
    function: str
    arg_types: tuple = ()

    def __post_init__(self):
        if not self.return_type:
            raise MRLError("semantic type names must be non-empty")
        if not self.function:
            raise MRLError("function name must be non-empty")
        if len(self.arg_types) > 2:
            raise MRLError(f"arity {len(self.arg_types)} > 2 for {self.function}")
        if self.is_constant and self.arg_types:
            raise MRLError(f"constant {self.function} cannot take arguments")
        if not isinstance(self.arg_types, tuple):
            object.__setattr__(self, "arg_types", tuple(self.arg_types))

    @property
    def arity(self) -> int:
        return len(self.arg_types)

    @property
    def is_constant(self) -> bool:
        return self.function.startswith("'")

    @property
    def is_folded(self) -> bool:
        return self.is_constant or "(" in self.function

    def __str__(self) -> str:
        if self.is_folded:
            return f"{self.return_type}:{self.function}"
        return f"{self.return_type}:{self.function}({','.join(self.arg_types)})"


@dataclass(frozen=True)
class MeaningTree:
    unit: SemanticUnit
    children: tuple = ()

    def __post_init__(self):
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) != self.unit.arity:
            raise TypeMismatchError(
                f"{self.unit} expects {self.unit.arity} children, got {len(self.children)}")
        for i, (child, want) in enumerate(zip(self.children, self.unit.arg_types)):
            if child.unit.return_type != want:
                raise TypeMismatchError(
                    f"child {i} of {self.unit} has type {child.unit.return_type}, expected {want}")

    def preorder(self) -> Iterator["MeaningTree"]:
        yield self
        for child in self.children:
            yield from child.preorder()

    def size(self) -> int:
        return sum(1 for _ in self.preorder())

    def __str__(self) -> str:
        return serialize_mrl(self)


# -- surface terms ---------------------------------------------------------

class Term(NamedTuple):
    name: str
    args: tuple
    quoted: bool
    position: int

    def canonical(self) -> str:
        if self.quoted:
            return self.name
        if not self.args:
            return self.name.lower()
        return f"{self.name.lower()}({', '.join(a.canonical() for a in self.args)})"


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip(self):
        self.pos = _WS_RE.match(self.text, self.pos).end()

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str):
        if self.peek() != char:
            found = self.peek() or "end of input"
            raise MRLSyntaxError(f"expected {char!r}, found {found!r}", self.pos, self.text)
        self.pos += 1

    def term(self) -> Term:
        self.skip()
        start = self.pos
        if self.peek() == "'":
            end = self.text.find("'", self.pos + 1)
            if end < 0:
                raise MRLSyntaxError("unterminated constant", start, self.text)
            literal = self.text[start:end + 1]
            self.pos = end + 1
            return Term(literal, (), True, start)
        m = _IDENT_RE.match(self.text, self.pos)
        if not m:
            found = self.peek() or "end of input"
            raise MRLSyntaxError(f"expected a term, found {found!r}", start, self.text)
        self.pos = m.end()
        name = m.group()
        args = []
        if self.peek() == "(":
            self.pos += 1
            if self.peek() != ")":
                args.append(self.term())
                while self.peek() == ",":
                    self.pos += 1
                    args.append(self.term())
            self.expect(")")
        return Term(name, tuple(args), False, start)


def parse_term(text: str) -> Term:
    """Parse the untyped functional-term syntax."""
    reader = _Reader(text)
    term = reader.term()
    if reader.peek():
        raise MRLSyntaxError(f"unexpected {reader.peek()!r}", reader.pos, text)
    return term


# -- signatures ------------------------------------------------------------

def parse_signature(line: str) -> SemanticUnit:
    """Parse one ``RET:function(ARG1,ARG2)`` line into a unit."""
    line = line.strip()
    ret, sep, rest = line.partition(":")
    ret = ret.strip()
    if not sep or not TYPE_RE.match(ret):
        raise MRLError(f"malformed signature {line!r}")
    term = parse_term(rest)
    if term.quoted:
        return SemanticUnit(ret, term.name)
    if term.args and all(not a.args and not a.quoted and TYPE_RE.match(a.name)
                         for a in term.args):
        return SemanticUnit(ret, term.name.lower(), tuple(a.name for a in term.args))
    return SemanticUnit(ret, term.canonical())


class Signatures:
    """Function-name/arity table mapping surface terms to semantic units."""

    def __init__(self, units=()):
        self._units: dict = {}
        self._structural: dict = {}
        self._folded: dict = {}
        for unit in units:
            self.add(unit)

    def add(self, unit: SemanticUnit) -> SemanticUnit:
        if unit in self._units:
            return unit
        self._units[unit] = None
        if unit.is_folded:
            self._folded.setdefault(unit.function, []).append(unit)
        else:
            self._structural.setdefault((unit.function, unit.arity), []).append(unit)
        return unit

    def __contains__(self, unit) -> bool:
        return unit in self._units

    def __iter__(self):
        return iter(self._units)

    def __len__(self) -> int:
        return len(self._units)

    def folded(self, text: str) -> list:
        return self._folded.get(text, [])

    def structural(self, name: str, arity: int) -> list:
        return self._structural.get((name, arity), [])

    @classmethod
    def from_lines(cls, lines) -> "Signatures":
        return cls(parse_signature(line) for line in lines if line.strip())


def _resolve(term: Term, expected: Optional[str], sigs: Signatures, infer_constants: bool,
             failures: list) -> list:
    def fits(u):
        return expected is None or u.return_type == expected

    if term.quoted:
        units = [u for u in sigs.folded(term.name) if fits(u)]
        if not units and infer_constants and expected is not None:
            units = [SemanticUnit(expected, term.name)]
        if not units:
            failures.append(f"constant {term.name} at position {term.position} "
                            f"cannot have type {expected or 'unknown'}")
        return [MeaningTree(u) for u in units]

    folded = [u for u in sigs.folded(term.canonical())]
    if folded:
        matches = [MeaningTree(u) for u in folded if fits(u)]
        if matches:
            return matches
    name = term.name.lower()
    candidates = sigs.structural(name, len(term.args))
    if not candidates and not folded:
        raise UnknownFunctionError(
            f"unknown function {name}/{len(term.args)} at position {term.position}")
    results = []
    for unit in candidates:
        if not fits(unit):
            continue
        options = [_resolve(arg, t, sigs, infer_constants, failures)
                   for arg, t in zip(term.args, unit.arg_types)]
        for combo in product(*options):
            results.append(MeaningTree(unit, combo))
    if not results:
        failures.append(f"no typing of {name}/{len(term.args)} at position "
                        f"{term.position} returns {expected or 'any type'}")
    return results


def parse_mrl(text: str, signatures: Signatures, infer_constants: bool = True) -> MeaningTree:
    """Parse a logical form into its unique typed tree.

    Undeclared quoted constants take the type their parent expects when
    ``infer_constants`` is set.
    """
    term = parse_term(text)
    failures: list = []
    trees = _resolve(term, None, signatures, infer_constants, failures)
    if not trees:
        raise TypeMismatchError(f"{text!r}: " + (failures[-1] if failures else "no typing"))
    if len(trees) > 1:
        raise MRLError(f"{text!r} is ambiguous under the signature table "
                       f"({len(trees)} typings)")
    return trees[0]


def serialize_mrl(tree: MeaningTree) -> str:
    if not tree.children:
        return tree.unit.function
    return f"{tree.unit.function}({', '.join(serialize_mrl(c) for c in tree.children)})"


def collect_units(tree: MeaningTree) -> list:
    """All node units in preorder, with multiplicity."""
    return [node.unit for node in tree.preorder()]


def trees_equal(a: MeaningTree, b: MeaningTree) -> bool:
    return serialize_mrl(a) == serialize_mrl(b)
