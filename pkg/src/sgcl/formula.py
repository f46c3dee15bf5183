"""Syntax of the coalition-survival modal language.

Formulas are built from propositional variables, falsum, negation,
implication, and the coalition modality ``[C]_p body``: coalition C can
commit to actions so that, however the remaining agents act, every
reachable non-failure state satisfies the body and the probability of
avoiding failure is at least p.  Subscripts are exact rationals in
[0, 1]; no floating point is used anywhere.

Concrete grammar (whitespace-insensitive)::

    formula  := impl
    impl     := unary ( "->" impl )?          # right associative
    unary    := "~" unary | modal unary | atom
    modal    := "[" ( ident ("," ident)* )? "]" "_" rational
    atom     := "false" | "true" | ident | "(" formula ")"
    rational := integer | integer "/" integer | decimal
    ident    := [A-Za-z][A-Za-z0-9_]*

``true`` is parsed as ``~false``; ``[]`` is the empty coalition.  The
full language allows the empty coalition, the restricted "plus"
sub-language does not (see :func:`in_plus_language`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

Rational = Fraction
AgentId = str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Neg:
    body: "Formula"


@dataclass(frozen=True)
class Impl:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Coal:
    """Coalition modality.  ``coalition`` may be empty; ``p`` must lie in [0, 1]."""

    coalition: frozenset
    p: Fraction
    body: "Formula"

    def __post_init__(self):
        object.__setattr__(self, "coalition", frozenset(self.coalition))
        p = self.p if isinstance(self.p, Fraction) else Fraction(self.p)
        if not 0 <= p <= 1:
            raise ValueError(f"modal subscript {p} outside [0, 1]")
        object.__setattr__(self, "p", p)


Formula = Union[Var, Bot, Neg, Impl, Coal]

TOP: Formula = Neg(Bot())

_RESERVED = frozenset({"false", "true"})


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class AtomCapError(ValueError):
    """Raised when a truth-table check would exceed the configured atom cap."""

    def __init__(self, atoms: int, cap: int):
        super().__init__(f"truth table over {atoms} atoms exceeds cap {cap}")
        self.atoms = atoms
        self.cap = cap


# ---------------------------------------------------------------------------
# traversal helpers


def subformulas(f: Formula) -> set:
    """All subformulas of f, including f itself."""
    seen: set = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        if isinstance(g, Neg):
            stack.append(g.body)
        elif isinstance(g, Impl):
            stack.append(g.left)
            stack.append(g.right)
        elif isinstance(g, Coal):
            stack.append(g.body)
    return seen


def agents_of(f: Formula) -> frozenset:
    out: set = set()
    for g in subformulas(f):
        if isinstance(g, Coal):
            out |= g.coalition
    return frozenset(out)


def variables_of(f: Formula) -> frozenset:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Var))


def subscripts_of(f: Formula) -> frozenset:
    return frozenset(g.p for g in subformulas(f) if isinstance(g, Coal))


def formula_size(f: Formula) -> int:
    """Number of AST nodes."""
    n = 0
    stack = [f]
    while stack:
        g = stack.pop()
        n += 1
        if isinstance(g, Neg):
            stack.append(g.body)
        elif isinstance(g, Impl):
            stack.append(g.left)
            stack.append(g.right)
        elif isinstance(g, Coal):
            stack.append(g.body)
    return n


def in_plus_language(f: Formula) -> bool:
    """True when no modality in f has an empty coalition."""
    return all(
        g.coalition for g in subformulas(f) if isinstance(g, Coal)
    )


# ---------------------------------------------------------------------------
# printing


def render(f: Formula) -> str:
    """Canonical rendering; ``parse(render(f))`` returns f."""
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Neg):
        if isinstance(f.body, Bot):
            return "true"
        return "~" + render(f.body)
    if isinstance(f, Impl):
        return f"({render(f.left)} -> {render(f.right)})"
    if isinstance(f, Coal):
        names = ",".join(sorted(f.coalition))
        return f"[{names}]_{f.p} {render(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


def canonical_key(f: Formula):
    """Deterministic ordering key: size first, then rendered text."""
    return (formula_size(f), render(f))


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"(->)|([A-Za-z][A-Za-z0-9_]*)|(\d+\.\d+)|(\d+)|([~\[\](),/_])"
)

_ARROW, _IDENT, _DECIMAL, _INT, _PUNCT = range(1, 6)


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastindex
        tokens.append((kind, m.group(kind), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens, text_len: int, universe: Optional[frozenset]):
        self.tokens = tokens
        self.i = 0
        self.text_len = text_len
        self.universe = universe

    def _pos(self) -> int:
        if self.i < len(self.tokens):
            return self.tokens[self.i][2]
        return self.text_len

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.text_len)
        self.i += 1
        return tok

    def expect_punct(self, ch: str):
        tok = self.peek()
        if tok is None or tok[0] != _PUNCT or tok[1] != ch:
            raise ParseError(f"expected {ch!r}", self._pos())
        self.i += 1

    def at_punct(self, ch: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == _PUNCT and tok[1] == ch

    def impl(self) -> Formula:
        left = self.unary()
        tok = self.peek()
        if tok is not None and tok[0] == _ARROW:
            self.i += 1
            return Impl(left, self.impl())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.text_len)
        if tok[0] == _PUNCT and tok[1] == "~":
            self.i += 1
            return Neg(self.unary())
        if tok[0] == _PUNCT and tok[1] == "[":
            coalition, p = self.modal()
            return Coal(coalition, p, self.unary())
        return self.atom()

    def modal(self):
        self.expect_punct("[")
        agents = []
        if not self.at_punct("]"):
            agents.append(self.agent())
            while self.at_punct(","):
                self.i += 1
                agents.append(self.agent())
        self.expect_punct("]")
        self.expect_punct("_")
        p = self.rational()
        return frozenset(agents), p

    def agent(self) -> str:
        tok = self.peek()
        if tok is None or tok[0] != _IDENT:
            raise ParseError("expected an agent name", self._pos())
        if tok[1] in _RESERVED:
            raise ParseError(f"reserved word {tok[1]!r} cannot name an agent", tok[2])
        if self.universe is not None and tok[1] not in self.universe:
            raise ParseError(f"unknown agent {tok[1]!r}", tok[2])
        self.i += 1
        return tok[1]

    def rational(self) -> Fraction:
        tok = self.take()
        kind, text, pos = tok
        if kind == _DECIMAL:
            value = Fraction(text)
        elif kind == _INT:
            value = Fraction(int(text))
            if self.at_punct("/"):
                self.i += 1
                den = self.take()
                if den[0] != _INT:
                    raise ParseError("expected a denominator", den[2])
                if int(den[1]) == 0:
                    raise ParseError("zero denominator is not a rational", den[2])
                value = Fraction(int(text), int(den[1]))
        else:
            raise ParseError("expected a rational subscript", pos)
        if not 0 <= value <= 1:
            raise ParseError(f"subscript {value} outside [0, 1]", pos)
        return value

    def atom(self) -> Formula:
        tok = self.take()
        kind, text, pos = tok
        if kind == _IDENT:
            if text == "false":
                return Bot()
            if text == "true":
                return Neg(Bot())
            return Var(text)
        if kind == _PUNCT and text == "(":
            inner = self.impl()
            self.expect_punct(")")
            return inner
        raise ParseError(f"unexpected token {text!r}", pos)


def parse(text: str, universe: Optional[Iterable[str]] = None) -> Formula:
    """Parse a formula.

    When ``universe`` is given, every agent name must belong to it;
    otherwise agent names are taken at face value.
    """
    uni = frozenset(universe) if universe is not None else None
    parser = _Parser(_tokenize(text), len(text), uni)
    result = parser.impl()
    tok = parser.peek()
    if tok is not None:
        raise ParseError(f"unexpected trailing token {tok[1]!r}", tok[2])
    return result


# ---------------------------------------------------------------------------
# closure sets


@dataclass(frozen=True)
class ClosureSet:
    """A finite set of formulas closed under subformulas, where every
    non-negation member also has its negation present.  Formulas are kept
    deduplicated in canonical order."""

    formulas: tuple

    def __post_init__(self):
        ordered = tuple(sorted(set(self.formulas), key=canonical_key))
        object.__setattr__(self, "formulas", ordered)
        present = set(ordered)
        for f in ordered:
            for g in _direct_children(f):
                if g not in present:
                    raise ValueError(f"not subformula-closed: missing {render(g)}")
            if not isinstance(f, Neg) and Neg(f) not in present:
                raise ValueError(f"missing complement ~{render(f)}")

    def __contains__(self, f: Formula) -> bool:
        return f in self.formulas

    def __iter__(self) -> Iterator[Formula]:
        return iter(self.formulas)

    def __len__(self) -> int:
        return len(self.formulas)

    def subscripts(self) -> frozenset:
        out: set = set()
        for f in self.formulas:
            if isinstance(f, Coal):
                out.add(f.p)
        return frozenset(out)

    def agents(self) -> frozenset:
        out: set = set()
        for f in self.formulas:
            out |= agents_of(f)
        return frozenset(out)

    def variables(self) -> frozenset:
        out: set = set()
        for f in self.formulas:
            out |= variables_of(f)
        return frozenset(out)


def _direct_children(f: Formula):
    if isinstance(f, Neg):
        return (f.body,)
    if isinstance(f, Impl):
        return (f.left, f.right)
    if isinstance(f, Coal):
        return (f.body,)
    return ()


def closure(seed: Iterable[Formula]) -> ClosureSet:
    """Smallest closure set containing every seed formula."""
    subs: set = set()
    for f in seed:
        subs |= subformulas(f)
    full = set(subs)
    for f in subs:
        if not isinstance(f, Neg):
            full.add(Neg(f))
    return ClosureSet(tuple(full))


# ---------------------------------------------------------------------------
# propositional reasoning over the modal skeleton

# Expression nodes: ("const", bool) | ("atom", i) | ("not", e) | ("imp", a, b)


class _Abstraction:
    """Joint abstraction that maps maximal non-Boolean subformulas
    (variables and modalities) to shared propositional atoms."""

    def __init__(self):
        self.atoms: dict = {}

    def expr(self, f: Formula):
        if isinstance(f, Bot):
            return ("const", False)
        if isinstance(f, Neg):
            return ("not", self.expr(f.body))
        if isinstance(f, Impl):
            return ("imp", self.expr(f.left), self.expr(f.right))
        if isinstance(f, (Var, Coal)):
            idx = self.atoms.get(f)
            if idx is None:
                idx = len(self.atoms)
                self.atoms[f] = idx
            return ("atom", idx)
        raise TypeError(f"not a formula: {f!r}")


def _eval(expr, bits: int) -> bool:
    tag = expr[0]
    if tag == "const":
        return expr[1]
    if tag == "atom":
        return bool(bits >> expr[1] & 1)
    if tag == "not":
        return not _eval(expr[1], bits)
    # implication
    return (not _eval(expr[1], bits)) or _eval(expr[2], bits)


def is_tautology(f: Formula, atom_cap: int = 20) -> bool:
    """Truth-table validity of f's propositional skeleton.

    Raises :class:`AtomCapError` rather than approximating when the
    abstraction has more than ``atom_cap`` distinct atoms.
    """
    ab = _Abstraction()
    expr = ab.expr(f)
    n = len(ab.atoms)
    if n > atom_cap:
        raise AtomCapError(n, atom_cap)
    return all(_eval(expr, bits) for bits in range(1 << n))


def jointly_satisfiable(formulas: Iterable[Formula], atom_cap: int = 20) -> bool:
    """True when one assignment to the abstracted atoms makes every
    formula in the collection true."""
    ab = _Abstraction()
    exprs = [ab.expr(f) for f in formulas]
    n = len(ab.atoms)
    if n > atom_cap:
        raise AtomCapError(n, atom_cap)
    return any(
        all(_eval(e, bits) for e in exprs) for bits in range(1 << n)
    )
