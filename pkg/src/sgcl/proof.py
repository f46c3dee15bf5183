"""Hilbert-style proof checking for the coalition-survival logics.

Two systems share three axiom schemas over the modality ``[C]_p``:

* cooperation:    [C1]_p (x -> y) -> ([C2]_q x -> [C1|C2]_max(p,q) y)
                  provided C1 and C2 are disjoint;
* monotonicity:   [C]_p x -> [C]_q x  provided q <= p;
* falsehood:      ~[C]_p false       provided p > 0.

System ``L`` ranges over the full language and derives with modus ponens
and necessitation (from x infer [C]_0 x; a positive threshold here would
be unsound).  System ``L+`` is restricted to formulas whose coalitions
are all nonempty and adds the monotonicity rule (from x -> y infer
[C]_p x -> [C]_p y) as a primitive, since the detour through the empty
coalition is unavailable there.

A derivation is either theorem-mode (axioms plus the rules above) or
assumption-mode (assumption lines, imports of separately verified
theorem-mode derivations, and modus ponens only).  Keeping
assumption-mode this small is what makes the deduction transform below
purely mechanical.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .formula import (
    Bot,
    Coal,
    Formula,
    Impl,
    Neg,
    canonical_key,
    in_plus_language,
    is_tautology,
    parse,
    render,
)


class SystemId(enum.Enum):
    L = "L"
    LPLUS = "L+"


class ProofError(Exception):
    def __init__(self, line: Optional[int], reason: str):
        at = "derivation" if line is None else f"line {line}"
        super().__init__(f"{at}: {reason}")
        self.line = line
        self.reason = reason


# --- justifications --------------------------------------------------------


@dataclass(frozen=True)
class Tautology:
    pass


@dataclass(frozen=True)
class AxCooperation:
    pass


@dataclass(frozen=True)
class AxMonotonicity:
    pass


@dataclass(frozen=True)
class AxFalsehood:
    pass


@dataclass(frozen=True)
class Assumption:
    pass


@dataclass(frozen=True)
class TheoremImport:
    name: str


@dataclass(frozen=True)
class MP:
    antecedent: int
    implication: int


@dataclass(frozen=True)
class Necessitation:
    premise: int


@dataclass(frozen=True)
class RuleMonotonicity:
    premise: int


Justification = Union[
    Tautology,
    AxCooperation,
    AxMonotonicity,
    AxFalsehood,
    Assumption,
    TheoremImport,
    MP,
    Necessitation,
    RuleMonotonicity,
]


@dataclass(frozen=True)
class ProofLine:
    formula: Formula
    rule: Justification


@dataclass(frozen=True)
class Derivation:
    """``assumptions is None`` means theorem mode; otherwise the frozenset
    of admitted assumption formulas.  ``imports`` maps the names used by
    :class:`TheoremImport` lines to theorem-mode derivations."""

    system: SystemId
    lines: tuple
    assumptions: Optional[frozenset] = None
    imports: Mapping[str, "Derivation"] = field(default_factory=dict)

    @property
    def theorem_mode(self) -> bool:
        return self.assumptions is None

    @property
    def conclusion(self) -> Formula:
        if not self.lines:
            raise ValueError("empty derivation has no conclusion")
        return self.lines[-1].formula


# --- axiom schema matching -------------------------------------------------


def match_cooperation(f: Formula) -> Optional[dict]:
    if not (isinstance(f, Impl) and isinstance(f.left, Coal)):
        return None
    outer, rest = f.left, f.right
    if not (isinstance(outer.body, Impl) and isinstance(rest, Impl)):
        return None
    if not (isinstance(rest.left, Coal) and isinstance(rest.right, Coal)):
        return None
    inner, conclusion = rest.left, rest.right
    if outer.coalition & inner.coalition:
        return None
    if conclusion.coalition != outer.coalition | inner.coalition:
        return None
    if conclusion.p != max(outer.p, inner.p):
        return None
    if inner.body != outer.body.left or conclusion.body != outer.body.right:
        return None
    return {
        "c1": outer.coalition,
        "c2": inner.coalition,
        "p": outer.p,
        "q": inner.p,
        "antecedent": outer.body.left,
        "consequent": outer.body.right,
    }


def match_monotonicity(f: Formula) -> Optional[dict]:
    if not (
        isinstance(f, Impl)
        and isinstance(f.left, Coal)
        and isinstance(f.right, Coal)
    ):
        return None
    strong, weak = f.left, f.right
    if strong.coalition != weak.coalition or strong.body != weak.body:
        return None
    if weak.p > strong.p:
        return None
    return {"c": strong.coalition, "p": strong.p, "q": weak.p, "body": strong.body}


def match_falsehood(f: Formula) -> Optional[dict]:
    if not (isinstance(f, Neg) and isinstance(f.body, Coal)):
        return None
    inner = f.body
    if not isinstance(inner.body, Bot) or inner.p <= 0:
        return None
    return {"c": inner.coalition, "p": inner.p}


@dataclass(frozen=True)
class AxiomMatch:
    name: str
    bindings: dict


def match_axiom(f: Formula, system: SystemId = SystemId.L) -> Optional[AxiomMatch]:
    """First matching schema in a fixed order, with the tautology check as
    the final fallback."""
    if system is SystemId.LPLUS and not in_plus_language(f):
        raise ValueError("formula lies outside the restricted language")
    for name, matcher in (
        ("cooperation", match_cooperation),
        ("monotonicity", match_monotonicity),
        ("falsehood", match_falsehood),
    ):
        bindings = matcher(f)
        if bindings is not None:
            return AxiomMatch(name, bindings)
    if is_tautology(f):
        return AxiomMatch("tautology", {})
    return None


# --- verification ----------------------------------------------------------

_THEOREM_RULES = (
    Tautology,
    AxCooperation,
    AxMonotonicity,
    AxFalsehood,
    MP,
    Necessitation,
    RuleMonotonicity,
)
_ASSUMPTION_RULES = (Assumption, TheoremImport, MP)


def _check_reference(k: int, i: int) -> None:
    if not 0 <= i < k:
        raise ProofError(k, f"reference to line {i} does not precede this line")


def verify(d: Derivation) -> None:
    """Raise :class:`ProofError` at the first bad line; return silently
    when every line is justified."""
    plus = d.system is SystemId.LPLUS
    if plus and d.assumptions:
        for a in sorted(d.assumptions, key=canonical_key):
            if not in_plus_language(a):
                raise ProofError(
                    None, f"assumption {render(a)} lies outside the restricted language"
                )
    verified_imports: set = set()
    for k, line in enumerate(d.lines):
        f, rule = line.formula, line.rule
        if plus and not in_plus_language(f):
            raise ProofError(k, "formula lies outside the restricted language")
        allowed = _THEOREM_RULES if d.theorem_mode else _ASSUMPTION_RULES
        if not isinstance(rule, allowed):
            mode = "theorem" if d.theorem_mode else "assumption"
            raise ProofError(
                k, f"rule {type(rule).__name__} is not admitted in {mode} mode"
            )
        if isinstance(rule, Tautology):
            if not is_tautology(f):
                raise ProofError(k, "not a propositional tautology")
        elif isinstance(rule, AxCooperation):
            if match_cooperation(f) is None:
                raise ProofError(k, "not a cooperation axiom instance")
        elif isinstance(rule, AxMonotonicity):
            if match_monotonicity(f) is None:
                raise ProofError(k, "not a monotonicity axiom instance")
        elif isinstance(rule, AxFalsehood):
            if match_falsehood(f) is None:
                raise ProofError(k, "not a falsehood axiom instance")
        elif isinstance(rule, Assumption):
            if f not in (d.assumptions or frozenset()):
                raise ProofError(k, f"{render(f)} is not among the assumptions")
        elif isinstance(rule, TheoremImport):
            imported = d.imports.get(rule.name)
            if imported is None:
                raise ProofError(k, f"unknown import {rule.name!r}")
            if not imported.theorem_mode:
                raise ProofError(
                    k, f"import {rule.name!r} is not a theorem-mode derivation"
                )
            if imported.system is not d.system:
                raise ProofError(k, f"import {rule.name!r} proves in a different system")
            if rule.name not in verified_imports:
                try:
                    verify(imported)
                except ProofError as exc:
                    raise ProofError(
                        k, f"import {rule.name!r} does not verify: {exc}"
                    ) from exc
                verified_imports.add(rule.name)
            if imported.conclusion != f:
                raise ProofError(
                    k, f"import {rule.name!r} concludes {render(imported.conclusion)},"
                    f" not {render(f)}"
                )
        elif isinstance(rule, MP):
            _check_reference(k, rule.antecedent)
            _check_reference(k, rule.implication)
            expected = Impl(d.lines[rule.antecedent].formula, f)
            if d.lines[rule.implication].formula != expected:
                raise ProofError(
                    k,
                    f"line {rule.implication} is not line {rule.antecedent}"
                    " -> this line",
                )
        elif isinstance(rule, Necessitation):
            _check_reference(k, rule.premise)
            if not isinstance(f, Coal):
                raise ProofError(k, "necessitation must conclude a modality")
            if f.p != 0:
                raise ProofError(
                    k, "necessitation is sound only at threshold 0"
                )
            if f.body != d.lines[rule.premise].formula:
                raise ProofError(k, f"body differs from line {rule.premise}")
        elif isinstance(rule, RuleMonotonicity):
            if not plus:
                raise ProofError(
                    k, "the monotonicity rule is primitive only in system L+"
                )
            _check_reference(k, rule.premise)
            premise = d.lines[rule.premise].formula
            shape = (
                isinstance(premise, Impl)
                and isinstance(f, Impl)
                and isinstance(f.left, Coal)
                and isinstance(f.right, Coal)
                and f.left.coalition == f.right.coalition
                and f.left.p == f.right.p
                and f.left.body == premise.left
                and f.right.body == premise.right
            )
            if not shape:
                raise ProofError(
                    k, f"conclusion does not lift line {rule.premise} under"
                    " one modality"
                )
        else:  # pragma: no cover
            raise ProofError(k, f"unknown rule {rule!r}")


# --- deduction transform ----------------------------------------------------


def deduction_transform(d: Derivation, phi: Formula) -> Derivation:
    """Eliminate the designated assumption: from a derivation of psi under
    X and phi, produce one of phi -> psi under X alone.

    Every original line is replaced by at most three lines, so the output
    stays within 3x the input length plus the imported one-line
    tautologies.
    """
    verify(d)
    if d.theorem_mode:
        raise ValueError("deduction transform needs an assumption-mode derivation")
    if phi not in d.assumptions:
        raise ValueError(f"{render(phi)} is not among the assumptions")
    if not d.lines:
        raise ValueError("empty derivation")

    imports = dict(d.imports)
    taut_names: dict = {}
    counter = 0

    def import_tautology(f: Formula) -> str:
        nonlocal counter
        name = taut_names.get(f)
        if name is None:
            while True:
                name = f"taut{counter}"
                counter += 1
                if name not in imports:
                    break
            imports[name] = Derivation(
                d.system, (ProofLine(f, Tautology()),), None
            )
            taut_names[f] = name
        return name

    out: list = []
    new_index: dict = {}

    def emit(f: Formula, rule: Justification) -> int:
        out.append(ProofLine(f, rule))
        return len(out) - 1

    for k, line in enumerate(d.lines):
        psi, rule = line.formula, line.rule
        goal = Impl(phi, psi)
        if psi == phi:
            name = import_tautology(Impl(phi, phi))
            new_index[k] = emit(goal, TheoremImport(name))
            continue
        if isinstance(rule, (Assumption, TheoremImport)):
            base = emit(psi, rule)
            name = import_tautology(Impl(psi, goal))
            bridge = emit(Impl(psi, goal), TheoremImport(name))
            new_index[k] = emit(goal, MP(base, bridge))
        elif isinstance(rule, MP):
            psi_i = d.lines[rule.antecedent].formula
            lifted_i = Impl(phi, psi_i)
            lifted_ij = Impl(phi, Impl(psi_i, psi))
            chain = Impl(lifted_i, Impl(lifted_ij, goal))
            name = import_tautology(chain)
            first = emit(chain, TheoremImport(name))
            mid = emit(Impl(lifted_ij, goal), MP(new_index[rule.antecedent], first))
            new_index[k] = emit(goal, MP(new_index[rule.implication], mid))
        else:  # pragma: no cover - verify() already excluded other rules
            raise ProofError(k, f"rule {type(rule).__name__} in assumption mode")

    result = Derivation(
        d.system, tuple(out), frozenset(d.assumptions) - {phi}, imports
    )
    verify(result)
    return result


# --- derived-rule constructions ---------------------------------------------


def build_lifted_implication(
    coalition: Iterable[str],
    p,
    antecedent: Formula,
    consequent: Formula,
    implication_proof: Derivation,
) -> Derivation:
    """From a theorem-mode proof of ``antecedent -> consequent``, derive
    ``[C]_p antecedent -> [C]_p consequent`` in system L by detouring
    through the empty-coalition modality.

    Refused for system L+, whose language cannot express the detour; use
    its primitive monotonicity rule there instead.
    """
    if implication_proof.system is not SystemId.L:
        raise ValueError(
            "the empty-coalition detour only exists in system L;"
            " in L+ use the primitive monotonicity rule"
        )
    verify(implication_proof)
    if not implication_proof.theorem_mode:
        raise ValueError("the implication proof must be theorem-mode")
    expected = Impl(antecedent, consequent)
    if implication_proof.conclusion != expected:
        raise ValueError(
            f"implication proof concludes {render(implication_proof.conclusion)},"
            f" expected {render(expected)}"
        )
    c = frozenset(coalition)
    p = Fraction(p)
    lines = list(implication_proof.lines)
    n = len(lines)
    boxed = Coal(frozenset(), Fraction(0), expected)
    lines.append(ProofLine(boxed, Necessitation(n - 1)))
    cooperation = Impl(
        boxed, Impl(Coal(c, p, antecedent), Coal(c, p, consequent))
    )
    lines.append(ProofLine(cooperation, AxCooperation()))
    lines.append(
        ProofLine(Impl(Coal(c, p, antecedent), Coal(c, p, consequent)), MP(n, n + 1))
    )
    result = Derivation(SystemId.L, tuple(lines), None)
    verify(result)
    return result


def build_coalition_weakening(
    smaller: Iterable[str],
    larger: Iterable[str],
    p,
    body: Formula,
    system: SystemId = SystemId.L,
) -> Derivation:
    """Theorem-mode proof of ``[C]_p body -> [D]_p body`` for C a subset
    of D: what a small coalition can force, a larger one can force too.
    When C equals D the implication is a tautology; otherwise the extra
    members commit at threshold 0 and cooperation combines the parts."""
    c, dd = frozenset(smaller), frozenset(larger)
    p = Fraction(p)
    if not c <= dd:
        raise ValueError("first coalition must be a subset of the second")
    if system is SystemId.LPLUS:
        if not c:
            raise ValueError(
                "the restricted language cannot name the empty coalition"
            )
        if not in_plus_language(body):
            raise ValueError("body lies outside the restricted language")
    goal = Impl(Coal(c, p, body), Coal(dd, p, body))
    if c == dd:
        lines = (ProofLine(goal, Tautology()),)
        result = Derivation(system, lines, None)
        verify(result)
        return result
    rest = dd - c
    reflexive = Impl(body, body)
    lines = (
        ProofLine(reflexive, Tautology()),
        ProofLine(Coal(rest, Fraction(0), reflexive), Necessitation(0)),
        ProofLine(Impl(Coal(rest, Fraction(0), reflexive), goal), AxCooperation()),
        ProofLine(goal, MP(1, 2)),
    )
    result = Derivation(system, lines, None)
    verify(result)
    return result


# --- serialization -----------------------------------------------------------


class ProofFormatError(ValueError):
    pass


def _rule_to_str(rule: Justification) -> str:
    if isinstance(rule, Tautology):
        return "taut"
    if isinstance(rule, AxCooperation):
        return "coop"
    if isinstance(rule, AxMonotonicity):
        return "mono-ax"
    if isinstance(rule, AxFalsehood):
        return "false-ax"
    if isinstance(rule, Assumption):
        return "assume"
    if isinstance(rule, TheoremImport):
        return f"import:{rule.name}"
    if isinstance(rule, MP):
        return f"mp:{rule.antecedent},{rule.implication}"
    if isinstance(rule, Necessitation):
        return f"nec:{rule.premise}"
    if isinstance(rule, RuleMonotonicity):
        return f"mono-rule:{rule.premise}"
    raise TypeError(f"unknown rule {rule!r}")


def _rule_from_str(text: str) -> Justification:
    if text == "taut":
        return Tautology()
    if text == "coop":
        return AxCooperation()
    if text == "mono-ax":
        return AxMonotonicity()
    if text == "false-ax":
        return AxFalsehood()
    if text == "assume":
        return Assumption()
    if text.startswith("import:"):
        return TheoremImport(text[len("import:"):])
    try:
        if text.startswith("mp:"):
            i, j = text[3:].split(",")
            return MP(int(i), int(j))
        if text.startswith("nec:"):
            return Necessitation(int(text[4:]))
        if text.startswith("mono-rule:"):
            return RuleMonotonicity(int(text[len("mono-rule:"):]))
    except ValueError as exc:
        raise ProofFormatError(f"malformed rule {text!r}") from exc
    raise ProofFormatError(f"unknown rule {text!r}")


def derivation_to_dict(d: Derivation) -> dict:
    doc: dict = {
        "system": d.system.value,
        "mode": "theorem"
        if d.theorem_mode
        else {"assumptions": sorted(render(a) for a in d.assumptions)},
        "lines": [
            {"formula": render(line.formula), "rule": _rule_to_str(line.rule)}
            for line in d.lines
        ],
    }
    if d.imports:
        doc["imports"] = {
            name: derivation_to_dict(sub) for name, sub in sorted(d.imports.items())
        }
    return doc


def derivation_from_dict(doc: dict, universe=None) -> Derivation:
    if not isinstance(doc, dict):
        raise ProofFormatError("proof document must be an object")
    system_text = doc.get("system")
    try:
        system = SystemId(system_text)
    except ValueError:
        raise ProofFormatError(f"unknown system {system_text!r}") from None
    mode = doc.get("mode")
    if mode == "theorem":
        assumptions = None
    elif isinstance(mode, dict) and isinstance(mode.get("assumptions"), list):
        assumptions = frozenset(
            parse(text, universe) for text in mode["assumptions"]
        )
    else:
        raise ProofFormatError(
            "mode must be \"theorem\" or {\"assumptions\": [...]}"
        )
    raw_lines = doc.get("lines")
    if not isinstance(raw_lines, list):
        raise ProofFormatError("lines must be a list")
    lines = []
    for i, entry in enumerate(raw_lines):
        if not isinstance(entry, dict) or not isinstance(entry.get("formula"), str) \
                or not isinstance(entry.get("rule"), str):
            raise ProofFormatError(f"line {i}: expected formula and rule strings")
        lines.append(
            ProofLine(parse(entry["formula"], universe), _rule_from_str(entry["rule"]))
        )
    imports = {}
    raw_imports = doc.get("imports", {})
    if not isinstance(raw_imports, dict):
        raise ProofFormatError("imports must be an object")
    for name, sub in raw_imports.items():
        imports[name] = derivation_from_dict(sub, universe)
    return Derivation(system, tuple(lines), assumptions, imports)


def save_proof(d: Derivation, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(derivation_to_dict(d), fh, indent=2)
        fh.write("\n")


def load_proof(path, universe=None) -> Derivation:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProofFormatError(f"not valid JSON: {exc}") from exc
    return derivation_from_dict(doc, universe)
