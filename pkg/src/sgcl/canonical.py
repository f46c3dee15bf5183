"""Canonical game construction over a finite closure set.

Given a closure set of formulas, the states of the canonical game are
the maximal consistent subsets of that closure (consistency judged by a
pluggable oracle), plus one failure state.  Each agent's action is a
request: a pair of a formula from the closure (or the constant true
formula) and a rational value drawn from the closure's subscripts plus 0
and the sentinel -1, which belongs to no modality and so lets an agent
opt out of every request.

At a state s under a complete profile, the granted commitments are the
modalities in s whose coalition members all chose exactly the matching
(body, threshold) pair.  Their strongest threshold (0 when none match)
is shared uniformly among the target states, the maximal sets containing
every granted body; the rest of the mass goes to the failure state.  The
point of the construction is that membership and truth coincide, which
:func:`audit_truth_lemma` measures rather than assumes.

The correspondence is provable only for positive thresholds.  A profile
granting nothing yields rows that send all mass to the failure state, at
which point any zero-threshold modality holds vacuously, member or not,
and the audit will report exactly those disagreements when the closure
contains a formula [C]_0 x whose denial is satisfiable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from .formula import (
    TOP,
    AtomCapError,
    Bot,
    ClosureSet,
    Coal,
    Formula,
    Impl,
    Neg,
    Var,
    canonical_key,
    in_plus_language,
    jointly_satisfiable,
    render,
)
from .game import ActionProfile, Game, validate
from .modelcheck import CheckContext, holds
from .proof import SystemId

FAILURE_STATE = "f"


class CanonicalError(Exception):
    pass


class ClosureCapError(CanonicalError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"closure set has {size} formulas, cap is {cap}")
        self.size = size
        self.cap = cap


class Judgment(enum.Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    UNKNOWN = "unknown"


class ConsistencyOracle(Protocol):
    def judge(self, candidate: frozenset) -> Judgment: ...


@dataclass(frozen=True)
class HintikkaOracle:
    """Sound but incomplete consistency filter.

    Rejects a candidate set when its propositional skeleton is
    unsatisfiable, when it claims falsum achievable at positive
    threshold, or when it visibly contradicts one of the derivable
    closure principles (threshold weakening, coalition weakening,
    cooperation).  Every rejection is backed by a theorem, so rejected
    sets are genuinely inconsistent; accepted sets are only "not refuted
    here".  Returns UNKNOWN when the propositional check would exceed
    the atom cap.
    """

    system: SystemId = SystemId.L
    atom_cap: int = 20

    def judge(self, candidate: frozenset) -> Judgment:
        positives = [f for f in candidate if isinstance(f, Coal)]
        negatives = [
            f.body for f in candidate
            if isinstance(f, Neg) and isinstance(f.body, Coal)
        ]

        def denied(claim: Coal) -> bool:
            # anything the claim entails by weakening the threshold or
            # enlarging the coalition must not be negated alongside it
            return any(
                g.body == claim.body
                and g.coalition >= claim.coalition
                and g.p <= claim.p
                for g in negatives
            )

        for f in positives:
            if isinstance(f.body, Bot) and f.p > 0:
                return Judgment.INCONSISTENT
            if denied(f):
                return Judgment.INCONSISTENT
        for outer in positives:
            if not isinstance(outer.body, Impl):
                continue
            for inner in positives:
                if inner.body != outer.body.left:
                    continue
                if outer.coalition & inner.coalition:
                    continue
                combined = Coal(
                    outer.coalition | inner.coalition,
                    max(outer.p, inner.p),
                    outer.body.right,
                )
                if denied(combined):
                    return Judgment.INCONSISTENT
        try:
            if not jointly_satisfiable(candidate, self.atom_cap):
                return Judgment.INCONSISTENT
        except AtomCapError:
            return Judgment.UNKNOWN
        return Judgment.CONSISTENT


def default_oracle(system: SystemId = SystemId.L) -> HintikkaOracle:
    return HintikkaOracle(system)


@dataclass(frozen=True)
class MaximalSet:
    """A maximal consistent subset of a closure set.  ``flagged`` marks
    sets the oracle could not judge (UNKNOWN) that were kept anyway."""

    members: frozenset
    flagged: bool = False

    def key(self) -> tuple:
        return tuple(sorted((render(f) for f in self.members)))


def enumerate_maximal_sets(
    sigma: ClosureSet,
    oracle: Optional[ConsistencyOracle] = None,
    cap: int = 24,
) -> tuple:
    """All maximal subsets of the closure accepted by the oracle, found by
    backtracking over the sign of each non-negation formula.  Membership
    of negation formulas follows from the sign of what they negate, so a
    full assignment decides every member."""
    if len(sigma) > cap:
        raise ClosureCapError(len(sigma), cap)
    if oracle is None:
        oracle = default_oracle()
    decisions = [f for f in sigma.formulas if not isinstance(f, Neg)]
    members_all = tuple(sigma.formulas)
    out = []

    def resolved(signs) -> frozenset:
        chosen = set()
        for f in members_all:
            g, parity = f, True
            while isinstance(g, Neg):
                g = g.body
                parity = not parity
            decided = signs.get(g)
            if decided is None:
                continue
            if decided == parity:
                chosen.add(f)
        return frozenset(chosen)

    def descend(i: int, signs: dict) -> None:
        current = resolved(signs)
        judgment = oracle.judge(current)
        if judgment is Judgment.INCONSISTENT:
            return
        if i == len(decisions):
            out.append(MaximalSet(current, flagged=judgment is Judgment.UNKNOWN))
            return
        f = decisions[i]
        for sign in (True, False):
            signs[f] = sign
            descend(i + 1, signs)
        del signs[f]

    descend(0, {})
    return tuple(out)


# ---------------------------------------------------------------------------
# actions and transition data


@dataclass(frozen=True)
class CanonicalAction:
    """A request (formula, value); value -1 is the opt-out sentinel."""

    formula: Formula
    value: Fraction

    def __post_init__(self):
        v = self.value if isinstance(self.value, Fraction) else Fraction(self.value)
        object.__setattr__(self, "value", v)

    @property
    def action_id(self) -> str:
        return f"({render(self.formula)},{self.value})"


def action_domain(sigma: ClosureSet) -> tuple:
    """Every (formula, value) pair over the closure plus the constant true
    formula, with values from the closure's subscripts, 0, and -1."""
    pool = list(sigma.formulas)
    if TOP not in sigma:
        pool.append(TOP)
    pool.sort(key=canonical_key)
    values = sorted(sigma.subscripts() | {Fraction(0), Fraction(-1)})
    return tuple(
        CanonicalAction(f, v) for f in pool for v in values
    )


def _granted(s: MaximalSet, profile: Mapping[str, CanonicalAction]):
    for m in s.members:
        if isinstance(m, Coal) and all(
            profile[a] == CanonicalAction(m.body, m.p) for a in m.coalition
        ):
            yield m


def mu(s: MaximalSet, profile: Mapping[str, CanonicalAction]) -> Fraction:
    """Strongest granted threshold at s under the profile; 0 when no
    modality in s is granted.  A modality with an empty coalition is
    granted by every profile."""
    best = Fraction(0)
    for m in _granted(s, profile):
        if m.p > best:
            best = m.p
    if not 0 <= best <= 1:  # pragma: no cover - thresholds live in [0, 1]
        raise CanonicalError(f"granted threshold {best} outside [0, 1]")
    return best


def targets(
    s: MaximalSet,
    profile: Mapping[str, CanonicalAction],
    all_sets: Sequence[MaximalSet],
) -> tuple:
    """Maximal sets containing every granted body, in input order."""
    required = {m.body for m in _granted(s, profile)}
    return tuple(t for t in all_sets if required <= t.members)


def canonical_probability(
    source: Optional[MaximalSet],
    target: Optional[MaximalSet],
    mu_value: Fraction,
    target_sets: Sequence[MaximalSet],
) -> Fraction:
    """One transition entry; ``None`` stands for the failure state.

    When no maximal set contains all granted bodies yet the threshold is
    positive, the construction cannot honor the grant; all mass then
    routes to the failure state (callers should report such pairs)."""
    if source is None:
        return Fraction(1) if target is None else Fraction(0)
    if not target_sets and mu_value > 0:
        return Fraction(1) if target is None else Fraction(0)
    if target is None:
        return 1 - mu_value
    if target in target_sets:
        return mu_value / len(target_sets)
    return Fraction(0)


@dataclass
class CanonicalDiagnostics:
    state_members: dict = field(default_factory=dict)
    action_table: dict = field(default_factory=dict)
    guard_pairs: list = field(default_factory=list)
    flagged_states: list = field(default_factory=list)
    no_consistent_sets: bool = False
    state_count: int = 0
    action_count: int = 0
    profile_count: int = 0

    def to_dict(self) -> dict:
        return {
            "states": self.state_count,
            "actions": self.action_count,
            "profiles": self.profile_count,
            "state_members": self.state_members,
            "guard_pairs": [
                {"state": s, "profile": p} for s, p in self.guard_pairs
            ],
            "flagged_states": self.flagged_states,
            "no_consistent_sets": self.no_consistent_sets,
        }


def build_canonical_game(
    sigma: ClosureSet,
    system: SystemId = SystemId.L,
    oracle: Optional[ConsistencyOracle] = None,
    agents: Optional[Iterable[str]] = None,
    cap: int = 24,
) -> tuple:
    """Construct the canonical game for a closure set.

    Returns ``(game, diagnostics)``.  States are named s0, s1, ... in the
    order of their sorted member renderings, plus the failure state
    ``f``.  The game always validates; when the oracle rejects every
    candidate set the game has only the failure state and the
    diagnostics say so.
    """
    if system is SystemId.LPLUS:
        for f in sigma:
            if not in_plus_language(f):
                raise CanonicalError(
                    f"{render(f)} lies outside the restricted language"
                )
    if oracle is None:
        oracle = default_oracle(system)
    if agents is None:
        agent_tuple = tuple(sorted(sigma.agents()))
    else:
        agent_tuple = tuple(agents)
        if not sigma.agents() <= set(agent_tuple):
            raise CanonicalError("agent universe omits agents named in the closure")
    sets = sorted(
        enumerate_maximal_sets(sigma, oracle, cap), key=MaximalSet.key
    )
    actions = action_domain(sigma)
    diag = CanonicalDiagnostics()
    diag.state_count = len(sets)
    diag.action_count = len(actions)
    diag.action_table = {
        a.action_id: {"formula": render(a.formula), "value": str(a.value)}
        for a in actions
    }
    names = {s: f"s{i}" for i, s in enumerate(sets)}
    diag.state_members = {
        names[s]: [render(f) for f in sorted(s.members, key=canonical_key)]
        for s in sets
    }
    diag.flagged_states = [names[s] for s in sets if s.flagged]
    diag.no_consistent_sets = not sets
    transitions = {}
    id_of = {a: a.action_id for a in actions}
    for s in sets:
        for combo in product(actions, repeat=len(agent_tuple)):
            profile = dict(zip(agent_tuple, combo))
            game_profile = ActionProfile.of(
                {a: id_of[x] for a, x in profile.items()}
            )
            m_value = mu(s, profile)
            t_sets = targets(s, profile, sets)
            if not t_sets and m_value > 0:
                diag.guard_pairs.append((names[s], game_profile.as_dict()))
            row = {}
            for t in t_sets:
                p = canonical_probability(s, t, m_value, t_sets)
                if p > 0:
                    row[names[t]] = p
            fail_mass = canonical_probability(s, None, m_value, t_sets)
            if fail_mass > 0:
                row[FAILURE_STATE] = fail_mass
            transitions[(names[s], game_profile)] = row
            diag.profile_count += 1
    for combo in product(actions, repeat=len(agent_tuple)):
        game_profile = ActionProfile.of(
            {a: id_of[x] for a, x in zip(agent_tuple, combo)}
        )
        transitions[(FAILURE_STATE, game_profile)] = {FAILURE_STATE: Fraction(1)}
    state_names = tuple(names[s] for s in sets) + (FAILURE_STATE,)
    valuation = {
        v: frozenset(names[s] for s in sets if Var(v) in s.members)
        for v in sorted(sigma.variables())
    }
    game = Game(
        agents=agent_tuple,
        states=state_names,
        failures=(FAILURE_STATE,),
        actions=tuple(a.action_id for a in actions),
        transitions=transitions,
        valuation=valuation,
    )
    violations = validate(game)
    if violations:  # pragma: no cover - construction keeps rows exact
        raise CanonicalError("constructed game fails validation: " + violations[0])
    return game, diag


@dataclass
class TruthLemmaReport:
    checked: int = 0
    disagreements: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.disagreements


def audit_truth_lemma(
    game: Game, sigma: ClosureSet, sets: Sequence[MaximalSet]
) -> TruthLemmaReport:
    """Compare membership against model-checked truth for every formula of
    the closure at every non-failure state.  Disagreements localize a gap
    in the oracle (or a construction bug); a clean report is evidence the
    canonical game means what its states say."""
    ordered = sorted(sets, key=MaximalSet.key)
    report = TruthLemmaReport()
    ctx = CheckContext(game)
    for i, s in enumerate(ordered):
        name = f"s{i}"
        for f in sigma:
            member = f in s.members
            truth = holds(game, name, f, ctx)
            report.checked += 1
            if member != truth:
                report.disagreements.append(
                    {"state": name, "formula": render(f),
                     "member": member, "holds": truth}
                )
    return report
