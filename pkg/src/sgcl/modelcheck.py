"""Exact model checking of the coalition-survival modality.

A coalition claim ``[C]_p body`` holds at a non-failure state s when the
coalition can fix its actions so that, for every completion by the
remaining agents, (a) the one-step probability of staying outside the
failure set is at least p, and (b) every non-failure state reachable
with positive probability satisfies the body.  Condition (b) applies
even at threshold p = 0.

Truth is defined at non-failure states only; querying a failure state is
an error.  Variables missing from the valuation are false everywhere.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional

from .formula import (
    TOP,
    Bot,
    Coal,
    Formula,
    Impl,
    Neg,
    Var,
    agents_of,
    canonical_key,
    render,
)
from .game import (
    ActionProfile,
    Game,
    completions,
    survival_probability,
)


class CheckError(Exception):
    pass


@dataclass
class CheckContext:
    """Memo tables shared across queries against one game."""

    game: Game
    memo: dict = field(default_factory=dict)
    survival: dict = field(default_factory=dict)
    profile_evals: int = 0

    def survival_at(self, state, profile) -> Fraction:
        key = (state, profile)
        value = self.survival.get(key)
        if value is None:
            value = survival_probability(self.game, state, profile)
            self.survival[key] = value
        return value


def _coalition_profiles(game: Game, coalition):
    members = tuple(a for a in game.agents if a in coalition)
    for combo in product(game.actions, repeat=len(members)):
        yield ActionProfile(tuple(zip(members, combo)))


def _profile_complies(ctx: CheckContext, state, complete, p, body) -> bool:
    ctx.profile_evals += 1
    if ctx.survival_at(state, complete) < p:
        return False
    row = ctx.game.row(state, complete)
    for t, v in row.items():
        if v > 0 and t not in ctx.game.failures:
            if not _eval(ctx, t, body):
                return False
    return True


def _eval(ctx: CheckContext, state, f: Formula) -> bool:
    key = (state, f)
    cached = ctx.memo.get(key)
    if cached is not None:
        return cached
    if isinstance(f, Var):
        value = state in ctx.game.valuation.get(f.name, frozenset())
    elif isinstance(f, Bot):
        value = False
    elif isinstance(f, Neg):
        value = not _eval(ctx, state, f.body)
    elif isinstance(f, Impl):
        value = (not _eval(ctx, state, f.left)) or _eval(ctx, state, f.right)
    elif isinstance(f, Coal):
        if not f.coalition <= set(ctx.game.agents):
            raise CheckError(
                f"coalition {sorted(f.coalition)} names agents outside the game"
            )
        value = False
        for partial in _coalition_profiles(ctx.game, f.coalition):
            if all(
                _profile_complies(ctx, state, complete, f.p, f.body)
                for complete in completions(ctx.game, partial)
            ):
                value = True
                break
    else:
        raise CheckError(f"not a formula: {f!r}")
    ctx.memo[key] = value
    return value


def _require_checkable(game: Game, state, f: Formula) -> None:
    if state not in game.states:
        raise CheckError(f"unknown state {state!r}")
    if state in game.failures:
        raise CheckError(f"truth is undefined at failure state {state!r}")
    foreign = agents_of(f) - set(game.agents)
    if foreign:
        raise CheckError(f"formula names agents outside the game: {sorted(foreign)}")


def holds(game: Game, state, f: Formula, ctx: Optional[CheckContext] = None) -> bool:
    """Exact truth of f at a non-failure state."""
    _require_checkable(game, state, f)
    if ctx is None:
        ctx = CheckContext(game)
    return _eval(ctx, state, f)


def extent(game: Game, f: Formula, ctx: Optional[CheckContext] = None) -> frozenset:
    """The set of non-failure states satisfying f."""
    if ctx is None:
        ctx = CheckContext(game)
    return frozenset(
        s for s in game.nonfailure_states if holds(game, s, f, ctx)
    )


@dataclass(frozen=True)
class Witness:
    """A coalition commitment backing a true modality, with the worst-case
    survival probability over all completions."""

    profile: ActionProfile
    guaranteed_survival: Fraction


def witness(
    game: Game, state, modality: Formula, ctx: Optional[CheckContext] = None
) -> Optional[Witness]:
    """First committing profile (in enumeration order) for a modality, or
    None when the modality fails at the state."""
    if not isinstance(modality, Coal):
        raise CheckError("witness requires a formula whose top node is a modality")
    _require_checkable(game, state, modality)
    if ctx is None:
        ctx = CheckContext(game)
    for partial in _coalition_profiles(game, modality.coalition):
        all_profiles = list(completions(game, partial))
        if all(
            _profile_complies(ctx, state, complete, modality.p, modality.body)
            for complete in all_profiles
        ):
            guaranteed = min(ctx.survival_at(state, c) for c in all_profiles)
            return Witness(partial, guaranteed)
    return None


# ---------------------------------------------------------------------------
# randomized schema audits

_GRID = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))


@dataclass
class SoundnessReport:
    instances: int = 0
    violations: list = field(default_factory=list)
    necessitation_cases: int = 0
    necessitation_violations: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations and not self.necessitation_violations


def _random_coalition(rng, agents) -> frozenset:
    return frozenset(a for a in agents if rng.random() < 0.5)


def _cooperation_instance(rng, agents, pool):
    side = {a: rng.randrange(3) for a in agents}
    c1 = frozenset(a for a in agents if side[a] == 0)
    c2 = frozenset(a for a in agents if side[a] == 1)
    p, q = rng.choice(_GRID), rng.choice(_GRID)
    left, right = rng.choice(pool), rng.choice(pool)
    return Impl(
        Coal(c1, p, Impl(left, right)),
        Impl(Coal(c2, q, left), Coal(c1 | c2, max(p, q), right)),
    )


def _monotonicity_instance(rng, agents, pool):
    c = _random_coalition(rng, agents)
    p, q = rng.choice(_GRID), rng.choice(_GRID)
    if q > p:
        p, q = q, p
    body = rng.choice(pool)
    return Impl(Coal(c, p, body), Coal(c, q, body))


def _falsehood_instance(rng, agents, pool):
    c = _random_coalition(rng, agents)
    p = rng.choice([g for g in _GRID if g > 0])
    return Neg(Coal(c, p, Bot()))


_SCHEMAS = (
    ("cooperation", _cooperation_instance),
    ("monotonicity", _monotonicity_instance),
    ("falsehood", _falsehood_instance),
)


def audit_axiom_soundness(
    game: Game,
    pool: Iterable[Formula],
    sample_budget: int = 1000,
    seed: int = 0,
) -> SoundnessReport:
    """Sample axiom instances over the pool and evaluate each one at every
    non-failure state; also check that universally true bodies stay
    universally true under the threshold-zero modality."""
    pool = tuple(sorted(set(pool), key=canonical_key)) or (TOP,)
    rng = random.Random(seed)
    ctx = CheckContext(game)
    report = SoundnessReport()
    checkable = game.nonfailure_states
    everywhere = frozenset(checkable)
    for _ in range(sample_budget):
        name, make = _SCHEMAS[rng.randrange(len(_SCHEMAS))]
        instance = make(rng, game.agents, pool)
        report.instances += 1
        for s in checkable:
            if not holds(game, s, instance, ctx):
                report.violations.append((name, render(instance), s))
    for body in pool:
        coalition = _random_coalition(rng, game.agents)
        if extent(game, body, ctx) == everywhere:
            report.necessitation_cases += 1
            lifted = Coal(coalition, Fraction(0), body)
            if extent(game, lifted, ctx) != everywhere:
                report.necessitation_violations.append((render(lifted),))
    return report
