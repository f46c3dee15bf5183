"""Validity classification and bounded countermodel search.

A formula is classified by negating it, closing the negation under
subformulas, and building the canonical game over that closure: if the
formula fails at a state whose member set contains the negation, that
game is a genuine finite countermodel and the verdict is unconditionally
sound.  If no such state refutes it, the verdict is "valid relative to
the oracle": a consistency oracle with gaps could have admitted too few
states to expose a countermodel.

The bounded search is the cross-check: it samples small games with exact
grid probabilities and looks for any non-failure state falsifying the
formula.  The two routes are independent, and each refutation either
route returns is re-verified before being reported.

One blind spot of the canonical route is worth knowing about: a
zero-threshold claim [C]_0 x is vacuously true at any state all of whose
outgoing mass can land on the failure state, and canonical rows put
exactly mu of their mass on non-failure states.  When mu is 0 the claim
therefore holds no matter what x says, so a countermodel that needs
[C]_0 x to be false is invisible to classify and only the bounded search
can find it.

The survival-threshold demonstration shows why no finite-instance rule
set can capture limit thresholds: a start state can satisfy every
approximation of certain survival while failing the certain-survival
claim itself.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from .canonical import (
    ClosureCapError,
    ConsistencyOracle,
    build_canonical_game,
)
from .formula import (
    TOP,
    Coal,
    Formula,
    Neg,
    agents_of,
    closure,
    render,
    variables_of,
)
from .game import ActionProfile, Game, game_to_dict, survival_ladder
from .modelcheck import CheckContext, holds
from .proof import SystemId


class DecideError(Exception):
    pass


QUARTER_GRID = (
    Fraction(0),
    Fraction(1, 4),
    Fraction(1, 2),
    Fraction(3, 4),
    Fraction(1),
)


@dataclass(frozen=True)
class SearchBounds:
    """Limits for the random game search."""

    max_states: int = 4
    max_actions: int = 3
    agents: tuple = ("a", "b")
    probability_grid: tuple = QUARTER_GRID
    budget: int = 2000

    def __post_init__(self):
        grid = tuple(sorted({Fraction(x) for x in self.probability_grid}))
        object.__setattr__(self, "probability_grid", grid)
        object.__setattr__(self, "agents", tuple(self.agents))
        if self.max_states < 1 or self.max_actions < 1:
            raise DecideError("need at least one state and one action")
        if not self.agents:
            raise DecideError("need at least one agent")
        if self.budget <= 0:
            raise DecideError("budget must be positive")
        if any(p < 0 or p > 1 for p in grid):
            raise DecideError("grid probabilities must lie in [0, 1]")
        if Fraction(0) not in grid or Fraction(1) not in grid:
            raise DecideError("probability grid must contain 0 and 1")


@dataclass(frozen=True)
class Refuted:
    """A genuine countermodel: the formula fails at this state."""

    game: Game
    state: str

    def to_dict(self) -> dict:
        return {
            "verdict": "refuted",
            "state": self.state,
            "game": game_to_dict(self.game),
        }


@dataclass(frozen=True)
class ValidRelativeToOracle:
    """No refuting state exists in the canonical game; trust in this
    verdict is bounded by the consistency oracle's completeness."""

    closure_size: int
    state_count: int

    def to_dict(self) -> dict:
        return {
            "verdict": "valid-relative-to-oracle",
            "closure_size": self.closure_size,
            "state_count": self.state_count,
        }


@dataclass(frozen=True)
class Exhausted:
    """The bounded search ran out of budget without a refutation."""

    attempts: int

    def to_dict(self) -> dict:
        return {"verdict": "exhausted", "attempts": self.attempts}


def classify(
    f: Formula,
    system: SystemId = SystemId.L,
    oracle: Optional[ConsistencyOracle] = None,
    cap: int = 24,
):
    """Canonical-game route: Refuted with a re-verified countermodel, or
    ValidRelativeToOracle.  Raises ClosureCapError when the negation's
    closure is too large for exhaustive enumeration."""
    negation = Neg(f)
    sigma = closure([negation])
    game, diag = build_canonical_game(sigma, system=system, oracle=oracle, cap=cap)
    wanted = render(negation)
    ctx = CheckContext(game)
    for state in game.states:
        if state in game.failures:
            continue
        if wanted not in diag.state_members[state]:
            continue
        if not holds(game, state, f, ctx):
            if holds(game, state, f):  # pragma: no cover - fresh re-check
                raise DecideError("countermodel failed independent re-verification")
            return Refuted(game, state)
    return ValidRelativeToOracle(len(sigma), diag.state_count)


def sample_game(
    rng: random.Random,
    bounds: SearchBounds,
    variables: Sequence[str] = ("u", "v"),
    require_agents: frozenset = frozenset(),
) -> Game:
    """One random game within bounds.  Rows are exact: all but one entry
    come from the grid and the remaining state absorbs the residual;
    draws pushing the partial sum past 1 are discarded and retried."""
    missing = set(require_agents) - set(bounds.agents)
    if missing:
        raise DecideError(f"bounds omit required agents {sorted(missing)}")
    required = tuple(sorted(require_agents))
    optional = [a for a in bounds.agents if a not in require_agents]
    extra = rng.randint(0 if required else 1, len(optional))
    agent_pool = sorted(required + tuple(optional[:extra]))
    n_states = rng.randint(1, bounds.max_states)
    states = tuple(f"q{i}" for i in range(n_states))
    n_fail = rng.randint(0, n_states - 1)
    failures = tuple(sorted(rng.sample(states, n_fail)))
    actions = tuple(f"m{i}" for i in range(rng.randint(1, bounds.max_actions)))
    transitions = {}
    grid = bounds.probability_grid
    for state in states:
        for combo in product(actions, repeat=len(agent_pool)):
            profile = ActionProfile(tuple(zip(agent_pool, combo)))
            row = None
            for _attempt in range(16):
                order = list(states)
                rng.shuffle(order)
                entries = {}
                total = Fraction(0)
                feasible = True
                for target in order[:-1]:
                    p = rng.choice(grid)
                    total += p
                    if total > 1:
                        feasible = False
                        break
                    entries[target] = p
                if feasible:
                    entries[order[-1]] = 1 - total
                    row = {t: p for t, p in entries.items() if p > 0}
                    break
            if row is None:
                row = {rng.choice(states): Fraction(1)}
            transitions[(state, profile)] = row
    valuation = {
        v: frozenset(s for s in states if rng.choice((True, False)))
        for v in variables
    }
    return Game(
        agents=tuple(agent_pool),
        states=states,
        failures=failures,
        actions=actions,
        transitions=transitions,
        valuation=valuation,
    )


def bounded_countermodel(
    f: Formula, bounds: Optional[SearchBounds] = None, seed: int = 0
) -> Optional[tuple]:
    """Search seeded random games for a non-failure state falsifying f.
    Returns (game, state) re-verified under the model checker, or None
    when the budget runs out."""
    if bounds is None:
        bounds = SearchBounds()
    needed = agents_of(f)
    rng = random.Random(seed)
    names = tuple(sorted(variables_of(f))) or ("v",)
    for _ in range(bounds.budget):
        game = sample_game(rng, bounds, variables=names, require_agents=needed)
        ctx = CheckContext(game)
        for state in game.states:
            if state in game.failures:
                continue
            if not holds(game, state, f, ctx):
                if holds(game, state, f):  # pragma: no cover - fresh re-check
                    raise DecideError(
                        "countermodel failed independent re-verification"
                    )
                return game, state
    return None


def decide_formula(
    f: Formula,
    system: SystemId = SystemId.L,
    oracle: Optional[ConsistencyOracle] = None,
    bounds: Optional[SearchBounds] = None,
    seed: int = 0,
    cap: int = 24,
):
    """Classify through the canonical game when the closure fits the cap,
    falling back to bounded random search otherwise."""
    try:
        return classify(f, system=system, oracle=oracle, cap=cap)
    except ClosureCapError:
        if bounds is None:
            bounds = SearchBounds(agents=tuple(sorted(agents_of(f))) or ("a",))
        hit = bounded_countermodel(f, bounds, seed=seed)
        if hit is not None:
            return Refuted(*hit)
        return Exhausted(bounds.budget)


# ---------------------------------------------------------------------------
# the survival-threshold gap


@dataclass
class IncompletenessReport:
    """Outcome of the finite-entailment gap demonstration.

    At the start state of the ladder game every threshold reachable with
    n <= depth is satisfied, yet certain survival is not, so the finite
    family of threshold claims does not semantically entail the limit
    claim."""

    depth: int
    survival: Fraction
    prefix: list
    limit_formula: str
    limit_at_start: bool
    limit_at_absorbing: bool
    game: Game

    @property
    def gap_demonstrated(self) -> bool:
        return (
            all(entry["holds"] for entry in self.prefix)
            and not self.limit_at_start
            and self.limit_at_absorbing
        )

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "survival": str(self.survival),
            "prefix": self.prefix,
            "limit": {
                "formula": self.limit_formula,
                "holds_at_start": self.limit_at_start,
                "holds_at_absorbing": self.limit_at_absorbing,
            },
            "gap_demonstrated": self.gap_demonstrated,
            "game": game_to_dict(self.game),
        }


def incompleteness_demo(n: int) -> IncompletenessReport:
    """Evaluate the threshold ladder claims on the three-state game whose
    start state survives one step with probability exactly 1 - 10**-n."""
    if not 0 <= n <= 12:
        raise ValueError("depth must be between 0 and 12")
    game = survival_ladder(n)
    ctx = CheckContext(game)
    prefix = []
    for k in range(n + 1):
        threshold = 1 - Fraction(1, 10**k)
        claim = Coal(frozenset(), threshold, TOP)
        prefix.append(
            {
                "n": k,
                "formula": render(claim),
                "threshold": str(threshold),
                "holds": holds(game, "s", claim, ctx),
            }
        )
    limit = Coal(frozenset(), Fraction(1), TOP)
    return IncompletenessReport(
        depth=n,
        survival=1 - Fraction(1, 10**n),
        prefix=prefix,
        limit_formula=render(limit),
        limit_at_start=holds(game, "s", limit, ctx),
        limit_at_absorbing=holds(game, "t", limit, ctx),
        game=game,
    )
