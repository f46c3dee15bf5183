"""Stochastic games with failure states.

A game couples a finite state space with a designated set of failure
states, one shared finite action domain, exact rational transition
probabilities indexed by complete action profiles, and a valuation of
propositional variables.  Every transition row must sum to exactly 1;
arithmetic is over ``fractions.Fraction`` throughout, so validation and
model checking are exact.

The JSON exchange format writes probabilities as strings ("9/10",
"0.25") or integers; binary floats are rejected on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Mapping, Optional

StateId = str
ActionId = str


class GameError(Exception):
    pass


class GameValidationError(GameError):
    def __init__(self, violations):
        super().__init__(
            "invalid game: " + "; ".join(violations[:5])
            + ("; ..." if len(violations) > 5 else "")
        )
        self.violations = list(violations)


class SchemaError(GameError):
    """Malformed game document; the message carries a JSON-pointer path."""


@dataclass(frozen=True)
class ActionProfile:
    """Partial assignment of actions to agents, stored as sorted pairs.

    A profile that is total on a game's agents serves as the complete
    profile indexing that game's transition rows.
    """

    assignment: tuple

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(sorted(self.assignment)))

    @classmethod
    def of(cls, mapping: Mapping[str, str]) -> "ActionProfile":
        return cls(tuple(mapping.items()))

    @property
    def domain(self) -> frozenset:
        return frozenset(a for a, _ in self.assignment)

    def get(self, agent: str) -> str:
        for a, x in self.assignment:
            if a == agent:
                return x
        raise KeyError(agent)

    def as_dict(self) -> dict:
        return dict(self.assignment)

    def extends(self, other: "ActionProfile") -> bool:
        return set(other.assignment) <= set(self.assignment)

    def is_total_for(self, agents: Iterable[str]) -> bool:
        return self.domain == frozenset(agents)


CompleteProfile = ActionProfile


class Game:
    """Immutable-by-convention container; use :func:`validate` to check
    well-formedness as data rather than at construction time."""

    def __init__(self, agents, states, failures, actions, transitions, valuation):
        self.agents = tuple(agents)
        self.states = tuple(states)
        self.failures = frozenset(failures)
        self.actions = tuple(actions)
        rows = {}
        items = transitions.items() if isinstance(transitions, Mapping) else transitions
        for (state, profile), row in items:
            if not isinstance(profile, ActionProfile):
                profile = ActionProfile.of(profile)
            rows[(state, profile)] = {t: Fraction(v) for t, v in row.items()}
        self.transitions = rows
        self.valuation = {v: frozenset(sts) for v, sts in valuation.items()}

    @property
    def nonfailure_states(self) -> tuple:
        return tuple(s for s in self.states if s not in self.failures)

    def row(self, state: StateId, profile: ActionProfile) -> Mapping:
        try:
            return self.transitions[(state, profile)]
        except KeyError:
            raise GameError(
                f"no transition row for state {state!r}, profile {profile.as_dict()!r}"
            ) from None

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return (
            self.agents == other.agents
            and self.states == other.states
            and self.failures == other.failures
            and self.actions == other.actions
            and self.transitions == other.transitions
            and self.valuation == other.valuation
        )

    def __repr__(self):
        return (
            f"Game(states={len(self.states)}, failures={len(self.failures)}, "
            f"agents={len(self.agents)}, actions={len(self.actions)})"
        )


def complete_profiles(game: Game) -> Iterator[ActionProfile]:
    """All complete profiles, in deterministic action-domain order."""
    for combo in product(game.actions, repeat=len(game.agents)):
        yield ActionProfile(tuple(zip(game.agents, combo)))


def validate(game: Game) -> list:
    """Well-formedness violations as human-readable strings; [] = valid."""
    out = []
    if not game.actions:
        out.append("action domain is empty")
    for name, seq in (("agents", game.agents), ("states", game.states),
                      ("actions", game.actions)):
        if len(set(seq)) != len(seq):
            out.append(f"duplicate entries in {name}")
    for s in sorted(game.failures):
        if s not in game.states:
            out.append(f"failure state {s!r} not among the states")
    for var, sts in sorted(game.valuation.items()):
        for s in sorted(sts):
            if s not in game.states:
                out.append(f"valuation of {var!r} names unknown state {s!r}")
    state_set = set(game.states)
    expected = set()
    if game.actions:
        for s in game.states:
            for profile in complete_profiles(game):
                expected.add((s, profile))
    seen = set()
    for (s, profile), row in game.transitions.items():
        seen.add((s, profile))
        where = f"({s!r}, {profile.as_dict()!r})"
        if (s, profile) not in expected:
            if s not in state_set:
                out.append(f"row {where}: unknown source state")
            else:
                out.append(f"row {where}: profile is not a complete profile")
            continue
        total = Fraction(0)
        for t, v in row.items():
            if t not in state_set:
                out.append(f"row {where}: unknown target state {t!r}")
            if not 0 <= v <= 1:
                out.append(f"row {where}: probability {v} outside [0, 1]")
            total += v
        if total != 1:
            out.append(f"row {where}: probabilities sum to {total}, expected 1")
    for (s, profile) in sorted(expected - seen,
                               key=lambda k: (k[0], k[1].assignment)):
        out.append(f"missing transition row for ({s!r}, {profile.as_dict()!r})")
    return out


def survival_probability(game: Game, state: StateId, profile: ActionProfile) -> Fraction:
    """Probability of landing outside the failure set in one step."""
    if state not in game.states:
        raise GameError(f"unknown state {state!r}")
    if not profile.is_total_for(game.agents):
        raise GameError(f"profile {profile.as_dict()!r} is not total over the agents")
    row = game.row(state, profile)
    return sum(
        (v for t, v in row.items() if t not in game.failures), Fraction(0)
    )


def positive_nonfailure_successors(
    game: Game, state: StateId, profile: ActionProfile
) -> frozenset:
    if state not in game.states:
        raise GameError(f"unknown state {state!r}")
    if not profile.is_total_for(game.agents):
        raise GameError(f"profile {profile.as_dict()!r} is not total over the agents")
    row = game.row(state, profile)
    return frozenset(
        t for t, v in row.items() if v > 0 and t not in game.failures
    )


def completions(game: Game, partial: ActionProfile) -> Iterator[ActionProfile]:
    """All complete profiles extending ``partial``, in deterministic order."""
    if not partial.domain <= set(game.agents):
        raise GameError(
            f"profile names agents outside the game: {sorted(partial.domain - set(game.agents))}"
        )
    free = tuple(a for a in game.agents if a not in partial.domain)
    fixed = partial.assignment
    for combo in product(game.actions, repeat=len(free)):
        yield ActionProfile(fixed + tuple(zip(free, combo)))


# ---------------------------------------------------------------------------
# JSON exchange


def _parse_probability(value, where: str) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise SchemaError(
            f"{where}: binary floating point is rejected; write the value as a string"
        )
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"{where}: not a rational literal: {value!r}") from exc
    raise SchemaError(f"{where}: expected a rational as string or integer")


def _expect_list_of_strings(doc, key):
    value = doc.get(key)
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise SchemaError(f"/{key}: expected a list of strings")
    return value


def game_to_dict(game: Game) -> dict:
    rows = []
    for (s, profile), row in sorted(
        game.transitions.items(), key=lambda kv: (kv[0][0], kv[0][1].assignment)
    ):
        rows.append(
            {
                "from": s,
                "profile": profile.as_dict(),
                "to": {t: str(v) for t, v in sorted(row.items()) if v != 0},
            }
        )
    return {
        "agents": list(game.agents),
        "states": list(game.states),
        "failures": sorted(game.failures),
        "actions": list(game.actions),
        "transitions": rows,
        "valuation": {v: sorted(sts) for v, sts in sorted(game.valuation.items())},
    }


def game_from_dict(doc: dict) -> Game:
    if not isinstance(doc, dict):
        raise SchemaError("/: expected an object")
    for key in ("agents", "states", "failures", "actions", "transitions", "valuation"):
        if key not in doc:
            raise SchemaError(f"/{key}: missing")
    agents = _expect_list_of_strings(doc, "agents")
    states = _expect_list_of_strings(doc, "states")
    failures = _expect_list_of_strings(doc, "failures")
    actions = _expect_list_of_strings(doc, "actions")
    raw_rows = doc.get("transitions")
    if not isinstance(raw_rows, list):
        raise SchemaError("/transitions: expected a list")
    transitions = {}
    for i, entry in enumerate(raw_rows):
        where = f"/transitions/{i}"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: expected an object")
        src = entry.get("from")
        if not isinstance(src, str):
            raise SchemaError(f"{where}/from: expected a state name")
        profile = entry.get("profile")
        if not isinstance(profile, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in profile.items()
        ):
            raise SchemaError(f"{where}/profile: expected an agent-to-action object")
        to = entry.get("to")
        if not isinstance(to, dict):
            raise SchemaError(f"{where}/to: expected a target-to-probability object")
        row = {
            t: _parse_probability(v, f"{where}/to/{t}") for t, v in to.items()
        }
        key = (src, ActionProfile.of(profile))
        if key in transitions:
            raise SchemaError(f"{where}: duplicate row for this state and profile")
        transitions[key] = row
    valuation = doc.get("valuation")
    if not isinstance(valuation, dict):
        raise SchemaError("/valuation: expected an object")
    for var, sts in valuation.items():
        if not isinstance(sts, list) or not all(isinstance(s, str) for s in sts):
            raise SchemaError(f"/valuation/{var}: expected a list of state names")
    return Game(agents, states, failures, actions, transitions, valuation)


def save(game: Game, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(game_to_dict(game), fh, indent=2)
        fh.write("\n")


def load(path, force: bool = False) -> Game:
    """Load and validate a game file.  ``force`` skips the validity gate
    (the schema is still enforced)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"/: not valid JSON: {exc}") from exc
    game = game_from_dict(doc)
    if not force:
        violations = validate(game)
        if violations:
            raise GameValidationError(violations)
    return game


# ---------------------------------------------------------------------------
# built-in example games


def survival_ladder(n: int) -> Game:
    """Three-state game whose start state survives one step with
    probability exactly 1 - 10**-n and then survives forever.

    The start state s satisfies the empty-coalition survival claim at
    every threshold 1 - 10**-k for k <= n but not at threshold 1, which
    makes the family a compact stress test for limit reasoning.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    loss = Fraction(1, 10**n)
    profile = ActionProfile.of({"a": "act"})
    start_row = {"f": loss} if loss == 1 else {"t": 1 - loss, "f": loss}
    transitions = {
        ("s", profile): start_row,
        ("t", profile): {"t": Fraction(1)},
        ("f", profile): {"f": Fraction(1)},
    }
    return Game(
        agents=("a",),
        states=("s", "t", "f"),
        failures=("f",),
        actions=("act",),
        transitions=transitions,
        valuation={},
    )


def overtake_game() -> Game:
    """Two-car overtaking scenario: car a is alongside car b on a road
    with oncoming traffic.  Both pick an acceleration (minus, zero,
    plus); a ends up behind (ab), ahead (ba), or in a collision with b
    (f_c) or with oncoming traffic (f_t).

    Fixed by the scenario: accelerating against b slowing/coasting/
    accelerating completes the pass with probability 9/10, 3/5, 0; the
    mutual-slowdown rows and the residual mass routing are modeling
    choices, not canonical.
    """
    F = Fraction
    rows_from_p = {
        ("minus", "minus"): {"ab": F(4, 5), "f_t": F(1, 5)},
        ("minus", "zero"): {"ab": F(9, 10), "f_c": F(1, 10)},
        ("minus", "plus"): {"ab": F(1)},
        ("zero", "minus"): {"ba": F(9, 10), "f_t": F(1, 10)},
        ("zero", "zero"): {"p": F(9, 10), "f_t": F(1, 10)},
        ("zero", "plus"): {"ab": F(9, 10), "f_c": F(1, 10)},
        ("plus", "minus"): {"ba": F(9, 10), "f_t": F(1, 10)},
        ("plus", "zero"): {"ba": F(3, 5), "f_c": F(2, 5)},
        ("plus", "plus"): {"f_t": F(1)},
    }
    transitions = {}
    actions = ("minus", "zero", "plus")
    for xa in actions:
        for xb in actions:
            profile = ActionProfile.of({"a": xa, "b": xb})
            transitions[("p", profile)] = rows_from_p[(xa, xb)]
            for absorbing in ("ab", "ba", "f_c", "f_t"):
                transitions[(absorbing, profile)] = {absorbing: F(1)}
    return Game(
        agents=("a", "b"),
        states=("p", "ab", "ba", "f_c", "f_t"),
        failures=("f_c", "f_t"),
        actions=actions,
        transitions=transitions,
        valuation={"passed": ("ba",), "behind": ("ab",)},
    )
