"""Countermodel search, validity classification, threshold-gap demo."""

import json
import random
from fractions import Fraction

import pytest

from sgcl.canonical import CanonicalError, ClosureCapError
from sgcl.decide import (
    DecideError,
    Exhausted,
    Refuted,
    SearchBounds,
    ValidRelativeToOracle,
    bounded_countermodel,
    classify,
    decide_formula,
    incompleteness_demo,
    sample_game,
)
from sgcl.formula import (
    Bot,
    Coal,
    Impl,
    Neg,
    Var,
    is_tautology,
    parse,
    subformulas,
)
from sgcl.game import game_to_dict, validate
from sgcl.modelcheck import holds
from sgcl.proof import SystemId

F = Fraction


def deep_modal(levels: int, core: str = "v") -> str:
    text = core
    for k in range(2, levels + 2):
        text = f"[a]_1/{k} {text}"
    return text


class TestClassify:
    def test_falsehood_denial_is_valid(self):
        verdict = classify(parse("~[a]_1/2 false"))
        assert isinstance(verdict, ValidRelativeToOracle)

    def test_tautology_is_valid(self):
        verdict = classify(parse("(v -> v)"))
        assert isinstance(verdict, ValidRelativeToOracle)

    def test_bare_modality_is_refuted(self):
        f = parse("[a]_1/2 v")
        verdict = classify(f)
        assert isinstance(verdict, Refuted)
        assert validate(verdict.game) == []
        assert verdict.state not in verdict.game.failures
        assert not holds(verdict.game, verdict.state, f)

    def test_threshold_weakening_is_valid(self):
        verdict = classify(parse("([a]_1/2 v -> [a]_1/4 v)"))
        assert isinstance(verdict, ValidRelativeToOracle)

    def test_cooperation_instance_is_valid(self):
        text = "([a]_1/2 (v -> u) -> ([b]_1/4 v -> [a,b]_1/2 u))"
        assert isinstance(classify(parse(text)), ValidRelativeToOracle)

    def test_zero_threshold_falsehood_claim_is_satisfiable(self):
        # dumping all mass on failures realizes the zero-threshold claim,
        # so its denial cannot be valid
        verdict = classify(parse("~[a]_0 false"))
        assert isinstance(verdict, Refuted)

    def test_modal_speaks_about_successors_not_here(self):
        verdict = classify(parse("([a]_0 v -> v)"))
        assert isinstance(verdict, Refuted)

    def test_closure_cap_propagates(self):
        with pytest.raises(ClosureCapError):
            classify(parse(deep_modal(14)))

    def test_plus_system_route(self):
        assert isinstance(
            classify(parse("([a]_1/2 v -> [a]_0 v)"), system=SystemId.LPLUS),
            ValidRelativeToOracle,
        )

    def test_plus_system_rejects_empty_coalition(self):
        with pytest.raises(CanonicalError):
            classify(parse("[]_1 true"), system=SystemId.LPLUS)

    def test_valid_verdict_reports_sizes(self):
        verdict = classify(parse("(v -> v)"))
        assert verdict.closure_size == 4
        assert verdict.state_count == 2
        blob = json.loads(json.dumps(verdict.to_dict()))
        assert blob["verdict"] == "valid-relative-to-oracle"

    def test_refuted_verdict_serializes_game(self):
        verdict = classify(parse("[a]_1/2 v"))
        blob = json.loads(json.dumps(verdict.to_dict()))
        assert blob["verdict"] == "refuted"
        assert blob["state"] == verdict.state
        assert blob["game"]["states"] == list(verdict.game.states)


class TestSearchBounds:
    def test_defaults_are_sane(self):
        b = SearchBounds()
        assert F(0) in b.probability_grid and F(1) in b.probability_grid

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"budget": 0},
            {"max_states": 0},
            {"agents": ()},
            {"probability_grid": (0, F(1, 2))},
            {"probability_grid": (F(1, 2), 1)},
            {"probability_grid": (0, 1, 2)},
        ],
    )
    def test_rejects_bad_limits(self, kwargs):
        with pytest.raises(DecideError):
            SearchBounds(**kwargs)


class TestSampleGame:
    def test_samples_are_valid_games(self):
        rng = random.Random(2024)
        bounds = SearchBounds()
        for _ in range(300):
            game = sample_game(rng, bounds)
            assert validate(game) == []
            assert len(game.states) <= bounds.max_states
            assert len(game.actions) <= bounds.max_actions
            assert set(game.agents) <= set(bounds.agents)
            assert len(game.nonfailure_states) >= 1

    def test_required_agents_always_present(self):
        rng = random.Random(5)
        for _ in range(50):
            game = sample_game(
                rng, SearchBounds(), require_agents=frozenset({"b"})
            )
            assert "b" in game.agents

    def test_missing_required_agent_rejected(self):
        with pytest.raises(DecideError):
            sample_game(
                random.Random(0),
                SearchBounds(agents=("a",)),
                require_agents=frozenset({"z"}),
            )

    def test_deterministic_under_seed(self):
        a = sample_game(random.Random(9), SearchBounds())
        b = sample_game(random.Random(9), SearchBounds())
        assert game_to_dict(a) == game_to_dict(b)


class TestBoundedCountermodel:
    def test_finds_lossy_game_for_certain_survival(self):
        f = parse("[]_1 true")
        hit = bounded_countermodel(f, SearchBounds(budget=500), seed=3)
        assert hit is not None
        game, state = hit
        assert validate(game) == []
        assert not holds(game, state, f)

    def test_tautology_never_refuted(self):
        assert bounded_countermodel(parse("(v -> v)"), SearchBounds(budget=80)) is None

    def test_modality_is_about_successors(self):
        hit = bounded_countermodel(
            parse("([a]_0 v -> v)"), SearchBounds(budget=500), seed=3
        )
        assert hit is not None
        game, state = hit
        assert not holds(game, state, parse("([a]_0 v -> v)"))

    def test_seed_determinism(self):
        f = parse("[]_1 true")
        first = bounded_countermodel(f, SearchBounds(budget=200), seed=12)
        second = bounded_countermodel(f, SearchBounds(budget=200), seed=12)
        assert first is not None and second is not None
        assert game_to_dict(first[0]) == game_to_dict(second[0])
        assert first[1] == second[1]

    def test_bounds_must_cover_formula_agents(self):
        with pytest.raises(DecideError):
            bounded_countermodel(parse("[c]_1 v"), SearchBounds(agents=("a",)))


def two_connective_corpus():
    subscripts = (F(0), F(1, 2), F(1))
    tiers = [[Var("v"), Bot()]]
    for size in (1, 2):
        tier = []
        for f in tiers[size - 1]:
            tier.append(Neg(f))
            for p in subscripts:
                tier.append(Coal(frozenset({"a"}), p, f))
        for i in range(size):
            for left in tiers[i]:
                for right in tiers[size - 1 - i]:
                    tier.append(Impl(left, right))
        tiers.append(tier)
    return [f for tier in tiers for f in tier]


def zero_subscript_free(f):
    return all(not (isinstance(g, Coal) and g.p == 0) for g in subformulas(f))


@pytest.fixture(scope="module")
def route_verdicts():
    bounds = SearchBounds(agents=("a",), budget=250)
    out = {}
    for f in two_connective_corpus():
        refuted_by_classify = isinstance(classify(f), Refuted)
        refuted_by_search = bounded_countermodel(f, bounds, seed=7) is not None
        out[f] = (refuted_by_classify, refuted_by_search)
    return out


class TestRouteAgreement:
    """classify and the bounded search must agree except where the
    canonical construction is known to be blind: a zero-threshold claim
    holds vacuously at any canonical state whose rows put all mass on
    the failure state, so countermodels that hinge on falsifying such a
    claim are only reachable through the random search."""

    def test_corpus_has_expected_size(self):
        assert len(two_connective_corpus()) == 110

    def test_classify_refutations_are_search_reachable(self, route_verdicts):
        for f, (by_classify, by_search) in route_verdicts.items():
            if by_classify:
                assert by_search, f"search missed countermodel for {f}"

    def test_full_agreement_away_from_zero_thresholds(self, route_verdicts):
        for f, (by_classify, by_search) in route_verdicts.items():
            if zero_subscript_free(f):
                assert by_classify == by_search, f"routes disagree on {f}"

    def test_disagreements_all_involve_zero_thresholds(self, route_verdicts):
        gaps = [
            f
            for f, (by_classify, by_search) in route_verdicts.items()
            if by_search and not by_classify
        ]
        assert gaps, "expected the zero-threshold blind spot to show up"
        assert all(not zero_subscript_free(f) for f in gaps)

    def test_tautologies_never_refuted(self, route_verdicts):
        for f, (by_classify, _) in route_verdicts.items():
            if is_tautology(f):
                assert not by_classify


class TestDecideFormula:
    def test_small_formula_uses_canonical_route(self):
        assert isinstance(decide_formula(parse("(v -> v)")), ValidRelativeToOracle)

    def test_oversized_refutable_falls_back_to_search(self):
        verdict = decide_formula(parse(deep_modal(14)), seed=5)
        assert isinstance(verdict, Refuted)
        assert not holds(verdict.game, verdict.state, parse(deep_modal(14)))

    def test_oversized_valid_formula_exhausts(self):
        inner = deep_modal(12)
        verdict = decide_formula(
            parse(f"({inner} -> {inner})"),
            bounds=SearchBounds(budget=40),
        )
        assert isinstance(verdict, Exhausted)
        assert verdict.attempts == 40
        assert json.loads(json.dumps(verdict.to_dict()))["verdict"] == "exhausted"


class TestIncompletenessDemo:
    @pytest.mark.parametrize("n", range(7))
    def test_gap_at_every_depth(self, n):
        report = incompleteness_demo(n)
        assert all(entry["holds"] for entry in report.prefix)
        assert len(report.prefix) == n + 1
        assert not report.limit_at_start
        assert report.limit_at_absorbing
        assert report.gap_demonstrated
        assert report.survival == 1 - F(1, 10**n)

    def test_degenerate_depth_loses_everything(self):
        report = incompleteness_demo(0)
        assert report.survival == 0
        assert report.prefix[0]["formula"] == "[]_0 true"

    def test_prefix_formulas_spelled_out(self):
        report = incompleteness_demo(3)
        texts = [entry["formula"] for entry in report.prefix]
        assert texts == [
            "[]_0 true",
            "[]_9/10 true",
            "[]_99/100 true",
            "[]_999/1000 true",
        ]
        assert report.limit_formula == "[]_1 true"

    def test_report_round_trips_to_json(self):
        blob = json.loads(json.dumps(incompleteness_demo(2).to_dict()))
        assert blob["gap_demonstrated"] is True
        assert blob["survival"] == "99/100"
        assert blob["game"]["failures"] == ["f"]

    @pytest.mark.parametrize("n", [-1, 13])
    def test_depth_out_of_range(self, n):
        with pytest.raises(ValueError):
            incompleteness_demo(n)
