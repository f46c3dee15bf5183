"""Command-line interface: exit codes, JSON payloads, input faults."""

import json
from fractions import Fraction
from pathlib import Path

import pytest

from sgcl.cli import run
from sgcl.formula import parse
from sgcl.proof import (
    SystemId,
    build_coalition_weakening,
    build_lifted_implication,
    derivation_to_dict,
    Derivation,
    ProofLine,
    Tautology,
    save_proof,
)

GAMES = Path(__file__).resolve().parents[1] / "games"
LADDER = str(GAMES / "ladder1.json")
OVERTAKE = str(GAMES / "overtake.json")


def run_json(capsys, argv):
    """Run the CLI with --format json and return (exit code, payload)."""
    code = run(list(argv) + ["--format", "json"])
    out = capsys.readouterr().out.strip()
    return code, json.loads(out)


@pytest.fixture(scope="module")
def proof_files(tmp_path_factory):
    """A verifying proof, a sabotaged copy, and an L+ proof on disk."""
    root = tmp_path_factory.mktemp("proofs")
    imp = Derivation(
        SystemId.L, (ProofLine(parse("(v -> v)"), Tautology()),), None
    )
    lifted = build_lifted_implication(["a"], Fraction(1, 2), parse("v"), parse("v"), imp)
    good = root / "lifted.json"
    save_proof(lifted, good)

    doc = derivation_to_dict(lifted)
    doc["lines"][-1]["formula"] = "([a]_1/2 v -> [a]_1 v)"
    bad = root / "sabotaged.json"
    bad.write_text(json.dumps(doc))

    weak = build_coalition_weakening(
        ["a"], ["a", "b"], Fraction(1, 4), parse("v"), SystemId.LPLUS
    )
    plus = root / "weakening_plus.json"
    save_proof(weak, plus)
    return {"good": str(good), "bad": str(bad), "plus": str(plus)}


class TestCheck:
    def test_true_formula_exits_zero(self, capsys):
        code, doc = run_json(
            capsys, ["check", "--game", LADDER, "--state", "s",
                     "--formula", "[]_9/10 true"]
        )
        assert code == 0
        assert doc == {
            "command": "check",
            "state": "s",
            "formula": "[]_9/10 true",
            "holds": True,
        }

    def test_false_formula_exits_one(self, capsys):
        code, doc = run_json(
            capsys, ["check", "--game", LADDER, "--state", "s",
                     "--formula", "[]_1 true"]
        )
        assert code == 1
        assert doc["holds"] is False

    def test_text_format_is_human_line(self, capsys):
        code = run(["check", "--game", LADDER, "--state", "s",
                    "--formula", "[]_1 true"])
        assert code == 1
        assert capsys.readouterr().out.strip() == "[]_1 true at s: false"

    def test_failure_state_is_input_error(self, capsys):
        code = run(["check", "--game", LADDER, "--state", "f", "--formula", "v"])
        assert code == 2
        assert "failure" in capsys.readouterr().err.lower()

    def test_unknown_state_is_input_error(self):
        assert run(["check", "--game", LADDER, "--state", "zz", "--formula", "v"]) == 2

    def test_missing_game_file_is_input_error(self, capsys):
        code = run(["check", "--game", "no_such.json", "--state", "s",
                    "--formula", "v"])
        assert code == 2
        assert capsys.readouterr().err.strip()

    def test_unparseable_formula_is_input_error(self):
        assert run(["check", "--game", LADDER, "--state", "s",
                    "--formula", "[a]_3 v"]) == 2

    def test_formula_file_alternative(self, capsys, tmp_path):
        src = tmp_path / "f.txt"
        src.write_text("[]_9/10 true\n")
        code, doc = run_json(
            capsys, ["check", "--game", LADDER, "--state", "s",
                     "--formula-file", str(src)]
        )
        assert code == 0 and doc["holds"] is True

    def test_formula_and_file_together_rejected(self, tmp_path):
        src = tmp_path / "f.txt"
        src.write_text("v")
        assert run(["check", "--game", LADDER, "--state", "s",
                    "--formula", "v", "--formula-file", str(src)]) == 2

    def test_jobs_flag_is_accepted(self, capsys):
        code, doc = run_json(
            capsys, ["check", "--game", LADDER, "--state", "s",
                     "--formula", "[]_9/10 true", "--jobs", "4"]
        )
        assert code == 0 and doc["holds"] is True


class TestExtent:
    def test_lists_sorted_satisfying_states(self, capsys):
        code, doc = run_json(
            capsys, ["extent", "--game", OVERTAKE,
                     "--formula", "[a,b]_9/10 passed"]
        )
        assert code == 0
        assert doc["states"] == ["ba", "p"]
        assert doc["states"] == sorted(doc["states"])

    def test_empty_extent_still_exits_zero(self, capsys):
        code, doc = run_json(
            capsys, ["extent", "--game", LADDER, "--formula", "false"]
        )
        assert code == 0
        assert doc["states"] == []

    def test_absorbing_state_keeps_certain_survival(self, capsys):
        code, doc = run_json(
            capsys, ["extent", "--game", LADDER, "--formula", "[]_1 true"]
        )
        assert code == 0
        assert doc["states"] == ["t"]


class TestWitness:
    def test_found_witness_reports_profile_and_survival(self, capsys):
        code, doc = run_json(
            capsys, ["witness", "--game", OVERTAKE, "--state", "p",
                     "--formula", "[a,b]_9/10 passed"]
        )
        assert code == 0
        w = doc["witness"]
        assert set(w["profile"]) == {"a", "b"}
        assert Fraction(w["guaranteed_survival"]) >= Fraction(9, 10)

    def test_no_witness_exits_one(self, capsys):
        code = run(["witness", "--game", OVERTAKE, "--state", "p",
                    "--formula", "[a,b]_1 passed"])
        assert code == 1
        assert "no witness" in capsys.readouterr().out


class TestVerifyProof:
    def test_good_proof_exits_zero(self, capsys, proof_files):
        code, doc = run_json(capsys, ["verify-proof", "--proof", proof_files["good"]])
        assert code == 0
        assert doc["ok"] is True
        assert doc["system"] == "L"
        assert doc["conclusion"] == "([a]_1/2 v -> [a]_1/2 v)"

    def test_sabotaged_proof_reports_offending_line(self, capsys, proof_files):
        code, doc = run_json(capsys, ["verify-proof", "--proof", proof_files["bad"]])
        assert code == 1
        assert doc["ok"] is False
        assert doc["line"] == 3
        assert doc["reason"]

    def test_system_cross_check_accepts_match(self, capsys, proof_files):
        code, doc = run_json(
            capsys, ["verify-proof", "--proof", proof_files["plus"], "--system", "L+"]
        )
        assert code == 0 and doc["system"] == "L+"

    def test_system_cross_check_rejects_mismatch(self, proof_files):
        assert run(["verify-proof", "--proof", proof_files["plus"],
                    "--system", "L"]) == 2

    def test_malformed_proof_json_is_input_error(self, tmp_path):
        path = tmp_path / "garbage.json"
        path.write_text('{"lines": "nope"}')
        assert run(["verify-proof", "--proof", str(path)]) == 2

    def test_missing_proof_file_is_input_error(self):
        assert run(["verify-proof", "--proof", "absent.json"]) == 2


class TestAuditSoundness:
    def test_clean_audit_exits_zero(self, capsys):
        code, doc = run_json(
            capsys, ["audit-soundness", "--game", OVERTAKE,
                     "--budget", "80", "--seed", "3"]
        )
        assert code == 0
        assert doc["violations"] == []
        assert doc["instances"] == 80
        assert doc["necessitation_violations"] == []


class TestCanonical:
    def test_positive_threshold_closure_is_clean(self, capsys):
        code, doc = run_json(capsys, ["canonical", "--formula", "[a]_1/2 v"])
        assert code == 0
        assert doc["clean"] is True
        assert doc["truth_audit"]["disagreements"] == []
        assert doc["diagnostics"]["guard_pairs"] == []
        states = doc["game"]["states"]
        assert len(states) == 5 and "f" in states

    def test_zero_threshold_closure_reports_disagreements(self, capsys):
        code, doc = run_json(capsys, ["canonical", "--formula", "[a]_0 v"])
        assert code == 1
        assert doc["clean"] is False
        bad = doc["truth_audit"]["disagreements"]
        assert bad
        assert all("[a]_0 v" in entry["formula"] for entry in bad)

    def test_plus_system_rejects_empty_coalition(self):
        assert run(["canonical", "--formula", "[]_1/2 v", "--system", "L+"]) == 2

    def test_closure_cap_is_input_error(self):
        assert run(["canonical", "--formula", "[a]_1/2 (v -> [b]_1/4 u)",
                    "--max-closure", "3"]) == 2


class TestDecide:
    def test_valid_formula_exits_zero(self, capsys):
        code, doc = run_json(capsys, ["decide", "--formula", "(v -> v)"])
        assert code == 0
        assert doc["verdict"] == "valid-relative-to-oracle"
        assert doc["closure_size"] == 4

    def test_refutable_formula_exits_one_with_game(self, capsys):
        code, doc = run_json(capsys, ["decide", "--formula", "[a]_1/2 v"])
        assert code == 1
        assert doc["verdict"] == "refuted"
        assert doc["state"] in doc["game"]["states"]

    def test_exhausted_search_exits_zero(self, capsys):
        formula = ("([a]_1/2 ([a]_1/2 ([a]_1/2 ([a]_1/2 v -> v) -> v) -> v)"
                   " -> [a]_1/2 ([a]_1/2 ([a]_1/2 ([a]_1/2 v -> v) -> v) -> v))")
        code, doc = run_json(
            capsys, ["decide", "--formula", formula,
                     "--max-closure", "4", "--budget", "25"]
        )
        assert code == 0
        assert doc["verdict"] == "exhausted"
        assert doc["attempts"] == 25

    def test_seed_is_echoed(self, capsys):
        code, doc = run_json(
            capsys, ["decide", "--formula", "(v -> v)", "--seed", "11"]
        )
        assert code == 0 and doc["seed"] == 11


class TestDemoIncompleteness:
    def test_depth_three_report(self, capsys):
        code, doc = run_json(capsys, ["demo-incompleteness", "--n", "3"])
        assert code == 0
        assert doc["survival"] == "999/1000"
        assert [e["holds"] for e in doc["prefix"]] == [True] * 4
        assert doc["limit"]["formula"] == "[]_1 true"
        assert doc["limit"]["holds_at_start"] is False
        assert doc["limit"]["holds_at_absorbing"] is True
        assert doc["gap_demonstrated"] is True

    def test_out_of_range_depth_is_input_error(self, capsys):
        assert run(["demo-incompleteness", "--n", "44"]) == 2
        assert capsys.readouterr().err.strip()


class TestFmt:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("~~(v->false)", "~~(v -> false)"),
            ("[ b , a ]_2/4 v", "[a,b]_1/2 v"),
            ("[]_1true", "[]_1 true"),
        ],
    )
    def test_normalizes_spacing_and_fractions(self, capsys, raw, expected):
        code = run(["fmt", "--formula", raw])
        assert code == 0
        assert capsys.readouterr().out.strip() == expected

    def test_bad_formula_exits_two(self):
        assert run(["fmt", "--formula", "(v ->"]) == 2


class TestUsage:
    def test_no_arguments_is_usage_error(self):
        assert run([]) == 2

    def test_unknown_command_is_usage_error(self):
        assert run(["frobnicate"]) == 2

    def test_help_exits_zero(self):
        assert run(["--help"]) == 0

    def test_missing_required_flag_is_usage_error(self):
        assert run(["check", "--state", "s", "--formula", "v"]) == 2
