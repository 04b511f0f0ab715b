"""End-to-end command line tests driving ermine.cli.main."""

import csv

import pytest

from conftest import BASKET_DIR, TV_DIR
from ermine.cli import REPL_HELP, _repl_line, main

SCHEMA = str(TV_DIR / "schema.json")
DATA = str(TV_DIR / "data")
QUERIES = str(TV_DIR / "queries.erq")
BIAS = str(TV_DIR / "bias_programs.json")

BASE = ["--schema", SCHEMA, "--data", DATA, "--queries", QUERIES]

F1_TEXT = "EXISTS SN. EXISTS V. EXISTS S. WeekdayTV(P, SN, V, S) AND V >= 10"
F2_TEXT = "EXISTS SN. EXISTS V. EXISTS S. WeekendTV(P, SN, V, S) AND V >= 10"

MINE_STDOUT = f"""\
level 1: 2 candidates, 2 frequent
level 2: 3 candidates, 3 frequent
frequent queries (min support 1/4):
  q(P) := {F1_TEXT}  [frequency 2/2 = 1]
  q(P) := {F2_TEXT}  [frequency 2/4 = 1/2]
  q(P) := ({F1_TEXT}) AND ({F2_TEXT})  [frequency 1/4 = 1/4]
  q(P) := ({F1_TEXT}) AND NOT ({F2_TEXT})  [frequency 1/4 = 1/4]
  q(P) := NOT ({F1_TEXT}) AND ({F2_TEXT})  [frequency 1/4 = 1/4]
rules (min confidence 1/2):
  {F1_TEXT} -> {F2_TEXT}  [support 1/4, confidence 1/2]
  {F2_TEXT} -> {F1_TEXT}  [support 1/4, confidence 1/2]
  {F1_TEXT} -> NOT ({F2_TEXT})  [support 1/4, confidence 1/2]
  {F2_TEXT} -> NOT ({F1_TEXT})  [support 1/4, confidence 1/2]
"""


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate(capsys):
    code, out, _ = run(capsys, *BASE, "validate")
    assert code == 0
    assert "OK" in out
    assert "entity tables: TV-Program, TV-Station" in out
    assert "queries: F1, F2, G1, G2" in out


def test_eval_named_query(capsys):
    code, out, _ = run(capsys, *BASE, "eval", "F1")
    assert code == 0
    assert out == "P\nGilmore\nHockey Night\n"


def test_eval_is_byte_stable(capsys):
    first = run(capsys, *BASE, "eval", "F2")
    second = run(capsys, *BASE, "eval", "F2")
    assert first == second
    assert first[1] == "P\nHockey Night\nSimpsons\n"


def test_eval_inline_declaration(capsys):
    code, out, _ = run(capsys, *BASE, "eval", "q(P) := F1 AND F2")
    assert code == 0
    assert out == "P\nHockey Night\n"


def test_check_passing_query(capsys):
    code, out, _ = run(capsys, *BASE, "check", "F1")
    assert code == 0
    assert "safety: PASS" in out
    assert "entity query: yes (entity variables: P)" in out
    assert "valid for (P): yes" in out


def test_check_unsafe_query(capsys):
    code, out, _ = run(capsys, *BASE, "check", "q(P) := NOT F1")
    assert code == 1
    assert "safety: FAIL" in out
    assert "R3-unlimited-var" in out
    assert "entity query: skipped (not safe)" in out
    assert "validity: skipped (not safe)" in out


def test_check_safe_but_not_entity(capsys):
    code, out, _ = run(
        capsys,
        *BASE,
        "check",
        'v(V) := EXISTS S. EXISTS SN. WeekdayTV("Gilmore", SN, V, S)',
    )
    assert code == 1
    assert "safety: PASS" in out
    assert "entity query: no" in out
    assert "  V: " in out


def test_domain_of_named_query(capsys):
    code, out, _ = run(capsys, *BASE, "domain", "F1")
    assert code == 0
    assert out == "P\nGilmore\nHockey Night\n"


def test_domain_covers_all_programs(capsys):
    code, out, _ = run(capsys, *BASE, "domain", "q(P) := F1 AND F2")
    assert code == 0
    assert out == "P\nDaily Show\nGilmore\nHockey Night\nSimpsons\n"


def test_domain_vars_subset(capsys):
    code, out, _ = run(capsys, *BASE, "domain", "G1", "--vars", "SN")
    assert code == 0
    assert out == "SN\nCBC\nCBS\nGlobal\n"


def test_domain_vars_must_come_from_head(capsys):
    code, _, err = run(capsys, *BASE, "domain", "G1", "--vars", "Z")
    assert code == 1
    assert "outside the query head" in err


def test_domain_explain_goes_to_stderr(capsys):
    code, out, err = run(capsys, *BASE, "domain", "F1", "--explain")
    assert code == 0
    assert out == "P\nGilmore\nHockey Night\n"
    assert "atom-projection" in err


def test_freq_certain_query(capsys):
    code, out, _ = run(capsys, *BASE, "freq", "F1")
    assert code == 0
    assert out == "frequency: 2/2 = 1 (1.000000)\n"


def test_freq_pair_conjunction(capsys):
    code, out, _ = run(capsys, *BASE, "freq", "q(P, SN) := G1 AND G2")
    assert code == 0
    assert out == "frequency: 1/5 = 1/5 (0.200000)\n"


def test_rule_support_and_confidence(capsys):
    code, out, _ = run(capsys, *BASE, "rule", "F1", "F2")
    assert code == 0
    assert "rule: F1 -> F2" in out
    assert "support: 1/4 = 1/4 (0.250000)" in out
    assert "confidence: 1/2 (0.500000)" in out


def test_mine_transcript(capsys):
    code, out, _ = run(
        capsys,
        *BASE,
        "mine",
        "--bias", BIAS,
        "--min-support", "1/4",
        "--min-confidence", "1/2",
    )
    assert code == 0
    assert out == MINE_STDOUT


def test_mine_no_prune_matches(capsys):
    args = (*BASE, "mine", "--bias", BIAS,
            "--min-support", "1/4", "--min-confidence", "1/2")
    with_prune = run(capsys, *args)
    without = run(capsys, *args, "--no-prune")
    assert with_prune == without


def test_mine_writes_rule_csv(capsys, tmp_path):
    out_csv = tmp_path / "rules.csv"
    code, _, _ = run(
        capsys,
        *BASE,
        "mine",
        "--bias", BIAS,
        "--min-support", "1/4",
        "--min-confidence", "1/2",
        "--csv", str(out_csv),
    )
    assert code == 0
    with open(out_csv, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["antecedent", "consequent", "support", "confidence"]
    assert rows[1] == [F1_TEXT, F2_TEXT, "1/4", "1/2"]
    assert len(rows) == 5


def test_mine_nothing_found(capsys):
    code, out, _ = run(
        capsys,
        *BASE,
        "mine",
        "--bias", BIAS,
        "--min-support", "1",
        "--min-confidence", "1",
    )
    assert code == 0
    assert "  (none)" in out


def test_mine_rejects_junk_threshold(capsys):
    code, _, err = run(
        capsys,
        *BASE,
        "mine",
        "--bias", BIAS,
        "--min-support", "lots",
        "--min-confidence", "1/2",
    )
    assert code == 1
    assert "--min-support" in err


def test_missing_schema_flag(capsys):
    code, _, err = run(capsys, "--data", DATA, "eval", "F1")
    assert code == 2
    assert "--schema is required" in err


def test_missing_schema_file(capsys, tmp_path):
    code, _, err = run(
        capsys, "--schema", str(tmp_path / "nope.json"), "--data", DATA, "validate"
    )
    assert code == 2
    assert "error:" in err


def test_malformed_schema_file(capsys, tmp_path):
    bad = tmp_path / "schema.json"
    bad.write_text("{oops", encoding="utf-8")
    code, _, err = run(capsys, "--schema", str(bad), "--data", DATA, "validate")
    assert code == 2
    assert "not valid JSON" in err


def test_data_dir_must_match_schema(capsys):
    code, _, err = run(
        capsys, "--schema", SCHEMA, "--data", str(BASKET_DIR / "data"), "validate"
    )
    assert code == 2
    assert "error:" in err


def test_unsafe_eval_fails(capsys):
    code, _, err = run(capsys, *BASE, "eval", "q(P) := NOT F1")
    assert code == 1
    assert "not safe" in err


def test_unknown_query_name(capsys):
    code, _, err = run(capsys, *BASE, "eval", "Zed")
    assert code == 1
    assert "not a registered query name" in err


def test_freq_requires_validity(capsys):
    code, _, err = run(capsys, *BASE, "freq", "q(X, Y) := TV-Program(X) AND X = Y")
    assert code == 1
    assert "not valid for" in err


@pytest.fixture()
def session():
    ns = type(
        "NS", (), {"schema": SCHEMA, "data": DATA, "queries": QUERIES}
    )
    from ermine.cli import load_session

    return load_session(ns)


def test_repl_lines(session, capsys):
    assert _repl_line(session, "help") is False
    assert REPL_HELP in capsys.readouterr().out

    assert _repl_line(session, "names") is False
    assert "F1(P) :=" in capsys.readouterr().out

    assert _repl_line(session, "let H(P) := F1 AND F2") is False
    assert "registered H" in capsys.readouterr().out
    assert "H" in session.registry

    assert _repl_line(session, "eval H") is False
    assert capsys.readouterr().out == "P\nHockey Night\n"

    assert _repl_line(session, "J(P) := F1 OR F2") is False
    assert "registered J" in capsys.readouterr().out

    assert _repl_line(session, "check F1") is False
    assert "safety: PASS" in capsys.readouterr().out

    assert _repl_line(session, "freq F1") is False
    assert "frequency: 2/2 = 1" in capsys.readouterr().out

    assert _repl_line(session, "rule F1 F2") is False
    assert "confidence: 1/2" in capsys.readouterr().out

    assert _repl_line(session, "rule F1") is False
    assert "usage: rule" in capsys.readouterr().out

    assert _repl_line(session, "frobnicate") is False
    assert "unknown command" in capsys.readouterr().out

    assert _repl_line(session, "quit") is True
    assert _repl_line(session, "exit") is True


def test_repl_loop(capsys, monkeypatch):
    lines = iter(["eval F1", "bogus line with spaces", "freq Nope", "", "quit"])
    monkeypatch.setattr("builtins.input", lambda prompt="": next(lines))
    code = main([*BASE, "repl"])
    out = capsys.readouterr().out
    assert code == 0
    assert "Gilmore" in out
    assert "unknown command" in out
    assert "error:" in out  # freq of an unregistered name reports, not crashes
