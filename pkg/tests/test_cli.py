import json

from fairdiv.cli import main
from fairdiv.corpus import fixture_json_path


def run_cli(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_run_prints_point_mass(capsys):
    code, out = run_cli(capsys, "run", "--fixture", "T2", "--mechanism", "minimum-like", "--json")
    assert code == 0
    data = json.loads(out.out)
    assert data["distribution"] == [{"bundles": [[], ["o1", "o2"]], "probability": "1"}]


def test_run_with_strategy_file(capsys, tmp_path):
    strategy = tmp_path / "s.json"
    strategy.write_text(json.dumps([{"agent": 1, "round": 1, "allocation": [[], []], "declared": "0"}]))
    code, out = run_cli(capsys, "run", "--fixture", "T1", "--mechanism", "minimum-like",
                        "--strategy", str(strategy), "--json")
    assert code == 0
    assert json.loads(out.out)["expected_utilities"][0][0] == "2"


def test_check_reports_zero_bid_witness(capsys):
    code, out = run_cli(capsys, "check", "--fixture", "T1", "--mechanism", "minimum-like",
                        "--axiom", "sp", "--json")
    assert code == 0
    (verdict,) = json.loads(out.out)
    assert verdict["holds"] is False
    assert verdict["witness"]["strategy"][0]["declared"] == "0"


def test_check_from_problem_file(capsys):
    code, out = run_cli(capsys, "check", "--problem", str(fixture_json_path("T10")),
                        "--mechanism", "minimum-like", "--axiom", "efx")
    assert code == 0 and "EFX  fails" in out.out


def test_corpus_exits_zero(capsys):
    code, out = run_cli(capsys, "corpus")
    assert code == 0
    assert "expectations hold" in out.out


def test_report_marks_bounded_verdicts(capsys):
    code, out = run_cli(capsys, "report")
    assert code == 0
    lines = out.out.splitlines()
    assert lines[0].split()[:2] == ["fixture", "mechanism"]
    assert any(line.startswith("T1") and "minimum-like" in line for line in lines)


def test_schema_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"agents": 1, "items": ["a"], "utilities": [{"kind": "additive", "values": [0.5]}]}')
    code, out = run_cli(capsys, "run", "--problem", str(bad), "--mechanism", "uniform")
    assert code == 2 and "schema error" in out.err


def test_unknown_mechanism_is_schema_error(capsys):
    code, _ = run_cli(capsys, "run", "--fixture", "T2", "--mechanism", "nope")
    assert code == 2


def test_capacity_error_exit_code(capsys):
    code, out = run_cli(capsys, "check", "--fixture", "T4", "--mechanism", "uniform",
                        "--axiom", "pep", "--cap", "4")
    assert code == 3 and "capacity" in out.err


def test_seeded_problem_source(capsys):
    args = ("run", "--seed", "3", "--agents", "3", "--items", "2", "--domain", "identical",
            "--mechanism", "minimum-like", "--json")
    first = run_cli(capsys, *args)
    second = run_cli(capsys, *args)
    assert first[0] == 0 and first[1].out == second[1].out
