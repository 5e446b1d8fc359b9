import json
from pathlib import Path

import pytest

from bidcharge.cli import run

GOLDEN = Path(__file__).parent / "golden" / "budget_detour_levels.csv"


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = invoke(capsys, *argv)
    assert code == 0
    return json.loads(out)


class TestSolve:
    def test_detour_vector(self, capsys):
        rep = report(capsys, "solve", "--fixture", "budget_detour", "--objective", "reach:d", "--player", "1")
        assert rep["command"] == "solve" and rep["mode"] == "exact"
        assert rep["result"]["threshold"]["values"] == {"a": "0", "b": "0.25", "c": "0.5", "d": "0", "e": "1"}
        assert "timing_seconds" not in rep

    def test_decide(self, capsys):
        code, out, _ = invoke(capsys, "solve", "--fixture", "budget_detour", "--decide", "--vertex", "a")
        assert code == 0 and out == "ACCEPT a 0\n"
        code, out, _ = invoke(capsys, "solve", "--fixture", "budget_detour", "--decide", "--vertex", "e")
        assert out.startswith("REJECT e")

    def test_arena_file_and_out(self, capsys, tmp_path):
        src = tmp_path / "arena.json"
        src.write_text(json.dumps({"vertices": [{"id": "x", "succ": ["y", "z"]}, {"id": "y", "succ": ["y"]}, {"id": "z", "succ": ["z"]}], "objective": "reach:y"}))
        dest = tmp_path / "out.json"
        code, out, _ = invoke(capsys, "solve", "--arena", str(src), "--out", str(dest))
        assert code == 0 and out == ""
        assert json.loads(dest.read_text())["result"]["threshold"]["values"] == {"x": "0.5", "y": "0", "z": "1"}

    def test_approx_mode(self, capsys):
        rep = report(capsys, "solve", "--fixture", "poorman_two_step", "--mode", "approx", "--eps", "1e-12")
        values = rep["result"]["threshold"]["values"]
        assert abs(float(values["v1"]) - 4 / 7) < 1e-9

    def test_buchi_objective(self, capsys):
        rep = report(capsys, "solve", "--fixture", "budget_detour", "--objective", "buchi:a,b,c,d,e")
        assert set(rep["result"]["threshold"]["values"].values()) == {"0"}

    def test_timing_flag(self, capsys):
        rep = report(capsys, "solve", "--fixture", "budget_detour", "--timing")
        assert rep["timing_seconds"] >= 0


class TestExitCodes:
    def test_unknown_fixture(self, capsys):
        code, _, err = invoke(capsys, "solve", "--fixture", "no_such_arena")
        assert code == 1 and "error" in err

    def test_invalid_arena(self, capsys, tmp_path):
        src = tmp_path / "bad.json"
        src.write_text(json.dumps({"vertices": [{"id": "a", "succ": []}], "objective": "reach:a"}))
        code, _, err = invoke(capsys, "solve", "--arena", str(src))
        assert code == 1 and "NoSuccessor(a)" in err

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as err:
            run(["frobnicate"])
        assert err.value.code == 1

    def test_not_converged(self, capsys):
        code, _, _ = invoke(capsys, "solve", "--fixture", "poorman_two_step", "--mode", "approx", "--max-iter", "2")
        assert code == 2

    def test_corrupted_vector_violates(self, capsys, tmp_path):
        vec = tmp_path / "vec.json"
        vec.write_text(json.dumps({"b": "1/20"}))
        code, out, _ = invoke(capsys, "check", "--fixture", "budget_detour", "--vector", str(vec), "--trials", "50")
        assert code == 3
        assert json.loads(out)["result"]["violations"] >= 1


class TestTable:
    def test_matches_golden(self, capsys):
        code, out, _ = invoke(capsys, "table", "--fixture", "budget_detour", "--horizon", "6")
        assert code == 0 and out == GOLDEN.read_text()

    def test_plotdata_series(self, capsys):
        code, out, _ = invoke(capsys, "table", "--fixture", "budget_detour", "--format", "plotdata")
        lines = out.splitlines()
        assert lines[0] == "iteration,sup_step"
        steps = [float(line.split(",")[1]) for line in lines[1:]]
        assert steps and steps[-1] == 0


@pytest.mark.parametrize(
    "argv",
    [
        ("solve", "--fixture", "charged_safety"),
        ("table", "--fixture", "budget_detour"),
        ("simulate", "--fixture", "budget_detour", "--vertex", "b", "--trials", "3", "--seed", "5"),
        ("export", "--fixture", "poorman_two_step", "--kind", "etr"),
    ],
    ids=["solve", "table", "simulate", "export"],
)
def test_repeated_runs_are_byte_identical(capsys, argv):
    first = invoke(capsys, *argv)
    assert first == invoke(capsys, *argv)


class TestSimulate:
    def test_jsonl_per_adversary_and_trial(self, capsys):
        code, out, _ = invoke(capsys, "simulate", "--fixture", "budget_detour", "--vertex", "b", "--trials", "2", "--steps", "20")
        records = [json.loads(line) for line in out.splitlines()]
        assert code == 0 and len(records) == 8
        assert {(r["adversary"], r["trial"]) for r in records} == {
            (a, t) for a in ("uniform-random", "all-in", "copycat-threshold", "eps-undercut") for t in (0, 1)
        }
        # the limit strategy keeps the invariant but need not reach d within 20 steps
        assert {r["verdict"] for r in records} <= {"P1Win", "Truncated"}

    def test_player_two_keeps_out_of_t(self, capsys):
        code, out, _ = invoke(
            capsys, "simulate", "--fixture", "charged_safety", "--player", "2",
            "--vertex", "b", "--b1", "0.2", "--steps", "200", "--adversary", "all-in",
        )
        rec = json.loads(out)
        assert code == 0 and rec["final"]["vertex"] != "t"
        assert all(step["post"]["vertex"] != "t" for step in rec["steps"])

    def test_unknown_adversary(self, capsys):
        code, _, _ = invoke(capsys, "simulate", "--fixture", "budget_detour", "--vertex", "b", "--adversary", "oracle")
        assert code == 1


def test_repair_finds_two_unit_additions(capsys):
    rep = report(capsys, "repair", "--fixture", "repair_demo", "--vertex", "a", "--budget", "2", "--grid", "1", "--support", "2")
    result = rep["result"]
    assert result["found"] and result["verified"]
    assert result["delta"] == {"b": "1", "d": "1"}


def test_reduce_then_solve(capsys, tmp_path):
    demo = Path(__file__).parents[1] / "src" / "bidcharge" / "fixtures" / "turn_based_demo.json"
    code, out, _ = invoke(capsys, "reduce", "--input", str(demo), "--solve")
    assert code == 0
    reduced = json.loads(out)
    winners, thresholds = reduced["turn_based_winner"], reduced["reduced_thresholds"]
    assert all(thresholds[v] == ("0" if w == 1 else "1") for v, w in winners.items())
    dest = tmp_path / "reduced.json"
    dest.write_text(out)
    rep = report(capsys, "solve", "--arena", str(dest))
    assert {v: x for v, x in rep["result"]["threshold"]["values"].items() if v in winners} == thresholds


class TestExportAndCheck:
    def test_milp_rebuild_check(self, capsys, tmp_path):
        good = tmp_path / "good.json"
        good.write_text(json.dumps({"a": 0, "b": "1/4", "c": "1/2", "d": 0, "e": 1}))
        code, out, _ = invoke(capsys, "check", "--fixture", "budget_detour", "--kind", "milp", "--assignment", str(good))
        assert code == 0 and json.loads(out)["result"]["violated"] == []
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"a": 0, "b": "7/20", "c": "1/2", "d": 0, "e": 1}))
        code, _, _ = invoke(capsys, "check", "--fixture", "budget_detour", "--kind", "milp", "--assignment", str(bad))
        assert code == 3

    def test_model_file_needs_full_assignment(self, capsys, tmp_path):
        model = tmp_path / "model.smt2"
        code, _, _ = invoke(capsys, "export", "--fixture", "charged_safety", "--kind", "etr", "--out", str(model))
        assert code == 0 and model.read_text().startswith(";")
        partial = tmp_path / "h.json"
        partial.write_text(json.dumps({"h_a": 1, "h_b": "3/8", "h_t": 0}))
        code, _, err = invoke(capsys, "check", "--model", str(model), "--assignment", str(partial))
        assert code == 1 and err

    def test_buchi_export_needs_buchi_objective(self, capsys):
        code, _, _ = invoke(capsys, "export", "--fixture", "budget_detour", "--kind", "buchi")
        assert code == 1
        code, out, _ = invoke(capsys, "export", "--fixture", "budget_detour", "--kind", "buchi", "--objective", "buchi:d")
        assert code == 0 and out

    def test_invariant_mode(self, capsys):
        rep = report(capsys, "check", "--fixture", "charged_safety", "--player", "2", "--trials", "20")
        assert rep["result"]["violations"] == 0
        assert set(rep["result"]["trials_per_adversary"].values()) == {20}
