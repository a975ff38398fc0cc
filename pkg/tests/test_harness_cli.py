import json
from fractions import Fraction

import pytest

from avalloc.cli import main
from avalloc.generators import gen_integrality_gap, gen_iid_lower_bound
from avalloc.harness import (
    bench_examples,
    run_offline_trials,
    run_online_trials,
    write_report_csv,
    write_report_json,
)
from avalloc.lp_models import build_bundle_lp, build_opton_lp, solve_model_lp


@pytest.fixture(scope="module")
def gap_solution():
    inst = gen_integrality_gap(3, Fraction(1, 10))
    return inst, solve_model_lp(build_bundle_lp(inst))


def test_reports_are_reproducible(gap_solution):
    inst, x = gap_solution
    a = run_offline_trials(inst, x, alpha=0.3, beta=0.156, seed=5, trials=200)
    b = run_offline_trials(inst, x, alpha=0.3, beta=0.156, seed=5, trials=200)
    assert a.to_json_dict() == b.to_json_dict()
    c = run_offline_trials(inst, x, alpha=0.3, beta=0.156, seed=6, trials=200)
    assert c.to_json_dict() != a.to_json_dict()


def test_single_trial_report_equals_single_run(gap_solution):
    inst, x = gap_solution
    from avalloc.rounding import RoundingParams, derive_trial_seed, round_offline

    rep = run_offline_trials(inst, x, alpha=0.3, beta=0.156, seed=9, trials=1)
    out = round_offline(
        inst, x, RoundingParams(alpha=0.3, beta=0.156, seed=derive_trial_seed(9, 0))
    )
    assert rep.mean == float(out.value(inst))
    assert rep.stddev == 0.0
    assert rep.minimum == rep.mean
    assert rep.feasible_count == 1


def test_threads_do_not_change_results(gap_solution):
    inst, x = gap_solution
    a = run_offline_trials(inst, x, alpha=0.3, beta=0.156, seed=5, trials=300, threads=1)
    b = run_offline_trials(inst, x, alpha=0.3, beta=0.156, seed=5, trials=300, threads=3)
    assert a.to_json_dict() == b.to_json_dict()


def test_online_report_fields():
    model = gen_iid_lower_bound(10)
    x = solve_model_lp(build_opton_lp(model))
    rep = run_online_trials(model, x, alpha=0.64, beta=0.0766, seed=2, trials=100)
    doc = rep.to_json_dict()
    assert doc["mode"] == "online"
    assert doc["feasible_count"] == 100
    assert doc["lp_value_exact"] == "29/10"
    assert doc["ci95_lo"] <= doc["mean"] <= doc["ci95_hi"]
    assert set(doc["open_expected"]) >= set(doc["open_rates"])


def test_report_writers(tmp_path):
    doc = {"a": 1, "b": {"c": [1, 2], "d": 0.5}}
    jpath = tmp_path / "r.json"
    cpath = tmp_path / "r.csv"
    write_report_json(doc, jpath)
    write_report_csv(doc, cpath)
    assert json.loads(jpath.read_text()) == doc
    lines = cpath.read_text().splitlines()
    assert lines[0] == "key,value"
    assert "b.c.0,1" in lines


def test_bench_small_is_deterministic():
    a = bench_examples(trials=60, seed=3)
    b = bench_examples(trials=60, seed=3)
    assert a == b
    assert a["naive_lp_gap"]["3"]["lp"] == 4.0
    assert a["bundle_lp_n3"]["lp"] == 2.2
    assert a["supply"] == {"base_opt": 2.02, "dup3_opt": 12.0}
    assert a["adversarial_T5"]["greedy"] == 1.25
    assert a["max_coverage"]["yes_opt"] == 6.0
    assert a["clique_reduction"]["triangle_opt"] == 5.0


# -- CLI ----------------------------------------------------------------------


def test_cli_gen_lp_exact_round_trip(tmp_path, capsys):
    path = tmp_path / "gap3.json"
    assert main(["gen", "integrality-gap", "-n", "3", "--eps", "0.1",
                 "-o", str(path)]) == 0
    assert main(["lp", str(path), "--which", "naive"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] == 4.0 and doc["value_exact"] == "4/1"
    assert main(["exact", str(path), "--bundling", "--gap"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["opt"]["value_exact"] == "11/5"
    assert doc["bundling_opt"]["value_exact"] == "11/5"
    assert doc["gap_opt"]["value_exact"] == "11/5"


def test_cli_solve_algorithms(tmp_path, capsys):
    path = tmp_path / "gap3.json"
    main(["gen", "integrality-gap", "-n", "3", "--eps", "0.1", "-o", str(path)])
    for algo in ("bundle-round", "greedy-p", "single-buyer"):
        assert main(["solve", str(path), "--algo", algo, "--alpha", "0.3",
                     "--seed", "4"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["feasible"] is True

    clique = tmp_path / "tri.json"
    main(["gen", "genava-clique", "--vertices", "a,b,c",
          "--edges", "a-b,b-c,a-c", "-o", str(clique)])
    assert main(["solve", str(clique), "--algo", "bicriteria", "--eps", "0.5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] >= 2.5  # at least eps * OPT = 0.5 * 5

    budgeted = tmp_path / "bud.json"
    main(["gen", "random", "--items", "6", "--buyers", "3", "--seed", "9",
          "--unambiguous", "--budget-resources", "1", "-o", str(budgeted)])
    capsys.readouterr()
    assert main(["solve", str(budgeted), "--algo", "bundle-round-budgeted",
                 "--seed", "4"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible"] is True
    assert doc["alpha"] == pytest.approx(1 / 3)  # default 1/(3K) at K=1


def test_cli_solve_resolves_ambiguous_instances(tmp_path, capsys):
    inst = tmp_path / "amb.json"
    inst.write_text(json.dumps({
        "buyers": [{"id": "b1", "rho": 1}, {"id": "b2", "rho": 1}],
        "items": [
            {"id": "i1", "values": {"b1": 1.3, "b2": 0.9}},
            {"id": "i2", "values": {"b1": 1.5}},
        ],
    }))
    assert main(["solve", str(inst), "--algo", "bundle-round", "--alpha", "0.3",
                 "--seed", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible"] is True


def test_cli_online_and_trace(tmp_path, capsys):
    model = tmp_path / "m.json"
    main(["gen", "iid-lower-bound", "-T", "10", "-o", str(model)])
    trace = tmp_path / "trace.jsonl"
    assert main(["online", "--model", str(model), "--trials", "50",
                 "--seed", "1", "--trace", str(trace)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible_count"] == 50
    lines = [json.loads(l) for l in trace.read_text().splitlines()]
    assert len(lines) == 10
    assert all(set(l) == {"t", "item", "type", "bundle", "reason"} for l in lines)


def test_cli_lp_which_variants(tmp_path, capsys):
    model = tmp_path / "m.json"
    main(["gen", "iid-lower-bound", "-T", "10", "-o", str(model)])
    assert main(["lp", str(model), "--which", "opton"]) == 0
    assert json.loads(capsys.readouterr().out)["value_exact"] == "29/10"
    assert main(["lp", str(model), "--which", "optoff", "--gamma-floor", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "optimal"
    export = tmp_path / "lp.txt"
    inst = tmp_path / "gap3.json"
    main(["gen", "integrality-gap", "-n", "3", "--eps", "0.1", "-o", str(inst)])
    assert main(["lp", str(inst), "--which", "bundle", "--export", str(export)]) == 0
    capsys.readouterr()
    assert export.read_text().startswith("Maximize")


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"buyers": [], "items": [], "extra": 1}')
    assert main(["exact", str(bad)]) == 2
    capsys.readouterr()
    big = tmp_path / "big.json"
    main(["gen", "random", "--items", "8", "--buyers", "3", "--seed", "1",
          "-o", str(big)])
    capsys.readouterr()
    assert main(["exact", str(big), "--limit", "10"]) == 3
    capsys.readouterr()
    assert main(["gen", "integrality-gap", "-n", "3", "--eps", "0.9"]) == 2
    capsys.readouterr()


def test_cli_export_gap_and_bench(tmp_path, capsys):
    inst = tmp_path / "gap3.json"
    main(["gen", "integrality-gap", "-n", "3", "--eps", "0.1", "-o", str(inst)])
    assert main(["export-gap", str(inst)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["bins"]) == 3
    report = tmp_path / "rep.json"
    assert main(["bench", "--suite", "examples", "--trials", "50",
                 "--seed", "2", "-o", str(report)]) == 0
    first = report.read_bytes()
    assert (tmp_path / "rep.csv").exists()
    assert main(["bench", "--suite", "examples", "--trials", "50",
                 "--seed", "2", "-o", str(report)]) == 0
    assert report.read_bytes() == first  # bit-for-bit reproducible


def test_cli_env_seed(tmp_path, capsys, monkeypatch):
    inst = tmp_path / "gap3.json"
    main(["gen", "integrality-gap", "-n", "3", "--eps", "0.1", "-o", str(inst)])
    monkeypatch.setenv("AVALLOC_SEED", "123")
    assert main(["solve", str(inst), "--algo", "bundle-round", "--alpha", "0.3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["seed"] == 123
