"""Command-line harness: CSV output, exit codes and reproducibility."""

import csv
import math
import shlex

import pytest

from app.cli import cli
from app.tools.experiment_runs import list_runs


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert lines[0].startswith("# provenance version=0.1.0 ")
    return list(csv.DictReader(lines[1:]))


# ============== scheme1 ==============

def test_scheme1_large_k_single_slot(runner, tmp_path):
    out = tmp_path / "s1.csv"
    result = runner.invoke(cli, ["scheme1", "--k", "inf", "--n", "0", "--out", str(out)])
    assert result.exit_code == 0
    rows = read_rows(out)
    assert len(rows) == 1
    assert float(rows[0]["p_star"]) == pytest.approx(math.exp(-1), abs=1e-12)


def test_scheme1_two_nodes(runner, tmp_path):
    out = tmp_path / "s1.csv"
    runner.invoke(cli, ["scheme1", "--k", "2", "--n", "1", "--out", str(out)])
    rows = read_rows(out)
    assert [float(r["alpha_or_beta"]) for r in rows] == pytest.approx([1 / 3, 1 / 3], abs=1e-12)
    assert float(rows[0]["p_star"]) == pytest.approx(2 / 3, abs=1e-12)


def test_scheme1_sweep(runner, tmp_path):
    out = tmp_path / "sweep.csv"
    result = runner.invoke(cli, ["scheme1", "--k", "5,inf", "--n", "0:3", "--out", str(out)])
    assert result.exit_code == 0
    # (1 + 2 + 3 + 4) rows per k
    assert len(read_rows(out)) == 20


@pytest.mark.parametrize("args", [
    ["scheme1", "--k", "0", "--n", "1"],
    ["scheme1", "--k", "5", "--n", "3", "--tmax", "1"],
    ["scheme1", "--k", "5"],
    ["scheme1", "--k", "5", "--n", "3", "--dist", "gamma"],
    ["simulate", "--k", "5", "--n", "3", "--seed", "-1"],
    ["simulate", "--k", "inf", "--n", "3"],
    ["simulate", "--k", "5", "--n", "3", "--scheme", "scheme2"],
])
def test_invalid_input_exits_2(runner, args):
    assert runner.invoke(cli, args).exit_code == 2


def test_table_file_reads_back(runner, tmp_path):
    table = tmp_path / "table.csv"
    result = runner.invoke(cli, ["scheme1", "--k", "5", "--n", "10", "--table", str(table),
                                 "--out", str(tmp_path / "out.csv")])
    assert result.exit_code == 0
    lines = table.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# provenance ")
    assert lines[1].startswith("# k=5,N=10,p_star=")
    assert lines[2] == "j,alpha"
    assert len(lines) == 14


def test_table_needs_single_setting(runner, tmp_path):
    result = runner.invoke(cli, ["scheme1", "--k", "5", "--n", "1:3", "--table", str(tmp_path / "t.csv"),
                                 "--out", str(tmp_path / "out.csv")])
    assert result.exit_code == 2


# ============== scheme2 and table1 ==============

def test_scheme2_no_transmit_masses(runner, tmp_path):
    out = tmp_path / "s2.csv"
    result = runner.invoke(cli, ["scheme2", "--k", "5", "--n", "10", "--eta", "0.6,0.87", "--out", str(out)])
    assert result.exit_code == 0
    masses = [float(r["no_transmit_mass"]) for r in read_rows(out)]
    assert masses == pytest.approx([0.0809, 0.3753], abs=5e-4)


def test_scheme2_all_infeasible_exits_3(runner, tmp_path):
    out = tmp_path / "s2.csv"
    result = runner.invoke(cli, ["scheme2", "--k", "inf", "--n", "22", "--delta", "13e-6",
                                 "--eta", "0.98", "--out", str(out)])
    assert result.exit_code == 3
    rows = read_rows(out)
    assert rows[0]["status"] == "infeasible"
    assert rows[0]["lambda_star"] == ""


def test_scheme2_from_tmax(runner, tmp_path):
    out = tmp_path / "s2.csv"
    result = runner.invoke(cli, ["scheme2", "--k", "inf", "--delta", "13e-6", "--tmax", "288e-6",
                                 "--eta", "0.75", "--out", str(out)])
    assert result.exit_code == 0
    row = read_rows(out)[0]
    assert row["N"] == "22"
    assert float(row["gamma_seconds"]) * 1e6 == pytest.approx(17.8, rel=0.02)


def test_table1(runner, tmp_path):
    out = tmp_path / "t1.csv"
    result = runner.invoke(cli, ["table1", "--feedback", "--out", str(out)])
    assert result.exit_code == 0
    rows = read_rows(out)
    assert len(rows) == 8
    assert sum(r["status"] == "infeasible" for r in rows) == 1
    assert "gamma_with_feedback_us" in rows[0]


# ============== simulate ==============

SIMULATE = ["simulate", "--k", "5", "--n", "10", "--trials", "20000", "--seed", "42"]


def test_simulate_is_reproducible(runner, tmp_path):
    out = tmp_path / "sim.csv"
    assert runner.invoke(cli, SIMULATE + ["--out", str(out)]).exit_code == 0
    first = out.read_bytes()
    assert runner.invoke(cli, SIMULATE + ["--out", str(out)]).exit_code == 0
    assert out.read_bytes() == first


def test_provenance_invocation_reproduces_file(runner, tmp_path):
    out = tmp_path / "sim.csv"
    runner.invoke(cli, ["simulate", "--k", "3", "--n", "4", "--trials", "5000", "--seed", "7", "--out", str(out)])
    first = out.read_bytes()
    provenance = first.decode("utf-8").splitlines()[0]
    assert "seed=7 " in provenance
    invocation = provenance.split("invocation=", 1)[1]
    # drop the program name, keep the subcommand and its options
    args = shlex.split(invocation)[1:]
    assert args[0] == "simulate"
    assert "--time-convention" in args
    assert runner.invoke(cli, args).exit_code == 0
    assert out.read_bytes() == first


def test_simulate_agrees_with_closed_form(runner, tmp_path):
    out = tmp_path / "sim.csv"
    runner.invoke(cli, SIMULATE + ["--out", str(out)])
    row = read_rows(out)[0]
    assert row["mapping"] == "scheme1"
    assert abs(float(row["z_success"])) < 4
    assert abs(float(row["z_time"])) < 4


def test_simulate_mapping_file(runner, tmp_path):
    table = tmp_path / "table.csv"
    runner.invoke(cli, ["scheme1", "--k", "5", "--n", "10", "--table", str(table),
                        "--out", str(tmp_path / "s1.csv")])
    p_star = float(read_rows(tmp_path / "s1.csv")[0]["p_star"])
    out = tmp_path / "sim.csv"
    result = runner.invoke(cli, SIMULATE + ["--mapping", str(table), "--out", str(out)])
    assert result.exit_code == 0
    row = read_rows(out)[0]
    assert row["mapping"] == f"file:{table}"
    assert float(row["analytic_success"]) == pytest.approx(p_star, abs=1e-12)


def test_simulate_malformed_mapping_exits_2(runner, tmp_path):
    table = tmp_path / "broken.csv"
    table.write_text("j,alpha\n0,0.5\n3,0.1\n", encoding="utf-8")
    result = runner.invoke(cli, SIMULATE + ["--mapping", str(table), "--out", str(tmp_path / "sim.csv")])
    assert result.exit_code == 2


def test_simulate_continuous_rule_has_no_closed_form(runner, tmp_path):
    out = tmp_path / "sim.csv"
    result = runner.invoke(cli, SIMULATE + ["--scheme", "inverse", "--c", "0.5", "--dist", "exp",
                                            "--out", str(out)])
    assert result.exit_code == 0
    row = read_rows(out)[0]
    assert row["mapping"].startswith("inverse:c=0.5")
    assert row["analytic_success"] == ""


def test_simulate_record(runner, tmp_path):
    out = tmp_path / "sim.csv"
    result = runner.invoke(cli, SIMULATE + ["--record", "--out", str(out)])
    assert result.exit_code == 0
    runs = list_runs(kind="simulation")["simulations"]
    assert any(r["seed"] == 42 and r["trials"] == 20000 for r in runs)


# ============== baseline ==============

def test_baseline_success_objective(runner, tmp_path):
    out = tmp_path / "base.csv"
    result = runner.invoke(cli, ["baseline", "--k", "5", "--n", "10", "--dist", "exp", "--budget", "12",
                                 "--trials", "2000", "--final-trials", "10000", "--seed", "3",
                                 "--out", str(out)])
    assert result.exit_code == 0
    row = read_rows(out)[0]
    assert row["objective"] == "success"
    assert row["value_over_delta"] == ""
    assert float(row["value"]) <= float(row["optimal_value"]) + 4 * float(row["stderr"])
    assert row["search_path"] in ("golden_section", "grid_scan")


def test_baseline_unreachable_constraint_exits_3(runner, tmp_path):
    result = runner.invoke(cli, ["baseline", "--k", "5", "--n", "2", "--dist", "exp", "--objective", "time",
                                 "--eta", "0.99", "--budget", "8", "--trials", "2000",
                                 "--final-trials", "2000", "--out", str(tmp_path / "base.csv")])
    assert result.exit_code == 3


def test_baseline_sweeps_slot_range(runner, tmp_path):
    out = tmp_path / "sweep.csv"
    result = runner.invoke(cli, ["baseline", "--k", "3", "--n", "2:3", "--budget", "6", "--trials", "1000",
                                 "--final-trials", "2000", "--out", str(out)])
    assert result.exit_code == 0
    assert [row["N"] for row in read_rows(out)] == ["2", "3"]
