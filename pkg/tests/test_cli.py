import json

import numpy as np
import pytest

from growing_consensus import cli, io

SMALL = """
name = "small"
mode = "{mode}"
[growth]
kind = "constant"
value = 1.0
[kernel]
kind = "type2_tent"
[inflow]
kind = "sinusoidal"
[initial]
kind = "uniform"
low = -0.5
high = 0.5
[numerics]
dt = 0.01
t_end = 1.0
rho = 50
snapshot_stride = 10
seed = 3
[outputs]
snapshots = true
measure_dump = true
"""


@pytest.fixture
def small(tmp_path):
    def _write(mode="micro"):
        p = tmp_path / f"small_{mode}.toml"
        p.write_text(SMALL.format(mode=mode))
        return str(p)

    return _write


def test_run_writes_outputs(small, tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["run", small(), "--out", str(out)]) == 0
    cols = io.read_csv_columns(out / "trajectory.csv")
    assert list(cols)[:5] == ["t", "N", "M", "m0", "m1_1"]
    assert np.all(np.diff(cols["t"]) > 0)
    summary = json.loads((out / "summary.json").read_text())
    assert {"scenario", "regime", "final", "clusters", "checks"} <= set(summary)
    assert set(summary["checks"]) == {"c1_holds", "lemma1_bound_ok"}
    assert summary["checks"]["lemma1_bound_ok"] is True
    snaps = sorted((out / "snapshots").glob("snapshot_*.csv"))
    assert len(snaps) == 11
    assert snaps[0].read_text().splitlines()[0] == "agent_index,birth_time,x_1"
    assert json.loads(capsys.readouterr().out)["scenario"] == "small"


def test_global_flags_before_subcommand(small, tmp_path):
    out = tmp_path / "pre"
    assert cli.main(["--out", str(out), "--seed", "8", "run", small()]) == 0
    assert (out / "trajectory.csv").exists()


def test_both_mode_writes_gap_series(small, tmp_path):
    out = tmp_path / "both"
    assert cli.main(["run", small("both"), "--out", str(out)]) == 0
    gap = io.read_csv_columns(out / "w1_micro_vs_kinetic.csv")
    assert len(gap["t"]) == 11 and gap["w1"][0] == pytest.approx(0.0, abs=1e-15)
    assert (out / "kinetic_trajectory.csv").exists() and (out / "measure.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["w1_micro_vs_kinetic_max"] < 0.05


def test_reruns_are_byte_identical(small, tmp_path):
    for d in ("a", "b"):
        assert cli.main(["run", small("both"), "--out", str(tmp_path / d)]) == 0
    for name in ("trajectory.csv", "kinetic_trajectory.csv", "w1_micro_vs_kinetic.csv", "measure.csv",
                 "summary.json", "snapshots/snapshot_00010.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_oscillating_inflow_flags_c1_failure(tmp_path):
    out = tmp_path / "ex2"
    assert cli.main(["run", "example2_oscillation", "--out", str(out)]) == 0
    assert json.loads((out / "summary.json").read_text())["checks"]["c1_holds"] is False


def test_constant_inflow_trajectory(tmp_path):
    out = tmp_path / "ci"
    assert cli.main(["run", "constant_inflow", "--out", str(out)]) == 0
    t = io.read_csv_columns(out / "trajectory.csv")["t"]
    assert np.all(np.diff(t) > 0)


def test_invalid_config_exit_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(SMALL.format(mode="micro").replace("rho = 50", "rho = 50\nbogus = 1"))
    assert cli.main(["run", str(bad), "--out", str(tmp_path / "x")]) == cli.EXIT_CONFIG
    assert cli.main(["run", "no_such_scenario", "--out", str(tmp_path / "x")]) == cli.EXIT_CONFIG


def test_runtime_abort_exit_3(small, tmp_path):
    p = small()
    text = open(p).read().replace("rho = 50", "rho = 50\nM_max = 60")
    open(p, "w").write(text)
    assert cli.main(["run", p, "--out", str(tmp_path / "x")]) == cli.EXIT_RUNTIME


def test_sweep(small, tmp_path):
    out = tmp_path / "sw"
    assert cli.main(["sweep", small(), "--axis", "numerics.rho", "--values", "20,40", "--out", str(out)]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("numerics.rho,status")
    assert len(rows) == 3 and all(",ok," in r for r in rows[1:])


def test_sweep_parallel_matches_serial(small, tmp_path):
    args = ["sweep", small(), "--axis", "growth.value", "--values", "[0.5, 1.0]"]
    assert cli.main(args + ["--out", str(tmp_path / "s1")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "s2"), "--workers", "2"]) == 0
    assert (tmp_path / "s1" / "sweep.csv").read_bytes() == (tmp_path / "s2" / "sweep.csv").read_bytes()


def test_sweep_empty_and_failing_cells(small, tmp_path):
    assert cli.main(["sweep", small(), "--axis", "numerics.rho", "--values", "", "--out", str(tmp_path)]) == 2
    rc = cli.main(["sweep", small(), "--axis", "numerics.rho", "--values", "20,0.5", "--out", str(tmp_path / "f")])
    assert rc == 1
    rows = (tmp_path / "f" / "sweep.csv").read_text().splitlines()
    assert ",ok," in rows[1] and ",invalid," in rows[2]


def test_report(small, tmp_path):
    run = tmp_path / "r"
    assert cli.main(["run", small("both"), "--out", str(run)]) == 0
    assert cli.main(["report", str(run), "--out", str(run / "fig")]) == 0
    names = {p.name for p in (run / "fig").iterdir()}
    assert {"variance.dat", "variance.png", "mean.dat", "dissipation.dat", "c1_residual.dat",
            "kinetic_variance.dat", "w1_micro_vs_kinetic.dat"} <= names
    first = (run / "fig" / "variance.dat").read_text().splitlines()[0]
    assert first == "# t V V_X"


def test_list(capsys):
    assert cli.main(["list"]) == 0
    assert "constant_inflow" in capsys.readouterr().out


def test_verify_writes_table(tmp_path, capsys, monkeypatch):
    from growing_consensus import verify

    monkeypatch.setitem(verify.SUITES, "w1only", [verify.criterion_11])
    rc = cli.main(["verify", "w1only", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0 and "[PASS]" in out and "[FAIL]" not in out
    assert (tmp_path / "verify_w1only.csv").exists()
