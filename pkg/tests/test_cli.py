import json
import subprocess
import sys

import pytest

from tsa_storage.cli import main
from tsa_storage.energy_system import BUNDLED_CASES, save_system

from conftest import source_demand_system


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


def only_run_dir(out):
    dirs = [p for p in out.iterdir() if p.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def hand_case(tmp_path, avail, load, big_m=100.0):
    system = save_system(source_demand_system(big_m=big_m), tmp_path / "hand.json")
    csv = tmp_path / "hand.csv"
    csv.write_text("avail,load\n" + "".join(f"{a},{b}\n" for a, b in zip(avail, load)))
    return system, csv


@pytest.mark.parametrize("case", BUNDLED_CASES)
def test_validate_bundled(case, tmp_path):
    assert run("validate", "--system", case) == 0


def test_validate_rejects_bad_files(tmp_path, capsys):
    path = save_system(source_demand_system(), tmp_path / "s.json")
    doc = json.loads(path.read_text())
    doc["connections"].append({"from": "ghost", "to": "bus", "energy": "e"})
    path.write_text(json.dumps(doc))
    assert run("validate", "--system", path) == 2
    assert "ghost" in capsys.readouterr().out
    assert run("validate", "--system", tmp_path / "missing.json") == 2
    (tmp_path / "broken.json").write_text("{not json")
    assert run("validate", "--system", tmp_path / "broken.json") == 2


def test_aggregate_island(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run("aggregate", "--synthetic", "island", "--days", 12, "--seed", 3, "--out", out) == 0
        outs.append(only_run_dir(out))
    doc = json.loads((outs[0] / "typical_periods.json").read_text())
    assert len(doc["cardinalities"]) == 12 and sum(doc["cardinalities"]) == 365
    assert ((outs[0] / "typical_periods.json").read_bytes()
            == (outs[1] / "typical_periods.json").read_bytes())
    assert json.loads((outs[0] / "config.json").read_text())["days"] == 12


def test_aggregate_bad_days(tmp_path):
    assert run("aggregate", "--synthetic", "island", "--days", 0, "--out", tmp_path) == 2
    assert run("aggregate", "--synthetic", "island:days=10", "--days", 11, "--out", tmp_path) == 2
    assert run("aggregate", "--synthetic", "island:bogus=1", "--days", 2, "--out", tmp_path) == 2


def test_solve_hand_case(tmp_path):
    system, csv = hand_case(tmp_path, [1, 1, 1], [5, 5, 5])
    out = tmp_path / "runs"
    assert run("solve", "--system", system, "--profiles", csv, "--steps", 3, "--kind", "full",
               "--out", out) == 0
    result = json.loads((only_run_dir(out) / "result.json").read_text())
    assert result["status"] == "optimal"
    assert result["objective"] == pytest.approx(15.0)
    assert result["audit"]["collector_imbalance"] <= 1e-7


def test_solve_infeasible_exit_code(tmp_path):
    system, csv = hand_case(tmp_path, [1, 1], [5, 5], big_m=1.0)
    out = tmp_path / "runs"
    assert run("solve", "--system", system, "--profiles", csv, "--steps", 2, "--kind", "full",
               "--out", out) == 3
    result = json.loads((only_run_dir(out) / "result.json").read_text())
    assert result["status"] == "infeasible"


def test_solve_heatmap_and_mps(tmp_path):
    out = tmp_path / "runs"
    assert run("solve", "--synthetic", "toy:days=6,steps=6", "--kind", "linked", "--days", 3,
               "--heatmap", "--out", out) == 0
    run_dir = only_run_dir(out)
    assert (run_dir / "soc_storage.csv").exists()
    mps_out = tmp_path / "mps"
    assert run("solve", "--synthetic", "toy:days=6,steps=6", "--kind", "linked", "--days", 3,
               "--export-mps", "--out", mps_out) == 0
    run_dir = only_run_dir(mps_out)
    assert (run_dir / "model.mps").read_text().startswith("NAME")
    assert not (run_dir / "result.json").exists()


def test_solve_usage_errors(tmp_path):
    base = ["solve", "--synthetic", "toy:days=6,steps=6", "--out", tmp_path]
    assert run(*base, "--kind", "linked") == 2
    assert run(*base, "--kind", "full", "--simplified-bounds") == 2
    assert run(*base, "--kind", "weekly", "--days", 2) == 2


def test_sweep_rows(tmp_path):
    out = tmp_path / "runs"
    assert run("sweep", "--synthetic", "toy:days=12,steps=6", "--days", "6,12", "--out", out) == 0
    report = json.loads((only_run_dir(out) / "report.json").read_text())
    assert len(report["rows"]) == 5
    lines = (only_run_dir(out) / "report.csv").read_text().splitlines()
    assert len(lines) == 6


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tsa_storage", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
