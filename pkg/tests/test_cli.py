import json

import pytest

from cslattice import runner
from cslattice.cli import main
from cslattice.config import parse_config

DIMER = """
model = "gdst"
ordering = "both"
[gdst]
f = 2
m = 3
gamma = 0.05
[initial]
site = 1
n_total = 4
[integrator]
t_end = 2.0
dt = 0.5
[observables]
imbalance = true
"""


def _tables(out):
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in out.rglob("*.csv")}


def test_simulate_writes_tables_and_manifest(tmp_path, write_config):
    out = tmp_path / "out"
    assert main(["simulate", str(write_config(DIMER)), "--out", str(out), "--workers", "1"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    listed = {f["path"]: f["sha256"] for f in manifest["files"]}
    assert set(listed) == {"no/trajectory.csv", "so/trajectory.csv"}
    for path, digest in listed.items():
        assert runner.sha256(out / path) == digest
    header, rows, _ = runner.read_csv(out / "so" / "trajectory.csv")
    assert header[:5] == ["t", "re_1", "im_1", "re_2", "im_2"]
    assert {"norm", "energy", "drift_norm", "drift_energy", "imbalance"} <= set(header)
    assert len(rows) == 5 and rows[0][header.index("imbalance")] == "4"
    assert manifest["status"] == "ok" and manifest["version"] == "0.1.0"


def test_reruns_are_byte_identical(tmp_path, write_config):
    cfg = write_config(DIMER)
    for name in ("a", "b"):
        assert main(["simulate", str(cfg), "--out", str(tmp_path / name), "--workers", "1"]) == 0
    assert _tables(tmp_path / "a") == _tables(tmp_path / "b")


def test_parallel_matches_serial(tmp_path, write_config):
    cfg = write_config(DIMER)
    main(["simulate", str(cfg), "--out", str(tmp_path / "s"), "--workers", "1"])
    main(["simulate", str(cfg), "--out", str(tmp_path / "p"), "--workers", "2"])
    assert _tables(tmp_path / "s") == _tables(tmp_path / "p")


def test_zero_horizon_run(tmp_path):
    cfg = parse_config(DIMER.replace("t_end = 2.0", "t_end = 0.0").replace('"both"', '"no"'))
    runner.run(cfg, tmp_path, workers=1)
    header, rows, _ = runner.read_csv(tmp_path / "trajectory.csv")
    assert len(rows) == 1 and float(rows[0][1]) == 2.0 and float(rows[0][3]) == 0.0


def test_exit_code_config_error(tmp_path, write_config, capsys):
    bad = write_config(DIMER.replace("m = 3", "m = 0"))
    assert main(["simulate", str(bad), "--out", str(tmp_path)]) == 2
    assert "gdst.m" in capsys.readouterr().err
    assert main(["simulate", str(tmp_path / "missing.toml"), "--out", str(tmp_path)]) == 2
    unknown = write_config(DIMER + "bogus = 1\n")
    assert main(["simulate", str(unknown), "--out", str(tmp_path)]) == 2


ALTERNATE_XXZ = """
model = "xxz"
[xxz]
f = 5
v = 1.0
g = 0.7
form = "alternate"
[initial]
coords = [[0.5, 0.2], [1.2, -0.4], [-0.3, 0.9], [1.5, 1.0], [0.1, -0.2]]
[integrator]
t_end = 100.0
dt = 0.5
"""


def test_exit_code_numerical_failure_keeps_partial_output(tmp_path, write_config):
    # the alternate spin equation runs away to |z| -> infinity and the step size underflows
    out = tmp_path / "fail"
    code = main(["simulate", str(write_config(ALTERNATE_XXZ)), "--out", str(out)])
    manifest = json.loads((out / "manifest.json").read_text())
    assert code == 3 and manifest["status"] == "failed"
    run = manifest["runs"][0]
    assert run["status"] == "failed" and 0 < run["t_reached"] < 100
    assert [f["path"] for f in manifest["files"]] == ["trajectory_partial.csv"]
    _, _, comments = runner.read_csv(out / "trajectory_partial.csv")
    assert comments and comments[0].startswith("PARTIAL")


def test_qfunc_and_poisson_subcommands(tmp_path, write_config):
    cfg = write_config(DIMER.replace('"both"', '"no"'))
    assert main(["qfunc", str(cfg), "--out", str(tmp_path / "q"), "--ordering", "so"]) == 0
    manifest = json.loads((tmp_path / "q" / "manifest.json").read_text())
    assert manifest["config"]["ordering"] == "so"
    names = {f["path"] for f in manifest["files"]}
    assert {"qfunc_site1_t0.csv", "qfunc_site2_t0.csv"} <= names
    header, rows, comments = runner.read_csv(tmp_path / "q" / "qfunc_site1_t0.csv")
    assert header == ["x", "y", "q"] and comments[1].startswith("grid ")
    assert main(["poisson", str(cfg), "--out", str(tmp_path / "p")]) == 0
    header, rows, _ = runner.read_csv(tmp_path / "p" / "poisson_t0.csv")
    assert header == ["n", "site_1", "site_2"] and rows[-1][0] == "tail"


def test_sweep_empty_list(tmp_path, write_config):
    cfg = write_config(DIMER.replace("t_end = 2.0", "t_end = 0.0") + "[sweep]\nn_values = []\n")
    assert main(["sweep-gamma", str(cfg), "--out", str(tmp_path)]) == 0
    header, rows, _ = runner.read_csv(tmp_path / "sweep.csv")
    assert header == runner.SWEEP_HEADER and rows == []


def test_sweep_bracket_failure_recorded(tmp_path, write_config):
    text = DIMER.replace('"both"', '"no"') + "[sweep]\nn_values = [10, 2]\nbracket = [0.05, 0.1]\n"
    assert main(["sweep-gamma", str(write_config(text)), "--out", str(tmp_path), "--workers", "1"]) == 3
    header, rows, _ = runner.read_csv(tmp_path / "sweep.csv")
    status = header.index("status")
    assert rows[0][status].startswith("failed") and len(rows) == 2
    assert rows[1][status].startswith("failed")  # N=2 threshold 1.0 is also outside


def test_sweep_requires_gdst(tmp_path, write_config):
    text = """
model = "mdnls"
[mdnls]
f = 3
x = 1.0
[initial]
amplitudes = [1, 0, 0]
[integrator]
t_end = 1.0
"""
    assert main(["sweep-gamma", str(write_config(text)), "--out", str(tmp_path)]) == 2


def test_exact_compare_t0_row(tmp_path, write_config):
    text = DIMER.replace('"both"', '"no"')
    assert main(["exact-compare", str(write_config(text)), "--out", str(tmp_path)]) == 0
    header, rows, _ = runner.read_csv(tmp_path / "exact_compare_no.csv")
    first = dict(zip(header, map(float, rows[0])))
    assert first["corr_index"] <= 10 * first["tail_mass"] + 1e-15
    assert first["n_exact_1"] == pytest.approx(first["n_quasi_1"], abs=1e-9)


def test_exact_compare_cutoff_too_small(tmp_path, write_config):
    text = DIMER.replace('"both"', '"no"') + "[exact]\nn_max = 5\n"
    assert main(["exact-compare", str(write_config(text)), "--out", str(tmp_path)]) == 3


def test_geometry_subcommand(tmp_path, capsys):
    assert main(["geometry", "--out", str(tmp_path), "--seed", "7"]) == 0
    assert "FAIL" not in capsys.readouterr().out
    header, rows, comments = runner.read_csv(tmp_path / "geometry.csv")
    assert header == runner.GEOMETRY_HEADER and comments == ["seed=7"]
    assert all(r[-1] == "1" for r in rows)


def test_module_entry_point(cli):
    proc = cli("--version")
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
