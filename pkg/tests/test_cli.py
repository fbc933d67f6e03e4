import json

import pytest

from udwqc.cli import main, preset_names, preset_text

FAILING_SOLVER = """\
kind = "device"

[params]
epsilon = 1.0
mass = 1.0
lambda = 1.0
lattice_constant = 0.65

[geometry]
nx = 12
ny = 12

[window]
e_min = -0.2
e_max = 0.2
max_pairs = 32

[solver]
max_iterations = 1
max_restarts = 0
krylov_factor = 2
initial_pairs = 30
"""

SMALL_BANDS = """\
kind = "device"

[params]
epsilon = 1.0
mass = 1.6
lambda = 0.3
lattice_constant = 0.65

[geometry]
nx = 2
ny = 40

[window]
e_min = -0.1
e_max = 0.1

[bands]
width = 40
k_count = 41
k_min = -0.6
k_max = 0.6
"""


def listing(d):
    return sorted(p.name for p in d.iterdir()) if d.exists() else []


def test_constraints(tmp_path, capsys):
    assert main(["constraints", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "30.0 fs" in out and "55.6 fs" in out and "2.0 ps" in out
    lines = (tmp_path / "table_i.csv").read_text().splitlines()
    assert lines[0] == "T_K,B0_T,f_e_GHz,p_th"
    assert [float(x) for x in lines[1].split(",")[:3]] == pytest.approx([4.2, 1.4, 39.2])
    assert listing(tmp_path) == ["scenarios.csv", "table_i.csv"]


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", "ribbon_12x60", "--out-dir", str(a)]) == 0
    assert main(["simulate", "--config", "ribbon_12x60", "--out-dir", str(b), "--threads", "2"]) == 0
    names = listing(a)
    assert names == ["density.csv", "density.pgm", "eigenvalues.csv", "solver_report.json",
                     "spin.csv", "spin.pgm"]
    for n in names:
        if n.endswith((".csv", ".pgm")):
            assert (a / n).read_bytes() == (b / n).read_bytes(), n
    rows = (a / "eigenvalues.csv").read_text().splitlines()
    assert rows[0] == "index,energy_eV,residual_eV" and len(rows) == 9


def test_seed_flag(tmp_path):
    cfg = tmp_path / "r.cfg"
    cfg.write_text(preset_text("ribbon_12x60"))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "o"), "--seed", "11"]) == 0
    assert main(["simulate", "--config", str(cfg), "--seed", "-1"]) == 2


def test_bad_config_writes_nothing(tmp_path, capsys):
    text = preset_text("single_rank_one").replace("sigma = 1.0", "sigma = -1.0", 1)
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    out = tmp_path / "out"
    assert main(["channel", "--config", str(cfg), "--out-dir", str(out)]) == 2
    err = capsys.readouterr().err
    assert "encoder.factors[0].sigma" in err and "line" in err
    assert listing(out) == []


def test_missing_and_unknown_config(tmp_path):
    assert main(["simulate", "--out-dir", str(tmp_path)]) == 2
    assert main(["simulate", "--config", "no_such_preset", "--out-dir", str(tmp_path)]) == 2
    assert main(["simulate", "--config", "two_rank_one", "--out-dir", str(tmp_path)]) == 2
    assert listing(tmp_path) == []


def test_non_gaussian_refused(tmp_path, capsys):
    assert main(["channel", "--config", "cosine_gate", "--out-dir", str(tmp_path)]) == 2
    assert "NonGaussian" in capsys.readouterr().err
    assert listing(tmp_path) == []


def test_solver_failure_exit_code(tmp_path):
    cfg = tmp_path / "f.cfg"
    cfg.write_text(FAILING_SOLVER)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out)]) == 1
    assert listing(out) == ["solver_report.json"]
    rep = json.loads((out / "solver_report.json").read_text())
    assert rep["partial"] is True and rep["converged"] is False


def test_channel_and_oracle(tmp_path):
    out = tmp_path / "c"
    assert main(["channel", "--config", "two_rank_one", "--out-dir", str(out)]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "J,sigma,I_c,branch_count" and len(rows) == 10
    assert float(rows[-1].split(",")[2]) > 0.9
    oracle = (out / "oracle.csv").read_text().splitlines()[1:]
    assert all(float(r.split(",")[1]) < 1e-6 for r in oracle)
    out2 = tmp_path / "o"
    assert main(["oracle", "--config", "two_rank_one", "--out-dir", str(out2)]) == 0
    assert listing(out2) == ["oracle.csv"]
    assert main(["oracle", "--config", "single_rank_one", "--out-dir", str(out2)]) == 2


def test_bands(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text(SMALL_BANDS)
    out = tmp_path / "out"
    assert main(["bands", "--config", str(cfg), "--out-dir", str(out)]) == 0
    head = (out / "bands.csv").read_text().splitlines()[0].split(",")
    assert head[0] == "k" and len(head) == 161
    summary = json.loads((out / "bands_summary.json").read_text())
    assert all(v is not None for v in summary["velocity_nm_per_ns"].values())
    assert main(["bands", "--config", "ribbon_12x60", "--out-dir", str(out)]) == 2


def test_environment_defaults(tmp_path, monkeypatch):
    monkeypatch.setenv("UDWQC_OUT_DIR", str(tmp_path / "env"))
    monkeypatch.setenv("UDWQC_THREADS", "2")
    assert main(["constraints"]) == 0
    assert listing(tmp_path / "env") == ["scenarios.csv", "table_i.csv"]
    monkeypatch.setenv("UDWQC_THREADS", "many")
    assert main(["constraints"]) == 2
    assert main(["constraints", "--threads", "0"]) == 2


def _command(name):
    text = preset_text(name)
    if 'kind = "channel"' in text:
        return "channel"
    return "bands" if "[bands]" in text else "simulate"


@pytest.mark.parametrize("name", preset_names())
def test_preset_runs(name, tmp_path):
    code = main([_command(name), "--config", name, "--out-dir", str(tmp_path)])
    assert code == (2 if name == "cosine_gate" else 0)
