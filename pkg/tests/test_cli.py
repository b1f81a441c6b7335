import json

import pytest

from annealsim import cli
from annealsim.errors import StiffnessError

PTRE = """model = "ptre"
output = "ptre.csv"
[problem]
n = 4
initial = "0001"
[protocol]
s_inv = {start = 0.02, stop = 0.88, step = 0.02}
tau_ns = 50.0
"""

SVMC = """model = "svmc"
output = "svmc.csv"
[problem]
n = 4
initial = "0001"
[protocol]
s_inv = [0.3, 0.5, 0.7]
[svmc]
sweeps_tau = 60
samples = 97
seed = [1, 2]
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def body(path):
    return path.read_text().splitlines()[1:]


def test_dry_run(tmp_path, capsys):
    cfg = write(tmp_path, PTRE)
    assert cli.main(["run", str(cfg), "--dry-run"]) == 0
    assert "points=44" in capsys.readouterr().out
    assert not (tmp_path / "ptre.csv").exists()


def test_ptre_sweep_writes_rows_and_manifest(tmp_path):
    cfg = write(tmp_path, PTRE)
    assert cli.main(["run", str(cfg), "--threads", "4"]) == 0
    out = tmp_path / "ptre.csv"
    lines = out.read_text().splitlines()
    assert lines[0] == "model,n,s_inv,tau_ns,t_pause_ns,r,seed,total,p_up,p_down,stderr"
    assert len(lines) == 45
    first = lines[1].split(",")
    assert first[:7] == ["ptre", "4", "0.02", "50", "0", "1", "0"]
    total, up, down = map(float, first[7:10])
    assert total == pytest.approx(up + down, abs=1e-11)
    man = json.loads((tmp_path / "ptre.manifest.json").read_text())
    assert man["status"] == "ok" and man["rows_written"] == 44 and "numpy" in man["versions"]


@pytest.mark.parametrize("text", [
    'model = "nope"\n[protocol]\ns_inv = 0.5\n',
    'model = "ptre"\n[protocol]\ns_inv = 1.5\n',
    'model = "ptre"\n[protocol]\ns_inv = 0.5\nbogus = 1\n',
    'model = "ptre"\n[problem]\nn = 4\ninitial = "0000012"\n[protocol]\ns_inv = 0.5\n',
    'model = "svmc"\n[protocol]\ns_inv = 0.5\n[svmc]\nvariant = "glauber"\n',
    'model = "ptre"\n[protocol\n',
])
def test_config_errors(tmp_path, text):
    assert cli.main(["run", str(write(tmp_path, text))]) == cli.EXIT_CONFIG


def test_missing_files(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.toml")]) == cli.EXIT_CONFIG
    cfg = write(tmp_path, PTRE)
    assert cli.main(["run", str(cfg), "--schedule", str(tmp_path / "none.csv")]) == cli.EXIT_CONFIG


def test_solver_failure_keeps_completed_rows(tmp_path, monkeypatch):
    cfg = write(tmp_path, PTRE.replace("{start = 0.02, stop = 0.88, step = 0.02}", "[0.2, 0.4, 0.6, 0.8]"))

    def fake_runner(cfg, sched):
        def run(pt):
            if pt.s_inv > 0.5:
                raise StiffnessError("step size underflow")
            return 0.5, 0.25, 0.25, 0.0
        return run

    monkeypatch.setattr(cli, "make_runner", fake_runner)
    assert cli.main(["run", str(cfg)]) == cli.EXIT_SOLVER
    assert len(body(tmp_path / "ptre.csv")) == 2
    man = json.loads((tmp_path / "ptre.manifest.json").read_text())
    assert man["status"] == "failed" and "StiffnessError" in man["error"]


def test_svmc_thread_determinism(tmp_path):
    cfg = write(tmp_path, SVMC)
    outputs = []
    for threads in (1, 4, 8):
        out = tmp_path / f"svmc_{threads}.csv"
        assert cli.main(["run", str(cfg), "--threads", str(threads), "--output", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    assert len(outputs[0].splitlines()) == 1 + 3 * 2


def test_spectrum_command(tmp_path, capsys):
    out = tmp_path / "gap.csv"
    assert cli.main(["spectrum", "--n", "6", "--output", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("s_delta ")
    assert out.read_text().startswith("s,gap_radns\n")
    assert cli.main(["spectrum", "--n", "4", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["n_qubits"] == 4


def test_bound_command(capsys):
    assert cli.main(["bound", "--n", "4", "--state", "0001"]) == 0
    assert capsys.readouterr().out.strip() == "0.25"
    assert cli.main(["bound", "--n", "4", "--state", "0011", "--total", "0.1"]) == 0
    assert cli.main(["bound", "--n", "4", "--state", "0011", "--total", "0.2"]) == 1
    assert cli.main(["bound", "--n", "4", "--state", "00x1"]) == cli.EXIT_CONFIG


def reference_manifest(tmp_path, n=2):
    (tmp_path / "up.csv").write_text("s_inv,value,stderr\n0.3,0.9,0\n0.6,0.4,0\n")
    (tmp_path / "down.csv").write_text("s_inv,value,stderr\n0.3,0.05,0\n0.6,0.01,0\n")
    ref = tmp_path / "reference.toml"
    ref.write_text(f'n = {n}\n[[curve]]\nfile = "up.csv"\ninitial = "01"\nbranch = "up"\n'
                   '[[curve]]\nfile = "down.csv"\ninitial = "01"\nbranch = "down"\n')
    return ref


def test_calibrate_command(tmp_path, capsys):
    ref = reference_manifest(tmp_path)
    grid = tmp_path / "grid.toml"
    grid.write_text("W_mk = [6, 8]\nT_mk = [25]\neta_g2 = [2.5e-3]\n")
    table = tmp_path / "loss.csv"
    assert cli.main(["calibrate", "--reference", str(ref), "--grid", str(grid), "--dry-run"]) == 0
    assert "cells=2 curves=2" in capsys.readouterr().out
    args = ["calibrate", "--reference", str(ref), "--grid", str(grid), "--tau", "20", "--table", str(table)]
    assert cli.main(args) == 0
    assert "best W_mk=" in capsys.readouterr().out
    assert table.read_text().splitlines()[0] == "W_mk,T_mk,eta_g2,loss"
    assert len(table.read_text().splitlines()) == 3


def test_optimize_command(tmp_path, capsys):
    ref = reference_manifest(tmp_path)
    args = ["optimize-sweeps", "--reference", str(ref), "--candidates", "20,40", "--samples", "30"]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    assert "sweeps=20 loss=" in out and "best sweeps=" in out
    assert cli.main(args[:3] + ["--candidates", "a,b"]) == cli.EXIT_CONFIG


def test_reference_errors(tmp_path):
    bad = tmp_path / "ref.toml"
    bad.write_text("n = 2\n")
    assert cli.main(["optimize-sweeps", "--reference", str(bad)]) == cli.EXIT_CONFIG
    bad.write_text('n = 2\n[[curve]]\nfile = "missing.csv"\ninitial = "01"\n')
    assert cli.main(["calibrate", "--reference", str(bad), "--dry-run"]) == cli.EXIT_CONFIG
