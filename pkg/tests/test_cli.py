import math
import shutil

import numpy as np
import pytest

from lcflow.cli import main
from lcflow.io import read_diagnostics, read_snapshot
from lcflow.rigidity import SWEEP_COLUMNS

HEMISPHERE = """
system = liquid_crystal
grid.n = 32
scenario.name = hemisphere
scenario.epsilon0 = 0.5
velocity.kind = random
velocity.energy = 0.5
step.mode = fixed
step.dt = 0.005
run.t_end = 0.1
run.snapshot_interval = 0.05
output.dir = {out}
"""


def radial_config(sup, out):
    n, L, cfl = 128, 8.0, 0.2
    return f"""
system = heat_flow
grid.n = {n}
grid.L = {L}
scenario.name = radial
scenario.sup_psi = {sup!r}
step.cfl = {cfl}
step.dt_min = {cfl * (L / n) ** 2!r}
run.t_end = 1.0
run.record_interval = 0.05
output.dir = {out}
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestSimulate:
    def test_outputs_and_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["simulate", "--config", write(tmp_path, "c.cfg", HEMISPHERE.format(out=out))]) == 0
        recs = read_diagnostics(out / "diagnostics.csv")
        assert recs[0].t == 0.0 and recs[-1].t == pytest.approx(0.1)
        assert len(recs) == 21
        assert read_snapshot(out / "final.hfld").t == pytest.approx(0.1)
        assert (out / "snapshot_00001.hfld").exists() and (out / "snapshot_00002.hfld").exists()
        assert "status=completed" in capsys.readouterr().out

    def test_resume_matches_uninterrupted(self, tmp_path):
        out = tmp_path / "run"
        cfg = write(tmp_path, "c.cfg", HEMISPHERE.format(out=out))
        assert main(["simulate", "--config", cfg]) == 0
        full = read_diagnostics(out / "diagnostics.csv")
        snap = tmp_path / "mid.hfld"
        shutil.copy(out / "snapshot_00001.hfld", snap)
        assert main(["simulate", "--config", cfg, "--resume", str(snap)]) == 0
        resumed = read_diagnostics(out / "diagnostics.csv")
        assert len(resumed) == len(full)
        for a, b in zip(full, resumed):
            for x, y in zip(a.row(), b.row()):
                assert x == pytest.approx(y, rel=1e-12, abs=1e-12)

    def test_resume_without_matching_row(self, tmp_path, capsys):
        out = tmp_path / "run"
        cfg = write(tmp_path, "c.cfg", HEMISPHERE.format(out=out))
        assert main(["simulate", "--config", cfg]) == 0
        (out / "diagnostics.csv").write_text((out / "diagnostics.csv").read_text().splitlines()[0] + "\n")
        assert main(["simulate", "--config", cfg, "--resume", str(out / "snapshot_00001.hfld")]) == 1
        assert "no diagnostics row" in capsys.readouterr().err

    def test_sub_pi_completes(self, tmp_path):
        cfg = write(tmp_path, "c.cfg", radial_config(0.8 * math.pi, tmp_path / "sub"))
        assert main(["simulate", "--config", cfg]) == 0

    def test_super_pi_blows_up(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.cfg", radial_config(1.2 * math.pi, tmp_path / "super"))
        assert main(["simulate", "--config", cfg]) == 2
        assert "blowup_detected" in capsys.readouterr().out

    def test_bad_config_exit_one(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.cfg", "system = heat_flow\ngrid.n = 100\n")
        assert main(["simulate", "--config", cfg]) == 1
        assert "grid.n" in capsys.readouterr().err

    def test_missing_config_exit_one(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "none.cfg")]) == 1


class TestOtherCommands:
    def test_usage_error_is_not_blowup_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate"])
        assert exc.value.code == 1

    def test_check_single_suite(self, capsys):
        assert main(["check", "--suite", "spectral"]) == 0
        out = capsys.readouterr().out
        assert "[spectral] PASS" in out and "FAIL" not in out

    def test_rigidity_row(self, tmp_path, capsys):
        out = tmp_path / "row.csv"
        args = ["rigidity", "--epsilon0", "0.5", "--c0", "5", "--grid-n", "32", "--starts", "1", "--max-iter", "5"]
        assert main(args + ["--out", str(out)]) == 0
        header, row = out.read_text().splitlines()
        assert header.split(",") == list(SWEEP_COLUMNS)
        values = dict(zip(SWEEP_COLUMNS, row.split(",")))
        assert 0 < float(values["delta0_estimate"]) < 1
        assert capsys.readouterr().out.startswith(header)

    def test_spectrum(self, tmp_path):
        out = tmp_path / "run"
        assert main(["simulate", "--config", write(tmp_path, "c.cfg", HEMISPHERE.format(out=out))]) == 0
        spec = tmp_path / "spec.csv"
        assert main(["spectrum", "--snapshot", str(out / "final.hfld"), "--out", str(spec)]) == 0
        data = np.loadtxt(spec, delimiter=",", skiprows=1)
        assert data.shape[1] == 4 and np.all(data[:, 2:] >= 0)
        assert spec.read_text().splitlines()[0] == "shell,k,E_u,E_grad_d"

    def test_spectrum_bad_snapshot(self, tmp_path):
        bad = tmp_path / "bad.hfld"
        bad.write_bytes(b"nope")
        assert main(["spectrum", "--snapshot", str(bad), "--out", str(tmp_path / "s.csv")]) == 1
