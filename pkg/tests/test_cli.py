import csv
import subprocess
import sys

import pytest

from jamlab import cli
from jamlab.model import ModelParams


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestModelFD:
    def test_writes_flow_comparison(self, tmp_path):
        out = tmp_path / "fd.csv"
        cli.main(["model", "fd", "--out", str(out), "--n", "32"])
        rows = read_csv(out)
        assert list(rows[0].keys()) == ["rho", "Q_smooth", "Q_nd", "Q_greenshields"]
        assert len(rows) == 32
        assert float(rows[0]["Q_smooth"]) == pytest.approx(0.0, abs=1e-14)
        assert float(rows[-1]["Q_nd"]) == pytest.approx(0.0, abs=1e-14)

    def test_respects_params_file(self, tmp_path):
        cfg = tmp_path / "params.cfg"
        cfg.write_text("u_max = 30\n")
        out = tmp_path / "fd.csv"
        cli.main(["model", "fd", "--out", str(out), "--n", "16",
                  "--params", str(cfg)])
        rows = read_csv(out)
        p = ModelParams(u_max=30.0)
        mid = rows[8]
        import jamlab.model as model
        assert float(mid["Q_greenshields"]) == pytest.approx(
            model.greenshields_flow(float(mid["rho"]), p), rel=1e-12)


class TestJamitonCLI:
    def test_construct_profile(self, tmp_path):
        out = tmp_path / "profile.csv"
        cli.main(["jamiton", "construct", "--rho-s", "0.433", "--v-minus", "26",
                  "--samples", "128", "--out", str(out)])
        lines = out.read_text().splitlines()
        header = {ln.split(",")[0][2:]: float(ln.split(",")[1])
                  for ln in lines[:5]}
        assert header["m"] == pytest.approx(0.356, abs=0.005)
        assert header["s"] == pytest.approx(6.374, abs=0.005)
        assert set(header) == {"m", "s", "L", "N", "A"}
        assert lines[5] == "x,v,rho,u"
        assert len(lines) == 6 + 128

    def test_fd_geometry(self, tmp_path):
        out = tmp_path / "fd_jam.csv"
        cli.main(["jamiton", "fd", "--out", str(out), "--n", "12"])
        rows = read_csv(out)
        assert len(rows) == 12
        assert {"rho_s", "m", "s", "rho_M", "q_M", "rho_R", "q_R",
                "rho_star", "q_star", "skipped"} == set(rows[0].keys())


class TestSimulateEstimate:
    def test_jamiton_run_and_estimate(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "ic = jamiton\nrho_s = 0.433\nv_minus = 26\nn_cells = 80\n"
            "cfl = 0.5\ntau = 5\nt_final = 0.5\nsnapshot_stride = 100\n")
        out = tmp_path / "traj.csv"
        cli.main(["simulate", "--config", str(cfg), "--out", str(out)])
        blocks = cli.read_trajectory(out)
        assert blocks[0][0] == 0.0
        assert blocks[-1][0] == pytest.approx(0.5, abs=1e-12)
        assert blocks[0][1].size == 80

        cli.main(["estimate", "--in", str(out), "--t", "0.5"])
        printed = capsys.readouterr().out
        s_line = [ln for ln in printed.splitlines() if ln.startswith("s_est")][0]
        assert float(s_line.split("=")[1]) == pytest.approx(6.374, abs=0.05)

    def test_gaussian_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "ic = gaussian\nrho_bar = 0.055\namp = 0.01\ncenter = 250\n"
            "width = 30\ndomain_length = 500\nn_cells = 64\nt_final = 1\n")
        out = tmp_path / "traj.csv"
        cli.main(["simulate", "--config", str(cfg), "--out", str(out)])
        blocks = cli.read_trajectory(out)
        assert blocks[-1][0] == pytest.approx(1.0, abs=1e-12)

    def test_two_jamiton_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "ic = two-jamiton\nrho_s = 0.425\nrho_s_2 = 0.443\nv_minus = 25\n"
            "n_cells = 80\nt_final = 0.2\n")
        out = tmp_path / "traj.csv"
        cli.main(["simulate", "--config", str(cfg), "--out", str(out)])
        blocks = cli.read_trajectory(out)
        assert blocks[-1][0] == pytest.approx(0.2, abs=1e-12)

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("ic = jamiton\nbogus = 1\n")
        with pytest.raises(ValueError, match="unknown key"):
            cli.main(["simulate", "--config", str(cfg), "--out",
                      str(tmp_path / "t.csv")])


class TestAccuracyTable:
    def test_small_sweep(self, tmp_path):
        out = tmp_path / "table.csv"
        cli.main(["accuracy-table", "--out", str(out), "--max-n", "40",
                  "--taus", "5", "--t-finals", "0.5"])
        rows = read_csv(out)
        assert [int(r["n_cells"]) for r in rows] == [20, 40]
        assert float(rows[1]["eps_rho"]) < float(rows[0]["eps_rho"])
        assert float(rows[0]["mass_drift"]) < 1e-10


class TestCollisionCLI:
    def test_single_collision(self, tmp_path):
        out = tmp_path / "rec.csv"
        cli.main(["collide", "--rho-s-other", "0.33", "--out", str(out)])
        rows = read_csv(out)
        assert len(rows) == 1
        assert rows[0]["status"] in {"settled", "timeout", "no-collision"}
        assert list(rows[0].keys())[:3] == ["rho_s_in", "tau", "s_out"]

    def test_explicit_pair(self, tmp_path):
        out = tmp_path / "rec.csv"
        cli.main(["collide", "--rho-s-other", "0.443", "--rho-s-test", "0.425",
                  "--v-minus", "25", "--out", str(out)])
        rows = read_csv(out)
        assert rows[0]["status"] == "settled"

    def test_batch(self, tmp_path):
        out = tmp_path / "batch.csv"
        cli.main(["batch-collide", "--candidates", "2", "--workers", "2",
                  "--n-scan", "40", "--out", str(out)])
        rows = read_csv(out)
        assert len(rows) == 2


def test_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "jamlab.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("model", "jamiton", "simulate", "estimate", "accuracy-table",
                "collide", "batch-collide", "sweep-tau"):
        assert sub in proc.stdout
