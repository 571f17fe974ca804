import subprocess
import sys

import pytest


def jamlab(*args):
    """Drive the simulation package through its CLI, the component boundary."""
    proc = subprocess.run([sys.executable, "-m", "jamlab.cli", *map(str, args)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


@pytest.fixture(scope="session")
def csv_dir(tmp_path_factory):
    """Small-scale versions of every CSV the figure kinds consume."""
    root = tmp_path_factory.mktemp("csv")
    jamlab("model", "fd", "--out", root / "model_fd.csv", "--n", "64")
    jamlab("jamiton", "fd", "--out", root / "fd_jamitons.csv", "--n", "16")
    jamlab("jamiton", "construct", "--rho-s", "0.433", "--v-minus", "26",
           "--samples", "128", "--out", root / "profile.csv")
    jamlab("accuracy-table", "--out", root / "convergence.csv",
           "--max-n", "80", "--taus", "5", "--t-finals", "0.5")
    jamlab("batch-collide", "--candidates", "2", "--n-scan", "40",
           "--out", root / "batch.csv")
    return root
