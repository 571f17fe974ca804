#!/usr/bin/env python3
"""End-to-end pipeline: generate every CSV via the jamlab CLI, then render.

Produces the flow-comparison, wave-geometry, profile, convergence, batch and
tau-sweep CSVs in --work-dir, writes a jobfile, and (if the jamlab-figures
package is installed) renders all five figure kinds.

    python scripts/make_all_figures.py --work-dir results/ --quick
"""

import argparse
import shutil
import subprocess
import sys
from pathlib import Path


def run(*cmd):
    print("+", " ".join(str(c) for c in cmd))
    subprocess.run([str(c) for c in cmd], check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--work-dir", default="results", dest="work_dir")
    parser.add_argument("--quick", action="store_true",
                        help="small grids and few candidates")
    args = parser.parse_args()

    work = Path(args.work_dir)
    work.mkdir(parents=True, exist_ok=True)
    py = sys.executable
    candidates = "6" if args.quick else "24"
    max_n = "160" if args.quick else "1280"

    run(py, "-m", "jamlab.cli", "model", "fd", "--out", work / "model_fd.csv")
    run(py, "-m", "jamlab.cli", "jamiton", "fd", "--out", work / "fd_jamitons.csv",
        "--n", "48")
    run(py, "-m", "jamlab.cli", "jamiton", "construct", "--rho-s", "0.433",
        "--v-minus", "26", "--samples", "1024", "--out", work / "profile.csv")
    run(py, "-m", "jamlab.cli", "accuracy-table", "--out", work / "convergence.csv",
        "--max-n", max_n)
    run(py, "-m", "jamlab.cli", "batch-collide", "--candidates", candidates,
        "--out", work / "batch.csv")
    run(py, "-m", "jamlab.cli", "sweep-tau", "--taus", "1,5,10",
        "--candidates", candidates if args.quick else "6",
        "--out", work / "sweep.csv")

    jobfile = work / "figures.txt"
    jobfile.write_text("\n".join([
        "fd model_fd.csv fd_jamitons.csv -> figs/fd.png",
        "profile profile.csv -> figs/profile.png",
        "collision-panels batch.csv fd_jamitons.csv -> figs/collision_panels.png",
        "el sweep.csv -> figs/el.png",
        "convergence convergence.csv -> figs/convergence.png",
    ]) + "\n")
    print(f"jobfile -> {jobfile}")

    if shutil.which("render_figures"):
        run("render_figures", jobfile)
    else:
        print("render_figures not installed; run "
              "`pip install -e figures/ --no-build-isolation` and then "
              f"`render_figures {jobfile}`")


if __name__ == "__main__":
    main()
