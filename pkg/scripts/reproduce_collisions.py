#!/usr/bin/env python3
"""Collision campaign: candidate batch at tau = 5 plus an optional tau sweep.

Selects the test wave automatically (widest admissible v_minus window),
collides every candidate with it, and writes the record CSVs consumed by
the figure renderer.

    python scripts/reproduce_collisions.py --candidates 24 --out-dir results/
    python scripts/reproduce_collisions.py --candidates 6 --taus 1,5,10
"""

import argparse
import time
from pathlib import Path

from jamlab import collision
from jamlab.model import ModelParams


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--candidates", type=int, default=24)
    parser.add_argument("--cells", type=int, default=160)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--taus", default=None,
                        help="comma-separated taus for an additional sweep")
    parser.add_argument("--out-dir", default=".", dest="out_dir")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = ModelParams()

    t0 = time.monotonic()
    rho_s_test, v_minus_test = collision.choose_test_jamiton(p)
    print(f"test wave: rho_s/rho_max = {rho_s_test / p.rho_max:.5f}, "
          f"v_minus = {v_minus_test:.4f}")
    cset = collision.compatible_densities(v_minus_test, p, n_scan=200,
                                          rho_s_test=rho_s_test)
    print(f"{cset.candidates.size} admissible densities "
          f"({len(cset.excluded)} excluded)")
    picks = collision.select_candidates(cset, args.candidates)

    records = collision.batch_collide(cset, p, candidates=picks,
                                      n_cells=args.cells, workers=args.workers)
    batch_csv = out_dir / "batch.csv"
    collision.write_records_csv(records, batch_csv)
    settled = sum(r.status == "settled" for r in records)
    print(f"batch: {len(records)} runs, {settled} settled "
          f"-> {batch_csv} ({time.monotonic() - t0:.0f}s)")

    if args.taus:
        taus = [float(v) for v in args.taus.split(",")]
        t0 = time.monotonic()
        sweep = collision.tau_sweep(cset, p, taus=taus, candidates=picks,
                                    n_cells=args.cells, workers=args.workers)
        sweep_csv = out_dir / "sweep.csv"
        collision.write_records_csv(
            [rec for tau in taus for rec in sweep[tau]], sweep_csv)
        print(f"tau sweep over {taus} -> {sweep_csv} "
              f"({time.monotonic() - t0:.0f}s)")


if __name__ == "__main__":
    main()
