#!/usr/bin/env python3
"""Grid-refinement study of the split scheme against the exact traveling wave.

Writes a long-format CSV (one row per N, tau, t_final) and prints the two
classic wide tables: relative L1 errors of (rho, u), and relative errors of
the regression-recovered wave parameters (s, m).

    python scripts/reproduce_accuracy.py --out accuracy.csv
    python scripts/reproduce_accuracy.py --quick        # N <= 320 only
"""

import argparse
import csv

from jamlab.cli import accuracy_sweep
from jamlab.model import ModelParams


def print_wide(rows, keys, label):
    taus = sorted({r["tau"] for r in rows})
    t_finals = sorted({r["t_final"] for r in rows})
    ns = sorted({r["n_cells"] for r in rows})
    print(f"\n{label}")
    header = "N".rjust(6)
    for tf in t_finals:
        for tau in taus:
            for key in keys:
                header += f"  {key}[t={tf:g},tau={tau:g}]".rjust(20)
    print(header)
    index = {(r["n_cells"], r["tau"], r["t_final"]): r for r in rows}
    for n in ns:
        line = f"{n:6d}"
        for tf in t_finals:
            for tau in taus:
                r = index[(n, tau, tf)]
                for key in keys:
                    line += f"{r[key]:20.5f}"
        print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="accuracy.csv")
    parser.add_argument("--rho-s", type=float, default=0.433, dest="rho_s")
    parser.add_argument("--v-minus", type=float, default=26.0, dest="v_minus")
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()

    n_list = [20, 40, 80, 160, 320] if args.quick else [20, 40, 80, 160, 320,
                                                        640, 1280, 2560]
    taus = [1.0, 5.0, 10.0]
    t_finals = [0.5, 2.0]
    rows = accuracy_sweep(ModelParams(), args.rho_s, args.v_minus,
                          n_list, taus, t_finals)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    print_wide(rows, ("eps_rho", "eps_u"), "relative L1 errors [%]")
    print_wide([r for r in rows if r["t_final"] == t_finals[-1]],
               ("eps_s", "eps_m"),
               "wave-parameter regression errors [%] (final time only)")


if __name__ == "__main__":
    main()
