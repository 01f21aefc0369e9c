#!/usr/bin/env python3
"""Error-versus-sample-size sweep for a fixed tree on its candidate grid.

Writes the per-trial table to CSV and prints the log-log slope of the median
error, which should sit near -1/2 when errors stay above the net resolution.
"""

import argparse
import json

import numpy as np

from spnkit import ScalingConfig, scaling_experiment, write_rows_csv

DEFAULT_CONFIG = {
    "structures": [
        {
            "structure_id": "leaf2",
            "signature": "(f1,{1})",
            "n": 1,
            "support": 2,
            "truth_alpha": 6.0,
        },
    ],
    "eps_grid": [1.0 / 60.0],
    "m_grid": [40, 63, 100, 159, 252, 400],
    "trials": 300,
    "seed_base": 7,
    "cap": 5000,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", help="JSON config; omit for the built-in sweep")
    parser.add_argument("--out", default="scaling_results.csv")
    args = parser.parse_args()

    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = DEFAULT_CONFIG
    config = ScalingConfig.from_dict(raw)
    rows = scaling_experiment(config)
    write_rows_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")

    for spec in config.structures:
        for eps in config.eps_grid:
            medians = []
            for m in config.m_grid:
                errs = [
                    r["tv_error"] for r in rows
                    if r["structure_id"] == spec.structure_id
                    and r["eps"] == eps and r["m"] == m
                ]
                medians.append(float(np.median(errs)))
            usable = [(m, v) for m, v in zip(config.m_grid, medians) if v > 0]
            line = ", ".join(f"m={m}: {v:.4f}" for m, v in zip(config.m_grid, medians))
            print(f"{spec.structure_id} eps={eps}: {line}")
            if len(usable) >= 2:
                lx = np.log([m for m, _ in usable])
                ly = np.log([v for _, v in usable])
                slope = float(np.polyfit(lx, ly, 1)[0])
                print(f"{spec.structure_id} eps={eps}: slope of log(median) vs log(m) = {slope:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
