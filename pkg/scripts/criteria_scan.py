#!/usr/bin/env python3
"""Sweep a uniform radius over a generated model and tabulate which
convergence criteria certify each point.

Example:

    python scripts/criteria_scan.py --family cycle --n 9 --points 40 \
        --out scan.csv

For the 9-cycle this exhibits the certification gap: the optimized product
criterion tops out at 4/27 = 0.1481.. while the partition-function variant
reaches 1/5.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import polygas as pg


@dataclass
class ScanConfig:
    family: str = "cycle"
    n: int = 9
    k: int = 2
    points: int = 40
    rho_max: float = 0.25
    out: str = "criteria_scan.csv"


def parse_args(argv=None) -> ScanConfig:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--family", default="cycle", choices=("path", "cycle", "grid", "subsets-on-interval"))
    parser.add_argument("--n", type=int, default=9)
    parser.add_argument("--k", type=int, default=2, help="interval length cap (subset family)")
    parser.add_argument("--points", type=int, default=40)
    parser.add_argument("--rho-max", type=float, default=0.25, dest="rho_max")
    parser.add_argument("--out", default="criteria_scan.csv")
    args = parser.parse_args(argv)
    return ScanConfig(args.family, args.n, args.k, args.points, args.rho_max, args.out)


def main(argv=None) -> int:
    cfg = parse_args(argv)
    if cfg.family == "subsets-on-interval":
        spec = pg.generate_model(cfg.family, n=cfg.n, k=cfg.k)
    elif cfg.family == "grid":
        spec = pg.generate_model(cfg.family, w=cfg.n, h=cfg.n)
    else:
        spec = pg.generate_model(cfg.family, n=cfg.n)
    built = pg.build(spec)
    universe = built.universe

    # optimized scalar weights per criterion, reused across the sweep
    best = {}
    for kind in ("kp", "dobrushin", "fp"):
        best[kind] = pg.optimize_uniform_weight(universe, kind)
    print("optimized radii:")
    for kind, result in best.items():
        flag = " (boundary)" if result.boundary else ""
        print(f"  {kind:10s} radius {result.radius:.6f} at weight {result.weight:.6f}{flag}")

    base = universe.universe if isinstance(universe, pg.SubsetUniverse) else universe
    rows = []
    for i in range(1, cfg.points + 1):
        rho = cfg.rho_max * i / cfg.points
        row = {"rho": f"{rho:.6f}"}
        for kind, result in best.items():
            w = pg.PolymerWeights.uniform(base.polymers, result.weight)
            report = pg.check_criterion(universe, rho, w, kind)
            row[kind] = report.holds
        try:
            xi = pg.partition_function(base, None, -rho)
            row["xi_at_minus_rho"] = repr(float(xi))
            row["positive"] = xi > 0
        except OverflowError:
            row["xi_at_minus_rho"] = ""
            row["positive"] = ""
        rows.append(row)

    fields = ["rho", "kp", "dobrushin", "fp", "xi_at_minus_rho", "positive"]
    with open(cfg.out, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
