"""Parameter sweeps: SBS count, backhaul bandwidth or cache size, with cache composition.

    python3 scripts/sweeps.py --axis backhaul_bw --values 1,2,4 --algorithms elsm,esn,qlearning
    python3 scripts/sweeps.py --axis cache_size --values 100,300,500
    python3 scripts/sweeps.py --axis SBS_count --values 3,5,7
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from elsmvr.analysis import mean_stderr
from elsmvr.config import calibrated_config, load_config
from elsmvr.experiments import check_backhaul, check_cache, sweep_runs, totals
from elsmvr.harness import SWEEP_AXES


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--axis", choices=sorted(SWEEP_AXES), required=True)
    ap.add_argument("--values", required=True)
    ap.add_argument("--algorithms", default="elsm")
    ap.add_argument("--iterations", type=int, default=1500)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--output", type=Path, default=Path("out/sweeps"))
    args = ap.parse_args()
    base = load_config(args.config) if args.config else calibrated_config()
    base = base.replace(iterations=args.iterations, eval_window=max(1, args.iterations // 5))
    values = [float(v) for v in args.values.split(",")]
    algs = args.algorithms.split(",")

    runs = sweep_runs(base, args.axis, values, algs, range(args.seeds))
    args.output.mkdir(parents=True, exist_ok=True)
    path = args.output / f"{args.axis}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis_value", "algorithm", "mean_total_reliability", "stderr", "n_visible", "n_360"])
        for (v, a), rs in runs.items():
            m, se = mean_stderr(totals(rs))
            nv = np.mean([r.n_visible for r in rs])
            n3 = np.mean([r.n_360 for r in rs])
            w.writerow([repr(v), a, repr(m), repr(se), repr(float(nv)), repr(float(n3))])
            print(f"{args.axis}={v:g} {a:20s} {m:7.3f} +- {se:.3f}  visible {nv:.2f}  360 {n3:.2f}")
    if args.axis == "backhaul_bw" and {"elsm", "qlearning"} <= set(algs):
        print(check_backhaul(runs, values, algs).detail)
    if args.axis == "cache_size" and "elsm" in algs:
        print(check_cache(runs, values).detail)
    print(f"table in {path}")


if __name__ == "__main__":
    main()
