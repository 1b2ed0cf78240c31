"""Mean total reliability of every learner over paired seeds, plus the ordering and ablation checks.

    python3 scripts/compare_algorithms.py --iterations 1500 --seeds 10 --output out/compare
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from elsmvr.analysis import block_means, mean_stderr
from elsmvr.config import ALGORITHMS, calibrated_config, load_config
from elsmvr.experiments import check_ablations, check_ordering, run_grid, totals


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="defaults to the calibrated preset")
    ap.add_argument("--iterations", type=int, default=1500)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--block", type=int, default=50, help="trace smoothing block")
    ap.add_argument("--output", type=Path, default=Path("out/compare"))
    args = ap.parse_args()
    base = load_config(args.config) if args.config else calibrated_config()
    base = base.replace(iterations=args.iterations, eval_window=max(1, args.iterations // 5))

    runs = run_grid({a: base.replace(algorithm=a) for a in ALGORITHMS}, range(args.seeds))
    for a in ALGORITHMS:
        m, se = mean_stderr(totals(runs[a]))
        print(f"{a:20s} {m:7.3f} +- {se:.3f}")
    print("ordering :", check_ordering(runs).detail)
    print("ablations:", check_ablations(runs).detail)

    args.output.mkdir(parents=True, exist_ok=True)
    with open(args.output / "traces.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", *ALGORITHMS])
        curves = {a: np.mean([block_means(r.trace, args.block) for r in runs[a]], axis=0) for a in ALGORITHMS}
        for k in range(len(curves[ALGORITHMS[0]])):
            w.writerow([k * args.block, *(repr(float(curves[a][k])) for a in ALGORITHMS)])
    print(f"smoothed traces in {args.output / 'traces.csv'}")


if __name__ == "__main__":
    main()
