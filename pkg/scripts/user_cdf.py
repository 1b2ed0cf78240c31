"""Per-user reliability CDF for each learner, pooled over seeds.

    python3 scripts/user_cdf.py --algorithms elsm,esn,qlearning --output out/cdf
"""

import argparse
from pathlib import Path

import numpy as np

from elsmvr.config import calibrated_config, load_config
from elsmvr.experiments import run_grid
from elsmvr.harness import emit_cdf, write_cdf, write_gnuplot


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--algorithms", default="elsm,esn,qlearning")
    ap.add_argument("--iterations", type=int, default=1500)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--output", type=Path, default=Path("out/cdf"))
    args = ap.parse_args()
    base = load_config(args.config) if args.config else calibrated_config()
    base = base.replace(iterations=args.iterations, eval_window=max(1, args.iterations // 5))
    algs = args.algorithms.split(",")

    runs = run_grid({a: base.replace(algorithm=a) for a in algs}, range(args.seeds))
    for a in algs:
        pooled = np.concatenate([r.per_user for r in runs[a]])
        out = args.output / a / "cdf.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        write_gnuplot(write_cdf(emit_cdf(pooled), out))
        q = np.percentile(pooled, [10, 50, 90])
        print(f"{a:20s} p10 {q[0]:.3f}  median {q[1]:.3f}  p90 {q[2]:.3f}  -> {out}")


if __name__ == "__main__":
    main()
