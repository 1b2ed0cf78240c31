"""ELSM convergence at several Boltzmann temperatures: plateau iteration and plateau level.

    python3 scripts/kappa_convergence.py --kappas 1.25,5 --iterations 1500 --seeds 10
"""

import argparse

from elsmvr.analysis import mean_stderr, plateau_iteration
from elsmvr.config import calibrated_config, load_config
from elsmvr.experiments import check_kappa, run_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--kappas", default="1.25,5")
    ap.add_argument("--iterations", type=int, default=1500)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()
    base = load_config(args.config) if args.config else calibrated_config()
    window = max(1, args.iterations // 5)
    base = base.replace(iterations=args.iterations, eval_window=window, algorithm="elsm")
    kappas = [float(k) for k in args.kappas.split(",")]

    runs = run_grid({k: base.replace(kappa=k) for k in kappas}, range(args.seeds))
    for k in kappas:
        p = mean_stderr([plateau_iteration(r.trace) for r in runs[k]])
        lvl = mean_stderr([r.trace[-window:].mean() for r in runs[k]])
        print(f"kappa {k:6g}: plateau at {p[0]:7.1f} +- {p[1]:.1f}, level {lvl[0]:.3f} +- {lvl[1]:.3f}")
    for lo, hi in zip(kappas, kappas[1:]):
        print(f"{lo:g} vs {hi:g}:", check_kappa(runs[lo], runs[hi], window).detail)


if __name__ == "__main__":
    main()
