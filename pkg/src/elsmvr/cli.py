"""Command-line entry point: single runs and parameter sweeps."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ALGORITHMS, ScenarioConfig, load_config, save_config
from .errors import ConfigurationError
from .harness import (
    SWEEP_AXES, configure_logging, emit_cdf, run_experiment, summarize, sweep,
    write_cdf, write_gnuplot, write_metrics, write_sweep,
)


def parse_sweep(text: str) -> tuple[str, list[float]]:
    if "=" not in text:
        raise ConfigurationError("--sweep expects AXIS=v1,v2,...")
    axis, vals = text.split("=", 1)
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    try:
        values = [float(v) for v in vals.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad sweep values {vals!r}") from exc
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    return axis, values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elsmvr", description=__doc__)
    p.add_argument("--config", type=Path, help="key=value configuration file")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--algorithm", choices=ALGORITHMS, help="learner to run")
    p.add_argument("--iterations", type=int, help="number of learning periods")
    p.add_argument("--sweep", metavar="AXIS=v1,v2,...",
                   help=f"sweep one axis ({', '.join(SWEEP_AXES)}) over the config's seeds")
    p.add_argument("--algorithms", help="comma-separated algorithms for --sweep (default: --algorithm)")
    p.add_argument("--output", type=Path, default=Path("out"), help="output directory")
    return p


def main(argv: list[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ScenarioConfig()
        changes = {k: v for k, v in (("seed", args.seed), ("algorithm", args.algorithm),
                                     ("iterations", args.iterations)) if v is not None}
        cfg = cfg.replace(**changes)
        out = args.output
        out.mkdir(parents=True, exist_ok=True)
        save_config(cfg, out / "config.cfg")
        if args.sweep:
            axis, values = parse_sweep(args.sweep)
            algs = args.algorithms.split(",") if args.algorithms else [cfg.algorithm]
            bad = [a for a in algs if a not in ALGORITHMS]
            if bad:
                raise ConfigurationError(f"unknown algorithms {bad}")
            rows = sweep(cfg, axis, values, algs)
            write_gnuplot(write_sweep(rows, out / "sweep.csv"))
            for r in rows:
                print(f"{axis}={r.axis_value:g} {r.algorithm}: {r.mean_total_reliability:.4f} +- {r.stderr:.4f}")
            return 0
        frames = write_metrics(run_experiment(cfg), out / "metrics.csv")
        write_gnuplot(out / "metrics.csv")
        if frames:
            s = summarize(frames, cfg.algorithm, cfg.seed, cfg.eval_window)
            write_gnuplot(write_cdf(emit_cdf(s.per_user), out / "cdf.csv"))
            print(f"{cfg.algorithm} seed={cfg.seed}: total reliability {s.total:.4f} "
                  f"(last {min(cfg.eval_window, len(frames))} of {len(frames)} periods)")
        else:
            print("no iterations run")
        return 0
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
