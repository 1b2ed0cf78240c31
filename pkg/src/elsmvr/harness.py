"""Experiment loop, metric frames, sweeps and CSV output."""

from __future__ import annotations

import csv
import logging
import os
import time
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent import build_agents, learning_round
from .config import ScenarioConfig
from .errors import ConfigurationError
from .scenario import FULL, VISIBLE, Network, _streams, generate_scenario

log = logging.getLogger("elsmvr")

METRICS_HEADER = ("iter", "sbs_id", "total_reliability", "n_visible", "n_360", "wall_ms")
CDF_HEADER = ("reliability", "fraction")
SWEEP_HEADER = ("axis_value", "algorithm", "mean_total_reliability", "stderr")
SWEEP_AXES = {"SBS_count": "b", "backhaul_bw": "b_vd_ghz", "cache_size": "s_mbits"}


def configure_logging() -> None:
    level = os.environ.get("ELSM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@dataclass
class MetricsFrame:
    """Per-round summary. Reliabilities are success fractions over the round's slots;
    ``per_sbs[j]`` sums them over the users served by SBS ``j``."""

    iteration: int
    per_sbs: np.ndarray          # (B,)
    per_user: np.ndarray         # (U,)
    n_visible: np.ndarray        # (B,) cache composition after the round's last slot
    n_360: np.ndarray
    users_per_sbs: np.ndarray    # (B,) U_j at that slot
    occupancy_bits: np.ndarray   # (B,)
    capacity_bits: float
    size_visible_bits: float
    size_360_bits: float
    violations: int = 0          # slots in the round where some cache exceeded S
    wall_ms: float = 0.0

    @property
    def total(self) -> float:
        return float(self.per_sbs.sum())


def cache_violations(frame: MetricsFrame) -> int:
    """Independent capacity re-check of a frame's cache composition."""
    used = (frame.n_visible * frame.users_per_sbs * frame.size_visible_bits
            + frame.n_360 * frame.size_360_bits)
    return int(np.sum(used > frame.capacity_bits * (1 + 1e-12))) + frame.violations


def _slot_violations(net: Network, out) -> int:
    used = ((out.cache == VISIBLE).sum(axis=1) * out.users_per_sbs * net.catalog.size_visible_bits
            + (out.cache == FULL).sum(axis=1) * net.catalog.size_360_bits)
    return int(np.any(used > net.capacity * (1 + 1e-12)))


def run_experiment(config: ScenarioConfig, seed: int | None = None) -> Iterator[MetricsFrame]:
    """Yield one frame per period; fully determined by (config, seed)."""
    seed = config.seed if seed is None else seed
    if config.iterations == 0:
        return
    topo, trace = generate_scenario(config, seed, horizon=config.iterations * config.n_tau)
    net = Network(config, topo)
    streams = _streams(seed)
    agents = build_agents(net, config.algorithm, streams["agents"])
    fading, acting = streams["fading"], streams["variants"]
    log.info("run %s seed=%d modes=%s actions=%s", config.algorithm, seed,
             [a.actions.mode for a in agents], [len(a.actions) for a in agents])
    for tau in range(config.iterations):
        t0 = time.perf_counter()
        req = trace.requests[tau * config.n_tau:(tau + 1) * config.n_tau]
        res = learning_round(agents, net, tau, req, fading, acting, config.algorithm,
                             config.reward_scale)
        last = res.outcomes[-1]
        wall = (time.perf_counter() - t0) * 1e3 if config.record_wall_clock else 0.0
        yield MetricsFrame(
            iteration=tau,
            per_sbs=res.per_sbs,
            per_user=np.mean([o.success for o in res.outcomes], axis=0),
            n_visible=(last.cache == VISIBLE).sum(axis=1),
            n_360=(last.cache == FULL).sum(axis=1),
            users_per_sbs=last.users_per_sbs.copy(),
            occupancy_bits=last.occupancy_bits.copy(),
            capacity_bits=net.capacity,
            size_visible_bits=net.catalog.size_visible_bits,
            size_360_bits=net.catalog.size_360_bits,
            violations=sum(_slot_violations(net, o) for o in res.outcomes),
            wall_ms=wall,
        )


# -- summaries ----------------------------------------------------------------------

@dataclass(frozen=True)
class RunSummary:
    algorithm: str
    seed: int
    total: float                 # mean network total over the evaluation window
    n_visible: float             # mean cached counts per SBS over the window
    n_360: float
    violations: int
    trace: np.ndarray            # network total per iteration
    per_user: np.ndarray         # per-user reliability over the window


def summarize(frames: Sequence[MetricsFrame], algorithm: str, seed: int, window: int) -> RunSummary:
    if not frames:
        raise ConfigurationError("no frames to summarize")
    tail = frames[-min(window, len(frames)):]
    return RunSummary(
        algorithm, seed,
        total=float(np.mean([f.total for f in tail])),
        n_visible=float(np.mean([f.n_visible.mean() for f in tail])),
        n_360=float(np.mean([f.n_360.mean() for f in tail])),
        violations=sum(cache_violations(f) for f in frames),
        trace=np.array([f.total for f in frames]),
        per_user=np.mean([f.per_user for f in tail], axis=0),
    )


def run_summary(config: ScenarioConfig, seed: int) -> RunSummary:
    frames = list(run_experiment(config, seed))
    return summarize(frames, config.algorithm, seed, config.eval_window)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    algorithm: str
    mean_total_reliability: float
    stderr: float
    runs: tuple[RunSummary, ...]


def apply_axis(config: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    key = SWEEP_AXES[axis]
    return config.replace(**{key: int(value) if key == "b" else float(value)})


def sweep(config: ScenarioConfig, axis: str, values: Sequence[float],
          algorithms: Sequence[str] | None = None, seeds: Iterable[int] | None = None) -> list[SweepRow]:
    """One row per (axis value, algorithm), aggregated over seeds."""
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    algorithms = list(algorithms or [config.algorithm])
    seeds = list(seeds if seeds is not None else range(config.seed, config.seed + config.seeds))
    rows = []
    for v in values:
        for alg in algorithms:
            cfg = apply_axis(config, axis, v).replace(algorithm=alg)
            runs = tuple(run_summary(cfg, s) for s in seeds)
            totals = np.array([r.total for r in runs])
            se = float(totals.std(ddof=1) / np.sqrt(len(totals))) if len(totals) > 1 else 0.0
            rows.append(SweepRow(float(v), alg, float(totals.mean()), se, runs))
            log.info("sweep %s=%g %s: %.4f +- %.4f", axis, v, alg, totals.mean(), se)
    return rows


def emit_cdf(per_user: np.ndarray | Sequence[MetricsFrame]) -> list[tuple[float, float]]:
    """Empirical CDF rows (reliability, fraction) at each distinct value."""
    if len(per_user) and isinstance(per_user[0], MetricsFrame):
        per_user = np.mean([f.per_user for f in per_user], axis=0)
    x = np.sort(np.asarray(per_user, dtype=float))
    if x.size == 0:
        raise ConfigurationError("CDF needs at least one reliability value")
    values, counts = np.unique(x, return_counts=True)
    return [(float(v), float(c)) for v, c in zip(values, np.cumsum(counts) / x.size)]


# -- writers --------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
    return path


def write_metrics(frames: Iterable[MetricsFrame], path: str | Path) -> list[MetricsFrame]:
    """Stream frames to ``path``; I/O errors report the frame index reached."""
    path, kept = Path(path), []
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRICS_HEADER)
            for f in frames:
                for j in range(f.per_sbs.size):
                    w.writerow([_fmt(f.iteration), _fmt(j), _fmt(f.per_sbs[j]),
                                _fmt(f.n_visible[j]), _fmt(f.n_360[j]), _fmt(f.wall_ms)])
                kept.append(f)
    except OSError as exc:
        raise OSError(f"writing {path} failed at frame {len(kept)}: {exc}") from exc
    return kept


def write_cdf(rows, path: str | Path) -> Path:
    return _write(Path(path), CDF_HEADER, rows)


def write_sweep(rows: Sequence[SweepRow], path: str | Path) -> Path:
    return _write(Path(path), SWEEP_HEADER,
                  [(r.axis_value, r.algorithm, r.mean_total_reliability, r.stderr) for r in rows])


GNUPLOT = {
    "metrics.csv": 'set datafile separator ","\nset key autotitle columnhead\n'
                   'set xlabel "iteration"\nset ylabel "total reliability"\n'
                   'plot "metrics.csv" using 1:3 with dots\n',
    "cdf.csv": 'set datafile separator ","\nset key autotitle columnhead\n'
               'set xlabel "per-user reliability"\nset ylabel "CDF"\n'
               'plot "cdf.csv" using 1:2 with steps\n',
    "sweep.csv": 'set datafile separator ","\nset key autotitle columnhead\n'
                 'set ylabel "mean total reliability"\n'
                 'plot "sweep.csv" using 1:3:4 with yerrorbars\n',
}


def write_gnuplot(csv_path: str | Path) -> Path:
    csv_path = Path(csv_path)
    script = csv_path.with_suffix(".gp")
    script.write_text(GNUPLOT[csv_path.name])
    return script
