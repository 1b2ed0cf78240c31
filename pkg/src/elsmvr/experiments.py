"""Multi-seed experiment grids and the trend checks read off them.

Run summaries can be cached on disk (``ELSM_CACHE_DIR``), keyed by the
serialized config and seed, so scripts and the acceptance suite can share
work. Results do not depend on whether the cache is used.
"""

from __future__ import annotations

import hashlib
import logging
import os
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import Gap, nondecreasing, paired_gap, plateau_iteration, spearman_negative
from .config import ScenarioConfig, serialize_config
from .harness import RunSummary, apply_axis, run_summary

log = logging.getLogger("elsmvr")


def _key(config: ScenarioConfig, seed: int) -> str:
    return hashlib.sha256(f"{serialize_config(config)}seed={seed}\n".encode()).hexdigest()[:24]


_MEMO: dict[str, RunSummary] = {}


def cached_summary(config: ScenarioConfig, seed: int, cache_dir: str | Path | None = None) -> RunSummary:
    key = _key(config, seed)
    if key in _MEMO:
        return _MEMO[key]
    cache_dir = cache_dir or os.environ.get("ELSM_CACHE_DIR")
    path = Path(cache_dir) / f"{key}.npz" if cache_dir else None
    if path is not None and path.exists():
        with np.load(path) as z:
            s = RunSummary(config.algorithm, seed, float(z["total"]), float(z["n_visible"]),
                           float(z["n_360"]), int(z["violations"]), z["trace"], z["per_user"])
        _MEMO[key] = s
        return s
    s = _MEMO[key] = run_summary(config, seed)
    if path is None:
        return s
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, total=s.total, n_visible=s.n_visible, n_360=s.n_360, violations=s.violations,
             trace=s.trace, per_user=s.per_user)
    return s


def run_grid(configs: Mapping[str, ScenarioConfig], seeds: Iterable[int],
             cache_dir: str | Path | None = None) -> dict[str, list[RunSummary]]:
    """Every named config over the same seeds (so runs pair up by topology)."""
    seeds = list(seeds)
    out = {}
    for name, cfg in configs.items():
        out[name] = [cached_summary(cfg, s, cache_dir) for s in seeds]
        log.info("%s: mean total %.4f", name, np.mean([r.total for r in out[name]]))
    return out


def totals(runs: Sequence[RunSummary]) -> np.ndarray:
    return np.array([r.total for r in runs])


@dataclass
class Verdict:
    passed: bool
    detail: str
    numbers: dict = field(default_factory=dict)


def _gap_text(name: str, g: Gap) -> str:
    return f"{name} {g.mean:+.3f} (95% lower {g.lower:+.3f})"


def check_ordering(runs: Mapping[str, Sequence[RunSummary]], min_gain: float = 0.10) -> Verdict:
    e, s, q = (totals(runs[k]) for k in ("elsm", "esn", "qlearning"))
    g1, g2 = paired_gap(e, s), paired_gap(s, q)
    gain = (e.mean() - q.mean()) / q.mean() if q.mean() > 0 else float("nan")
    ok = g1.positive and g2.positive and gain >= min_gain
    return Verdict(ok, f"ELSM {e.mean():.3f}, ESN {s.mean():.3f}, Q {q.mean():.3f}; "
                       f"{_gap_text('ELSM-ESN', g1)}, {_gap_text('ESN-Q', g2)}, ELSM/Q gain {gain:+.1%}",
                   {"elsm_esn": g1, "esn_q": g2, "gain": gain})


def check_ablations(runs: Mapping[str, Sequence[RunSummary]]) -> Verdict:
    e = totals(runs["elsm"])
    gc = paired_gap(e, totals(runs["elsm-random-cache"]))
    gf = paired_gap(e, totals(runs["elsm-random-format"]))
    return Verdict(gc.positive and gf.positive,
                   f"{_gap_text('ELSM-randcache', gc)}, {_gap_text('ELSM-randformat', gf)}",
                   {"cache": gc, "format": gf})


def check_kappa(low: Sequence[RunSummary], high: Sequence[RunSummary], window: int) -> Verdict:
    """``low`` runs at the smaller temperature: slower to plateau, higher plateau."""
    p_lo = np.array([plateau_iteration(r.trace) for r in low])
    p_hi = np.array([plateau_iteration(r.trace) for r in high])
    speed = paired_gap(p_lo, p_hi)
    level = paired_gap([r.trace[-window:].mean() for r in low], [r.trace[-window:].mean() for r in high])
    return Verdict(speed.positive and level.positive,
                   f"plateau iteration {p_lo.mean():.0f} vs {p_hi.mean():.0f} "
                   f"({_gap_text('diff', speed)}); {_gap_text('level gap', level)}",
                   {"speed": speed, "level": level})


def sweep_runs(base: ScenarioConfig, axis: str, values: Sequence[float], algorithms: Sequence[str],
               seeds: Iterable[int], cache_dir=None) -> dict[tuple[float, str], list[RunSummary]]:
    seeds = list(seeds)
    return {(v, a): [cached_summary(apply_axis(base, axis, v).replace(algorithm=a), s, cache_dir)
                     for s in seeds]
            for v in values for a in algorithms}


def check_backhaul(runs: Mapping[tuple[float, str], Sequence[RunSummary]], values: Sequence[float],
                   algorithms: Sequence[str], baseline: str = "qlearning") -> Verdict:
    means = {a: [totals(runs[v, a]).mean() for v in values] for a in algorithms}
    mono = {a: nondecreasing(m) for a, m in means.items()}
    xs, gaps = [], []
    for v in values:
        g = totals(runs[v, "elsm"]) - totals(runs[v, baseline])
        xs.extend([v] * g.size)
        gaps.extend(g.tolist())
    rho, p, neg = spearman_negative(xs, gaps)
    text = "; ".join(f"{a} " + "/".join(f"{m:.2f}" for m in means[a]) for a in algorithms)
    return Verdict(all(mono.values()) and neg,
                   f"{text}; monotone {[a for a, ok in mono.items() if ok]}; "
                   f"gap Spearman rho {rho:+.3f} (p={p:.3f})",
                   {"means": means, "rho": rho, "p": p})


def check_cache(runs: Mapping[tuple[float, str], Sequence[RunSummary]], values: Sequence[float],
                algorithm: str = "elsm") -> Verdict:
    nv = [np.mean([r.n_visible for r in runs[v, algorithm]]) for v in values]
    n3 = [np.mean([r.n_360 for r in runs[v, algorithm]]) for v in values]
    dv, d3 = nv[-1] - nv[0], n3[-1] - n3[0]
    ok = nondecreasing(nv) and nondecreasing(n3) and dv > d3
    return Verdict(ok, "visible " + "/".join(f"{x:.2f}" for x in nv) + ", 360 "
                   + "/".join(f"{x:.2f}" for x in n3) + f"; increase {dv:+.2f} vs {d3:+.2f}",
                   {"visible": nv, "full": n3})


def count_violations(*groups) -> int:
    n = 0
    for g in groups:
        for runs in g.values():
            n += sum(r.violations for r in runs)
    return n
