"""Statistics used to read experiment traces: confidence bounds, plateaus, rank trends."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class Gap:
    mean: float
    lower: float     # one-sided lower confidence bound
    n: int

    @property
    def positive(self) -> bool:
        return self.lower > 0


def paired_gap(a, b, confidence: float = 0.95) -> Gap:
    """Mean of ``a - b`` over paired seeds with a one-sided t lower bound."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if d.size < 2:
        return Gap(float(d.mean()), -np.inf, d.size)
    se = d.std(ddof=1) / np.sqrt(d.size)
    if se == 0:
        return Gap(float(d.mean()), float(d.mean()), d.size)
    return Gap(float(d.mean()), float(d.mean() - stats.t.ppf(confidence, d.size - 1) * se), d.size)


def mean_stderr(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def block_means(trace, block: int) -> np.ndarray:
    trace = np.asarray(trace, dtype=float)
    n = trace.size // block
    return trace[:n * block].reshape(n, block).mean(axis=1)


def plateau_iteration(trace, block: int = 50, span: int = 6, tol: float = 0.01) -> int:
    """First iteration from which the smoothed trace stops rising.

    The trace is averaged in blocks; a straight line is fitted to each run of
    ``span`` consecutive blocks and the plateau starts at the first run whose
    total rise (slope times span) is below ``tol`` of the final level.
    Returns the trace length when no run qualifies.
    """
    m = block_means(trace, block)
    if m.size < span:
        return int(np.asarray(trace).size)
    level = abs(m[-span:].mean()) or 1.0
    x = np.arange(span)
    for k in range(m.size - span + 1):
        slope = np.polyfit(x, m[k:k + span], 1)[0]
        if slope * span < tol * level:
            return k * block
    return int(np.asarray(trace).size)


def plateau_level(trace, window: int) -> float:
    return float(np.mean(np.asarray(trace, dtype=float)[-window:]))


def nondecreasing(values, slack: float = 0.0) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) >= -slack))


def spearman_negative(x, y, confidence: float = 0.95) -> tuple[float, float, bool]:
    """Spearman rho of (x, y) with the one-sided p-value for rho < 0."""
    rho, _ = stats.spearmanr(x, y)
    p = stats.spearmanr(x, y, alternative="less").pvalue
    return float(rho), float(p), bool(p < 1 - confidence)
