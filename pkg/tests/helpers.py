"""Random slot snapshots whose delays straddle the deadline, so decisions matter."""

from __future__ import annotations

import numpy as np

from elsmvr.content import ContentCatalog
from elsmvr.latency import ComputeBudget, LinkRates
from elsmvr.oracle import SlotSnapshot
from elsmvr.reservoir import EsnConfig, build_esn, update_reservoir


def _logu(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_snapshot(rng: np.random.Generator, max_users: int = 10, max_contents: int = 6,
                    capacity_bits: float | None = None) -> SlotSnapshot:
    n_contents = int(rng.integers(1, max_contents + 1))
    n_users = int(rng.integers(1, max_users + 1))
    catalog = ContentCatalog(
        owner=tuple(int(rng.integers(0, 3)) for _ in range(n_contents)),
        extract_workload_bits=tuple(_logu(rng, 2e6, 50e6) for _ in range(n_contents)),
    )
    requests = {u: int(rng.integers(0, n_contents)) for u in range(n_users)}
    links = {u: LinkRates(c_vd=_logu(rng, 3e8, 2e10), c_vu=_logu(rng, 5e6, 2e8),
                          c_sd=_logu(rng, 6e8, 2e10), c_su=_logu(rng, 5e6, 1e8))
             for u in range(n_users)}
    r_u = _logu(rng, 1e9, 3e10)
    # the closed-form format rule assumes R_U <= R_S
    budget = ComputeBudget(r_u, r_u * _logu(rng, 1.0, 10.0), int(rng.integers(1, 6)))
    if capacity_bits is None:
        capacity_bits = float(rng.uniform(0, 3)) * 50e6
    return SlotSnapshot(sbs_id=0, requests=requests, links=links, catalog=catalog,
                        budget=budget, deadline_s=_logu(rng, 0.01, 0.1),
                        capacity_bits=capacity_bits)


def small_esn(rho=0.9, n_in=5, n_out=3, seed=0, **kw):
    return build_esn(EsnConfig(n_reservoir=100, n_inputs=n_in, n_outputs=n_out,
                               spectral_radius=rho, **kw), seed)


def twin_distance(rho, seed, steps=500, tol=1e-6):
    """Steps until two random initial states under a shared input sequence
    coincide within ``tol``; None if they never do."""
    esn = small_esn(rho, seed=seed)
    rng = np.random.default_rng(seed + 1000)
    a, b = rng.uniform(-1, 1, 100), rng.uniform(-1, 1, 100)
    for t in range(steps):
        u = rng.uniform(0, 1, 5)
        esn.mu = a
        a = update_reservoir(esn, u).mu
        esn.mu = b
        b = update_reservoir(esn, u).mu
        if np.linalg.norm(a - b) < tol:
            return t
    return None
