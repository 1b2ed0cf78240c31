"""Network drop and the per-slot delivery evaluation used by every learner.

A :class:`Network` fixes node positions, average backhaul SNRs and access
path gains. Each slot it draws Rayleigh fading, resolves the joint user
association from the SBS claims, builds each SBS cache, picks transmission
formats for misses and counts the users whose delay meets the deadline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Node, NodeKind, access_sinr_matrix, backhaul_snr_matrix, pairwise_distance
from .config import ScenarioConfig
from .content import ContentCatalog, RequestTrace, generate_requests
from .latency import ComputeBudget, LinkRates
from .oracle import solve_cache_knapsack

NONE, VISIBLE, FULL = 0, 1, 2      # cache / format codes used in arrays


def uniform_disc(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass(frozen=True)
class Topology:
    uav_pos: np.ndarray
    sbs_pos: np.ndarray
    user_pos: np.ndarray

    def nodes(self, kind: NodeKind) -> list[Node]:
        pos = {NodeKind.UAV: self.uav_pos, NodeKind.SBS: self.sbs_pos, NodeKind.USER: self.user_pos}[kind]
        return [Node(i, kind, tuple(float(c) for c in p)) for i, p in enumerate(pos)]

    def digest(self) -> str:
        import hashlib
        h = hashlib.sha256()
        for arr in (self.uav_pos, self.sbs_pos, self.user_pos):
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("topology", "requests", "fading", "agents", "variants")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.default_rng(s) for n, s in zip(names, children)}


def generate_topology(config: ScenarioConfig, seed: int) -> Topology:
    rng = _streams(seed)["topology"]

    def place(n, height):
        return np.column_stack([uniform_disc(rng, n, config.r_m), np.full(n, height)])

    return Topology(
        uav_pos=place(config.v, config.uav_altitude_m),
        sbs_pos=place(config.b, config.sbs_height_m),
        user_pos=place(config.u, config.user_height_m),
    )


def generate_scenario(config: ScenarioConfig, seed: int, horizon: int | None = None
                      ) -> tuple[Topology, RequestTrace]:
    """Uniform drop in the disc plus an i.i.d. Zipf request trace of ``horizon`` slots."""
    topo = generate_topology(config, seed)
    slots = horizon if horizon is not None else max(1, config.iterations * config.n_tau)
    req_seed = int(np.random.SeedSequence(seed).spawn(2)[1].generate_state(1)[0])
    trace = generate_requests(config.popularity(), config.u, config.catalog(), slots, req_seed)
    return topo, trace


@dataclass
class SlotOutcome:
    assoc: np.ndarray            # (U,) serving SBS per user
    success: np.ndarray          # (U,) bool
    per_sbs: np.ndarray          # (B,) successful users per SBS
    users_per_sbs: np.ndarray    # (B,)
    cache: np.ndarray            # (B, N) cache codes actually stored
    formats: np.ndarray          # (U,) transmission format of misses, NONE for hits
    occupancy_bits: np.ndarray   # (B,)


class Network:
    """Static quantities of one drop plus the per-slot evaluation."""

    def __init__(self, config: ScenarioConfig, topology: Topology):
        self.config = config
        self.topology = topology
        self.radio = config.radio()
        self.bw = config.bandwidths()
        self.catalog: ContentCatalog = config.catalog()
        self.budget: ComputeBudget = config.budget()
        self.deadline = config.deadline_s
        self.capacity = config.capacity_bits
        self.n_users, self.n_sbs = config.u, config.b
        self.n_contents = len(self.catalog)
        self.owner = np.array(self.catalog.owner)
        self.workload = np.array(self.catalog.extract_workload_bits)

        snr_vd, snr_vu = backhaul_snr_matrix(self.radio, topology.uav_pos, topology.sbs_pos)
        self.se_vd = np.log2(1.0 + snr_vd)          # (V, B)
        self.se_vu = np.log2(1.0 + snr_vu)
        d = pairwise_distance(topology.user_pos, topology.sbs_pos)
        self.access_gain = np.maximum(d, 1.0) ** (-self.radio.sub6_pl_exp)   # (U, B)
        self.sbs_rank = np.argsort(d, axis=1, kind="stable")                  # nearest first
        self.nearest = self.sbs_rank[:, 0]
        k = min(config.k_nearest, self.n_sbs)
        # a user is claimable only if it has an alternative among its k nearest SBSs
        self.candidates = [np.flatnonzero((self.sbs_rank[:, :k] == j).any(axis=1)) if k > 1
                           else np.zeros(0, dtype=np.int64) for j in range(self.n_sbs)]
        self.home = [np.flatnonzero(self.nearest == j) for j in range(self.n_sbs)]
        self.distance = d

    # -- association ----------------------------------------------------------

    def resolve_association(self, claims: np.ndarray) -> np.ndarray:
        """Users go to their nearest claiming SBS; unclaimed users to their nearest SBS.

        ``claims`` is a (B, U) bool array.
        """
        claimed_rank = np.where(claims.T[np.arange(self.n_users)[:, None], self.sbs_rank],
                                np.arange(self.n_sbs)[None, :], self.n_sbs)
        first = claimed_rank.min(axis=1)
        assoc = self.nearest.copy()
        has = first < self.n_sbs
        assoc[has] = self.sbs_rank[has, first[has]]
        return assoc

    # -- per-slot physics -----------------------------------------------------

    def draw_fading(self, rng: np.random.Generator) -> np.ndarray:
        return self.access_gain * rng.exponential(1.0, size=self.access_gain.shape)

    def link_rates(self, assoc: np.ndarray, requests: np.ndarray, gains: np.ndarray):
        """Per-user (c_vd, c_vu, c_sd, c_su) arrays for the serving SBS and content owner."""
        users_per_sbs = np.bincount(assoc, minlength=self.n_sbs)
        uj = users_per_sbs[assoc].astype(float)
        sinr_d, sinr_u = access_sinr_matrix(self.radio, gains)
        idx = np.arange(self.n_users)
        c_sd = self.bw.access_down_hz / uj * np.log2(1.0 + sinr_d[idx, assoc])
        c_su = self.bw.access_up_hz / uj * np.log2(1.0 + sinr_u[idx, assoc])
        k = self.owner[requests]
        c_vd = self.bw.backhaul_down_hz / uj * self.se_vd[k, assoc]
        c_vu = self.bw.backhaul_up_hz / uj * self.se_vu[k, assoc]
        return c_vd, c_vu, c_sd, c_su, users_per_sbs

    def delays(self, assoc, requests, gains):
        """Total delay of every user under each of the four delivery paths.

        Returns a dict with keys hit_visible, hit_full, miss_visible, miss_full
        (each (U,)), plus the requester counts U_ja and link arrays.
        """
        cat, b = self.catalog, self.budget
        c_vd, c_vu, c_sd, c_su, users_per_sbs = self.link_rates(assoc, requests, gains)
        uj = users_per_sbs[assoc].astype(float)
        pair = assoc * self.n_contents + requests
        counts = np.bincount(pair, minlength=self.n_sbs * self.n_contents)
        u_ja = counts[pair].astype(float)
        h = self.workload[requests]
        with np.errstate(divide="ignore"):
            access = cat.size_visible_bits / c_sd + cat.tracking_payload_bits / c_su
            sbs_proc = h * uj / b.sbs_cycles_bps
            uav_proc = h * uj * b.uav_sharing / b.uav_cycles_bps
            uplink = cat.tracking_payload_bits / c_vu
            return {
                "hit_visible": access,
                "hit_full": sbs_proc + access,
                "miss_visible": uav_proc + cat.size_visible_bits / c_vd + uplink + access,
                "miss_full": sbs_proc + cat.size_360_bits / (u_ja * c_vd) + uplink + access,
                "u_ja": u_ja, "u_j": uj, "c_vd": c_vd,
                "links": (c_vd, c_vu, c_sd, c_su), "users_per_sbs": users_per_sbs,
            }

    def closed_form_formats(self, dl: dict, requests: np.ndarray) -> np.ndarray:
        cat, b = self.catalog, self.budget
        g360, g120 = cat.size_360_bits, cat.size_visible_bits
        u_ja, uj, c_vd = dl["u_ja"], dl["u_j"], dl["c_vd"]
        compute = self.workload[requests] * uj * (1.0 / b.sbs_cycles_bps - b.uav_sharing / b.uav_cycles_bps)
        with np.errstate(divide="ignore", invalid="ignore"):
            gap = compute + (g360 / u_ja - g120) / c_vd
        full = (g360 <= u_ja * g120) | (gap <= 0) | ~(c_vd > 0)
        return np.where(full, FULL, VISIBLE)

    def link_rates_of(self, dl: dict, user: int) -> LinkRates:
        c = dl["links"]
        return LinkRates(float(c[0][user]), float(c[1][user]), float(c[2][user]), float(c[3][user]))

    # -- caches -----------------------------------------------------------------

    def cache_cost(self, code: int, users: int) -> float:
        if code == FULL:
            return self.catalog.size_360_bits
        return users * self.catalog.size_visible_bits

    def fill(self, plan: np.ndarray, users: int) -> tuple[np.ndarray, float]:
        """Admit a (N,) cache-code vector in content order, skipping entries that overflow."""
        stored = np.zeros(self.n_contents, dtype=np.int8)
        used = 0.0
        for a in np.flatnonzero(plan):
            c = self.cache_cost(int(plan[a]), users)
            if used + c <= self.capacity:
                stored[a] = plan[a]
                used += c
        return stored, used

    def best_cache(self, users_idx: np.ndarray, requests: np.ndarray, ok: dict,
                   miss_ok: np.ndarray, users: int) -> np.ndarray:
        """Cache maximising successes for one SBS with formats fixed (knapsack over requested contents)."""
        stored = np.zeros(self.n_contents, dtype=np.int8)
        options = []
        for a in np.unique(requests[users_idx]):
            who = users_idx[requests[users_idx] == a]
            base = int(miss_ok[who].sum())
            opts = []
            for code, key in ((VISIBLE, "hit_visible"), (FULL, "hit_full")):
                gain = int(ok[key][who].sum()) - base
                cost = self.cache_cost(code, users)
                if gain > 0 and cost <= self.capacity:
                    opts.append((gain, cost, code))
            if opts:
                options.append((int(a), opts))
        for a, code in solve_cache_knapsack(options, self.capacity).items():
            stored[a] = code
        return stored

    # -- the slot ---------------------------------------------------------------

    def evaluate(self, requests: np.ndarray, gains: np.ndarray, claims: np.ndarray,
                 cache_plans: list[np.ndarray | None], format_plans: list[np.ndarray | None],
                 rng: np.random.Generator | None = None,
                 random_cache: list[bool] | None = None,
                 random_format: list[bool] | None = None) -> SlotOutcome:
        """One slot.

        Per SBS ``j``: ``cache_plans[j]`` is a (N,) code vector to admit, or
        None to use the success-maximising cache for the fixed formats;
        ``format_plans[j]`` is a (N,) per-content format vector (NONE entries
        fall back to the closed-form rule), or None for the rule throughout.
        ``random_cache``/``random_format`` flags replace the respective
        decision with a uniform draw (feasible caches only).
        """
        assoc = self.resolve_association(claims)
        dl = self.delays(assoc, requests, gains)
        ok = {k: dl[k] <= self.deadline for k in ("hit_visible", "hit_full", "miss_visible", "miss_full")}
        rule = self.closed_form_formats(dl, requests)
        users_per_sbs = dl["users_per_sbs"]

        fmt = np.empty(self.n_users, dtype=np.int8)
        cache = np.zeros((self.n_sbs, self.n_contents), dtype=np.int8)
        occ = np.zeros(self.n_sbs)
        for j in range(self.n_sbs):
            idx = np.flatnonzero(assoc == j)
            uj = int(users_per_sbs[j])
            if random_format is not None and random_format[j]:
                fmt[idx] = rng.integers(VISIBLE, FULL + 1, size=idx.size)
            elif format_plans[j] is not None:
                chosen = format_plans[j][requests[idx]]
                fmt[idx] = np.where(chosen == NONE, rule[idx], chosen)
            else:
                fmt[idx] = rule[idx]
            if random_cache is not None and random_cache[j]:
                plan = self.random_feasible_cache(rng, max(uj, 1))
                cache[j], occ[j] = self.fill(plan, uj)
            elif cache_plans[j] is not None:
                cache[j], occ[j] = self.fill(cache_plans[j], uj)
            elif idx.size:
                miss_ok = np.where(fmt[idx] == FULL, ok["miss_full"][idx], ok["miss_visible"][idx])
                full_miss_ok = np.zeros(self.n_users, dtype=bool)
                full_miss_ok[idx] = miss_ok
                cache[j] = self.best_cache(idx, requests, ok, full_miss_ok, uj)
                occ[j] = sum(self.cache_cost(int(c), uj) for c in cache[j] if c)

        stored = cache[assoc, requests]
        fmt[stored != NONE] = NONE
        success = np.select(
            [stored == VISIBLE, stored == FULL, fmt == VISIBLE],
            [ok["hit_visible"], ok["hit_full"], ok["miss_visible"]],
            default=ok["miss_full"],
        )
        per_sbs = np.bincount(assoc, weights=success, minlength=self.n_sbs)
        return SlotOutcome(assoc, success, per_sbs, users_per_sbs, cache, fmt, occ)

    def random_feasible_cache(self, rng: np.random.Generator, users: int) -> np.ndarray:
        """Uniform draw over feasible cache vectors restricted to the candidate contents."""
        m = min(self.config.cache_contents, self.n_contents)
        while True:
            codes = rng.integers(0, 3, size=m)
            cost = sum(self.cache_cost(int(c), users) for c in codes if c)
            if cost <= self.capacity:
                plan = np.zeros(self.n_contents, dtype=np.int8)
                plan[:m] = codes
                return plan

