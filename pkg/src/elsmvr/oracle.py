"""Closed-form per-slot decisions for one SBS, and exhaustive checkers for them.

With the cache fixed, the best transmission format for a missed request is
decided user by user from the sign of the 360-minus-visible delay gap. With
the formats fixed, caching a content changes only the outcome of the users
requesting it, so the best cache is a multiple-choice knapsack over
requested contents whose item values are the per-content success gains.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field

from .content import ContentCatalog, Format
from .errors import ConfigurationError
from .latency import ComputeBudget, DeliveryPlan, LinkRates, is_successful

FormatDecision = dict  # user id -> Format


@dataclass(frozen=True)
class SlotSnapshot:
    sbs_id: int
    requests: Mapping[int, int]          # user id -> content id
    links: Mapping[int, LinkRates]       # user id -> per-user capacities
    catalog: ContentCatalog
    budget: ComputeBudget
    deadline_s: float
    capacity_bits: float

    def __post_init__(self):
        missing = set(self.requests) - set(self.links)
        if missing:
            raise ConfigurationError(f"no link budget for users {sorted(missing)}")
        for a in self.requests.values():
            self.catalog.check(a)

    @property
    def users(self) -> list[int]:
        return sorted(self.requests)

    @property
    def users_at_sbs(self) -> int:
        return len(self.requests)

    def requesters(self) -> Counter:
        return Counter(self.requests.values())

    def to_json(self) -> str:
        cat = self.catalog
        return json.dumps({
            "sbs_id": self.sbs_id,
            "requests": {str(u): a for u, a in self.requests.items()},
            "links": {str(u): [l.c_vd, l.c_vu, l.c_sd, l.c_su] for u, l in self.links.items()},
            "catalog": {"owner": list(cat.owner), "g_360": cat.size_360_bits,
                        "g_120": cat.size_visible_bits, "a": cat.tracking_payload_bits,
                        "h": list(cat.extract_workload_bits)},
            "budget": [self.budget.uav_cycles_bps, self.budget.sbs_cycles_bps, self.budget.uav_sharing],
            "deadline_s": self.deadline_s,
            "capacity_bits": self.capacity_bits,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> SlotSnapshot:
        d = json.loads(text)
        c = d["catalog"]
        catalog = ContentCatalog(tuple(c["owner"]), c["g_360"], c["g_120"], c["a"], tuple(c["h"]))
        r_u, r_s, share = d["budget"]
        return cls(
            sbs_id=d["sbs_id"],
            requests={int(u): a for u, a in d["requests"].items()},
            links={int(u): LinkRates(*v) for u, v in d["links"].items()},
            catalog=catalog,
            budget=ComputeBudget(r_u, r_s, int(share)),
            deadline_s=d["deadline_s"],
            capacity_bits=d["capacity_bits"],
        )


@dataclass(frozen=True)
class CachePlan:
    entries: Mapping[int, Format] = field(default_factory=dict)
    objective: int = 0

    def cost(self, catalog: ContentCatalog, users_at_sbs: int) -> float:
        return sum(catalog.cache_cost(f, users_at_sbs) for f in self.entries.values())

    def feasible(self, snapshot: SlotSnapshot) -> bool:
        return self.cost(snapshot.catalog, snapshot.users_at_sbs) <= snapshot.capacity_bits


def _plan(snapshot: SlotSnapshot, user: int, cached: Format | None,
          fmt: Format | None, requesters: Counter) -> DeliveryPlan:
    a = snapshot.requests[user]
    return DeliveryPlan(
        user_id=user, content_id=a, cache_hit=cached is not None,
        links=snapshot.links[user], users_at_sbs=snapshot.users_at_sbs,
        requesters=requesters[a], cached_format=cached,
        transmit_format=None if cached is not None else fmt,
        sbs_id=snapshot.sbs_id, uav_id=snapshot.catalog.owner[a],
    )


def _ok(snapshot: SlotSnapshot, user: int, cached: Format | None, fmt: Format | None,
        requesters: Counter) -> bool:
    return is_successful(_plan(snapshot, user, cached, fmt, requesters),
                         snapshot.catalog, snapshot.budget, snapshot.deadline_s)


def format_rule(snapshot: SlotSnapshot, user: int) -> Format:
    """Format that minimises the user's delay on a miss.

    360 wins outright when ``G_360 <= U_ja * G_120``; otherwise by the sign of
    ``H*U_j*(1/R_S - B/R_U) + (G_360/U_ja - G_120)/c_VD``, ties to 360.
    """
    cat = snapshot.catalog
    a = snapshot.requests[user]
    u_ja = snapshot.requesters()[a]
    if u_ja < 1:
        raise ConfigurationError(f"content {a} missed but has no requesters")
    g360, g120 = cat.size_360_bits, cat.size_visible_bits
    if g360 <= u_ja * g120:
        return Format.FULL_360
    b = snapshot.budget
    compute = cat.workload(a) * snapshot.users_at_sbs * (
        1.0 / b.sbs_cycles_bps - b.uav_sharing / b.uav_cycles_bps)
    c_vd = snapshot.links[user].c_vd
    if c_vd <= 0:
        # backhaul unusable: both formats fail, keep the cheaper label
        return Format.FULL_360
    gap = compute + (g360 / u_ja - g120) / c_vd
    return Format.FULL_360 if gap <= 0 else Format.VISIBLE


def optimal_format(snapshot: SlotSnapshot, cache_plan: CachePlan) -> FormatDecision:
    return {u: format_rule(snapshot, u) for u in snapshot.users
            if snapshot.requests[u] not in cache_plan.entries}


def count_successes(snapshot: SlotSnapshot, cache_plan: CachePlan,
                    formats: Mapping[int, Format]) -> int:
    """Users meeting the deadline: cache hits first, then misses under ``formats``."""
    req = snapshot.requesters()
    hits = misses = 0
    for u in snapshot.users:
        a = snapshot.requests[u]
        cached = cache_plan.entries.get(a)
        if cached is not None:
            hits += _ok(snapshot, u, cached, None, req)
        else:
            if u not in formats:
                raise ConfigurationError(f"no transmission format for missed user {u}")
            misses += _ok(snapshot, u, None, formats[u], req)
    return hits + misses


def brute_force_format(snapshot: SlotSnapshot, cache_plan: CachePlan,
                       limit: int = 16) -> FormatDecision:
    missed = [u for u in snapshot.users if snapshot.requests[u] not in cache_plan.entries]
    if len(missed) > limit:
        raise ConfigurationError(f"{len(missed)} missed requests exceed the exhaustive limit {limit}")
    best, best_count = {}, -1
    for combo in itertools.product((Format.VISIBLE, Format.FULL_360), repeat=len(missed)):
        formats = dict(zip(missed, combo))
        n = count_successes(snapshot, cache_plan, formats)
        if n > best_count:
            best, best_count = formats, n
    return best


# -- cache given formats --------------------------------------------------------

def cache_gain(snapshot: SlotSnapshot, formats: Mapping[int, Format],
               content: int, fmt: Format) -> int:
    """Extra successes among the requesters of ``content`` if it is cached in ``fmt``.

    Each requester's own miss outcome (under its fixed transmission format)
    is the baseline that is subtracted.
    """
    req = snapshot.requesters()
    gain = 0
    for u in snapshot.users:
        if snapshot.requests[u] != content:
            continue
        gain += int(_ok(snapshot, u, fmt, None, req)) - int(_ok(snapshot, u, None, formats[u], req))
    return gain


def cache_objective(snapshot: SlotSnapshot, formats: Mapping[int, Format], plan: CachePlan) -> int:
    return sum(cache_gain(snapshot, formats, a, f) for a, f in plan.entries.items())


def _check_formats(snapshot: SlotSnapshot, formats: Mapping[int, Format]) -> None:
    missing = [u for u in snapshot.users if u not in formats]
    if missing:
        raise ConfigurationError(f"format decision misses users {missing}")


def _rank_key(objective: int, cost: float, ids: tuple[int, ...]):
    # larger objective, then cheaper, then lexicographically smaller ids
    return (-objective, cost, ids)


def optimal_cache(snapshot: SlotSnapshot, formats: Mapping[int, Format],
                  method: str = "exact") -> CachePlan:
    """Feasible cache maximising the summed per-content success gains.

    ``method="exact"`` is depth-first search over requested contents with
    capacity and optimistic-bound pruning; ``"greedy"`` packs by gain per bit.
    """
    _check_formats(snapshot, formats)
    cat, uj, cap = snapshot.catalog, snapshot.users_at_sbs, snapshot.capacity_bits
    options = []
    for a in sorted(set(snapshot.requests.values())):
        opts = []
        for f in (Format.VISIBLE, Format.FULL_360):
            g = cache_gain(snapshot, formats, a, f)
            c = cat.cache_cost(f, uj)
            if g > 0 and c <= cap:
                opts.append((g, c, f))
        if opts:
            options.append((a, opts))

    if method == "greedy":
        return _greedy_cache(options, cap)
    if method != "exact":
        raise ConfigurationError(f"unknown method {method!r}")

    entries = solve_cache_knapsack(options, cap)
    return CachePlan(entries, sum(g for a, opts in options for g, _, f in opts if entries.get(a) is f))


def _greedy_cache(options, cap: float) -> CachePlan:
    flat = [(g / c if c > 0 else float("inf"), -c, -a, a, g, c, f)
            for a, opts in options for g, c, f in opts]
    flat.sort(key=lambda t: t[:3], reverse=True)
    entries, used, total = {}, 0.0, 0
    for *_, a, g, c, f in flat:
        if a in entries or used + c > cap:
            continue
        entries[a] = f
        used += c
        total += g
    return CachePlan(entries, total)


def brute_force_cache(snapshot: SlotSnapshot, formats: Mapping[int, Format],
                      limit: int = 12) -> CachePlan:
    """Enumerate every feasible (content, format) subset of the catalog and
    keep the one with the most successful users, with the same tie order as
    :func:`optimal_cache`. The returned objective is the success gain over
    the empty cache.
    """
    _check_formats(snapshot, formats)
    cat, uj, cap = snapshot.catalog, snapshot.users_at_sbs, snapshot.capacity_bits
    n = len(cat)
    if n > limit:
        raise ConfigurationError(f"catalog of {n} contents exceeds the exhaustive limit {limit}")
    choices = (None, Format.VISIBLE, Format.FULL_360)
    baseline = count_successes(snapshot, CachePlan(), formats)
    best_key, best_entries = None, {}

    def walk(a: int, cost: float, entries: dict):
        nonlocal best_key, best_entries
        if a == n:
            plan = CachePlan(dict(entries))
            gain = count_successes(snapshot, plan, formats) - baseline
            key = _rank_key(gain, cost, tuple(sorted(entries)))
            if best_key is None or key < best_key:
                best_key, best_entries = key, dict(entries)
            return
        for f in choices:
            if f is None:
                walk(a + 1, cost, entries)
                continue
            c = cat.cache_cost(f, uj)
            if cost + c > cap:
                continue
            entries[a] = f
            walk(a + 1, cost + c, entries)
            del entries[a]

    walk(0, 0.0, {})
    return CachePlan(best_entries, -best_key[0])


def solve_cache_knapsack(options, capacity: float) -> dict[int, int]:
    """Exact multiple-choice knapsack: ``options`` is [(item, [(gain, cost, code), ...]), ...].

    Maximises total gain; ties go to lower total cost, then to the
    lexicographically smaller sorted item tuple.
    """
    bound = [0] * (len(options) + 1)
    for k in range(len(options) - 1, -1, -1):
        bound[k] = bound[k + 1] + max(g for g, _, _ in options[k][1])
    best_key, best = (0, 0.0, ()), {}
    chosen: list = []

    def dfs(k, gain, cost):
        nonlocal best_key, best
        if gain + bound[k] < -best_key[0]:
            return
        if k == len(options):
            key = (-gain, cost, tuple(sorted(a for a, _ in chosen)))
            if key < best_key:
                best_key, best = key, dict(chosen)
            return
        item, opts = options[k]
        for g, c, code in opts:
            if cost + c <= capacity:
                chosen.append((item, code))
                dfs(k + 1, gain + g, cost + c)
                chosen.pop()
        dfs(k + 1, gain, cost)

    dfs(0, 0, 0.0)
    return best
