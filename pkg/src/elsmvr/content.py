"""Content catalog, request traces and SBS cache accounting."""

from __future__ import annotations

import enum
import io
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError


class Format(enum.Enum):
    VISIBLE = "120"
    FULL_360 = "360"


@dataclass(frozen=True)
class ContentCatalog:
    """Contents ``0..n-1``; ``owner[a]`` is the UAV that films content ``a``.

    ``extract_workload_bits`` defaults to the 360-degree size for every content.
    """

    owner: tuple[int, ...]
    size_360_bits: float = 50e6
    size_visible_bits: float = 12.5e6
    tracking_payload_bits: float = 50e3
    extract_workload_bits: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.owner:
            raise ConfigurationError("empty catalog")
        if not (0 < self.size_visible_bits < self.size_360_bits):
            raise ConfigurationError("need 0 < G_visible < G_360")
        if self.tracking_payload_bits <= 0:
            raise ConfigurationError("tracking payload must be positive")
        if self.extract_workload_bits is None:
            object.__setattr__(self, "extract_workload_bits", (self.size_360_bits,) * len(self.owner))
        elif len(self.extract_workload_bits) != len(self.owner):
            raise ConfigurationError("one extraction workload per content")
        if any(h <= 0 for h in self.extract_workload_bits):
            raise ConfigurationError("extraction workloads must be positive")

    @classmethod
    def round_robin(cls, n_uavs: int, per_uav: int, **sizes) -> ContentCatalog:
        """``per_uav`` contents per UAV, ids interleaved so popularity ranks spread over UAVs."""
        return cls(owner=tuple(a % n_uavs for a in range(n_uavs * per_uav)), **sizes)

    def __len__(self) -> int:
        return len(self.owner)

    def check(self, content_id: int) -> None:
        if not 0 <= content_id < len(self.owner):
            raise ConfigurationError(f"unknown content {content_id}")

    def uav_of(self, content_id: int) -> int:
        self.check(content_id)
        return self.owner[content_id]

    def contents_of(self, uav: int) -> list[int]:
        return [a for a, k in enumerate(self.owner) if k == uav]

    def workload(self, content_id: int) -> float:
        self.check(content_id)
        return self.extract_workload_bits[content_id]

    def cache_cost(self, fmt: Format, users_at_sbs: int) -> float:
        """Storage charged for one cached content: a 360 copy, or one visible copy per user."""
        if fmt is Format.FULL_360:
            return self.size_360_bits
        return users_at_sbs * self.size_visible_bits


class CapacityExceeded(Exception):
    def __init__(self, content_id: int, deficit_bits: float):
        super().__init__(f"content {content_id} exceeds free cache space by {deficit_bits:g} bits")
        self.content_id = content_id
        self.deficit_bits = deficit_bits


class DuplicateEntry(Exception):
    pass


@dataclass(frozen=True)
class CacheState:
    sbs_id: int
    capacity_bits: float
    associated_user_count: int
    entries: Mapping[int, Format] = field(default_factory=dict)

    def __post_init__(self):
        if self.capacity_bits < 0:
            raise ConfigurationError("negative cache capacity")
        if self.associated_user_count < 0:
            raise ConfigurationError("negative user count")

    def count(self, fmt: Format) -> int:
        return sum(1 for f in self.entries.values() if f is fmt)


def occupancy(cache: CacheState, catalog: ContentCatalog) -> float:
    total = 0.0
    for a, fmt in cache.entries.items():
        catalog.check(a)
        total += catalog.cache_cost(fmt, cache.associated_user_count)
    return total


def admit(cache: CacheState, content_id: int, fmt: Format, catalog: ContentCatalog,
          replace: bool = False) -> CacheState:
    """Return a cache with ``content_id`` stored in ``fmt``.

    Raises CapacityExceeded (carrying the deficit) when the entry does not fit,
    DuplicateEntry when the content is already stored and ``replace`` is False.
    """
    catalog.check(content_id)
    entries = dict(cache.entries)
    if content_id in entries:
        if not replace:
            raise DuplicateEntry(f"content {content_id} already cached as {entries[content_id].value}")
        del entries[content_id]
    base = CacheState(cache.sbs_id, cache.capacity_bits, cache.associated_user_count, entries)
    needed = occupancy(base, catalog) + catalog.cache_cost(fmt, cache.associated_user_count)
    if needed > cache.capacity_bits:
        raise CapacityExceeded(content_id, needed - cache.capacity_bits)
    entries[content_id] = fmt
    return CacheState(cache.sbs_id, cache.capacity_bits, cache.associated_user_count, entries)


def evict(cache: CacheState, content_id: int) -> CacheState:
    entries = {a: f for a, f in cache.entries.items() if a != content_id}
    return CacheState(cache.sbs_id, cache.capacity_bits, cache.associated_user_count, entries)


def fill_cache(cache: CacheState, plan: Iterable[tuple[int, Format]],
               catalog: ContentCatalog) -> CacheState:
    """Admit entries in order, skipping those that no longer fit."""
    for a, fmt in plan:
        try:
            cache = admit(cache, a, fmt, catalog)
        except CapacityExceeded:
            continue
    return cache


# -- requests ------------------------------------------------------------------

@dataclass(frozen=True)
class ZipfParams:
    exponent: float = 0.8

    def probabilities(self, n: int) -> np.ndarray:
        ranks = np.arange(1, n + 1, dtype=float)
        w = ranks ** (-self.exponent)
        return w / w.sum()


@dataclass(frozen=True)
class RequestTrace:
    """``requests[t, u]`` is the content that user ``u`` requests in slot ``t``."""

    requests: np.ndarray

    @property
    def horizon(self) -> int:
        return self.requests.shape[0]

    @property
    def n_users(self) -> int:
        return self.requests.shape[1]

    def at(self, t: int) -> np.ndarray:
        return self.requests[t]

    def to_text(self) -> str:
        buf = io.StringIO()
        for t, row in enumerate(self.requests):
            for u, a in enumerate(row):
                buf.write(f"{t},{u},{int(a)}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str, catalog: ContentCatalog | None = None) -> RequestTrace:
        rows = [tuple(int(x) for x in line.split(",")) for line in text.splitlines() if line.strip()]
        if not rows:
            raise ConfigurationError("empty request trace")
        horizon = max(r[0] for r in rows) + 1
        n_users = max(r[1] for r in rows) + 1
        req = np.full((horizon, n_users), -1, dtype=np.int64)
        for t, u, a in rows:
            if catalog is not None:
                catalog.check(a)
            req[t, u] = a
        if (req < 0).any():
            raise ConfigurationError("request trace has holes")
        return cls(req)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path, catalog: ContentCatalog | None = None) -> RequestTrace:
        return cls.from_text(Path(path).read_text(), catalog)


def generate_requests(popularity: ZipfParams, users: Sequence[int] | int,
                      catalog: ContentCatalog, horizon: int, seed: int) -> RequestTrace:
    """i.i.d. Zipf requests; content id order is popularity rank order."""
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    n_users = users if isinstance(users, int) else len(users)
    p = popularity.probabilities(len(catalog))
    rng = np.random.default_rng(seed)
    return RequestTrace(rng.choice(len(catalog), size=(horizon, n_users), p=p))


def requesters_per_content(requests: Sequence[int], users: Iterable[int]) -> Counter:
    """U_ja: how many of ``users`` request each content in one slot."""
    return Counter(int(requests[u]) for u in users)
