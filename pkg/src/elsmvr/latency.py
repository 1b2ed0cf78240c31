"""Delivery delay, extraction time and per-user reliability bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .content import ContentCatalog, Format
from .errors import ConfigurationError

# Delay of a delivery that uses a zero-capacity link. Only ever compared
# against the deadline; never averaged.
UNREACHABLE = math.inf


@dataclass(frozen=True)
class LinkRates:
    """Per-user capacities (bit/s): UAV->SBS, SBS->UAV, SBS->user, user->SBS."""

    c_vd: float
    c_vu: float
    c_sd: float
    c_su: float


@dataclass(frozen=True)
class ComputeBudget:
    """Extraction throughput of a UAV and of an SBS, in bit/s.

    ``uav_sharing`` divides the UAV budget further: 1 charges ``H*U_j/R_U``
    per visible extraction, B (the SBS count) charges ``H*B*U_j/R_U`` as if
    the UAV splits its resources over every SBS.
    """

    uav_cycles_bps: float = 1e9
    sbs_cycles_bps: float = 2e9
    uav_sharing: int = 1

    def __post_init__(self):
        if self.uav_cycles_bps <= 0 or self.sbs_cycles_bps <= 0:
            raise ConfigurationError("compute budgets must be positive")
        if self.uav_sharing < 1:
            raise ConfigurationError("uav_sharing must be >= 1")


@dataclass(frozen=True)
class DeliveryPlan:
    user_id: int
    content_id: int
    cache_hit: bool
    links: LinkRates
    users_at_sbs: int
    requesters: int = 1
    cached_format: Format | None = None
    transmit_format: Format | None = None
    sbs_id: int = 0
    uav_id: int = 0

    def __post_init__(self):
        if self.cache_hit and self.cached_format is None:
            raise ConfigurationError("cache hit needs the cached format")
        if not self.cache_hit and self.transmit_format is None:
            raise ConfigurationError("cache miss needs a transmission format")
        if self.users_at_sbs < 1:
            raise ConfigurationError("serving SBS has no users")
        if self.requesters < 1:
            raise ConfigurationError("requester count must be >= 1")


def _t(bits: float, rate: float) -> float:
    return bits / rate if rate > 0 else UNREACHABLE


def transmission_delay(plan: DeliveryPlan, catalog: ContentCatalog) -> float:
    links = plan.links
    access = (_t(catalog.size_visible_bits, links.c_sd)
              + _t(catalog.tracking_payload_bits, links.c_su))
    if plan.cache_hit:
        return access
    uplink = _t(catalog.tracking_payload_bits, links.c_vu)
    if plan.transmit_format is Format.VISIBLE:
        backhaul = _t(catalog.size_visible_bits, links.c_vd)
    else:
        backhaul = _t(catalog.size_360_bits / plan.requesters, links.c_vd)
    return backhaul + uplink + access


def uav_processing(plan: DeliveryPlan, catalog: ContentCatalog, budget: ComputeBudget) -> float:
    if plan.cache_hit or plan.transmit_format is not Format.VISIBLE:
        return 0.0
    h = catalog.workload(plan.content_id)
    return h * plan.users_at_sbs * budget.uav_sharing / budget.uav_cycles_bps


def sbs_processing(plan: DeliveryPlan, catalog: ContentCatalog, budget: ComputeBudget) -> float:
    if plan.cache_hit:
        active = plan.cached_format is Format.FULL_360
    else:
        active = plan.transmit_format is Format.FULL_360
    if not active:
        return 0.0
    return catalog.workload(plan.content_id) * plan.users_at_sbs / budget.sbs_cycles_bps


def total_delay(plan: DeliveryPlan, catalog: ContentCatalog, budget: ComputeBudget) -> float:
    return (uav_processing(plan, catalog, budget) + sbs_processing(plan, catalog, budget)
            + transmission_delay(plan, catalog))


def is_successful(plan: DeliveryPlan, catalog: ContentCatalog, budget: ComputeBudget,
                  deadline_s: float) -> bool:
    if deadline_s < 0:
        raise ConfigurationError("deadline must be non-negative")
    return total_delay(plan, catalog, budget) <= deadline_s


@dataclass(frozen=True)
class ReliabilityRecord:
    successes: int = 0
    trials: int = 0

    @property
    def reliability(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


def update_reliability(record: ReliabilityRecord, outcome: bool) -> ReliabilityRecord:
    return ReliabilityRecord(record.successes + bool(outcome), record.trials + 1)
