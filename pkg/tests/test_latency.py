import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from elsmvr.content import ContentCatalog, Format
from elsmvr.errors import ConfigurationError
from elsmvr.latency import (
    UNREACHABLE, ComputeBudget, DeliveryPlan, LinkRates, ReliabilityRecord, is_successful,
    sbs_processing, total_delay, transmission_delay, uav_processing, update_reliability,
)

CAT = ContentCatalog(owner=(0, 1), extract_workload_bits=(50e6, 50e6))
BUDGET = ComputeBudget(uav_cycles_bps=1e9, sbs_cycles_bps=2e9)
LINKS = LinkRates(c_vd=2e9, c_vu=100e6, c_sd=1e9, c_su=10e6)


def plan(**kw):
    base = dict(user_id=0, content_id=0, cache_hit=True, links=LINKS, users_at_sbs=4,
                cached_format=Format.VISIBLE)
    base.update(kw)
    return DeliveryPlan(**base)


def miss(fmt, **kw):
    return plan(cache_hit=False, cached_format=None, transmit_format=fmt, **kw)


def test_hit_delay_fixture():
    # 12.5 Mbit / 1 Gbit/s + 50 kbit / 10 Mbit/s
    assert transmission_delay(plan(), CAT) == pytest.approx(0.0175, rel=1e-12)


def test_uav_extraction_fixture():
    assert uav_processing(miss(Format.VISIBLE), CAT, BUDGET) == pytest.approx(0.2, rel=1e-12)
    assert uav_processing(miss(Format.FULL_360), CAT, BUDGET) == 0.0
    assert uav_processing(plan(), CAT, BUDGET) == 0.0


def test_uav_sharing_multiplies_by_sbs_count():
    shared = ComputeBudget(1e9, 2e9, uav_sharing=5)
    assert uav_processing(miss(Format.VISIBLE), CAT, shared) == pytest.approx(1.0, rel=1e-12)


def test_sbs_extraction_fixture():
    assert sbs_processing(miss(Format.FULL_360), CAT, BUDGET) == pytest.approx(0.1, rel=1e-12)
    assert sbs_processing(plan(cached_format=Format.FULL_360), CAT, BUDGET) == \
        sbs_processing(miss(Format.FULL_360), CAT, BUDGET)
    assert sbs_processing(plan(), CAT, BUDGET) == 0.0


def test_multicast_divisor_matches_visible_at_ratio_four():
    a = transmission_delay(miss(Format.FULL_360, requesters=4), CAT)
    b = transmission_delay(miss(Format.VISIBLE), CAT)
    assert a == pytest.approx(b, rel=1e-12)


def test_miss_delay_terms():
    d = transmission_delay(miss(Format.VISIBLE), CAT)
    want = 12.5e6 / 2e9 + 50e3 / 100e6 + 12.5e6 / 1e9 + 50e3 / 10e6
    assert d == pytest.approx(want, rel=1e-12)


def test_success_at_deadline():
    assert is_successful(plan(), CAT, BUDGET, 0.020)
    assert not is_successful(miss(Format.VISIBLE), CAT, BUDGET, 0.020)
    # boundary counts as success
    assert is_successful(plan(), CAT, BUDGET, transmission_delay(plan(), CAT))


def test_zero_capacity_is_unreachable():
    dead = LinkRates(0.0, 1e6, 1e9, 1e6)
    p = miss(Format.VISIBLE, links=dead)
    assert transmission_delay(p, CAT) == UNREACHABLE
    assert not is_successful(p, CAT, BUDGET, 1e9)
    # a hit never touches the backhaul
    assert math.isfinite(transmission_delay(plan(links=dead), CAT))


def test_huge_capacity_delay_vanishes():
    fast = LinkRates(*(1e30,) * 4)
    fast_cpu = ComputeBudget(1e30, 1e30)
    for p in (plan(links=fast), miss(Format.VISIBLE, links=fast), miss(Format.FULL_360, links=fast)):
        assert total_delay(p, CAT, fast_cpu) < 1e-20
        assert is_successful(p, CAT, fast_cpu, 1e-9)


def test_plan_validation():
    with pytest.raises(ConfigurationError):
        plan(cached_format=None)
    with pytest.raises(ConfigurationError):
        miss(None)
    with pytest.raises(ConfigurationError):
        plan(users_at_sbs=0)
    with pytest.raises(ConfigurationError):
        ComputeBudget(0, 1)
    with pytest.raises(ConfigurationError):
        is_successful(plan(), CAT, BUDGET, -1)


def test_every_branch_is_exercised():
    cases = [plan(), plan(cached_format=Format.FULL_360), miss(Format.VISIBLE), miss(Format.FULL_360)]
    delays = {total_delay(p, CAT, BUDGET) for p in cases}
    assert len(delays) == 4


rate = st.floats(1e5, 1e11)


@given(rate, rate, rate, rate, st.integers(1, 20), st.integers(1, 20),
       st.sampled_from([None, Format.VISIBLE, Format.FULL_360]), st.sampled_from(list(Format)))
def test_shared_delay_formula(c_vd, c_vu, c_sd, c_su, uj, uja, cached, fmt):
    links = LinkRates(c_vd, c_vu, c_sd, c_su)
    hit = cached is not None
    p = plan(links=links, users_at_sbs=uj, requesters=uja, cache_hit=hit, cached_format=cached,
             transmit_format=None if hit else fmt)
    budget = ComputeBudget(1e9, 2e9, uav_sharing=3)
    h, g120, g360, a = 50e6, 12.5e6, 50e6, 50e3
    access = g120 / c_sd + a / c_su
    if hit:
        want = access + (h * uj / 2e9 if cached is Format.FULL_360 else 0.0)
    elif fmt is Format.VISIBLE:
        want = h * uj * 3 / 1e9 + g120 / c_vd + a / c_vu + access
    else:
        want = h * uj / 2e9 + g360 / uja / c_vd + a / c_vu + access
    got = total_delay(p, CAT, budget)
    assert got == pytest.approx(want, rel=1e-12)
    assert got >= transmission_delay(p, CAT) >= 0


@given(rate, rate, rate, rate, st.floats(1.0, 1e6))
def test_faster_links_never_slower(c_vd, c_vu, c_sd, c_su, k):
    slow = miss(Format.VISIBLE, links=LinkRates(c_vd, c_vu, c_sd, c_su))
    fast = miss(Format.VISIBLE, links=LinkRates(c_vd * k, c_vu * k, c_sd * k, c_su * k))
    assert total_delay(fast, CAT, BUDGET) <= total_delay(slow, CAT, BUDGET)


def test_reliability_record():
    r = update_reliability(ReliabilityRecord(), True)
    assert r.reliability == 1.0
    for k in range(10):
        r = update_reliability(r, k % 2 == 0)
    assert (r.successes, r.trials) == (6, 11)
    alt = ReliabilityRecord()
    for k in range(200):
        alt = update_reliability(alt, k % 2 == 1)
    assert alt.reliability == 0.5
    assert ReliabilityRecord().reliability == 0.0


@given(st.lists(st.booleans(), max_size=50), st.randoms())
def test_reliability_order_invariant(outcomes, rnd):
    shuffled = list(outcomes)
    rnd.shuffle(shuffled)
    a = b = ReliabilityRecord()
    for x, y in zip(outcomes, shuffled):
        a, b = update_reliability(a, x), update_reliability(b, y)
    assert a == b
    assert 0.0 <= a.reliability <= 1.0


def test_reliability_binomial_concentration():
    p, n = 0.3, 10_000
    draws = np.random.default_rng(7).random(n) < p
    r = ReliabilityRecord()
    for d in draws:
        r = update_reliability(r, bool(d))
    assert abs(r.reliability - p) <= 3 * np.sqrt(p * (1 - p) / n)
