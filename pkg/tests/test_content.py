from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from elsmvr.content import (
    CacheState, CapacityExceeded, ContentCatalog, DuplicateEntry, Format, RequestTrace, ZipfParams,
    admit, evict, fill_cache, generate_requests, occupancy, requesters_per_content,
)
from elsmvr.errors import ConfigurationError

MB = 1e6
CAT = ContentCatalog.round_robin(5, 3)


def test_catalog_defaults():
    assert len(CAT) == 15
    assert CAT.uav_of(7) == 2
    assert CAT.contents_of(0) == [0, 5, 10]
    assert CAT.workload(3) == 50 * MB


def test_catalog_validation():
    with pytest.raises(ConfigurationError):
        ContentCatalog((0,), size_360_bits=10, size_visible_bits=20)
    with pytest.raises(ConfigurationError):
        CAT.check(15)


def test_occupancy_fixtures():
    assert occupancy(CacheState(0, 300 * MB, 20), CAT) == 0
    assert occupancy(CacheState(0, 300 * MB, 20, {0: Format.FULL_360}), CAT) == 50 * MB
    assert occupancy(CacheState(0, 300 * MB, 20, {0: Format.VISIBLE}), CAT) == 250 * MB


def test_admit_to_exact_capacity():
    c = CacheState(0, 300 * MB, 20, {0: Format.FULL_360})
    c = admit(c, 1, Format.VISIBLE, CAT)
    assert occupancy(c, CAT) == 300 * MB


def test_admit_rejects_one_bit_deficit():
    c = CacheState(0, 50 * MB - 1, 20)
    with pytest.raises(CapacityExceeded) as exc:
        admit(c, 0, Format.FULL_360, CAT)
    assert exc.value.deficit_bits == 1


def test_admit_duplicate_and_replace():
    c = admit(CacheState(0, 300 * MB, 1), 0, Format.VISIBLE, CAT)
    with pytest.raises(DuplicateEntry):
        admit(c, 0, Format.FULL_360, CAT)
    c = admit(c, 0, Format.FULL_360, CAT, replace=True)
    assert c.entries == {0: Format.FULL_360}
    assert evict(c, 0).entries == {}


def test_fill_cache_skips_overflow():
    c = fill_cache(CacheState(0, 100 * MB, 6),
                   [(0, Format.FULL_360), (1, Format.VISIBLE), (2, Format.FULL_360)], CAT)
    assert c.entries == {0: Format.FULL_360, 2: Format.FULL_360}
    assert c.count(Format.VISIBLE) == 0 and c.count(Format.FULL_360) == 2


ops = st.lists(st.tuples(st.booleans(), st.integers(0, 14), st.sampled_from(list(Format))), max_size=40)


@given(ops, st.integers(0, 20), st.floats(0, 600))
def test_capacity_never_violated(seq, users, cap_mb):
    c = CacheState(0, cap_mb * MB, users)
    for is_admit, a, f in seq:
        if is_admit:
            try:
                c = admit(c, a, f, CAT, replace=True)
            except CapacityExceeded:
                pass
        else:
            c = evict(c, a)
        assert occupancy(c, CAT) <= c.capacity_bits


@given(st.dictionaries(st.integers(0, 14), st.sampled_from(list(Format))), st.integers(0, 20))
def test_occupancy_brute_force(entries, users):
    c = CacheState(0, 1e12, users, entries)
    total = 0.0
    for f in entries.values():
        total += 50 * MB if f is Format.FULL_360 else users * 12.5 * MB
    assert occupancy(c, CAT) == pytest.approx(total)


def _three_sigma(p, n):
    return 3 * np.sqrt(p * (1 - p) / n)


def test_zipf_zero_exponent_is_uniform():
    cat = ContentCatalog.round_robin(1, 4)
    tr = generate_requests(ZipfParams(0.0), 1, cat, 100_000, seed=3)
    freq = np.bincount(tr.requests.ravel(), minlength=4) / tr.requests.size
    assert np.all(np.abs(freq - 0.25) < _three_sigma(0.25, tr.requests.size))


def test_zipf_rank_one_frequency():
    cat = ContentCatalog.round_robin(1, 3)
    p1 = 1 / (1 + 1 / 2 + 1 / 3)
    assert ZipfParams(1.0).probabilities(3)[0] == pytest.approx(p1)
    assert p1 == pytest.approx(0.545, abs=1e-3)
    tr = generate_requests(ZipfParams(1.0), 10, cat, 10_000, seed=4)
    freq = np.mean(tr.requests == 0)
    assert abs(freq - p1) < _three_sigma(p1, tr.requests.size)


def test_generate_requests_deterministic():
    a = generate_requests(ZipfParams(), 20, CAT, 50, seed=9)
    b = generate_requests(ZipfParams(), 20, CAT, 50, seed=9)
    assert np.array_equal(a.requests, b.requests)


def test_trace_text_roundtrip(tmp_path):
    tr = generate_requests(ZipfParams(), 4, CAT, 6, seed=1)
    path = tmp_path / "trace.txt"
    tr.save(path)
    back = RequestTrace.load(path, CAT)
    assert np.array_equal(back.requests, tr.requests)
    assert back.horizon == 6 and back.n_users == 4


def test_trace_with_holes_rejected():
    with pytest.raises(ConfigurationError):
        RequestTrace.from_text("0,0,1\n0,2,1\n")


@given(st.lists(st.integers(0, 14), min_size=1, max_size=30), st.data())
def test_requesters_match_counting(requests, data):
    users = data.draw(st.sets(st.integers(0, len(requests) - 1)))
    expected = {}
    for u in users:
        expected[requests[u]] = expected.get(requests[u], 0) + 1
    assert requesters_per_content(requests, users) == Counter(expected)
