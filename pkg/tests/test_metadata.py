import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfcs.metadata import (
    CAPACITY,
    MetadataStore,
    StaticFieldError,
    deltas_for,
    diff,
    digest,
    merge,
    write_local,
)


def store_from(owner, entries):
    """entries: {(node, field): (value, version)}"""
    s = MetadataStore(owner, {"position": (0, 0)}, (CAPACITY, "load"))
    merge(s, [(n, f, v, ver) for (n, f), (v, ver) in entries.items()])
    return s


def test_write_local_bumps_version():
    s = MetadataStore(1, {"position": (0, 0)})
    assert write_local(s, CAPACITY, 10.0) == 1
    assert write_local(s, CAPACITY, 8.0) == 2
    assert s.value(1, CAPACITY) == 8.0 and s.version(1, CAPACITY) == 2


def test_static_and_undeclared_fields_are_rejected():
    s = MetadataStore(1, {"position": (0, 0)})
    with pytest.raises(StaticFieldError):
        write_local(s, "position", (1, 1))
    with pytest.raises(StaticFieldError):
        write_local(s, "colour", "red")


def test_owner_record_cannot_be_removed():
    s = MetadataStore(1)
    with pytest.raises(ValueError):
        s.remove(1)
    s.add_peer(2)
    s.retain([])
    assert list(s.records) == [1]


def test_diff_splits_requests_and_fresher():
    a = store_from(1, {(1, CAPACITY): (5, 3), (2, CAPACITY): (7, 1)})
    b = store_from(2, {(1, CAPACITY): (4, 2), (2, CAPACITY): (9, 4), (3, "load"): (1, 1)})
    requests, fresher = diff(a, digest(b))
    assert requests == {(2, CAPACITY), (3, "load")}
    assert fresher == {(1, CAPACITY, 5, 3)}
    assert deltas_for(b, requests) == {(2, CAPACITY, 9, 4), (3, "load", 1, 1)}


def test_merge_ignores_equal_and_older_versions():
    s = store_from(1, {(2, CAPACITY): (5, 3)})
    assert merge(s, [(2, CAPACITY, 99, 3), (2, CAPACITY, 1, 2)]) == 0
    assert s.value(2, CAPACITY) == 5
    assert merge(s, [(2, CAPACITY, 6, 4)]) == 1
    assert s.value(2, CAPACITY) == 6


entries = st.dictionaries(
    st.tuples(st.integers(0, 5), st.sampled_from([CAPACITY, "load"])),
    st.integers(1, 6),
    max_size=12,
)


def _value(node, name, version):
    # one owner writes each version once, so the value is a function of the key
    return f"{node}/{name}/v{version}"


@settings(max_examples=200, deadline=None)
@given(entries, entries)
def test_exchange_reaches_union_by_max_version(ea, eb):
    a = store_from(0, {k: (_value(*k, v), v) for k, v in ea.items()})
    b = store_from(9, {k: (_value(*k, v), v) for k, v in eb.items()})
    requests, fresher = diff(b, digest(a))
    merge(a, fresher)
    merge(b, deltas_for(a, requests))
    want = {k: max(ea.get(k, 0), eb.get(k, 0)) for k in set(ea) | set(eb)}
    for s in (a, b):
        got = {(n, f): fv.version for n, rec in s.records.items() for f, fv in rec.dynamic_fields.items()}
        assert got == want
    assert {k: v for k, v in a.snapshot() if v} == {k: v for k, v in b.snapshot() if v}


def test_merge_is_permutation_invariant():
    rng = random.Random(5)
    for _ in range(50):
        deltas = [(rng.randrange(4), CAPACITY, None, rng.randrange(1, 8)) for _ in range(10)]
        deltas = [(n, f, _value(n, f, v), v) for n, f, _, v in deltas]
        ref = store_from(0, {})
        merge(ref, deltas)
        for _ in range(5):
            rng.shuffle(deltas)
            s = store_from(0, {})
            merge(s, deltas)
            assert s.snapshot() == ref.snapshot()
