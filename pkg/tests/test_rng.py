import numpy as np
import pytest
from hypothesis import given, strategies as st

from sigval import rng

# Known-answer vectors for Philox4x32-10 published with the Random123 library.
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("ctr,key,expected", KAT)
def test_philox_known_answers(ctr, key, expected):
    out = rng.philox4x32(np.array([ctr], dtype=np.uint32), np.array(key, dtype=np.uint32))
    assert tuple(int(v) for v in out[0]) == expected


def test_split_seed_rejects_out_of_range():
    with pytest.raises(ValueError):
        rng.split_seed(-1)
    with pytest.raises(ValueError):
        rng.split_seed(2**64)
    assert rng.split_seed(2**64 - 1) == (0xFFFFFFFF, 0xFFFFFFFF)


def test_uniforms_in_unit_interval_and_reproducible():
    rows = np.arange(50, dtype=np.uint64)
    u = rng.uniforms(7, rng.STREAM_MC, rows, 3, 9)
    assert u.shape == (50, 9)
    assert np.all((u >= 0) & (u < 1))
    np.testing.assert_array_equal(u, rng.uniforms(7, rng.STREAM_MC, rows, 3, 9))


def test_rows_are_independent_of_batch_composition():
    full = rng.uniforms(1, rng.STREAM_MC, np.arange(10, dtype=np.uint64), 0, 5)
    part = rng.uniforms(1, rng.STREAM_MC, np.array([3, 7], dtype=np.uint64), 0, 5)
    np.testing.assert_array_equal(full[[3, 7]], part)


def test_streams_cells_and_seeds_differ():
    rows = np.arange(4, dtype=np.uint64)
    base = rng.uniforms(1, rng.STREAM_MC, rows, 0, 4)
    assert not np.array_equal(base, rng.uniforms(2, rng.STREAM_MC, rows, 0, 4))
    assert not np.array_equal(base, rng.uniforms(1, rng.STREAM_BOOTSTRAP, rows, 0, 4))
    assert not np.array_equal(base, rng.uniforms(1, rng.STREAM_MC, rows, 1, 4))
    assert not np.array_equal(base, rng.uniforms(1, rng.STREAM_MC, rows, 0, 4, attempt=1))


def test_uniform_moments():
    u = rng.uniforms(0, rng.STREAM_MC, np.arange(2000, dtype=np.uint64), 0, 50).ravel()
    assert abs(u.mean() - 0.5) < 0.005
    assert abs(u.var() - 1 / 12) < 0.002


@given(bound=st.integers(1, 1000), seed=st.integers(0, 2**64 - 1))
def test_bounded_integers_range(bound, seed):
    x = rng.bounded_integers(seed, rng.STREAM_BOOTSTRAP, np.arange(8, dtype=np.uint64), 0, 16, bound)
    assert x.min() >= 0 and x.max() < bound


@given(size=st.integers(1, 40), seed=st.integers(0, 2**32))
def test_random_permutations_are_permutations(size, seed):
    p = rng.random_permutations(seed, rng.STREAM_PERMUTATION, np.arange(5, dtype=np.uint64), 0, size)
    assert p.shape == (5, size)
    for row in p:
        assert sorted(row.tolist()) == list(range(size))
