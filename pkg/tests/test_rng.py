import numpy as np
from hypothesis import given, settings, strategies as st

from xfpt.rng import replicate_key, seed_key, uniform, uniforms, walker_key


def _key(seed, rep, walker):
    # numba boxes uint64 results as Python ints; rewrap before passing them back in
    return np.uint64(walker_key(np.uint64(replicate_key(seed_key(seed), rep)), walker))


def _stream(seed, rep, walker, n=20000):
    return uniforms(_key(seed, rep, walker), 0, n)


def test_range_and_moments():
    u = _stream(0, 0, 0, 200_000)
    assert np.all((u > 0) & (u <= 1))
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)
    assert abs(u.var() - 1 / 12) < 2e-3


def test_deterministic():
    assert np.array_equal(_stream(5, 1, 3), _stream(5, 1, 3))
    key = _key(5, 1, 3)
    assert uniform(key, 17) == _stream(5, 1, 3)[17]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 63), rep=st.integers(0, 1000), w=st.integers(0, 10 ** 6))
def test_neighbouring_streams_differ(seed, rep, w):
    a = _stream(seed, rep, w, 64)
    for b in (_stream(seed + 1, rep, w, 64), _stream(seed, rep + 1, w, 64), _stream(seed, rep, w + 1, 64)):
        assert not np.any(a == b)


def test_streams_uncorrelated():
    a, b = _stream(1, 0, 0, 100_000), _stream(1, 0, 1, 100_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.015


def test_large_and_negative_seeds():
    assert isinstance(seed_key(-1), np.uint64)
    assert isinstance(seed_key(10 ** 30), np.uint64)
