import numpy as np

from taukit import rng


def test_thread_count_does_not_change_stream():
    n = 3 * rng.BLOCK + 17
    a = rng.uniforms(42, (1, 2), n, threads=1)
    b = rng.uniforms(42, (1, 2), n, threads=8)
    np.testing.assert_array_equal(a, b)


def test_keys_and_seeds_separate_streams():
    a = rng.uniforms(0, (1,), 1000)
    assert not np.array_equal(a, rng.uniforms(0, (2,), 1000))
    assert not np.array_equal(a, rng.uniforms(1, (1,), 1000))
    np.testing.assert_array_equal(a, rng.uniforms(0, (1,), 1000))


def test_prefix_property():
    # a longer draw extends a shorter one
    short = rng.uniforms(9, (3,), 1000)
    long = rng.uniforms(9, (3,), rng.BLOCK + 5)
    np.testing.assert_array_equal(short, long[:1000])


def test_uniforms_in_open_interval():
    u = rng.uniforms(3, (0,), 100_000)
    assert u.min() > 0.0 and u.max() < 1.0
