import numpy as np

from coagring import rng


def test_same_seed_same_stream():
    a = rng.RngStream(123, 7)
    b = rng.RngStream(123, 7)
    assert np.array_equal(a.uniforms(100), b.uniforms(100))


def test_different_streams_differ():
    a = rng.RngStream(123, 0).uniforms(50)
    b = rng.RngStream(123, 1).uniforms(50)
    c = rng.RngStream(124, 0).uniforms(50)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_uniform_range_and_mean():
    u = rng.RngStream(99, 0).uniforms(20000)
    assert np.all((u >= 0.0) & (u < 1.0))
    assert abs(u.mean() - 0.5) < 0.02
    assert abs(u.var() - 1.0 / 12.0) < 0.005


def test_jit_and_interpreted_paths_agree():
    if not rng.HAVE_NUMBA:
        return
    s1 = rng.seed_state(42, 3)
    s2 = s1.copy()
    jit_vals = [rng.next_uniform(s1) for _ in range(200)]
    with np.errstate(over="ignore"):
        py_vals = [rng.next_uniform.py_func(s2) for _ in range(200)]
    assert jit_vals == py_vals
