import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmch.hierarchy import (DegenerateStream, GAMMAS, abc, base_structure_suite, build_U, build_U_tail, build_Y,
                            recursion_suite, sample_stream, solve_a_from_det)
from cmch.laurent import Series, make_field


@given(st.integers(0, 10_000), st.sampled_from(GAMMAS), st.sampled_from([1, 5, 9]))
@settings(max_examples=30, deadline=None)
def test_det_constraint_holds_for_random_streams(seed, gamma, depth):
    f = make_field("exact", gamma)
    s = sample_stream(f, np.random.default_rng(seed), depth)
    Y = build_Y(s)
    assert (Y.det() + Series.monomial(f, f.gamma * 4, 2)).is_zero()
    assert Y.trace().is_zero()
    assert s.a[0] == f.zero


def test_perturbed_stream_breaks_det():
    f = make_field("exact", 3)
    s = sample_stream(f, np.random.default_rng(1), 9)
    s.b[2] = s.b[2] + 1
    Y = build_Y(s)
    r = Y.det() + Series.monomial(f, f.gamma * 4, 2)
    assert not r.is_zero()
    # b[2] sits at lambda^5 and first meets c at lambda^1
    assert min(d for d, _ in r.items()) == 6


def test_inconsistent_a3_rejected():
    f = make_field("exact", 2)
    s = sample_stream(f, np.random.default_rng(0), 7)
    with pytest.raises(DegenerateStream):
        solve_a_from_det(s.b, s.c, s.a[1] + 1, f)


def test_even_depth_rejected():
    with pytest.raises(ValueError):
        sample_stream(make_field("exact", 2), np.random.default_rng(0), 4)


def test_abc_roundtrip():
    f = make_field("exact", 5)
    s = sample_stream(f, np.random.default_rng(2), 7)
    a, b, c = abc(build_Y(s))
    assert [b.coeff(2 * n + 1) for n in range(len(s.b))] == s.b
    assert [a.coeff(2 * n) for n in range(len(s.a))] == s.a
    assert c.coeff(1) == s.c[0]


@pytest.mark.parametrize("m", [0, 1, 2])
def test_U_reconstructs_Y(m):
    f = make_field("exact", 7)
    Y = build_Y(sample_stream(f, np.random.default_rng(m), 11))
    rec = (build_U(Y, m) + build_U_tail(Y, m)).shift(2 * m + 2) * (f.i * 2)
    assert (rec - Y).is_zero()


@pytest.mark.parametrize("N,mode", [(0, "base"), (1, "base"), (1, "minus"), (1, "plus")])
def test_base_structure_suite_passes(env_factory, window, N, mode):
    env = env_factory(N, mode)
    rs = base_structure_suite(env, need=window(N))
    assert rs and all(r.passed for r in rs), [r for r in rs if not r.passed][:3]


def test_recursion_detects_wrong_coefficient(env_factory):
    env = env_factory(1, "base", 3)
    w = env.w0
    saved = w.stream.b[1]
    try:
        w.stream.b[1] = saved + 1
        rs = recursion_suite(env, w)
    finally:
        w.stream.b[1] = saved
    assert any(not r.passed for r in rs)
    assert all(r.passed for r in recursion_suite(env, w))
