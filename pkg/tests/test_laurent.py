from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmch.laurent import (INF, BranchError, Series, WindowCollapse, make_field, naive_product)

F = make_field("exact", 3)
G = make_field("exact", Fraction(2, 3))

small = st.integers(-3, 3)
scalars = st.tuples(small, small, small, small).map(lambda t: F.scalar(t[0]) + F.i * t[1] + F.s * t[2] + F.i * F.s * t[3])


@st.composite
def series(draw, lo=-4, hi=4):
    d = draw(st.dictionaries(st.integers(lo, hi), scalars, max_size=6))
    return Series.from_dict(F, d)


def test_scalar_field_relations():
    assert F.s * F.s == F.gamma
    assert F.i * F.i == -F.one
    x = F.scalar(2) + F.i * 3 + F.s
    assert x * x.inverse() == F.one
    assert F.conj(F.i) == -F.i


@given(scalars)
def test_scalar_sqrt_squares_back(x):
    y = x * x
    r = F.sqrt(y)
    assert r * r == y


@given(series(), series())
def test_product_matches_naive_convolution(s, t):
    p = s * t
    for d in range(-8, 9):
        assert p.coeff(d) == naive_product(s, t, d)


@given(series(), series(), series())
@settings(max_examples=40)
def test_ring_axioms(a, b, c):
    assert ((a * b) * c).equals(a * (b * c))
    assert (a * (b + c)).equals(a * b + a * c)
    assert (a * b).equals(b * a)


@given(series())
def test_euler_is_a_derivation(s):
    t = s.shift(1) + 2
    assert (s * t).euler().equals(s.euler() * t + s * t.euler())


@given(series())
def test_reflect_is_an_involution(s):
    assert s.reflect().reflect().equals(s)
    assert s.conj_flip().conj_flip().equals(s)


def test_window_propagation_through_product():
    # known only up to lambda^5, times lambda^-2 + 1: top certified degree drops
    s = Series.from_dict(F, {0: 1, 1: 2}, hi=5)
    t = Series.from_dict(F, {-2: 1, 0: 1})
    p = s * t
    assert p.window == (-INF, 3)
    with pytest.raises(WindowCollapse):
        p.coeff(4)


def test_projection_certification():
    s = Series.from_dict(F, {-1: 1, 2: 3}, lo=-3, hi=4)
    assert s.projection_certified(">=", 0)
    assert not s.projection_certified("<=", 6)
    assert s.project(">=", 0).coeff(2) == F.scalar(3)


def test_inverse_sqrt_log_roundtrip():
    x = Series.from_dict(F, {0: 1, 1: 2, 3: -1}, hi=15)
    inv = x.inverse()
    assert (x * inv - 1).is_zero()
    y = Series.from_dict(F, {0: 4, 2: 1}, hi=15)
    r = y.sqrt()
    assert (r * r - y).is_zero()
    z = Series.from_dict(F, {0: 1, 2: 5}, hi=11)
    lg = z.log()
    # lambda d/dlambda log z = z'/z
    assert (lg.euler() * z - z.euler()).is_zero()


def test_lower_side_inverse():
    x = Series.from_dict(F, {0: 2, -1: 1}, lo=-9)
    assert (x * x.inverse() - 1).is_zero()


def test_branch_errors():
    with pytest.raises(BranchError):
        Series.from_dict(F, {1: 1}, hi=9).sqrt()
    with pytest.raises(BranchError):
        Series.from_dict(F, {0: 2}, hi=9).log()
    with pytest.raises(ZeroDivisionError):
        Series.zero(F).inverse()


def test_mixed_fields_rejected():
    with pytest.raises(ValueError):
        Series.const(F, 1) + Series.const(G, 1)


def test_json_roundtrip():
    s = Series.from_dict(F, {-2: F.i, 3: F.s * Fraction(1, 3)}, lo=-5, hi=7)
    back = Series.from_json(F, s.to_json())
    assert back.window == s.window and back.equals(s)


def test_float_backend_agrees_with_exact():
    Ff = make_field("float", 3)
    rng = np.random.default_rng(0)
    d = {k: int(v) for k, v in zip(range(-3, 4), rng.integers(-3, 4, 7))}
    se, sf = Series.from_dict(F, d), Series.from_dict(Ff, d)
    pe, pf = se * se.shift(1), sf * sf.shift(1)
    for k in range(-6, 8):
        assert abs(complex(pe.coeff(k)) - pf.coeff(k)) < 1e-12
