from fractions import Fraction

import numpy as np
import pytest

from cmch.forms import Dual, val
from cmch.killing import build_P
from cmch.laurent import Series
from cmch.loopmat import Mat, random_twisted
from cmch.spectral import (apply_on_basis, random_twisted_identity, resolution_of_identity, resolution_on_basis,
                           spectral_suite, ttt_suite)
from cmch.tau import base_tau_suite, phi_Y0, res, tau_potential, tau_suite

CASES = [(0, "minus"), (1, "minus"), (1, "plus"), (1, "base")]


def _bad(rs):
    return [r for r in rs if not r.passed][:3]


@pytest.mark.parametrize("N,mode", CASES)
def test_spectral_suite(env_factory, window, N, mode):
    env = env_factory(N, mode)
    rs = spectral_suite(env, np.random.default_rng(0), env.w0, window(N), count=5)
    assert rs and not _bad(rs), _bad(rs)


def test_resolution_of_identity_fails_with_wrong_constant(env_factory):
    env = env_factory(1, "minus")
    v = env.w0.vals
    Pp, Pm = build_P(v["Vp"], v["Vm"], v["ttt"])
    rng = np.random.default_rng(4)
    assert not _bad(random_twisted_identity(v["Y"], Pp, Pm, rng, count=3))
    rs = random_twisted_identity(v["Y"], Pp, Pm, rng, count=3, scale0=Fraction(11, 10))
    assert all(not r.passed for r in rs)


def test_basis_shortcut_matches_direct(env_factory):
    env = env_factory(0, "plus")
    v = env.w0.vals
    Pp, Pm = build_P(v["Vp"], v["Vm"], v["ttt"])
    _, images = resolution_on_basis(v["Y"], Pp, Pm)
    X = random_twisted(env.field, np.random.default_rng(9), -2, 2)
    direct = resolution_of_identity(v["Y"], Pp, Pm, X) + X
    assert (apply_on_basis(images, X) - direct).is_zero()


def test_ttt_suite_detects_wrong_times(env_factory):
    env = env_factory(1, "minus")
    w = env.w0
    ttt = val(w.duals["ttt"])
    assert ttt_suite(ttt, w.times)[0].passed
    wrong = list(w.times)
    wrong[0] = wrong[0] + 1
    assert not ttt_suite(ttt, wrong)[0].passed


@pytest.mark.parametrize("N,mode", CASES)
def test_tau_suite(env_factory, window, N, mode):
    env = env_factory(N, mode)
    rs = tau_suite(env, window(N))
    assert rs and not _bad(rs), _bad(rs)


def test_base_tau_names(env_factory, window):
    env = env_factory(0, "base")
    ids = {r.identity for r in base_tau_suite(env, window(0))}
    assert ids == {"eq:ddetS", "eq:unextau"}


def test_tau_potential_is_quadratic_in_S(env_factory):
    env = env_factory(1, "minus")
    w = env.w0
    saved = w.duals["S"]
    try:
        base = val(tau_potential(env, w))
        w.duals["S"] = saved * 3
        scaled = val(tau_potential(env, w))
    finally:
        w.duals["S"] = saved
    assert (scaled - base * 9).is_zero()


def test_phi_Y0_vanishes_by_twisting(env_factory):
    # tr(Y phi-hat') has even degrees for twisted Y, so only an untwisted Y can see a residue
    env = env_factory(1, "minus")
    w = env.w0
    assert all(phi_Y0(env, w, L).is_zero() for L in w.cof.active)
    f = env.field
    one, z = Series.const(f, 1), Series.zero(f)
    saved = w.vals["Y"]
    try:
        w.vals["Y"] = random_twisted(f, np.random.default_rng(2), -5, 5)
        assert all(phi_Y0(env, w, L).is_zero() for L in w.cof.active)
        w.vals["Y"] = Mat(z, one, one, z)
        vals = [phi_Y0(env, w, L) for L in w.cof.active]
    finally:
        w.vals["Y"] = saved
    assert any(not v.is_zero() for v in vals)


def test_res_is_degree_zero_coefficient():
    from cmch.laurent import make_field
    f = make_field("exact", 2)
    s = Series.from_dict(f, {-1: 5, 0: 3, 2: 1})
    assert res(s).coeff(0) == f.scalar(3)
    d = res(Dual(s, {"t1": s.shift(1)}))
    assert d.d("t1").coeff(0) == f.scalar(5)
