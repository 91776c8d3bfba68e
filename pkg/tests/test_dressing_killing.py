from fractions import Fraction

import pytest

from cmch.dressing import dressing_suite, exp_series_oracle, normalized_Z, wave_exponential, wave_suite
from cmch.forms import bracket, val
from cmch.killing import Hyper, build_P, build_V, hyper_pure, killing_suite, perturbation_suite, triple_identities
from cmch.laurent import Series, make_field
from cmch.loopmat import Mat

CASES = [(0, "minus"), (1, "minus"), (1, "plus"), (1, "base")]


def _bad(rs):
    return [r for r in rs if not r.passed][:3]


@pytest.mark.parametrize("N,mode", CASES)
def test_dressing_suite_both_worlds(env_factory, window, N, mode):
    env = env_factory(N, mode)
    for w in (env.w0, env.w1):
        rs = dressing_suite(env, w, window(N))
        assert rs and not _bad(rs), _bad(rs)
    rs = wave_suite(env, env.w0, window(N))
    assert not _bad(rs), _bad(rs)


def test_wave_exponential_matches_power_series(env_factory):
    env = env_factory(1, "minus")
    ttt = val(env.w0.duals["ttt"])
    lo = -12
    assert (wave_exponential(ttt, lo) - exp_series_oracle(ttt, lo)).is_zero()
    Z = normalized_Z(env.field)
    f = env.field
    assert (Z * Z - Mat.identity(f) * Series.monomial(f, f.gamma * 4, 2)).is_zero()


@pytest.mark.parametrize("N,mode", CASES)
def test_killing_suite(env_factory, window, N, mode):
    env = env_factory(N, mode)
    rs = killing_suite(env, env.w0, window(N))
    assert not _bad(rs), _bad(rs)
    nz = [r for r in rs if r.extra.get("expect") == "nonzero"]
    assert len(nz) == 2 and all(r.passed for r in nz)


def test_V_is_a_pure_element_and_triple_fails_when_swapped(env_factory):
    env = env_factory(1, "minus")
    v = env.w0.vals
    Vp, Vm = build_V(v["Y"], v["p"])
    Pp, Pm = build_P(Vp, Vm, v["ttt"])
    assert not _bad(triple_identities(v["Y"], Vp, Vm, "t", "V"))
    assert _bad(triple_identities(v["Y"], Vm, Vp, "t", "V"))
    assert not _bad(triple_identities(v["Y"], Pp, Pm, "t", "P"))
    # the rotation cancels in [P+, P-]: only the C^0 S^0 part survives
    B = hyper_pure(bracket(Pp, Pm))
    assert (B - v["Y"] * env.field.s).is_zero()


def test_hyper_cosh_identity():
    f = make_field("exact", 2)
    one = Series.const(f, 1)
    C = Hyper.basis(one, 1, 0)
    sq = C * C
    assert set(sq.t) == {(0, 0), (0, 2)}
    with pytest.raises(ValueError):
        sq.pure()


@pytest.mark.parametrize("eps", [Fraction(1, 3), Fraction(-2, 5), Fraction(7)])
def test_sigma_plus_perturbation_is_detected_and_quadratic(env_factory, eps):
    env = env_factory(0, "minus")
    v = env.w0.vals
    nz, closed, odd = perturbation_suite(v["Y"], v["p"], v["ttt"], eps)
    assert nz.passed and nz.magnitude > 0
    assert closed.passed and odd.passed
