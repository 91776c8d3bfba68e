"""Closed 1-forms built from Y and the spectral field, and the tau function.

Res denotes the lambda^0 coefficient (residue against d lambda / lambda).
"""

from __future__ import annotations

from fractions import Fraction

from .forms import Form, check, der, exterior_d, form_residuals, lin, val
from .laurent import Series


def res(x):
    """lambda^0 coefficient as a constant series (plain or dual)."""
    return lin(lambda s: Series.const(s.field, s.coeff(0)), x)


def _tr(X):
    return lin(lambda m: m.trace(), X)


def _sigma(w, L):
    s = w.sigma_coeff(L)
    return s if s is not None else Series.zero(w.field)


def _form(env, w, make):
    """1-form from ``make(L, dual)``: dual inputs on active labels, values elsewhere."""
    comps = {}
    for L in w.cof.labels:
        comps[L] = make(L, L in w.cof.active_set)
    return Form.one(w.cof, comps)


def _conformal(w, dual):
    E = (w.duals if dual else w.vals).get("E")
    return E if E is not None else Series.const(w.field, 1)


def phi_Y0(env, w, L):
    """Res tr(lambda^{-1} Y phi-hat') along L (vanishes identically)."""
    Y = w.vals["Y"].shift(-1)
    return res((Y * val(w.ph[L]).euler()).trace())


def phi_Y_form(env, w):
    """tr(Y (phi-hat - S sigma)') with all its lambda-coefficients."""
    def make(L, dual):
        src = w.duals if dual else w.vals
        ph = w.ph[L] if dual else val(w.ph[L])
        A = ph - src["S"] * _sigma(w, L)
        return _tr(src["Y"] * lin(lambda m: m.euler(), A))
    return _form(env, w, make)


def phi_S_form(env, w):
    """phi_S = -Res tr(E S phi-hat')."""
    def make(L, dual):
        src = w.duals if dual else w.vals
        ph = w.ph[L] if dual else val(w.ph[L])
        E = _conformal(w, dual)
        return -res(_tr(src["S"] * lin(lambda m: m.euler(), ph)) * E)
    return _form(env, w, make)


def tau_potential(env, w):
    """Res(E det S) as a dual constant series."""
    S = w.duals["S"]
    E = _conformal(w, True)
    return res(_tr(S * S) * E * Fraction(-1, 2))


def tau_suite(env, need=None, suite="tau"):
    w = env.w0
    fm = env.forms(w)
    st = fm.structure
    out = []
    for L in w.cof.active:
        out.append(check(suite, "eq:phiY0", L, phi_Y0(env, w, L)))
    out += form_residuals(suite, "eq:dphiY", exterior_d(phi_Y_form(env, w), st).active_part(), need)
    pS = phi_S_form(env, w)
    out += form_residuals(suite, "eq:dphiS", exterior_d(pS, st).active_part())
    pot = tau_potential(env, w)
    for L in w.cof.active:
        out.append(check(suite, "eq:tau", L, der(pot, L) - val(pS[L])))
    if w.cof.mode != "base":
        E, S = w.duals["E"], w.duals["S"]
        ES2 = S * S * E
        v = val(ES2)
        Sv, Ev = w.vals["S"], w.vals["E"]
        for L in w.cof.active:
            phd = val(w.ph[L]).euler()
            rhs = -(v * _sigma(w, L)).euler() + (Sv * phd + phd * Sv) * Ev
            out.append(check(suite, "eq:euS2", L, der(ES2, L) - rhs, need))
    else:
        out += base_tau_suite(env, need, suite)
    return out


def base_tau_suite(env, need=None, suite="tau"):
    """Unextended case: d det S = -tr(S phi') and tau = exp Res det S."""
    w = env.w0
    S = w.duals["S"]
    dS = _tr(S * S) * Fraction(-1, 2)
    Sv = w.vals["S"]
    out = []
    for L in w.cof.active:
        r = der(dS, L) + (Sv * val(w.ph[L]).euler()).trace()
        out.append(check(suite, "eq:ddetS", L, r, need))
        out.append(check(suite, "eq:unextau", L, res(der(dS, L)) + res((Sv * val(w.ph[L]).euler()).trace())))
    return out
