"""Dressing: the nonnegative form cphi, the constant field Z, e^zeta and the (u, v) system."""

from __future__ import annotations

from fractions import Fraction

from .forms import (Dual, Form, bracket, check, der, exterior_d, form_residuals, inverse, lin,
                    matrix, val, wedge_self)
from .hierarchy import abc, build_U_tail
from .killing import cosh_sinh, normalization_factor
from .laurent import Series, analytic_apply
from .loopmat import Mat, proj_le


def _neg_part(X):
    return proj_le(val(X), -1)


def cbphi(env, w=None) -> Form:
    """cphi = phi-hat - Y alpha - S sigma (dual coefficients, all labels)."""
    w = w or env.w0
    Y, S = w.duals["Y"], w.duals["S"]
    comps = {}
    for L in w.cof.labels:
        c = w.ph[L]
        a = w.alpha_coeff(L, w.duals["eta"])
        if a is not None:
            c = c - Y * a
        sg = w.sigma_coeff(L)
        if sg is not None:
            c = c - S * sg
        comps[L] = c
    return Form.one(w.cof, comps)


def cbphi_explicit(env, w=None) -> Form:
    """Unextended cphi = phi_+ + phi_0 - sum U_(m+1) dt_m, with dt_0 = -eta xi / 2."""
    w = w or env.w0
    Y, eta = w.duals["Y"], w.duals["eta"]
    half = Fraction(1, 2)
    comps = {"xib": w.ph["xib"], "rho": w.ph["rho"],
             "xi": build_U_tail(Y, 0) * (eta * half)}
    for m in range(1, w.N + 1):
        comps[f"t{m}"] = -build_U_tail(Y, m)
        comps[f"tb{m}"] = w.ph[f"tb{m}"]
    return Form.one(w.cof, comps)


def uv_forms(env, cph: Form, w=None):
    """(theta+, theta-) 1-forms from cphi."""
    w = w or env.w0
    f = env.field
    a, b, c = abc(w.duals["Y"])
    ibc = inverse(b * c)
    tp, tm = {}, {}
    for L, x in ((k[0], v) for k, v in cph.items()):
        x12 = lin(lambda m: m.entry(1, 2), x)
        x21 = lin(lambda m: m.entry(2, 1), x)
        tp[L] = a * (b * x12 - c * x21) * ibc * (f.i / 2)
        tm[L] = lin(lambda s: s.shift(2), (b * x12 + c * x21) * ibc) * (-f.s)
    return Form.one(w.cof, tp), Form.one(w.cof, tm)


def omega_matrix(tp, tm, field):
    """Omega_L = theta+_L I + [[0, 1], [lambda^-2, 0]] theta-_L (values)."""
    tp, tm = val(tp), val(tm)
    return Mat(tp, tm, tm.shift(-2), tp)


def omega_direct(env, cph: Form, L, w=None):
    """Omega_L assembled entrywise from cphi."""
    w = w or env.w0
    f = env.field
    a, b, c = (val(x) for x in abc(w.duals["Y"]))
    x = val(cph[L])
    x12, x21 = x.entry(1, 2), x.entry(2, 1)
    ibc = (b * c).inverse()
    diag = a * (b * x12 - c * x21) * ibc * (f.i / 2)
    plus = (b * x12 + c * x21) * ibc * (-f.s)
    return Mat(diag, plus.shift(2), plus, diag)


def closed_form_g(Y, p):
    """g = e^{sigma+} [[cosh(l^-1 s-), l sinh(l^-1 s-)], [l^-1 sinh(l^-1 s-), cosh(l^-1 s-)]]

    with e^{sigma+} = 1/(2 sqrt(bc)) and sigma- = -lambda^2 p (plain or dual).
    """
    F = normalization_factor(Y)
    ch, sh = cosh_sinh(lin(lambda x: x.shift(1), p))
    sh = -sh                                  # sinh(-lambda p)
    g11 = F * ch
    g12 = F * lin(lambda x: x.shift(1), sh)
    g21 = F * lin(lambda x: x.shift(-1), sh)
    return matrix(g11, g12, g21, g11)


def normalized_Z(field) -> Mat:
    """Z lambda with Z = [[0, 2i], [-2i gamma, 0]]."""
    f = field
    return Mat.from_constant(f, ((0, f.i * 2), (-f.i * 2 * f.gamma, 0)), 1)


def _cosh_sinh_lo(w, lo):
    if isinstance(w, Dual):
        ch, sh = _cosh_sinh_lo(w.val, lo)
        return (Dual(ch, {k: g * sh for k, g in w.der.items()}),
                Dual(sh, {k: g * ch for k, g in w.der.items()}))
    return analytic_apply("cosh", w, lo=lo), analytic_apply("sinh", w, lo=lo)


def wave_exponential(ttt, lo):
    """e^{Z lambda ttt} = cosh(w) I + sinh(w) Z/(2 s lambda), w = 2 s lambda ttt, down to degree lo."""
    f = val(ttt).field
    w = lin(lambda x: x.shift(1).scale(f.s * 2), ttt)
    ch, sh = _cosh_sinh_lo(w, lo)
    # Z / (2 s lambda) = [[0, i/s], [-i s, 0]]
    return matrix(ch, sh * (f.i / f.s), -(sh * (f.i * f.s)), ch)


def exp_series_oracle(ttt, lo):
    """sum_n (Z lambda ttt)^n / n! on degrees >= lo (zeta has degrees <= -1)."""
    f = ttt.field
    Z = normalized_Z(f)
    zeta = Z * ttt
    acc = Mat.identity(f).restrict(lo=lo)
    term = Mat.identity(f)
    n = 1
    while True:
        term = (term * zeta).restrict(lo=lo).map(lambda s: s.scale(f.one / n))
        if term.is_zero():
            break
        acc = acc + term
        n += 1
    return acc.restrict(lo=lo)


def p_leading(env, w=None):
    """lambda^0 coefficients of dp along xi and xib predicted from the stream."""
    w = w or env.w0
    f = env.field
    st = w.stream
    h2 = st.eta * st.eta
    eb = f.conj(w.partner.stream.eta)
    hb2 = eb * eb
    xi = (h2 * st.b[1] - f.gamma * st.c[1]) / (f.s * 2)
    xib = f.i * (h2 * hb2 + f.gamma * f.gamma) / (f.s * 2 * st.eta)
    return {"xi": xi, "xib": xib}


def dressing_suite(env, w=None, need=None, suite="dressing"):
    """Residuals of the dressing layer for one world."""
    w = w or env.w0
    f = env.field
    fm = env.forms(w)
    act = w.cof.active
    out = []
    cph = cbphi(env, w)
    Y = w.duals["Y"]
    for L in act:
        out.append(check(suite, "eq:cbphi", f"{L}:<=-1", _neg_part(cph[L]), need))
    if w.cof.mode == "base":
        ex = cbphi_explicit(env, w)
        for L in act:
            r = val(fm.phihat[L]) - val(ex[L])
            a = w.alpha_coeff(L, w.vals["eta"])
            if a is not None:
                r = r - val(Y) * a
            out.append(check(suite, "eq:Yidentity", L, r, need))
    # Maurer-Cartan for cphi
    R = exterior_d(cph, fm.structure) + wedge_self(cph.values())
    out += form_residuals(suite, "eq:cbphi''", R.active_part(), need)
    # Killing fields and the dressed spectral field for cphi
    Vp, Vm, Sc = w.duals["Vp"], w.duals["Vm"], w.duals["Sc"]
    for L in act:
        cL = val(cph[L])
        out.append(check(suite, "eq:cbphiY", L, der(Y, L) + bracket(cL, val(Y)), need))
        out.append(check(suite, "eq:dV+2''", f"V+:{L}", der(Vp, L) + bracket(cL, val(Vp)), need))
        out.append(check(suite, "eq:dV+2''", f"V-:{L}", der(Vm, L) + bracket(cL, val(Vm)), need))
        out.append(check(suite, "eq:dcS+''", L, der(Sc, L) + bracket(cL, val(Sc)) - cL.euler(), need))
    # (u, v) system
    tp, tm = uv_forms(env, cph, w)
    for nm, th in (("theta+", tp), ("theta-", tm)):
        out += form_residuals(suite, "eq:bthetapm", exterior_d(th, fm.structure).active_part(), need)
    a, b, c = abc(Y)
    bc = b * c
    ibc = inverse(val(bc))
    for L in act:
        r = val(tp[L]) + der(bc, L) * ibc * Fraction(1, 2)
        out.append(check(suite, "lem:sigmap", L, r, need))
        om = omega_matrix(tp[L], tm[L], f)
        out.append(check(suite, "eq:Omega", f"split:{L}", omega_direct(env, cph, L, w) - om, need))
    g = closed_form_g(Y, w.duals["p"])
    gv = val(g)
    for L in act:
        om = omega_matrix(tp[L], tm[L], f)
        out.append(check(suite, "eq:gformula", L, der(g, L) - gv * om, need))
    F = val(normalization_factor(Y))
    out.append(check(suite, "eq:gformula", "det g - e^{2 sigma+}", gv.det() - F * F, need))
    # leading term of dp
    pred = p_leading(env, w)
    for L, x in pred.items():
        got = der(w.duals["p"], L).coeff(0)
        out.append(check(suite, "eq:bbp", f"{L}:l^0", Series.const(f, got - x)))
    return out


def wave_suite(env, w=None, need=None, suite="dressing"):
    w = w or env.w0
    f = env.field
    lo = need[0] if need else env.config["window"][0]
    out = []
    Z = normalized_Z(f)
    out.append(check(suite, "eq:detZ", "det Z + 4 g l^2", Z.det() + Series.monomial(f, f.gamma * 4, 2)))
    out.append(check(suite, "eq:Znormal", "Z^2 - 4 g l^2 I", Z * Z - Mat.identity(f) * Series.monomial(f, f.gamma * 4, 2)))
    ttt = w.duals["ttt"]
    ez = wave_exponential(ttt, lo)
    ev = val(ez)
    for L in w.cof.active:
        a = w.alpha_coeff(L, w.vals["eta"])
        rhs = ev * Z * a if a is not None else ev.zero_like()
        out.append(check(suite, "thm:dressing", L, der(ez, L) - rhs, need))
    oracle = exp_series_oracle(val(ttt), lo)
    out.append(check(suite, "defn:wave", "e^zeta vs exp series", ev - oracle, (lo, need[1] if need else 0)))
    zero_t = Series.zero(f)
    out.append(check(suite, "defn:wave", "t=0", wave_exponential(zero_t, lo) - Mat.identity(f)))
    return out
