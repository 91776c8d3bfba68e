"""Spectral Killing fields: construction and identity checks."""

from __future__ import annotations

from .forms import Form, bracket, check, lin, val, wedge
from .killing import Hyper, build_P, build_P_dot
from .laurent import Series
from .loopmat import Mat


def euler_dot(X):
    """Euler derivative of a series, matrix, dual or form coefficient-wise."""
    if isinstance(X, Form):
        return X.map(euler_dot)
    if isinstance(X, Hyper):
        raise TypeError("euler_dot of a hyperbolic element needs the product rule")
    return lin(lambda m: m.euler(), X)


def constants(field, scale0=None):
    """(c_0, c_+, c_-) as series; ``scale0`` perturbs c_0."""
    g = field.gamma
    c0 = Series.monomial(field, field.one / (g * 32), -2)
    if scale0 is not None:
        c0 = c0 * scale0
    cp = Series.const(field, -field.one / (g * 8))
    cm = Series.monomial(field, field.one / (g * 8), -2)
    return c0, cp, cm


def dressed_spectral(Y, Vp, Vm):
    """S-check = c_0 [Y, Y'] + c_+ [V+, V+'] + c_- [V-, V-']."""
    f = val(Y).field
    c0, cp, cm = constants(f)
    out = bracket(Y, euler_dot(Y)) * c0
    out = out + bracket(Vp, euler_dot(Vp)) * cp
    out = out + bracket(Vm, euler_dot(Vm)) * cm
    return out


def ttt_shift(ttt):
    """ttt' + ttt."""
    return euler_dot(ttt) + ttt


def spectral_via_V(Y, Vp, Vm, ttt):
    """(S, S-check) with S = (ttt' + ttt) Y + S-check."""
    Sc = dressed_spectral(Y, Vp, Vm)
    return Y * ttt_shift(ttt) + Sc, Sc


def spectral_adjoint(Y, Pp, Pm, Ppd, Pmd, scale0=None):
    """c_0 [Y, Y'] + c_+ [P+, P+'] + c_- [P-, P-'] (values; Hyper-valued P)."""
    f = Y.field
    c0, cp, cm = constants(f, scale0)
    out = Hyper.basis(bracket(Y, Y.euler()) * c0, 0, 0)
    out = out + bracket(Pp, Ppd) * cp + bracket(Pm, Pmd) * cm
    return out


def resolution_of_identity(Y, A, B, X, scale0=None):
    """(c_0 ad_Y^2 + c_+ ad_A^2 + c_- ad_B^2)(X) - X."""
    f = Y.field
    c0, cp, cm = constants(f, scale0)
    out = bracket(Y, bracket(Y, X)) * c0 + bracket(A, bracket(A, X)) * cp + bracket(B, bracket(B, X)) * cm
    return out - X


def P_with_dots(Y, p, ttt, Vp, Vm):
    Vpd, Vmd = euler_dot(Vp), euler_dot(Vm)
    Pp, Pm = build_P(Vp, Vm, ttt)
    Ppd, Pmd = build_P_dot(Vp, Vm, Vpd, Vmd, ttt)
    return Pp, Pm, Ppd, Pmd


# ---------------------------------------------------------------- checks


def algebraic_suite(Y, Vp, Vm, S, Sc, ttt, suite="spectral", need=None):
    """Bracket normal forms, the key formula and the agreement of both constructions."""
    Y, Vp, Vm, S, Sc, ttt = (val(x) for x in (Y, Vp, Vm, S, Sc, ttt))
    Pp, Pm, Ppd, Pmd = P_with_dots(Y, None, ttt, Vp, Vm)
    Yd = Y.euler()
    out = []
    Sa = spectral_adjoint(Y, Pp, Pm, Ppd, Pmd)
    out.append(check(suite, "eq:RVformula", "adjoint-vs-V", Sa - S, need))
    out.append(check(suite, "eq:mus", "[P+,S]-P+'", bracket(Pp, S) - Ppd, need))
    out.append(check(suite, "eq:mus", "[P-,S]-P-'+P-", bracket(Pm, S) - Pmd + Pm, need))
    out.append(check(suite, "eq:mus", "[Y,S]-Y'+Y", bracket(Y, S) - Yd + Y, need))
    out.append(check(suite, "eq:ScYVcommute", "[V+,Sc]-V+'", bracket(Vp, Sc) - Vp.euler(), need))
    out.append(check(suite, "eq:ScYVcommute", "[V-,Sc]-V-'+V-", bracket(Vm, Sc) - Vm.euler() + Vm, need))
    out.append(check(suite, "eq:ScYVcommute", "[Y,Sc]-Y'+Y", bracket(Y, Sc) - Yd + Y, need))
    lY = Y.shift(-1)
    out.append(check(suite, "eq:keyformula", "[S,Y/l]+(Y/l)'", bracket(S, lY) + lY.euler(), need))
    low = [s.project("<=", 0) for s in Sc.e]
    out.append(check(suite, "eq:Rcformula", "Sc in g>=1", Mat(*low), need))
    out.append(check(suite, "eq:RVformula", "tr S", S.trace(), need))
    return out


def tbS_suite(S, suite="spectral", kmax=4, need=None):
    """(S_(k+1))_0 = diag(-i a_S^{2k+1}, i a_S^{2k+1}) with a_S = i S_11."""
    S = val(S)
    f = S.field
    aS = S.entry(1, 1).scale(f.i)
    out = []
    for k in range(0, kmax + 1):
        X = S.shift(-2 * k).map(lambda s: s.project(">=", 0))
        c = aS.coeff(2 * k)
        D = Mat(*(Series.const(f, x.coeff(0)) for x in X.e))
        exp = Mat(Series.const(f, -f.i * c), Series.zero(f), Series.zero(f), Series.const(f, f.i * c))
        out.append(check(suite, "eq:tbS", f"k={k}", D - exp))
    return out


def inhomogeneous_compat(phi: Form, omega: Form, structure, suite="spectral", identity="lem:basic"):
    """d omega + phi^omega + omega^phi for a candidate right-hand side omega."""
    from .forms import exterior_d, form_residuals
    R = exterior_d(omega, structure) + wedge(phi, omega).values() + wedge(omega, phi).values()
    return form_residuals(suite, identity, R.active_part())


def resolution_on_basis(Y, A, B, scale0=None):
    """The operator of ``resolution_of_identity`` (plus the identity) on H, E, F.

    The operator is linear over scalar series, so these three images determine it.
    """
    f = Y.field
    one, z = Series.const(f, 1), Series.zero(f)
    basis = (Mat(one, z, z, -one), Mat(z, one, z, z), Mat(z, z, one, z))
    return basis, [resolution_of_identity(Y, A, B, E, scale0) + E for E in basis]


def apply_on_basis(images, X):
    """L(X) = x11 L(H) + x12 L(E) + x21 L(F) for trace-free X."""
    coeffs = (X.entry(1, 1), X.entry(1, 2), X.entry(2, 1))
    out = None
    for c, im in zip(coeffs, images):
        t = im * c
        out = t if out is None else out + t
    return out


def random_twisted_identity(Y, Pp, Pm, rng, count=20, lo=-3, hi=3, need=None, scale0=None,
                            suite="spectral", direct=1):
    """Resolution of identity on random twisted elements.

    The first ``direct`` elements are also evaluated without the basis shortcut.
    """
    from .loopmat import random_twisted
    out = []
    f = Y.field
    _, images = resolution_on_basis(Y, Pp, Pm, scale0)
    for j in range(count):
        X = random_twisted(f, rng, lo, hi)
        R = apply_on_basis(images, X) - X
        out.append(check(suite, "prop:spectral", f"X{j}", R, need))
        if j < direct:
            R2 = resolution_of_identity(Y, Pp, Pm, X, scale0)
            out.append(check(suite, "prop:spectral", f"X{j}:direct", R2, need))
    return out


def ttt_suite(ttt, times, suite="spectral"):
    """ttt' + ttt = (i/2) sum (2m+1) lambda^{-(2m+2)} t_m."""
    f = ttt.field
    exp = Series.from_dict(f, {-(2 * m + 2): f.i / 2 * (2 * m + 1) * t for m, t in enumerate(times)})
    return [check(suite, "eq:tdt''", "ttt'+ttt", ttt_shift(ttt) - exp)]


def spectral_suite(env, rng, w=None, need=None, suite="spectral", count=20):
    """Algebraic identities of S, resolution of identity, the lambda^0 blocks of S_(k+1), tdt''."""
    w = w or env.w0
    v = w.vals
    Y, Vp, Vm, S, Sc, ttt = (v[k] for k in ("Y", "Vp", "Vm", "S", "Sc", "ttt"))
    out = algebraic_suite(Y, Vp, Vm, S, Sc, ttt, suite, need)
    Pp, Pm = build_P(Vp, Vm, ttt)
    out += random_twisted_identity(Y, Pp, Pm, rng, count, need=need, suite=suite)
    out += tbS_suite(S, suite, kmax=w.cof.K, need=need)
    out += ttt_suite(ttt, w.times, suite)
    if w.cof.mode == "base":
        from .tau import base_tau_suite
        out += [r for r in base_tau_suite(env, need, suite) if r.identity == "eq:ddetS"]
    return out
