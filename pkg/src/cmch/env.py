"""Sampled environments: the system together with its formal conjugate.

Each ``World`` carries free data (stream for Y, eta = h_2^{1/2}, the even
series p, the times t_0..t_N and, for the actual system, the conformal
factor E = e^u) in its own coframe.  The conjugate world of a minus-extended
system is plus-extended and vice versa; its objects enter the actual world
through ``bar`` (conjugate transpose plus label swap xi<->xib, t<->tb, s<->sb).

Construction runs in three passes: values, first derivatives of the free
data from the flow rules, then every derived object again with dual inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from fractions import Fraction

import numpy as np

from .forms import (Coframe, Dual, Form, bar_label, bracket, exterior_d, inverse, lin,
                    parse_label, val, wedge, wedge_self)
from .hierarchy import GAMMAS, build_U, build_Y, sample_stream, abc
from .killing import build_V
from .laurent import Series, make_field
from .loopmat import Mat, conj_transpose, proj_ge, proj_le


@dataclass(frozen=True)
class Signs:
    """Sign conventions of the extended system (the audited ones)."""

    sigma_plus: int = -1     # sigma_+ = sigma_plus * sum lambda^{2l} sigmab_l
    y_plus: int = 1          # dsb_l Y = [Sb_l, Y] + y_plus lambda^{2l}(Y' - Y)
    ybar_minus: int = -1     # ds_k Yb^t = -[S_k, Yb^t] + ybar_minus lambda^{-2k}(Yb^t' + Yb^t)
    ybar_plus: int = 1       # dsb_l Yb^t = [Sb_l, Yb^t] + ybar_plus lambda^{2l}(Yb^t' + Yb^t)
    u_sigmadot: int = 1      # du = u_sigmadot sigma' + u_udot u' sigma
    u_udot: int = -1
    dS_sigmadot: int = 1     # dS + [phi, S] + (dS_sigmadot S sigma' + S' sigma) = phi'
    phiS: int = -1           # phi_+ = phiS sum Sb_l sigmab_l + phi

    def flip(self, name: str) -> "Signs":
        return replace(self, **{name: -getattr(self, name)})

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def to_json(self):
        return {n: getattr(self, n) for n in self.names()}


def conj_t(x):
    """Formal conjugate transpose of a matrix, conj_flip of a series."""
    if isinstance(x, Mat):
        return conj_transpose(x)
    if isinstance(x, Series):
        return x.conj_flip()
    raise TypeError(f"cannot conjugate {type(x).__name__}")


def bar(x):
    """Conjugate of a plain or dual object; derivative labels are barred."""
    if isinstance(x, Dual):
        return Dual(conj_t(x.val), {bar_label(L): conj_t(g) for L, g in x.der.items()})
    return conj_t(x)


def bar_form(form: Form, cof: Coframe) -> Form:
    comps = {}
    for key, x in form.items():
        comps[tuple(bar_label(L) for L in key)] = bar(x)
    return Form(cof, form.deg, comps)


def ttt_series(field, times):
    """ttt = (1/2i) sum_m lambda^{-(2m+2)} t_m."""
    c = field.one / (field.i * 2)
    return Series.from_dict(field, {-(2 * m + 2): c * t for m, t in enumerate(times)})


def coeff_const(x, d):
    """Degree-d coefficient as a constant series (plain or dual)."""
    return lin(lambda s: Series.const(s.field, s.coeff(d)), x)


class World:
    """One of the two coupled views."""

    def __init__(self, field, cof: Coframe, actual: bool, signs: Signs, stream, p, times, E=None):
        self.field, self.cof, self.actual, self.signs = field, cof, actual, signs
        self.N = cof.N
        self.stream = stream
        self.times = list(times)
        self.base = {
            "Y": build_Y(stream),
            "eta": Series.const(field, stream.eta),
            "p": p,
            "ttt": ttt_series(field, times),
        }
        if E is not None:
            self.base["E"] = E
        self.partner: World | None = None

    # -------------------------------------------------------- label rules

    def sigma_coeff(self, label):
        """Scalar series multiplying the label in the generating form sigma."""
        f = self.field
        kind, k = parse_label(label)
        if kind == "s":
            return Series.monomial(f, f.one, -2 * k)
        if kind == "sb":
            return Series.monomial(f, f.scalar(self.signs.sigma_plus), 2 * k)
        return None

    def y_coeff(self, label):
        """c_L in dY_L = -[phi_L, Y] + c_L (Y' - Y)."""
        f = self.field
        s = self.signs
        kind, k = parse_label(label)
        if kind == "s":
            eps = -1 if self.actual else -s.ybar_plus
            return Series.monomial(f, f.scalar(eps), -2 * k)
        if kind == "sb":
            eps = s.y_plus if self.actual else -s.ybar_minus
            return Series.monomial(f, f.scalar(eps), 2 * k)
        return None

    def alpha_coeff(self, label, eta):
        f = self.field
        c = f.one / (f.i * 2)
        kind, m = parse_label(label)
        if kind == "t":
            return Series.monomial(f, c, -(2 * m + 2))
        if label == "xi":
            return eta * Series.monomial(f, -c / 2, -2)
        return None

    # -------------------------------------------------------- objects

    def derived(self, b):
        """U_m, V+-, the dressed and undressed spectral fields from base data b."""
        from .spectral import spectral_via_V
        Y, p, ttt = b["Y"], b["p"], b["ttt"]
        out = dict(b)
        out["U"] = [build_U(Y, m) for m in range(self.N + 1)]
        Vp, Vm = build_V(Y, p)
        out["Vp"], out["Vm"] = Vp, Vm
        out["S"], out["Sc"] = spectral_via_V(Y, Vp, Vm, ttt)
        return out

    def phihat(self, own, other):
        """Coefficients of the extended form phi-hat over all labels.

        ``other`` holds the partner's derived objects already barred.
        """
        f = self.field
        half = Fraction(1, 2)
        Ub = other["U"]
        comps = {
            "xi": own["U"][0] * (own["eta"] * Series.const(f, -half)),
            "xib": Ub[0] * (other["eta"] * Series.const(f, half)),
            "rho": Mat(Series.const(f, f.i * half), Series.zero(f), Series.zero(f), Series.const(f, -f.i * half)),
        }
        for m in range(1, self.N + 1):
            comps[f"t{m}"] = own["U"][m]
            comps[f"tb{m}"] = -Ub[m]
        for L in self.cof.sigma_labels():
            kind, k = parse_label(L)
            if kind == "s":
                comps[L] = proj_le_any(lin(lambda X: X.shift(-2 * k), own["S"]), -1)
            else:
                comps[L] = proj_ge_any(lin(lambda X: X.shift(2 * k), other["S"]), 1) * self.signs.phiS
        return comps

    def flows(self, own, ph, labels=None):
        """Derivatives of the free data along ``labels`` (default: all)."""
        f = self.field
        Y, eta = own["Y"], own["eta"]
        a, b, c = abc(Y)
        Yd = lin(lambda X: X.euler(), Y)
        S = own["S"]
        inv_bc = inverse(b * c)
        sq = f.s
        out = {k: {} for k in ("Y", "eta", "p", "ttt", "E")}
        for L in (self.cof.labels if labels is None else labels):
            phL = ph[L]
            dY = -bracket(phL, Y)
            cL = self.y_coeff(L)
            if cL is not None:
                dY = dY + (Yd - Y) * cL
            out["Y"][L] = dY
            out["eta"][L] = coeff_const(lin(lambda X: X.entry(1, 2), dY), 1) * (-f.i / 2)
            al = self.alpha_coeff(L, eta)
            sg = self.sigma_coeff(L)
            cphi = phL
            if al is not None:
                cphi = cphi - Y * al
                out["ttt"][L] = al
            if sg is not None:
                cphi = cphi - S * sg
            num = b * lin(lambda X: X.entry(1, 2), cphi) + c * lin(lambda X: X.entry(2, 1), cphi)
            out["p"][L] = num * inv_bc * sq
            if "E" in own and sg is not None:
                E = own["E"]
                sgd = sg.euler()
                out["E"][L] = E * sgd * self.signs.u_sigmadot + lin(lambda x: x.euler(), E) * sg * self.signs.u_udot
        return out


def proj_le_any(X, k):
    return lin(lambda m: proj_le(m, k), X)


def proj_ge_any(X, k):
    return lin(lambda m: proj_ge(m, k), X)


BASE_KEYS = ("Y", "eta", "p", "ttt", "E")


class WorldForms:
    """Forms and coframe structure seen from one world."""

    def __init__(self, phihat, sigma, alpha, structure, mc_raw):
        self.phihat, self.sigma, self.alpha = phihat, sigma, alpha
        self.structure, self.mc_raw = structure, mc_raw


class Environment:
    """Both worlds plus forms and coframe structure for the actual one."""

    def __init__(self, field, cof, w0: World, w1: World, config: dict):
        self.field, self.cof, self.config = field, cof, config
        self.w0, self.w1 = w0, w1
        w0.partner, w1.partner = w1, w0
        self.signs = w0.signs
        self._forms_cache = {}
        self._flow2_cache = {}
        self._build()
        fm = self.forms(w0)
        self.phihat, self.sigma, self.alpha, self.structure = fm.phihat, fm.sigma, fm.alpha, fm.structure

    def _build(self):
        worlds = (self.w0, self.w1)
        for w in worlds:
            w.vals = w.derived(w.base)
        for w in worlds:
            w.ph_vals = w.phihat(w.vals, _barred(w.partner.vals))
        for w in worlds:
            w.flow_vals = w.flows(w.vals, w.ph_vals)
        # second pass: base data carry their first derivatives along active labels
        for w in worlds:
            d = {}
            for key in BASE_KEYS:
                if key not in w.base:
                    continue
                der = {L: g for L, g in w.flow_vals[key].items() if L in w.cof.active_set}
                d[key] = Dual(w.base[key], der)
            w.duals = w.derived(d)
        for w in worlds:
            w.ph = w.phihat(w.duals, _barred(w.partner.duals))

    def flow2(self, w: World):
        """Flow rules evaluated on dual inputs (active labels only), for d^2 checks."""
        key = id(w)
        if key not in self._flow2_cache:
            self._flow2_cache[key] = w.flows(w.duals, w.ph, w.cof.active)
        return self._flow2_cache[key]

    def forms(self, w: World) -> WorldForms:
        key = id(w)
        if key not in self._forms_cache:
            self._forms_cache[key] = self._make_forms(w)
        return self._forms_cache[key]

    def _make_forms(self, w: World) -> WorldForms:
        cof = w.cof
        phihat = Form.one(cof, w.ph)
        sigma = Form.one(cof, {L: w.sigma_coeff(L) for L in cof.sigma_labels()})
        al = {}
        for L in cof.labels:
            x = w.alpha_coeff(L, w.duals["eta"])
            if x is not None:
                al[L] = x
        alpha = Form.one(cof, al)
        st = {"xi": _xi_structure(w), "xib": bar_form(_xi_structure(w.partner), cof)}
        for L in cof.sigma_labels():
            st[L] = Form.two(cof, {k: Series.const(self.field, c) for k, c in cof.sigma_structure(L).items()})
        # d rho from the degree-0 part of the phi-hat structure equation
        X = exterior_d(phihat, st)
        phv = phihat.values()
        X = X + wedge_self(phv)
        X = X - wedge(phv.map(euler_any), sigma)
        f = self.field
        comps = {}
        for k, x in X.items():
            c = val(x).entry(1, 1).coeff(0) * (f.i * 2)
            if c:
                comps[k] = Series.const(f, c)
        st["rho"] = Form.two(cof, comps)
        # the rho-term of d(phi-hat) added to the raw residual
        rho_c = val(phihat["rho"])
        mc = X + st["rho"].map(lambda c: rho_c * c)
        return WorldForms(phihat, sigma, alpha, st, mc)

    # convenience
    @property
    def Y(self):
        return self.w0.duals["Y"]

    def flow_form(self, key, w: World | None = None):
        """The 1-form d(key) from the flow rules with dual-input coefficients."""
        w = w or self.w0
        comps = dict(w.flow_vals[key])      # passive labels only enter through values
        comps.update(self.flow2(w)[key])
        return Form.one(w.cof, comps)


def euler_any(c):
    return lin(lambda m: m.euler(), c)


def _xi_structure(w: World):
    """d xi = sum_L -(d_L eta / eta) L ^ xi."""
    ie = inverse(w.vals["eta"])
    comps = {}
    for L, g in w.flow_vals["eta"].items():
        if L != "xi":
            comps[(L, "xi")] = -(g * ie)
    return Form.two(w.cof, comps)


def _barred(d):
    out = {}
    for k, x in d.items():
        if k not in ("U", "S", "eta"):
            continue
        if isinstance(x, list):
            out[k] = [bar(y) for y in x]
        else:
            out[k] = bar(x)
    return out


# ---------------------------------------------------------------- sampling


def default_window(N: int):
    w = 4 * N + 8
    return (-w, w)


def default_depth(N: int, K: int, mode: str, window=None):
    """Odd stream depth large enough that residual windows cover ``window``.

    In minus mode e^u starts at lambda^{-(2N+2)}, which lowers the certified
    top degree of e^u S^2; the constants were found by bisection over N <= 2.
    """
    lo, hi = window if window is not None else default_window(N)
    if mode == "base":
        d = hi + 6 * N + 7
    elif mode == "plus":
        d = hi + 4 * K + 4 * N + 3
    else:
        d = hi + 4 * K + 6 * N + 7
    return d if d % 2 else d + 1


def random_even_series(field, rng, hi, bound=2, lo_deg=0):
    return Series.from_dict(field, {d: field.random_gaussian(rng, bound) for d in range(lo_deg, hi + 1, 2)}, hi=hi)


def random_conformal(field, rng, N, mode, terms=3, bound=2):
    """E = e^u = lambda^{-+(2N+2)}(e_0 + e_1 lambda^{-+2} + ...), a polynomial."""
    sgn = -1 if mode in ("minus", "mixed") else 1
    coeffs = {}
    for j in range(terms):
        coeffs[sgn * (2 * N + 2 + 2 * j)] = field.random_gaussian(rng, bound, nonzero=(j == 0))
    return Series.from_dict(field, coeffs)


def sample_environment(N: int, K: int | None = None, mode: str = "minus", seed: int = 0,
                       backend: str = "exact", depth: int | None = None, lowest: int | None = None,
                       signs: Signs | None = None, window=None, gamma=None):
    K = N + 2 if K is None else K
    if mode != "base" and K < (N + 1 if lowest is None else lowest):
        raise ValueError("need K >= N+1")
    signs = signs or Signs()
    window = window or default_window(N)
    rng = np.random.default_rng(seed)
    if gamma is None:
        gamma = GAMMAS[int(rng.integers(len(GAMMAS)))]
    field = make_field(backend, gamma)
    D = depth or default_depth(N, K, mode, window)
    cof = Coframe(N, K, mode, lowest)
    cof1 = cof.mirror()
    worlds = []
    for j, c in enumerate((cof, cof1)):
        st = sample_stream(field, rng, D)
        p = random_even_series(field, rng, D - 1)
        times = [field.random_gaussian(rng, 2) for _ in range(N + 1)]
        E = random_conformal(field, rng, N, mode) if (j == 0 and mode != "base") else None
        worlds.append(World(field, c, j == 0, signs, st, p, times, E))
    config = {"N": N, "K": K, "mode": mode, "seed": int(seed), "backend": backend, "depth": D,
              "lowest": cof.lowest, "window": list(window), "gamma": str(gamma), "signs": signs.to_json()}
    return Environment(field, cof, worlds[0], worlds[1], config)

