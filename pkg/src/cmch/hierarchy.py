"""Coefficient streams, the formal Killing field Y and its flow matrices U_m."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .forms import Form, lin
from .laurent import Series
from .loopmat import Mat, proj_ge, proj_le

# small positive non-squares for gamma
GAMMAS = (2, 3, 5, 6, 7, 10, Fraction(1, 2), Fraction(2, 3), Fraction(3, 2), Fraction(5, 4))


class DegenerateStream(ValueError):
    pass


@dataclass
class Stream:
    """a[n] = a^{2n+1}, b[n] = b^{2n+2}, c[n] = c^{2n+2}; known to degree ``depth``.

    ``eta`` is the chosen root h_2^{1/2}.
    """

    field: object
    eta: object
    a: list
    b: list
    c: list
    depth: int

    @property
    def h2(self):
        return self.eta * self.eta

    def table(self):
        f = self.field
        rows = []
        for n in range(len(self.b)):
            rows.append({
                "n": n,
                "a": f.to_json(self.a[n]) if n < len(self.a) else None,
                "b": f.to_json(self.b[n]),
                "c": f.to_json(self.c[n]),
            })
        return rows


def seeds(field, eta):
    """b^2 and c^2 from h_2^{1/2} = eta."""
    i = field.i
    return -i * field.gamma / eta, i * eta


def solve_a_from_det(b, c, a3=None, field=None):
    """a-stream from det(Y) = -4 gamma lambda^2, with a^1 = 0.

    The lambda^4 coefficient only fixes (a^3)^2 = 4(b^2 c^4 + b^4 c^2); if
    ``a3`` is None a root is taken in the field.  Higher a^{2p-1} follow
    linearly, dividing by 2 a^3.
    """
    f = field if field is not None else b[0].field
    nb = len(b) - 1
    if len(c) != len(b):
        raise ValueError("b and c streams must have equal length")
    zero = f.zero
    a = [zero] * (nb + 1)
    if nb == 0:
        return a
    q = (b[0] * c[1] + b[1] * c[0]) * 4
    if a3 is None:
        a3 = f.sqrt(q)
    elif f.magnitude(a3 * a3 - q) > (1e-9 * (1 + f.magnitude(q)) if f.kind == "float" else 0):
        raise DegenerateStream("lambda^4 coefficient of the det constraint is violated")
    if not a3:
        if nb >= 2:
            raise DegenerateStream("a^3 = 0 leaves the higher a-stream undetermined")
    a[1] = a3
    for p in range(3, nb + 2):
        bp = zero
        for n in range(0, p):
            bp = bp + b[n] * c[p - 1 - n]
        rest = zero
        for n in range(2, p - 1):
            rest = rest + a[n] * a[p - n]
        a[p - 1] = (bp * 4 - rest) / (a3 * 2)
    return a


def sample_stream(field, rng, depth: int, bound: int = 2):
    """Random stream known to odd degree ``depth``: eta, a^3 and b, c free."""
    if depth < 1 or depth % 2 == 0:
        raise ValueError("stream depth must be a positive odd degree")
    nb = (depth - 1) // 2
    eta = field.random_gaussian(rng, bound, nonzero=True)
    b2, c2 = seeds(field, eta)
    b = [b2] + [field.random_gaussian(rng, bound) for _ in range(nb)]
    c = [c2] + [field.random_gaussian(rng, bound) for _ in range(nb)]
    if nb >= 1:
        a3 = field.random_gaussian(rng, bound, nonzero=True)
        # c^4 absorbs the quadratic lambda^4 condition
        c[1] = (a3 * a3 / 4 - b[1] * c[0]) / b[0]
    else:
        a3 = None
    a = solve_a_from_det(b, c, a3, field)
    return Stream(field, eta, a, b, c, depth)


def build_Y(st: Stream) -> Mat:
    f = st.field
    hi = st.depth
    i = f.i
    A = Series.from_dict(f, {2 * n: x for n, x in enumerate(st.a)}, hi=hi)
    B = Series.from_dict(f, {2 * n + 1: x for n, x in enumerate(st.b)}, hi=hi)
    C = Series.from_dict(f, {2 * n + 1: x for n, x in enumerate(st.c)}, hi=hi)
    return Mat(A.scale(-i), C.scale(2), B.scale(2), A.scale(i))


def abc(Y):
    """(a, b, c) series of Y = [[-i a, 2c], [2b, i a]] (plain or dual)."""
    f = _field(Y)
    i = f.i
    half = Fraction(1, 2)
    a = lin(lambda M: M.entry(1, 1).scale(i), Y)
    c = lin(lambda M: M.entry(1, 2).scale(half), Y)
    b = lin(lambda M: M.entry(2, 1).scale(half), Y)
    return a, b, c


def _field(X):
    v = X.val if hasattr(X, "der") else X
    return v.field


def build_U(Y, m: int):
    """U_m = (lambda^{-(2m+2)} Y / 2i)_{<=-1}; U_j = 0 for j < 0."""
    f = _field(Y)
    if m < 0:
        return lin(lambda M: Mat.zeros(f), Y)
    c = f.one / (f.i * 2)

    def op(M):
        hi = M.window()[1]
        if hi - (2 * m + 2) < -1:
            from .laurent import WindowCollapse
            raise WindowCollapse(f"U_{m} needs Y known to degree {2 * m + 1}")
        return proj_le(M.shift(-(2 * m + 2)), -1) * c

    return lin(op, Y)


def build_U_tail(Y, m: int):
    """U_(m+1) = (lambda^{-(2m+2)} Y / 2i)_{>=0}."""
    f = _field(Y)
    c = f.one / (f.i * 2)
    return lin(lambda M: proj_ge(M.shift(-(2 * m + 2)), 0) * c, Y)


def phi_lambda(cof, field, h2, h2b) -> Form:
    """The explicit lambda phi_+ + phi_0 + lambda^{-1} phi_- (values)."""
    f = field
    half = Fraction(1, 2)
    z = Series.zero(f)

    def mono(x, k):
        return Series.monomial(f, x, k)

    phi_xi = Mat(z, mono(-h2 * half, -1), mono(f.gamma * half, -1), z)
    phi_xib = Mat(z, mono(-f.gamma * half, 1), mono(h2b * half, 1), z)
    phi_rho = Mat(mono(f.i * half, 0), z, z, mono(-f.i * half, 0))
    return Form.one(cof, {"xi": phi_xi, "xib": phi_xib, "rho": phi_rho})


def recursion_expected(st_a, st_b, st_c, h2, h2b, gamma, i, n):
    """Right-hand sides of the coefficient recursion at index n.

    Returns {(name, label): value} for da^{2n+1}, db^{2n+2} - i b rho and
    dc^{2n+2} + i c rho along xi, xib; rho-parts are folded in by the caller.
    """
    def g(seq, k):
        return seq[k] if 0 <= k < len(seq) else None

    out = {}
    z = gamma * 0
    bn, cn = g(st_b, n), g(st_c, n)
    bm, cm = (g(st_b, n - 1), g(st_c, n - 1)) if n >= 1 else (z, z)
    an, an1 = g(st_a, n), g(st_a, n + 1)
    if bn is not None and cn is not None:
        out[("a", "xi")] = i * gamma * cn + i * h2 * bn
    if bm is not None and cm is not None:
        out[("a", "xib")] = i * gamma * bm + i * h2b * cm
    if an1 is not None:
        out[("b", "xi")] = i * gamma * an1 / 2
        out[("c", "xi")] = i * h2 * an1 / 2
    if an is not None:
        out[("b", "xib")] = i * h2b * an / 2
        out[("c", "xib")] = i * gamma * an / 2
    return out





# ---------------------------------------------------------------- base structure checks


def recursion_suite(env, w=None, need=None, suite="hierarchy"):
    """Componentwise coefficient recursion along xi, xib and rho, from the flow of Y."""
    from .forms import check, der
    w = w or env.w0
    f = env.field
    st = w.stream
    h2 = st.eta * st.eta
    eb = f.conj(w.partner.stream.eta)
    a, b, c = abc(w.duals["Y"])
    out = []
    for n in range(len(st.b)):
        exp = recursion_expected(st.a, st.b, st.c, h2, eb * eb, f.gamma, f.i, n)
        exp[("a", "rho")] = f.zero
        if n < len(st.b):
            exp[("b", "rho")] = f.i * st.b[n]
            exp[("c", "rho")] = -f.i * st.c[n]
        for (nm, L), x in sorted(exp.items()):
            s, deg = {"a": (a, 2 * n), "b": (b, 2 * n + 1), "c": (c, 2 * n + 1)}[nm]
            ds = der(s, L)
            if deg > ds.hi:
                continue
            out.append(check(suite, "eq:abcstrt", f"d{nm}[{deg}]:{L}", Series.const(f, ds.coeff(deg) - x)))
    return out


def base_structure_suite(env, w=None, need=None, suite="hierarchy"):
    """d phi + phi ^ phi = 0, dY + [phi, Y] = 0, the explicit phi_lambda and the recursion."""
    from .forms import bracket, check, der, form_residuals, val
    w = w or env.w0
    f = env.field
    fm = env.forms(w)
    out = []
    Y = w.vals["Y"]
    out.append(check(suite, "eq:b2c2", "det Y + 4 g l^2", Y.det() + Series.monomial(f, f.gamma * 4, 2), need))
    out += form_residuals(suite, "eq:Ybphi", fm.mc_raw.active_part(), need)
    for L in w.cof.active:
        if w.cof.mode == "base" or parse_label_kind(L) not in ("s", "sb"):
            out.append(check(suite, "eq:Ybphi", f"dY:{L}", der(w.duals["Y"], L) + bracket(val(w.ph[L]), Y), need))
    eb = f.conj(w.partner.stream.eta)
    pl = phi_lambda(w.cof, f, w.stream.eta * w.stream.eta, eb * eb)
    for L in ("xi", "xib", "rho"):
        out.append(check(suite, "eq:phi2", L, val(w.ph[L]) - pl[L]))
    for m in range(w.N + 2):
        U, T = build_U(Y, m), build_U_tail(Y, m)
        rec = (U + T).shift(2 * m + 2) * (f.i * 2)
        out.append(check(suite, "eq:YUm", f"m={m}", rec - Y, need))
    out += recursion_suite(env, w, need, suite)
    return out


def parse_label_kind(L):
    from .forms import parse_label
    return parse_label(L)[0]
