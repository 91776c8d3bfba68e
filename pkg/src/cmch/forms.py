"""Finite-coframe exterior calculus with forward-mode derivatives.

Coefficients are Series, Mat or scalars, optionally wrapped in ``Dual``
which carries first derivatives along coframe directions.  ``exterior_d``
combines those derivatives with the coframe structure 2-forms.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field as dc_field

from .laurent import INF, ExactScalar, Series
from .loopmat import Mat

# ---------------------------------------------------------------- coframe


def sigma_label(kind: str, k: int) -> str:
    return f"{kind}{k}"


def parse_label(label: str):
    """('xi'|'xib'|'rho'|'t'|'tb'|'s'|'sb', index or None)."""
    if label in ("xi", "xib", "rho"):
        return label, None
    for pre in ("tb", "sb", "t", "s"):
        if label.startswith(pre) and label[len(pre):].isdigit():
            return pre, int(label[len(pre):])
    raise KeyError(label)


_BAR = {"xi": "xib", "xib": "xi", "rho": "rho", "t": "tb", "tb": "t", "s": "sb", "sb": "s"}


def bar_label(label: str) -> str:
    kind, k = parse_label(label)
    return _BAR[kind] if k is None else f"{_BAR[kind]}{k}"


class Coframe:
    """Ordered labels: xi, xib, rho, t1..tN, tb1..tbN, then Virasoro forms.

    ``mode`` is 'base' (no Virasoro forms), 'minus' (s_k), 'plus' (sb_l) or
    'mixed'.  Virasoro indices run from ``lowest`` (default N+1) to K; the
    indices K+1..2K are passive: they carry values (needed by the structure
    equations of active pairs) but no derivatives.
    """

    def __init__(self, N: int, K: int, mode: str = "minus", lowest: int | None = None):
        if mode not in ("base", "minus", "plus", "mixed"):
            raise ValueError(f"unknown mode {mode!r}")
        self.N, self.K, self.mode = N, K, mode
        self.lowest = N + 1 if lowest is None else lowest
        if mode != "base" and K < self.lowest:
            raise ValueError("need K >= lowest Virasoro index")
        base = ["xi", "xib", "rho"] + [f"t{m}" for m in range(1, N + 1)] + [f"tb{n}" for n in range(1, N + 1)]
        kinds = {"base": [], "minus": ["s"], "plus": ["sb"], "mixed": ["s", "sb"]}[mode]
        self.kinds = kinds
        act = [f"{kd}{k}" for kd in kinds for k in range(self.lowest, K + 1)]
        pas = [f"{kd}{k}" for kd in kinds for k in range(K + 1, 2 * K + 1)]
        self.active = base + act
        self.passive = pas
        self.labels = self.active + self.passive
        self.order = {L: i for i, L in enumerate(self.labels)}
        self.active_set = frozenset(self.active)

    def mirror(self):
        mode = {"minus": "plus", "plus": "minus"}.get(self.mode, self.mode)
        return Coframe(self.N, self.K, mode, self.lowest)

    def sigma_labels(self, active_only=False):
        src = self.active if active_only else self.labels
        return [L for L in src if parse_label(L)[0] in ("s", "sb")]

    def sort(self, labels):
        """Sorted tuple and permutation sign, or (None, 0) on repetition."""
        if len(set(labels)) < len(labels):
            return None, 0
        idx = [self.order[L] for L in labels]
        sign = 1
        for i in range(len(idx)):
            for j in range(i + 1, len(idx)):
                if idx[i] > idx[j]:
                    sign = -sign
        return tuple(sorted(labels, key=self.order.__getitem__)), sign

    def pairs(self, active_only=True):
        src = self.active if active_only else self.labels
        return [(a, b) for i, a in enumerate(src) for b in src[i + 1:]]

    def sigma_structure(self, label: str):
        """d sigma_i as {(sigma_j, sigma_k): 2(k-j)} over j < k, j + k = i."""
        kind, i = parse_label(label)
        out = {}
        for j in range(self.lowest, i):
            k = i - j
            if j < k and k >= self.lowest:
                out[(f"{kind}{j}", f"{kind}{k}")] = 2 * (k - j)
        return out


# ---------------------------------------------------------------- dual numbers


def zero_like(v):
    if isinstance(v, (Series, Mat)):
        return v.zero_like()
    if hasattr(v, "zero_like"):
        return v.zero_like()
    if isinstance(v, ExactScalar):
        return v.field.zero
    return 0 * v


class Dual:
    """Value plus first derivatives {label: derivative}."""

    __slots__ = ("val", "der")

    def __init__(self, val, der=None):
        self.val = val
        self.der = der if der is not None else {}

    def d(self, label):
        g = self.der.get(label)
        return zero_like(self.val) if g is None else g

    def zero_like(self):
        return Dual(zero_like(self.val))

    def __add__(self, other):
        if isinstance(other, Dual):
            der = dict(self.der)
            for k, g in other.der.items():
                der[k] = der[k] + g if k in der else g
            return Dual(self.val + other.val, der)
        return Dual(self.val + other, self.der)

    def __radd__(self, other):
        return Dual(other + self.val, self.der)

    def __neg__(self):
        return Dual(-self.val, {k: -g for k, g in self.der.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            der = {k: g * other.val for k, g in self.der.items()}
            for k, g in other.der.items():
                t = self.val * g
                der[k] = der[k] + t if k in der else t
            return Dual(self.val * other.val, der)
        return Dual(self.val * other, {k: g * other for k, g in self.der.items()})

    def __rmul__(self, other):
        return Dual(other * self.val, {k: other * g for k, g in self.der.items()})

    def map(self, fn):
        """Apply a linear map to value and derivatives."""
        return Dual(fn(self.val), {k: fn(g) for k, g in self.der.items()})

    def restrict_labels(self, labels):
        return Dual(self.val, {k: g for k, g in self.der.items() if k in labels})

    # convenience pass-throughs for Series/Mat values
    def shift(self, k):
        return self.map(lambda x: x.shift(k))

    def euler(self):
        return self.map(lambda x: x.euler())

    def restrict(self, lo=-INF, hi=INF):
        return self.map(lambda x: x.restrict(lo, hi))

    def __repr__(self):
        return f"Dual({self.val!r}, {sorted(self.der)})"


def val(x):
    return x.val if isinstance(x, Dual) else x


def der(x, label):
    if isinstance(x, Dual):
        return x.d(label)
    return zero_like(x)


def lin(fn, x):
    """Linear map applied to a plain or dual value."""
    return x.map(fn) if isinstance(x, Dual) else fn(x)


def entry(X, i, j):
    return lin(lambda m: m.entry(i, j), X)


def matrix(e11, e12, e21, e22):
    """2x2 matrix from (possibly dual) Series entries."""
    es = (e11, e12, e21, e22)
    if not any(isinstance(e, Dual) for e in es):
        return Mat(*es)
    labels = set()
    for e in es:
        if isinstance(e, Dual):
            labels.update(e.der)
    der = {}
    for L in labels:
        der[L] = Mat(*(e.d(L) if isinstance(e, Dual) else zero_like(e) for e in es))
    return Dual(Mat(*(val(e) for e in es)), der)


def inverse(x, **kw):
    """1/x for commutative values (Series or scalars)."""
    if isinstance(x, Dual):
        v = _inv(x.val, **kw)
        v2 = v * v
        return Dual(v, {k: -(g * v2) for k, g in x.der.items()})
    return _inv(x, **kw)


def _inv(v, **kw):
    if isinstance(v, Series):
        return v.inverse(**kw)
    return v.field.one / v if isinstance(v, ExactScalar) else 1 / v


def sqrt(x, **kw):
    if isinstance(x, Dual):
        r = x.val.sqrt(**kw)
        half = r.inverse().scale(Fraction(1, 2))
        return Dual(r, {k: g * half for k, g in x.der.items()})
    return x.sqrt(**kw)


def bracket(X, Y):
    """[X, Y] for plain or dual matrices (other types via products)."""
    xd, yd = isinstance(X, Dual), isinstance(Y, Dual)
    if not (xd or yd):
        if isinstance(X, Mat) and isinstance(Y, Mat):
            return X.bracket(Y)
        return X * Y - Y * X
    xv, yv = val(X), val(Y)
    if not (isinstance(xv, Mat) and isinstance(yv, Mat)):
        return X * Y - Y * X
    der = {}
    if xd:
        for k, g in X.der.items():
            der[k] = g.bracket(yv)
    if yd:
        for k, g in Y.der.items():
            t = xv.bracket(g)
            der[k] = der[k] + t if k in der else t
    return Dual(xv.bracket(yv), der)


# ---------------------------------------------------------------- forms


class Form:
    """Homogeneous form: {sorted label tuple: coefficient}."""

    __slots__ = ("cof", "deg", "c")

    def __init__(self, cof: Coframe, deg: int, comps=None):
        self.cof, self.deg = cof, deg
        self.c = {}
        for key, x in (comps or {}).items():
            key = (key,) if isinstance(key, str) else tuple(key)
            if len(key) != deg:
                raise ValueError(f"component {key} has wrong degree for a {deg}-form")
            skey, sign = cof.sort(key)
            if skey is None:
                continue
            x = x if sign == 1 else -x
            self.c[skey] = self.c[skey] + x if skey in self.c else x

    @classmethod
    def one(cls, cof, comps):
        return cls(cof, 1, comps)

    @classmethod
    def two(cls, cof, comps):
        return cls(cof, 2, comps)

    def __getitem__(self, key):
        key = (key,) if isinstance(key, str) else tuple(key)
        skey, sign = self.cof.sort(key)
        if skey is None or skey not in self.c:
            return None
        x = self.c[skey]
        return x if sign == 1 else -x

    def get(self, key, default=None):
        x = self[key]
        return default if x is None else x

    def items(self):
        return self.c.items()

    def keys(self):
        return self.c.keys()

    def _check(self, other):
        if other.cof is not self.cof and other.cof.labels != self.cof.labels:
            raise ValueError("coframe mismatch")
        if other.deg != self.deg:
            raise ValueError("degree mismatch")

    def __add__(self, other):
        self._check(other)
        out = dict(self.c)
        for k, x in other.c.items():
            out[k] = out[k] + x if k in out else x
        return Form(self.cof, self.deg, out)

    def __neg__(self):
        return Form(self.cof, self.deg, {k: -x for k, x in self.c.items()})

    def __sub__(self, other):
        return self + (-other)

    def map(self, fn):
        return Form(self.cof, self.deg, {k: fn(x) for k, x in self.c.items()})

    def lmul(self, x):
        """x * coefficient."""
        return self.map(lambda c: x * c)

    def rmul(self, x):
        """coefficient * x."""
        return self.map(lambda c: c * x)

    def values(self):
        return self.map(val)

    def active_part(self):
        act = self.cof.active_set
        return Form(self.cof, self.deg, {k: x for k, x in self.c.items() if all(L in act for L in k)})

    def __repr__(self):
        return f"Form{self.deg}({sorted(self.c)})"


def wedge(a: Form, b: Form) -> Form:
    """Wedge product keeping left/right order of coefficient products."""
    if a.cof.labels != b.cof.labels:
        raise ValueError("coframe mismatch")
    out = {}
    cof = a.cof
    for I, f in a.c.items():
        for J, g in b.c.items():
            key, sign = cof.sort(I + J)
            if key is None:
                continue
            t = f * g
            if sign < 0:
                t = -t
            out[key] = out[key] + t if key in out else t
    return Form(cof, a.deg + b.deg, out)


def wedge_self(a: Form) -> Form:
    """a ^ a for a matrix-valued 1-form: sum over i < j of [a_i, a_j] theta_i ^ theta_j."""
    if a.deg != 1:
        raise ValueError("wedge_self needs a 1-form")
    keys = sorted(a.c, key=lambda k: a.cof.order[k[0]])
    out = {}
    for n, I in enumerate(keys):
        for J in keys[n + 1:]:
            out[(I[0], J[0])] = bracket(a.c[I], a.c[J])
    return Form(a.cof, 2, out)


def d_basis(I, structure, cof) -> Form:
    """d(theta_I) from the structure 2-forms (values)."""
    p = len(I)
    out = Form(cof, p + 1)
    for r, L in enumerate(I):
        dL = structure.get(L)
        if dL is None:
            continue
        left = I[:r]
        right = I[r + 1:]
        sign = -1 if r % 2 else 1
        for K, x in dL.items():
            key, sg = cof.sort(left + K + right)
            if key is None:
                continue
            t = x if sg * sign > 0 else -x
            out.c[key] = out.c[key] + t if key in out.c else t
    return out


def exterior_d(a: Form, structure: dict) -> Form:
    """Exterior derivative restricted to active labels.

    Derivative terms use ``Dual`` coefficients along active labels; the
    structure part uses the values of the coefficients and of ``structure``
    (label -> 2-form).  Components touching a passive label are dropped.
    """
    cof = a.cof
    out = {}

    def acc(key, t):
        out[key] = out[key] + t if key in out else t

    for I, f in a.c.items():
        if isinstance(f, Dual):
            for L, g in f.der.items():
                if L not in cof.active_set:
                    continue
                key, sign = cof.sort((L,) + I)
                if key is None:
                    continue
                acc(key, g if sign > 0 else -g)
        fv = val(f)
        dI = d_basis(I, structure, cof)
        for key, x in dI.c.items():
            acc(key, fv * val(x))
    act = cof.active_set
    return Form(cof, a.deg + 1, {k: x for k, x in out.items() if all(L in act for L in k)})


# ---------------------------------------------------------------- residuals


@dataclass
class Residual:
    suite: str
    identity: str
    direction: str
    degree: int | None
    magnitude: float
    passed: bool
    window: tuple | None = None
    note: str = ""
    extra: dict = dc_field(default_factory=dict)

    def to_json(self):
        w = None
        if self.window is not None:
            w = [None if abs(x) == INF else int(x) for x in self.window]
        out = {
            "suite": self.suite,
            "identity_label": self.identity,
            "direction": self.direction,
            "degree": self.degree,
            "magnitude": self.magnitude,
            "pass": self.passed,
            "window": w,
        }
        if self.note:
            out["note"] = self.note
        if self.extra:
            out["extra"] = self.extra
        return out


def _series_parts(x):
    x = val(x)
    if isinstance(x, Series):
        return [x]
    if isinstance(x, Mat):
        return list(x.e)
    if hasattr(x, "series_parts"):
        return x.series_parts()
    return None


def measure(x):
    """(magnitude, worst degree, window) of a residual object."""
    parts = _series_parts(x)
    if parts is None:
        v = val(x)
        m = abs(complex(v)) if not isinstance(v, (int,)) else abs(v)
        return m, None, None
    best, deg = 0.0, None
    lo, hi = -INF, INF
    for s in parts:
        lo, hi = max(lo, s.lo), min(hi, s.hi)
        for d, c in s.items():
            m = s.field.magnitude(c)
            if m > best:
                best, deg = m, d
    return best, deg, (lo, hi)


def is_exact_zero(x) -> bool:
    parts = _series_parts(x)
    if parts is None:
        return not val(x)
    return all(s.is_zero() for s in parts)


def check(suite, identity, direction, x, need=None, tol=0.0, exact=True, note="") -> Residual:
    """Residual record for an object that should vanish.

    ``need`` is a degree range the certified window must cover.
    """
    mag, deg, win = measure(x)
    ok = is_exact_zero(x) if exact else mag <= tol
    if need is not None and win is not None:
        if win[0] > need[0] or win[1] < need[1]:
            ok = False
            note = (note + "; " if note else "") + f"window {win} does not cover {need}"
    return Residual(suite, identity, direction, deg, mag, ok, win, note)


def form_residuals(suite, identity, form: Form, need=None, tol=0.0, exact=True):
    out = []
    for key in sorted(form.keys(), key=lambda k: [form.cof.order[L] for L in k]):
        out.append(check(suite, identity, "^".join(key), form.c[key], need, tol, exact))
    if not out:
        out.append(Residual(suite, identity, "-", None, 0.0, True, None, "no components"))
    return out


def merge(records, suite=None, identity=None, direction="all"):
    """Collapse many records into one summary record."""
    bad = [r for r in records if not r.passed]
    worst = max(records, key=lambda r: r.magnitude) if records else None
    return Residual(
        suite or (records[0].suite if records else ""),
        identity or (records[0].identity if records else ""),
        direction,
        worst.degree if worst else None,
        worst.magnitude if worst else 0.0,
        not bad,
        None,
        "; ".join(f"{r.direction}: {r.note or r.magnitude}" for r in bad[:3]),
    )


def isclose(a, b):
    return math.isclose(a, b)
