"""2x2 loop matrices over windowed Laurent series."""

from __future__ import annotations

from .laurent import INF, Series, _is_scalar

SELECTORS = {">=0": (">=", 0), "<=-1": ("<=", -1), ">=1": (">=", 1), "<=0": ("<=", 0)}


class Mat:
    """Matrix [[e11, e12], [e21, e22]] of Series; products need not be trace-free."""

    __slots__ = ("e",)

    def __init__(self, e11, e12, e21, e22):
        self.e = (e11, e12, e21, e22)

    @classmethod
    def algebra(cls, e11, e12, e21, e22):
        """Constructor for algebra elements: refuses nonzero trace."""
        m = cls(e11, e12, e21, e22)
        if not m.trace().is_zero():
            raise ValueError("algebra element must be trace-free")
        return m

    @classmethod
    def scalar_matrix(cls, x: Series):
        z = Series.zero(x.field)
        return cls(x, z, z, x)

    @classmethod
    def identity(cls, field):
        return cls.scalar_matrix(Series.const(field, 1))

    @classmethod
    def zeros(cls, field):
        z = Series.zero(field)
        return cls(z, z, z, z)

    @classmethod
    def from_constant(cls, field, rows, k=0):
        """lambda^k times a constant 2x2 matrix."""
        (a, b), (c, d) = rows
        m = [Series.monomial(field, field.scalar(x), k) for x in (a, b, c, d)]
        return cls(*m)

    @property
    def field(self):
        return self.e[0].field

    def zero_like(self):
        return Mat.zeros(self.field)

    def entry(self, i: int, j: int) -> Series:
        return self.e[2 * (i - 1) + (j - 1)]

    def map(self, fn):
        return Mat(*(fn(x) for x in self.e))

    def __add__(self, other):
        if isinstance(other, Mat):
            return Mat(*(a + b for a, b in zip(self.e, other.e)))
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Mat):
            return Mat(*(a - b for a, b in zip(self.e, other.e)))
        return NotImplemented

    def __neg__(self):
        return self.map(lambda x: -x)

    def __mul__(self, other):
        if isinstance(other, Mat):
            a, b, c, d = self.e
            p, q, r, s = other.e
            return Mat(a * p + b * r, a * q + b * s, c * p + d * r, c * q + d * s)
        if isinstance(other, Series) or _is_scalar(other):
            return self.map(lambda x: x * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Series) or _is_scalar(other):
            return self.map(lambda x: other * x)
        return NotImplemented

    def is_trace_free(self) -> bool:
        a, d = self.e[0], self.e[3]
        return a.window == d.window and (a + d).is_zero()

    def bracket(self, other: "Mat") -> "Mat":
        """[self, other]; six products when both are trace-free."""
        if self.is_trace_free() and other.is_trace_free():
            a, b, c, _ = self.e
            d, e, f, _ = other.e
            x11 = b * f - c * e
            x12 = (a * e - b * d) * 2
            x21 = (c * d - a * f) * 2
            return Mat(x11, x12, x21, -x11)
        return self * other - other * self

    def shift(self, k: int):
        return self.map(lambda x: x.shift(k))

    def euler(self):
        return self.map(lambda x: x.euler())

    def restrict(self, lo=-INF, hi=INF):
        return self.map(lambda x: x.restrict(lo, hi))

    def trace(self) -> Series:
        return self.e[0] + self.e[3]

    def det(self) -> Series:
        a, b, c, d = self.e
        return a * d - b * c

    def transpose(self):
        a, b, c, d = self.e
        return Mat(a, c, b, d)

    def is_zero(self) -> bool:
        return all(x.is_zero() for x in self.e)

    def max_abs(self) -> float:
        return max(x.max_abs() for x in self.e)

    def window(self):
        return (max(x.lo for x in self.e), min(x.hi for x in self.e))

    def to_json(self):
        return {"entries": [[self.e[0].to_json(), self.e[1].to_json()],
                            [self.e[2].to_json(), self.e[3].to_json()]],
                "trace_free": self.trace().is_zero(),
                "twisted": is_twisted(self)}

    def __repr__(self):
        return f"Mat{self.e!r}"


def bracket(X, Y):
    if isinstance(X, Mat) and isinstance(Y, Mat):
        return X.bracket(Y)
    return X * Y - Y * X


def det(X):
    return X.det()


def trace(X):
    return X.trace()


def adpow(X, k: int, Z):
    """ad_X^k applied to Z."""
    out = Z
    for _ in range(k):
        out = bracket(X, out)
    return out


def euler(X):
    return X.euler()


def project(X, sel: str):
    """Entrywise degree filter for one of '>=0', '<=-1', '>=1', '<=0'."""
    op, k = SELECTORS[sel]
    return X.map(lambda s: s.project(op, k))


def project_flagged(X: Mat, sel: str):
    """Projection plus a flag telling whether the cut was certifiable."""
    op, k = SELECTORS[sel]
    ok = all(s.projection_certified(op, k) for s in X.e)
    return project(X, sel), ok


def proj_le(X, k: int):
    return X.map(lambda s: s.project("<=", k))


def proj_ge(X, k: int):
    return X.map(lambda s: s.project(">=", k))


def conj_transpose(X: Mat) -> Mat:
    a, b, c, d = X.e
    return Mat(a.conj_flip(), c.conj_flip(), b.conj_flip(), d.conj_flip())


def is_twisted(X: Mat) -> bool:
    a, b, c, d = X.e
    return (a.parity == "even" and d.parity == "even"
            and b.parity == "odd" and c.parity == "odd")


def random_twisted(field, rng, lo: int, hi: int, window=(-INF, INF), bound=3):
    """Random trace-free twisted element with degrees in [lo, hi]."""

    def part(parity):
        coeffs = {}
        for d in range(lo, hi + 1):
            if d % 2 == parity:
                coeffs[d] = field.random_gaussian(rng, bound) + field.s * field.random_gaussian(rng, bound)
        return Series.from_dict(field, coeffs, *window)

    a = part(0)
    return Mat(a, part(1), part(1), -a)
