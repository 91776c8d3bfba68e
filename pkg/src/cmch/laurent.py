"""Windowed formal Laurent series in the spectral parameter.

Scalars live in Q(i)(s) with s^2 = gamma (exact backend) or are complex
doubles (float backend).  A series carries a window [lo, hi]; coefficients
outside it are unknown, never zero, and every operation shrinks windows so
that no reported coefficient depends on unknown data.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from math import factorial

import numpy as np
from flint import fmpq, fmpq_poly

INF = math.inf


class WindowCollapse(ArithmeticError):
    """Raised when an operation leaves no certified degree."""


class BranchError(ArithmeticError):
    """Raised when a root or logarithm is not available in the field."""


def _fmpq(x) -> fmpq:
    if isinstance(x, fmpq):
        return x
    if isinstance(x, int):
        return fmpq(x)
    if isinstance(x, Fraction):
        return fmpq(x.numerator, x.denominator)
    if isinstance(x, str):
        f = Fraction(x)
        return fmpq(f.numerator, f.denominator)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _frac(q: fmpq) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def _rational_sqrt(q: fmpq):
    """Square root of a nonnegative rational, or None."""
    if q < 0:
        return None
    p, d = int(q.p), int(q.q)
    rp, rd = math.isqrt(p), math.isqrt(d)
    if rp * rp == p and rd * rd == d:
        return fmpq(rp, rd)
    return None


def _gauss_sqrt(x0: fmpq, x1: fmpq):
    """Root u of x0 + i x1 with u in Q(i), or None."""
    if x1 == 0:
        r = _rational_sqrt(x0)
        if r is not None:
            return r, fmpq(0)
        r = _rational_sqrt(-x0)
        if r is not None:
            return fmpq(0), r
        return None
    n = _rational_sqrt(x0 * x0 + x1 * x1)
    if n is None:
        return None
    p = _rational_sqrt((x0 + n) / 2)
    if p is None or p == 0:
        return None
    return p, x1 / (2 * p)


class ExactScalar:
    """a + b*i + c*s + d*i*s with rational a, b, c, d and s*s = gamma."""

    __slots__ = ("a", "b", "c", "d", "field")

    def __init__(self, field, a, b=0, c=0, d=0):
        self.field = field
        self.a, self.b, self.c, self.d = _fmpq(a), _fmpq(b), _fmpq(c), _fmpq(d)

    def _coerce(self, other):
        if isinstance(other, ExactScalar):
            return other
        return self.field.scalar(other)

    def __add__(self, other):
        o = self._coerce(other)
        return ExactScalar(self.field, self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar(self.field, -self.a, -self.b, -self.c, -self.d)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        g = self.field.gamma_q
        # (x + s y)(x' + s y') = x x' + g y y' + s (x y' + y x')
        xa, xb, ya, yb = self.a, self.b, self.c, self.d
        ua, ub, va, vb = o.a, o.b, o.c, o.d
        r0 = xa * ua - xb * ub + g * (ya * va - yb * vb)
        r1 = xa * ub + xb * ua + g * (ya * vb + yb * va)
        r2 = xa * va - xb * vb + ya * ua - yb * ub
        r3 = xa * vb + xb * va + ya * ub + yb * ua
        return ExactScalar(self.field, r0, r1, r2, r3)

    __rmul__ = __mul__

    def inverse(self):
        if not self:
            raise ZeroDivisionError("inverse of zero scalar")
        g = self.field.gamma_q
        # norm over s: x^2 - g y^2, a Gaussian rational
        n0 = self.a * self.a - self.b * self.b - g * (self.c * self.c - self.d * self.d)
        n1 = 2 * self.a * self.b - 2 * g * self.c * self.d
        m = n0 * n0 + n1 * n1
        i0, i1 = n0 / m, -n1 / m
        # (x - s y) * (i0 + i i1)
        r0 = self.a * i0 - self.b * i1
        r1 = self.a * i1 + self.b * i0
        r2 = -(self.c * i0 - self.d * i1)
        r3 = -(self.c * i1 + self.d * i0)
        return ExactScalar(self.field, r0, r1, r2, r3)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.field.one
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self):
        return ExactScalar(self.field, self.a, -self.b, self.c, -self.d)

    def __bool__(self):
        return bool(self.a != 0 or self.b != 0 or self.c != 0 or self.d != 0)

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b and self.c == o.c and self.d == o.d

    def __hash__(self):
        return hash((str(self.a), str(self.b), str(self.c), str(self.d)))

    def __complex__(self):
        s = math.sqrt(float(_frac(self.field.gamma_q)))
        return complex(float(_frac(self.a)) + s * float(_frac(self.c)),
                       float(_frac(self.b)) + s * float(_frac(self.d)))

    def __abs__(self):
        return abs(complex(self))

    def parts(self):
        return (self.a, self.b, self.c, self.d)

    def __repr__(self):
        return f"({self.a} + {self.b}*i + {self.c}*s + {self.d}*i*s)"


_Z = fmpq_poly()


def _gmul(x0, x1, y0, y1, n=None):
    """Gaussian product of polynomial pairs, skipping zero parts; only the first n terms if n is given."""
    if n is None:
        mul = fmpq_poly.__mul__
    else:
        def mul(p, q):
            return p.mul_low(q, n)
    zx1, zy1 = x1.is_zero(), y1.is_zero()
    if zx1 and zy1:
        return mul(x0, y0), _Z
    if zx1:
        return mul(x0, y0), mul(x0, y1)
    if zy1:
        return mul(x0, y0), mul(x1, y0)
    if x0.is_zero() and y0.is_zero():
        return -mul(x1, y1), _Z
    k1 = mul(y0, x0 + x1)
    k2 = mul(x0, y1 - y0)
    k3 = mul(x1, y0 + y1)
    return k1 - k3, k1 + k2


def _vzero(v):
    return v[0].is_zero() and v[1].is_zero() and v[2].is_zero() and v[3].is_zero()


class ExactField:
    """Q(i)(s), s^2 = gamma, with coefficient vectors as four fmpq_poly."""

    kind = "exact"

    def __init__(self, gamma):
        self.gamma_q = _fmpq(gamma)
        if self.gamma_q <= 0 or _rational_sqrt(self.gamma_q) is not None:
            raise ValueError("gamma must be a positive rational non-square")
        self.zero = ExactScalar(self, 0)
        self.one = ExactScalar(self, 1)
        self.i = ExactScalar(self, 0, 1)
        self.s = ExactScalar(self, 0, 0, 1)
        self.gamma = ExactScalar(self, self.gamma_q)

    def __eq__(self, other):
        return isinstance(other, ExactField) and other.gamma_q == self.gamma_q

    def __hash__(self):
        return hash(("exact", str(self.gamma_q)))

    # scalars
    def scalar(self, x) -> ExactScalar:
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, complex):
            raise TypeError("exact backend refuses floating scalars")
        if isinstance(x, float):
            raise TypeError("exact backend refuses floating scalars")
        return ExactScalar(self, x)

    def gaussian(self, re, im=0) -> ExactScalar:
        return ExactScalar(self, re, im)

    def is_zero(self, x) -> bool:
        return not x

    def conj(self, x):
        return x.conjugate()

    def sqrt(self, x: ExactScalar) -> ExactScalar:
        """A root in the field; raises BranchError if none is found."""
        if x.c == 0 and x.d == 0:
            u = _gauss_sqrt(x.a, x.b)
            if u is not None:
                return ExactScalar(self, u[0], u[1])
            u = _gauss_sqrt(x.a / self.gamma_q, x.b / self.gamma_q)
            if u is not None:
                return ExactScalar(self, 0, 0, u[0], u[1])
        else:
            r = self._mixed_sqrt(x)
            if r is not None:
                return r
        raise BranchError(f"no square root of {x!r} in Q(i)(sqrt({self.gamma_q}))")

    def _mixed_sqrt(self, x):
        # (p + q s)^2 = A + B s with p, q Gaussian: p^2 = (A +- sqrt(A^2 - gamma B^2)) / 2, q = B / 2p
        A = ExactScalar(self, x.a, x.b)
        B = ExactScalar(self, x.c, x.d)
        D = A * A - B * B * self.gamma
        u = _gauss_sqrt(D.a, D.b)
        if u is None:
            return None
        delta = ExactScalar(self, u[0], u[1])
        for sg in (1, -1):
            t = (A + delta * sg) * Fraction(1, 2)
            v = _gauss_sqrt(t.a, t.b)
            if v is None or (v[0] == 0 and v[1] == 0):
                continue
            p = ExactScalar(self, v[0], v[1])
            q = B / (p * 2)
            r = p + q * self.s
            if r * r == x:
                return r
        return None

    def magnitude(self, x) -> float:
        return abs(complex(x))

    def to_json(self, x):
        return [str(x.a), str(x.b), str(x.c), str(x.d)]

    def from_json(self, v):
        return ExactScalar(self, *v)

    # coefficient vectors
    def vzero(self):
        return (_Z, _Z, _Z, _Z)

    def vfrom(self, scalars):
        cols = ([], [], [], [])
        for x in scalars:
            x = self.scalar(x)
            cols[0].append(x.a)
            cols[1].append(x.b)
            cols[2].append(x.c)
            cols[3].append(x.d)
        return tuple(fmpq_poly(c) for c in cols)

    def vget(self, v, k):
        if k < 0:
            return self.zero
        return ExactScalar(self, v[0][k], v[1][k], v[2][k], v[3][k])

    def vlen(self, v):
        return max(v[0].length(), v[1].length(), v[2].length(), v[3].length())

    def vadd(self, u, v):
        return (u[0] + v[0], u[1] + v[1], u[2] + v[2], u[3] + v[3])

    def vsub(self, u, v):
        return (u[0] - v[0], u[1] - v[1], u[2] - v[2], u[3] - v[3])

    def vneg(self, u):
        return (-u[0], -u[1], -u[2], -u[3])

    def vmul(self, u, v, n=None):
        """Product; with ``n`` only the first n coefficients are computed."""
        P0, P1, Q0, Q1 = u
        R0, R1, T0, T1 = v
        zq = Q0.is_zero() and Q1.is_zero()
        zt = T0.is_zero() and T1.is_zero()
        pr = _gmul(P0, P1, R0, R1, n)
        if zq and zt:
            return (pr[0], pr[1], _Z, _Z)
        if zq:
            pt = _gmul(P0, P1, T0, T1, n)
            return (pr[0], pr[1], pt[0], pt[1])
        if zt:
            qr = _gmul(Q0, Q1, R0, R1, n)
            return (pr[0], pr[1], qr[0], qr[1])
        g = self.gamma_q
        qt = _gmul(Q0, Q1, T0, T1, n)
        mix = _gmul(P0 + Q0, P1 + Q1, R0 + T0, R1 + T1, n)
        return (pr[0] + qt[0] * g, pr[1] + qt[1] * g,
                mix[0] - pr[0] - qt[0], mix[1] - pr[1] - qt[1])

    def vscale(self, u, x):
        x = self.scalar(x)
        if x.b == 0 and x.c == 0 and x.d == 0:
            a = x.a
            return (u[0] * a, u[1] * a, u[2] * a, u[3] * a)
        c = (fmpq_poly([x.a]), fmpq_poly([x.b]), fmpq_poly([x.c]), fmpq_poly([x.d]))
        return self.vmul(u, c)

    def vshift(self, u, k):
        if k == 0:
            return u
        return tuple(p.left_shift(k) for p in u)

    def vslice(self, u, a, b):
        """Coefficients with index in [a, b), re-based at 0."""
        return tuple(p.truncate(b).right_shift(a) if a > 0 else p.truncate(b) for p in u)

    def vlowest(self, u):
        best = None
        for p in u:
            if p.is_zero():
                continue
            if p[0] != 0:
                return 0
            k = 1
            while p[k] == 0:
                k += 1
            if best is None or k < best:
                best = k
        return best

    def vconj(self, u):
        return (u[0], -u[1], u[2], -u[3])

    def vreverse(self, u, n):
        out = []
        for p in u:
            cs = p.coeffs()
            cs = cs + [0] * (n - len(cs))
            out.append(fmpq_poly(cs[::-1]))
        return tuple(out)

    def veuler(self, u, off):
        return tuple(p.derivative().left_shift(1) + p * off for p in u)

    def viszero(self, u):
        return _vzero(u)

    def vitems(self, u):
        n = self.vlen(u)
        for k in range(n):
            x = self.vget(u, k)
            if x:
                yield k, x

    def vmaxabs(self, u):
        best = 0.0
        for _, x in self.vitems(u):
            best = max(best, abs(complex(x)))
        return best

    def random_gaussian(self, rng, bound=3, nonzero=False):
        while True:
            x = ExactScalar(self, int(rng.integers(-bound, bound + 1)), int(rng.integers(-bound, bound + 1)))
            if x or not nonzero:
                return x


class FloatField:
    """Complex doubles; s is the positive root of gamma."""

    kind = "float"

    def __init__(self, gamma):
        g = float(Fraction(gamma)) if not isinstance(gamma, float) else gamma
        if g == 0:
            raise ValueError("gamma must be nonzero")
        self.gamma_q = g
        self.zero = 0j
        self.one = 1 + 0j
        self.i = 1j
        self.s = complex(cmath.sqrt(g))
        self.gamma = complex(g)

    def __eq__(self, other):
        return isinstance(other, FloatField) and other.gamma_q == self.gamma_q

    def __hash__(self):
        return hash(("float", self.gamma_q))

    def scalar(self, x) -> complex:
        if isinstance(x, ExactScalar):
            return complex(x)
        if isinstance(x, (Fraction, fmpq)):
            return complex(float(Fraction(int(x.numerator), int(x.denominator))))
        return complex(x)

    def gaussian(self, re, im=0) -> complex:
        return complex(float(Fraction(re)), float(Fraction(im)))

    def is_zero(self, x) -> bool:
        return x == 0

    def conj(self, x):
        return x.conjugate()

    def sqrt(self, x):
        return cmath.sqrt(x)

    def magnitude(self, x) -> float:
        return abs(x)

    def to_json(self, x):
        return [x.real, x.imag]

    def from_json(self, v):
        return complex(v[0], v[1])

    def vzero(self):
        return np.zeros(0, dtype=complex)

    def vfrom(self, scalars):
        return np.array([self.scalar(x) for x in scalars], dtype=complex)

    def vget(self, v, k):
        if 0 <= k < len(v):
            return complex(v[k])
        return 0j

    def vlen(self, v):
        return len(v)

    def _pad(self, u, v):
        n = max(len(u), len(v))
        if len(u) < n:
            u = np.concatenate([u, np.zeros(n - len(u), dtype=complex)])
        if len(v) < n:
            v = np.concatenate([v, np.zeros(n - len(v), dtype=complex)])
        return u, v

    def vadd(self, u, v):
        u, v = self._pad(u, v)
        return u + v

    def vsub(self, u, v):
        u, v = self._pad(u, v)
        return u - v

    def vneg(self, u):
        return -u

    def vmul(self, u, v, n=None):
        if len(u) == 0 or len(v) == 0:
            return self.vzero()
        out = np.convolve(u, v)
        return out if n is None else out[:n]

    def vscale(self, u, x):
        return u * self.scalar(x)

    def vshift(self, u, k):
        if k == 0 or len(u) == 0:
            return u
        return np.concatenate([np.zeros(k, dtype=complex), u])

    def vslice(self, u, a, b):
        return u[a:b].copy()

    def vlowest(self, u):
        nz = np.flatnonzero(u)
        return int(nz[0]) if len(nz) else None

    def vconj(self, u):
        return np.conj(u)

    def vreverse(self, u, n):
        w = np.zeros(n, dtype=complex)
        w[: len(u)] = u
        return w[::-1].copy()

    def veuler(self, u, off):
        return u * (off + np.arange(len(u)))

    def viszero(self, u):
        return not np.any(u)

    def vitems(self, u):
        for k in np.flatnonzero(u):
            yield int(k), complex(u[k])

    def vmaxabs(self, u):
        return float(np.max(np.abs(u))) if len(u) else 0.0

    def random_gaussian(self, rng, bound=3, nonzero=False):
        while True:
            x = complex(int(rng.integers(-bound, bound + 1)), int(rng.integers(-bound, bound + 1)))
            if x or not nonzero:
                return x


def make_field(backend: str, gamma):
    if backend == "exact":
        return ExactField(gamma)
    if backend == "float":
        return FloatField(gamma)
    raise ValueError(f"unknown backend {backend!r}")


def _wstr(x):
    return None if abs(x) == INF else int(x)


class Series:
    """Formal Laurent series sum c_d lambda^d, known on the window [lo, hi].

    ``vec`` holds coefficients from degree ``off`` upward, restricted to the
    window and with no leading (lowest-degree) zeros.
    """

    __slots__ = ("field", "vec", "off", "lo", "hi", "nz")

    def __init__(self, field, vec, off=0, lo=-INF, hi=INF):
        if lo > hi:
            raise WindowCollapse(f"empty window [{lo}, {hi}]")
        self.field = field
        self.lo, self.hi = lo, hi
        n = field.vlen(vec)
        a = 0 if lo == -INF else max(0, lo - off)
        b = n if hi == INF else min(n, hi - off + 1)
        if b <= a:
            self.vec, self.off, self.nz = field.vzero(), 0, False
            return
        if a > 0 or b < n:
            vec = field.vslice(vec, a, b)
            off += a
        z = field.vlowest(vec)
        if z is None:
            self.vec, self.off, self.nz = field.vzero(), 0, False
            return
        if z > 0:
            vec = field.vslice(vec, z, field.vlen(vec))
            off += z
        if field.kind == "float" and len(vec) and vec[-1] == 0:
            vec = np.trim_zeros(vec, "b")
        self.vec, self.off, self.nz = vec, off, True

    # construction
    @classmethod
    def from_dict(cls, field, coeffs: dict, lo=-INF, hi=INF):
        if not coeffs:
            return cls(field, field.vzero(), 0, lo, hi)
        m, M = min(coeffs), max(coeffs)
        data = [field.zero] * (M - m + 1)
        for d, x in coeffs.items():
            data[d - m] = field.scalar(x)
        return cls(field, field.vfrom(data), m, lo, hi)

    @classmethod
    def zero(cls, field, lo=-INF, hi=INF):
        return cls(field, field.vzero(), 0, lo, hi)

    @classmethod
    def const(cls, field, x, lo=-INF, hi=INF):
        return cls.monomial(field, x, 0, lo, hi)

    @classmethod
    def monomial(cls, field, x, k=0, lo=-INF, hi=INF):
        return cls(field, field.vfrom([x]), k, lo, hi)

    def zero_like(self):
        return Series.zero(self.field)

    # inspection
    @property
    def window(self):
        return (self.lo, self.hi)

    def is_nonzero_data(self):
        return self.nz

    def valuation(self):
        """Lowest degree with nonzero stored coefficient (None for zero data)."""
        return self.off if self.is_nonzero_data() else None

    def top(self):
        return self.off + self.field.vlen(self.vec) - 1 if self.is_nonzero_data() else None

    def _min_potential(self):
        if self.lo != -INF:
            return -INF
        return self.off if self.is_nonzero_data() else INF

    def _max_potential(self):
        if self.hi != INF:
            return INF
        t = self.top()
        return -INF if t is None else t

    def coeff(self, d: int):
        if not (self.lo <= d <= self.hi):
            raise WindowCollapse(f"degree {d} outside window [{self.lo}, {self.hi}]")
        return self.field.vget(self.vec, d - self.off)

    __getitem__ = coeff

    def items(self):
        for k, x in self.field.vitems(self.vec):
            yield k + self.off, x

    def to_dict(self):
        return dict(self.items())

    @property
    def parity(self) -> str:
        degs = [d for d, _ in self.items()]
        if all(d % 2 == 0 for d in degs):
            return "even"
        if all(d % 2 == 1 for d in degs):
            return "odd"
        return "mixed"

    def is_zero(self) -> bool:
        """All certified coefficients vanish."""
        return not self.is_nonzero_data()

    def max_abs(self) -> float:
        return self.field.vmaxabs(self.vec)

    def equals(self, other) -> bool:
        return (self - other).is_zero()

    # windows
    def restrict(self, lo=-INF, hi=INF):
        return Series(self.field, self.vec, self.off, max(self.lo, lo), min(self.hi, hi))

    def project(self, op: str, k: int):
        """Keep degrees >= k (op '>=') or <= k (op '<=')."""
        f = self.field
        if op == ">=":
            if self.hi < k:
                return Series.zero(f, -INF, k - 1)
            lo = -INF if self.lo <= k else self.lo
            return Series(f, self.vec, self.off, max(k, self.lo), self.hi)._with_window(lo, self.hi)
        if op == "<=":
            if self.lo > k:
                return Series.zero(f, k + 1, INF)
            hi = INF if self.hi >= k else self.hi
            return Series(f, self.vec, self.off, self.lo, min(k, self.hi))._with_window(self.lo, hi)
        raise ValueError(f"unknown projection {op!r}")

    def projection_certified(self, op: str, k: int) -> bool:
        if op == ">=":
            return self.lo <= k <= self.hi + 1
        return self.lo - 1 <= k <= self.hi

    def _with_window(self, lo, hi):
        out = Series.__new__(Series)
        out.field, out.vec, out.off, out.lo, out.hi = self.field, self.vec, self.off, lo, hi
        out.nz = self.nz
        return out

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Series):
            if other.field is not self.field and other.field != self.field:
                raise ValueError("series over different scalar fields")
            return other
        return Series.const(self.field, self.field.scalar(other))

    def __add__(self, other):
        if not isinstance(other, Series):
            if _is_scalar(other):
                other = self._coerce(other)
            else:
                return NotImplemented
        f = self.field
        if other.field is not f and other.field != f:
            raise ValueError("series over different scalar fields")
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise WindowCollapse(f"sum of windows {self.window} and {other.window} is empty")
        if not other.is_nonzero_data():
            return self.restrict(lo, hi)
        if not self.is_nonzero_data():
            return other.restrict(lo, hi)
        off = min(self.off, other.off)
        v = f.vadd(f.vshift(self.vec, self.off - off), f.vshift(other.vec, other.off - off))
        return Series(f, v, off, lo, hi)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return Series(self.field, self.field.vneg(self.vec), self.off, self.lo, self.hi)

    def __sub__(self, other):
        if not isinstance(other, Series):
            if _is_scalar(other):
                other = self._coerce(other)
            else:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, x):
        x = self.field.scalar(x)
        return Series(self.field, self.field.vscale(self.vec, x), self.off, self.lo, self.hi)

    def __mul__(self, other):
        if not isinstance(other, Series):
            if _is_scalar(other):
                return self.scale(other)
            return NotImplemented
        return _mul(self, other)

    def __rmul__(self, other):
        if _is_scalar(other):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if _is_scalar(other):
            return self.scale(self.field.one / self.field.scalar(other))
        if isinstance(other, Series):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_scalar(other):
            return self.inverse().scale(other)
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = Series.const(self.field, 1)
        for _ in range(n):
            out = out * self
        return out

    def shift(self, k: int):
        """Multiply by lambda^k."""
        return Series(self.field, self.vec, self.off + k, self.lo + k, self.hi + k)

    def euler(self):
        """lambda d/dlambda."""
        return Series(self.field, self.field.veuler(self.vec, self.off), self.off, self.lo, self.hi)

    def residue(self):
        return self.coeff(0)

    def reflect(self):
        """lambda -> 1/lambda, no conjugation."""
        f = self.field
        if not self.is_nonzero_data():
            return Series.zero(f, -self.hi, -self.lo)
        n = f.vlen(self.vec)
        return Series(f, f.vreverse(self.vec, n), -(self.off + n - 1), -self.hi, -self.lo)

    def conj_flip(self):
        """Coefficient at d becomes the conjugate of the one at -d."""
        r = self.reflect()
        return Series(self.field, self.field.vconj(r.vec), r.off, r.lo, r.hi)

    # analytic calculus
    def _side(self):
        if self.lo == -INF and self.hi != INF:
            return "upper"
        if self.hi == INF and self.lo != -INF:
            return "lower"
        if self.lo == -INF and self.hi == INF:
            return "exact"
        return "both"

    def inverse(self, hi=None, lo=None):
        f = self.field
        v = self.valuation()
        if v is None:
            raise ZeroDivisionError("inverse of a series with no known nonzero coefficient")
        side = self._side()
        lead = self.coeff(v)
        if side == "exact" and self.top() == v:
            return Series.monomial(f, f.one / lead, -v)
        if side == "lower" or (side == "exact" and lo is not None):
            x = self if side == "lower" else self.restrict(lo=lo + 2 * self.top())
            return x.reflect().inverse().reflect()
        if side == "exact":
            if hi is None:
                raise WindowCollapse("inverse of a polynomial needs a target window")
            x = self.restrict(hi=hi + 2 * v)
        elif side == "both":
            raise WindowCollapse("inverse of a two-sided truncated series")
        else:
            x = self
        unit = Series.monomial(f, f.one / lead, -v)
        r = x * unit - 1
        n = _terms(r, x.hi - v)
        acc = Series.const(f, 1)
        for _ in range(n):
            acc = 1 - r * acc
        return acc * unit

    def sqrt(self, hi=None, lo=None):
        f = self.field
        v = self.valuation()
        if v is None or v % 2:
            raise BranchError("square root needs an even-degree leading term")
        side = self._side()
        if side == "lower":
            return self.reflect().sqrt().reflect()
        if side == "exact":
            if lo is not None:
                return self.restrict(lo=lo + self.top() // 2).reflect().sqrt().reflect()
            if hi is None:
                if self.top() == v:
                    return Series.monomial(f, f.sqrt(self.coeff(v)), v // 2)
                raise WindowCollapse("square root of a polynomial needs a target window")
            x = self.restrict(hi=hi + v // 2)
        elif side == "both":
            raise WindowCollapse("square root of a two-sided truncated series")
        else:
            x = self
        lead = x.coeff(v)
        root = f.sqrt(lead)
        r = x * Series.monomial(f, f.one / lead, -v) - 1
        n = _terms(r, x.hi - v)
        coeffs = [_binom_half(k) for k in range(n + 1)]
        return _horner(coeffs, r).shift(v // 2).scale(root)

    def log(self, hi=None, lo=None):
        f = self.field
        if self.valuation() != 0 or self.coeff(0) != f.one:
            raise BranchError("log needs leading term 1 at degree 0")
        side = self._side()
        if side == "lower":
            return self.reflect().log().reflect()
        if side == "exact":
            if lo is not None:
                return self.restrict(lo=lo).reflect().log().reflect()
            if hi is None:
                if self.top() == 0:
                    return Series.zero(f)
                raise WindowCollapse("log of a polynomial needs a target window")
            x = self.restrict(hi=hi)
        elif side == "both":
            raise WindowCollapse("log of a two-sided truncated series")
        else:
            x = self
        r = x - 1
        n = _terms(r, x.hi)
        coeffs = [Fraction(0)] + [Fraction((-1) ** (k + 1), k) for k in range(1, n + 1)]
        return _horner(coeffs, r)

    def to_json(self):
        return {
            "window": [_wstr(self.lo), _wstr(self.hi)],
            "parity": self.parity,
            "coeffs": {str(d): self.field.to_json(x) for d, x in self.items()},
        }

    @classmethod
    def from_json(cls, field, obj):
        lo, hi = obj["window"]
        lo = -INF if lo is None else lo
        hi = INF if hi is None else hi
        return cls.from_dict(field, {int(d): field.from_json(v) for d, v in obj["coeffs"].items()}, lo, hi)

    def __repr__(self):
        terms = " + ".join(f"{x}*l^{d}" for d, x in self.items()) or "0"
        return f"Series[{self.lo}, {self.hi}]({terms})"


def _is_scalar(x):
    return isinstance(x, (int, Fraction, fmpq, ExactScalar, complex, float))


def _mul(s: Series, t: Series) -> Series:
    f = s.field
    if t.field is not f and t.field != f:
        raise ValueError("series over different scalar fields")
    ms, Ms = s._min_potential(), s._max_potential()
    mt, Mt = t._min_potential(), t._max_potential()
    lo = max(-INF if s.lo == -INF else s.lo + Mt, -INF if t.lo == -INF else t.lo + Ms)
    hi = min(INF if s.hi == INF else s.hi + mt, INF if t.hi == INF else t.hi + ms)
    if lo > hi:
        raise WindowCollapse(f"product of windows {s.window} and {t.window} is empty")
    if not s.is_nonzero_data() or not t.is_nonzero_data():
        return Series.zero(f, lo, hi)
    sv, so = s.vec, s.off
    tv, to = t.vec, t.off
    # crop operands to what can reach [lo, hi]
    ttop = to + f.vlen(tv) - 1
    stop = so + f.vlen(sv) - 1
    if hi != INF:
        cut = hi - to
        if cut < stop:
            sv = f.vslice(sv, 0, max(0, cut - so + 1))
        cut = hi - so
        if cut < ttop:
            tv = f.vslice(tv, 0, max(0, cut - to + 1))
    if lo != -INF:
        cut = lo - ttop
        if cut > so:
            sv = f.vslice(sv, cut - so, f.vlen(sv))
            so = cut
        cut = lo - stop
        if cut > to:
            tv = f.vslice(tv, cut - to, f.vlen(tv))
            to = cut
    if f.viszero(sv) or f.viszero(tv):
        return Series.zero(f, lo, hi)
    n = None
    if hi != INF:
        n = hi - (so + to) + 1
        if n <= 0:
            return Series.zero(f, lo, hi)
    return Series(f, f.vmul(sv, tv, n), so + to, lo, hi)


def _terms(r: Series, target) -> int:
    """Number of powers of r (valuation >= 1) that reach degree ``target``."""
    v = r.valuation()
    if v is None:
        return 0
    if v <= 0:
        raise BranchError("composition argument has a degree <= 0 term")
    if target == INF:
        raise WindowCollapse("composition needs a finite target degree")
    return max(0, int(target // v))


def _horner(coeffs, x: Series) -> Series:
    f = x.field
    acc = Series.const(f, f.scalar(coeffs[-1]))
    for c in reversed(coeffs[:-1]):
        acc = acc * x + f.scalar(c)
    return acc


def _binom_half(k: int) -> Fraction:
    out = Fraction(1)
    for j in range(k):
        out *= Fraction(1, 2) - j
        out /= j + 1
    return out


_TAYLOR = {
    "exp": lambda n: Fraction(1, factorial(n)),
    "cosh": lambda n: Fraction(1, factorial(n)) if n % 2 == 0 else Fraction(0),
    "sinh": lambda n: Fraction(1, factorial(n)) if n % 2 == 1 else Fraction(0),
    "sinhc": lambda n: Fraction(1, factorial(n + 1)) if n % 2 == 0 else Fraction(0),
}


def analytic_apply(name: str, x: Series, hi=None, lo=None) -> Series:
    """Truncated composition f(x), exact within the certified window.

    ``x`` must be small at one end: degrees >= 1 (upper-truncated or a
    polynomial with target ``hi``) or degrees <= -1 (lower-truncated or a
    polynomial with target ``lo``).
    """
    if name == "sqrt":
        return x.sqrt(hi=hi, lo=lo)
    if name == "log":
        return x.log(hi=hi, lo=lo)
    if name not in _TAYLOR:
        raise ValueError(f"unknown analytic function {name!r}")
    f = x.field
    if not x.is_nonzero_data():
        c0 = _TAYLOR[name](0)
        return Series.const(f, f.scalar(c0), x.lo, x.hi) if x._side() != "exact" else Series.const(f, f.scalar(c0))
    side = x._side()
    if side == "exact":
        if x.valuation() >= 1:
            if hi is None:
                raise WindowCollapse(f"{name} of a polynomial needs a target hi")
            x = x.restrict(hi=hi)
            side = "upper"
        elif x.top() <= -1:
            if lo is None:
                raise WindowCollapse(f"{name} of a polynomial needs a target lo")
            x = x.restrict(lo=lo)
            side = "lower"
        else:
            raise BranchError(f"{name} argument has both signs of degree")
    if side == "both":
        raise WindowCollapse(f"{name} of a two-sided truncated series")
    if side == "lower":
        return analytic_apply(name, x.reflect()).reflect()
    n = _terms(x, x.hi)
    coeffs = [_TAYLOR[name](k) for k in range(n + 1)]
    return _horner(coeffs, x).restrict(hi=x.hi)


def naive_product(s: Series, t: Series, d: int):
    """Reference convolution coefficient, used as a test oracle."""
    f = s.field
    out = f.zero
    for i, x in s.items():
        for j, y in t.items():
            if i + j == d:
                out = out + x * y
    return out
