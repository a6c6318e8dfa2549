"""Exact arithmetic in Z[lambda_q], lambda_q = 2 cos(pi/q), with certified signs.

Elements are integer coefficient vectors of length ``d`` (the degree of
lambda_q over Q), reduced modulo the minimal polynomial.  Real-number
questions (sign, ordering, norms) are answered through the single real
embedding lambda_q -> 2 cos(pi/q), with a float fast path backed by exact
dyadic interval refinement.

The hot loops of orbit generation and pair counting work directly on the
coefficient tuples through :class:`MinimalPolynomial` methods; the
:class:`RingElement` wrapper is the public value type.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import mpmath

from .errors import DomainError

Number = Union[int, Fraction]

# Relative slack on float evaluations before falling back to exact arithmetic.
_FLOAT_SLACK = 1e-12


def _poly_mul(a: Sequence[int], b: Sequence[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_divmod_monic(num: Sequence[int], den: Sequence[int]) -> tuple[list[int], list[int]]:
    """Exact division by a monic integer polynomial (constant term first)."""
    rem = list(num)
    dd = len(den) - 1
    if len(rem) <= dd:
        return [0], rem
    quo = [0] * (len(rem) - dd)
    for k in range(len(rem) - 1, dd - 1, -1):
        c = rem[k]
        if c:
            quo[k - dd] = c
            for i, y in enumerate(den):
                rem[k - dd + i] -= c * y
    return quo, rem[:dd]


def _chebyshev_trace_poly(n: int) -> list[int]:
    """Integer polynomial C_n with C_n(z + 1/z) = z^n + z^-n."""
    prev, cur = [2], [0, 1]
    if n == 0:
        return prev
    for _ in range(n - 1):
        shifted = [0] + cur
        padded = prev + [0] * (len(shifted) - len(prev))
        prev, cur = cur, [s - p for s, p in zip(shifted, padded)]
    return cur


class MinimalPolynomial:
    """Minimal polynomial of lambda_q together with the arithmetic it induces.

    ``coeffs`` is monic with the constant term first.  Instances are cached
    per ``q`` by :func:`minimal_polynomial`; compare them by identity.
    """

    def __init__(self, q: int, coeffs: Sequence[int]):
        if coeffs[-1] != 1:
            raise DomainError("minimal polynomial must be monic")
        self.q = q
        self.coeffs = tuple(int(c) for c in coeffs)
        self.degree = d = len(coeffs) - 1
        # red[k] = lambda^k reduced to a length-d vector, for 0 <= k <= 2d - 2.
        red = []
        for k in range(max(2 * d - 1, d + 1)):
            if k < d:
                red.append(tuple(int(i == k) for i in range(d)))
            else:
                prev = red[k - 1]
                top = prev[-1]
                shifted = (0,) + prev[:-1]
                red.append(tuple(s - top * c for s, c in zip(shifted, self.coeffs[:-1])))
        self._red = red
        self._lam_red = red[d]
        self.lam_float = 2.0 * math.cos(math.pi / q)
        self._pow_float = tuple(self.lam_float ** i for i in range(d))
        self._lam_bits = -1
        self._lam_k = 0
        self.zero_coeffs = (0,) * d
        self.one_coeffs = (1,) + (0,) * (d - 1)
        self.lam_coeffs = red[1] if d > 1 else (1,)  # q = 3: lambda = 1

    def __repr__(self) -> str:
        return f"MinimalPolynomial(q={self.q}, coeffs={list(self.coeffs)})"

    def __reduce__(self):
        return (minimal_polynomial, (self.q,))

    # -- coefficient-tuple arithmetic -------------------------------------

    def add(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        return tuple(x - y for x, y in zip(a, b))

    def neg(self, a):
        return tuple(-x for x in a)

    def scale(self, k: int, a):
        return tuple(k * x for x in a)

    def mul(self, a, b):
        d = self.degree
        if d == 1:
            return (a[0] * b[0],)
        conv = [0] * (2 * d - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    conv[i + j] += x * y
        out = conv[:d]
        red = self._red
        for k in range(d, 2 * d - 1):
            c = conv[k]
            if c:
                r = red[k]
                for i in range(d):
                    out[i] += c * r[i]
        return tuple(out)

    def times_lambda(self, a):
        d = self.degree
        if d == 1:
            return a
        top = a[-1]
        return tuple(s + top * r for s, r in zip((0,) + a[:-1], self._lam_red))

    def mul_array(self, a, b):
        """Row-wise product of two (N, d) integer numpy arrays (broadcasting)."""
        import numpy as np

        d = self.degree
        a = np.asarray(a)
        b = np.asarray(b)
        shape = np.broadcast_shapes(a.shape, b.shape)
        conv = [None] * (2 * d - 1)
        for i in range(d):
            for j in range(d):
                term = a[..., i] * b[..., j]
                conv[i + j] = term if conv[i + j] is None else conv[i + j] + term
        out = np.empty(shape, dtype=np.result_type(a, b))
        for i in range(d):
            out[..., i] = conv[i]
        for k in range(d, 2 * d - 1):
            r = self._red[k]
            for i in range(d):
                if r[i]:
                    out[..., i] += r[i] * conv[k]
        return out

    # -- real embedding -----------------------------------------------------

    def to_float(self, a) -> float:
        if self.degree == 1:
            return float(a[0])
        try:
            return math.fsum(c * p for c, p in zip(a, self._pow_float))
        except OverflowError:
            # Huge coefficients; the value itself may still be representable.
            return float(self.interval(a, 64).lo)

    def accurate_float(self, a) -> float:
        """Like :meth:`to_float` but with a relative error near one ulp even
        when the coefficients cancel heavily."""
        v = self.to_float(a)
        try:
            if self.degree == 1 or abs(v) > _FLOAT_SLACK * self.magnitude(a) or not any(a):
                return v
        except OverflowError:
            pass
        bits = 64
        while True:
            iv = self.interval(a, bits)
            if iv.excludes_zero() and iv.hi - iv.lo <= abs(iv.lo) / 2**55:
                return float((iv.lo + iv.hi) / 2)
            bits *= 2

    def magnitude(self, a) -> float:
        """Sum of |c_i| lambda^i: scale of the cancellation error in to_float."""
        return sum(abs(c) * p for c, p in zip(a, self._pow_float))

    def _eval_sign_dyadic(self, k: int, p: int) -> int:
        d = self.degree
        total = sum(c * k ** i * (1 << (p * (d - i))) for i, c in enumerate(self.coeffs))
        return (total > 0) - (total < 0)

    def lambda_bracket(self, bits: int) -> tuple[int, int]:
        """Return ``(k, p)`` with ``p >= bits`` and k/2^p < lambda_q < (k+1)/2^p.

        For q = 3 (lambda = 1 exactly) the returned k equals 2^p and the
        bracket degenerates; callers special-case ``degree == 1``.
        """
        if self.degree == 1:
            p = max(bits, 0)
            return (-self.coeffs[0]) << p, p
        if self._lam_bits < 0:
            # lambda_q is the largest conjugate; the next one is 2cos(3pi/q).
            gap_mid = (self.lam_float + 2.0 * math.cos(3 * math.pi / self.q)) / 2.0
            p = 8 + max(0, math.ceil(-math.log2(self.lam_float - gap_mid)))
            lo = math.floor(gap_mid * (1 << p))
            hi = 2 << p
            s_lo = self._eval_sign_dyadic(lo, p)
            s_hi = self._eval_sign_dyadic(hi, p)
            if s_lo == s_hi or s_lo == 0 or s_hi == 0:
                raise DomainError(f"could not isolate lambda_{self.q}")
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if self._eval_sign_dyadic(mid, p) == s_lo:
                    lo = mid
                else:
                    hi = mid
            self._lam_k, self._lam_bits = lo, p
        k, p = self._lam_k, self._lam_bits
        if p < bits:
            s_lo = self._eval_sign_dyadic(k, p)
            while p < bits:
                k, p = 2 * k, p + 1
                if self._eval_sign_dyadic(k + 1, p) == s_lo:
                    k += 1
            self._lam_k, self._lam_bits = k, p
        elif p > bits:
            # Truncating the cached bracket keeps results independent of history.
            k, p = k >> (p - bits), bits
        return k, p

    def interval(self, a, bits: int) -> "RealInterval":
        d = self.degree
        if d == 1:
            v = Fraction(a[0])
            return RealInterval(v, v, bits)
        weight = sum(abs(c) * i << (i - 1) for i, c in enumerate(a) if i)
        p = bits + max(1, weight.bit_length()) + 1
        k, p = self.lambda_bracket(p)
        lo_num = hi_num = 0
        for i, c in enumerate(a):
            if not c:
                continue
            lo_pow = k ** i << (p * (d - 1 - i))
            hi_pow = (k + 1) ** i << (p * (d - 1 - i))
            if c > 0:
                lo_num += c * lo_pow
                hi_num += c * hi_pow
            else:
                lo_num += c * hi_pow
                hi_num += c * lo_pow
        den = 1 << (p * (d - 1))
        return RealInterval(Fraction(lo_num, den), Fraction(hi_num, den), bits)

    def sign(self, a) -> int:
        if self.degree == 1:
            c = a[0]
            return (c > 0) - (c < 0)
        if not any(a):
            return 0
        try:
            v = self.to_float(a)
            if abs(v) > _FLOAT_SLACK * self.magnitude(a):
                return 1 if v > 0 else -1
        except OverflowError:
            pass
        bits = 64
        while True:
            iv = self.interval(a, bits)
            if iv.lo > 0:
                return 1
            if iv.hi < 0:
                return -1
            bits *= 2

    def compare_rational(self, a, r: Fraction) -> int:
        """Sign of (a - r) for a rational r."""
        r = Fraction(r)
        num = self.scale(r.denominator, a)
        num = (num[0] - r.numerator,) + num[1:]
        return self.sign(num)

    def norm_sq_coeffs(self, x, y):
        return self.add(self.mul(x, x), self.mul(y, y))

    def in_ball(self, x, y, r2: Fraction, r2f: float) -> bool:
        """Certified test x^2 + y^2 <= r2."""
        xf = self.to_float(x)
        yf = self.to_float(y)
        n2 = xf * xf + yf * yf
        if self.degree == 1:
            slack = 0.0 if n2 < 2.0 ** 52 else 1.0
        else:
            m = self.magnitude(x) + self.magnitude(y)
            slack = 1e-9 * (m * m + r2f)
        if n2 < r2f - slack:
            return True
        if n2 > r2f + slack:
            return False
        return self.compare_rational(self.norm_sq_coeffs(x, y), r2) <= 0

    # -- element construction -------------------------------------------------

    def element(self, coeffs: Iterable[int]) -> "RingElement":
        return RingElement(self, tuple(coeffs))

    def from_int(self, k: int) -> "RingElement":
        return RingElement(self, (int(k),) + (0,) * (self.degree - 1))

    @property
    def zero(self) -> "RingElement":
        return RingElement(self, self.zero_coeffs)

    @property
    def one(self) -> "RingElement":
        return RingElement(self, self.one_coeffs)

    @property
    def lam(self) -> "RingElement":
        return RingElement(self, self.lam_coeffs)


@lru_cache(maxsize=None)
def minimal_polynomial(q: int) -> MinimalPolynomial:
    """Monic minimal polynomial of 2cos(pi/q) over Q (constant term first).

    The conjugates of 2cos(pi/q) are 2cos(k pi/q) for odd k coprime to q.
    Their product is expanded numerically, rounded, and then certified
    exactly: it must divide C_q(x) + 2, where C_q(z + 1/z) = z^q + z^-q.
    """
    if not isinstance(q, int) or isinstance(q, bool) or q < 3:
        raise DomainError(f"q must be an integer >= 3, got {q!r}")
    ks = [k for k in range(1, q, 2) if math.gcd(k, q) == 1]
    with mpmath.workdps(30 + 2 * q):
        poly = [mpmath.mpf(1)]
        for k in ks:
            root = 2 * mpmath.cos(k * mpmath.pi / q)
            nxt = [mpmath.mpf(0)] * (len(poly) + 1)
            for i, c in enumerate(poly):
                nxt[i + 1] += c
                nxt[i] -= root * c
            poly = nxt
        coeffs = [int(mpmath.nint(c)) for c in poly]
        if max(abs(c - r) for c, r in zip(coeffs, poly)) > mpmath.mpf("1e-10"):
            raise DomainError(f"minimal polynomial for q={q} did not round cleanly")
        lam = 2 * mpmath.cos(mpmath.pi / q)
        if abs(mpmath.polyval(coeffs[::-1], lam)) > mpmath.mpf("1e-20"):
            raise DomainError(f"rounded polynomial does not vanish at lambda_{q}")
    target = _chebyshev_trace_poly(q)
    target[0] += 2
    _, rem = _poly_divmod_monic(target, coeffs)
    if any(rem):
        raise DomainError(f"minimal polynomial for q={q} failed exact certification")
    return MinimalPolynomial(q, coeffs)


@dataclass(frozen=True)
class RealInterval:
    """Closed interval [lo, hi] with exact rational endpoints."""

    lo: Fraction
    hi: Fraction
    bits: int = 0

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval endpoints out of order")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        if isinstance(x, float):
            x = Fraction(x)
        return self.lo <= x <= self.hi

    def excludes_zero(self) -> bool:
        return self.lo > 0 or self.hi < 0

    def __add__(self, other: "RealInterval") -> "RealInterval":
        return RealInterval(self.lo + other.lo, self.hi + other.hi, min(self.bits, other.bits))

    def __neg__(self) -> "RealInterval":
        return RealInterval(-self.hi, -self.lo, self.bits)

    def __mul__(self, other: "RealInterval") -> "RealInterval":
        prods = [self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi]
        return RealInterval(min(prods), max(prods), min(self.bits, other.bits))

    def __float__(self) -> float:
        return float((self.lo + self.hi) / 2)


def _coerce(poly: MinimalPolynomial, other) -> tuple | None:
    if isinstance(other, RingElement):
        if other.poly is not poly:
            raise DomainError(f"mixed rings: q={poly.q} and q={other.poly.q}")
        return other.coeffs
    if isinstance(other, int) and not isinstance(other, bool):
        return (other,) + (0,) * (poly.degree - 1)
    if isinstance(other, Fraction) and other.denominator == 1:
        return (other.numerator,) + (0,) * (poly.degree - 1)
    return None


class RingElement:
    """Immutable element of Z[lambda_q]."""

    __slots__ = ("poly", "coeffs")

    def __init__(self, poly: MinimalPolynomial, coeffs: Sequence[int]):
        coeffs = tuple(coeffs)
        if len(coeffs) != poly.degree:
            raise DomainError(f"expected {poly.degree} coefficients, got {len(coeffs)}")
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("RingElement is immutable")

    def __reduce__(self):
        return (RingElement, (self.poly, self.coeffs))

    @property
    def q(self) -> int:
        return self.poly.q

    def __add__(self, other):
        b = _coerce(self.poly, other)
        if b is None:
            return NotImplemented
        return RingElement(self.poly, self.poly.add(self.coeffs, b))

    __radd__ = __add__

    def __sub__(self, other):
        b = _coerce(self.poly, other)
        if b is None:
            return NotImplemented
        return RingElement(self.poly, self.poly.sub(self.coeffs, b))

    def __rsub__(self, other):
        b = _coerce(self.poly, other)
        if b is None:
            return NotImplemented
        return RingElement(self.poly, self.poly.sub(b, self.coeffs))

    def __mul__(self, other):
        b = _coerce(self.poly, other)
        if b is None:
            return NotImplemented
        return RingElement(self.poly, self.poly.mul(self.coeffs, b))

    __rmul__ = __mul__

    def __neg__(self):
        return RingElement(self.poly, self.poly.neg(self.coeffs))

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __pow__(self, k: int):
        if k < 0:
            raise DomainError("negative powers leave the ring")
        out = self.poly.one_coeffs
        for _ in range(k):
            out = self.poly.mul(out, self.coeffs)
        return RingElement(self.poly, out)

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, RingElement):
            return self.poly is other.poly and self.coeffs == other.coeffs
        try:
            b = _coerce(self.poly, other)
        except DomainError:
            return False
        return b is not None and b == self.coeffs

    def __hash__(self) -> int:
        if not any(self.coeffs[1:]):
            return hash(self.coeffs[0])
        return hash((self.poly.q, self.coeffs))

    def _cmp(self, other) -> int:
        if isinstance(other, Fraction) and other.denominator != 1:
            return self.poly.compare_rational(self.coeffs, other)
        b = _coerce(self.poly, other)
        if b is None:
            raise TypeError(f"cannot compare RingElement with {type(other).__name__}")
        return self.poly.sign(self.poly.sub(self.coeffs, b))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def sign(self) -> int:
        return self.poly.sign(self.coeffs)

    def __float__(self) -> float:
        return self.poly.to_float(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def __str__(self) -> str:
        return format_coeffs(self.coeffs)

    def __repr__(self) -> str:
        return f"RingElement(q={self.poly.q}, {format_coeffs(self.coeffs)!r})"


class FieldElement:
    """Element of Q(lambda_q) with rational coefficients; used for the
    linear-combination coefficients of dependent tuple entries."""

    __slots__ = ("poly", "coeffs")

    def __init__(self, poly: MinimalPolynomial, coeffs: Sequence[Number]):
        coeffs = tuple(Fraction(c) for c in coeffs)
        if len(coeffs) != poly.degree:
            raise DomainError(f"expected {poly.degree} coefficients, got {len(coeffs)}")
        self.poly = poly
        self.coeffs = coeffs

    @classmethod
    def from_ring(cls, a: RingElement) -> "FieldElement":
        return cls(a.poly, a.coeffs)

    def _other(self, other):
        if isinstance(other, FieldElement):
            if other.poly is not self.poly:
                raise DomainError("mixed fields")
            return other.coeffs
        if isinstance(other, RingElement):
            if other.poly is not self.poly:
                raise DomainError("mixed fields")
            return tuple(Fraction(c) for c in other.coeffs)
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return (Fraction(other),) + (Fraction(0),) * (self.poly.degree - 1)
        return None

    def __add__(self, other):
        b = self._other(other)
        if b is None:
            return NotImplemented
        return FieldElement(self.poly, [x + y for x, y in zip(self.coeffs, b)])

    __radd__ = __add__

    def __sub__(self, other):
        b = self._other(other)
        if b is None:
            return NotImplemented
        return FieldElement(self.poly, [x - y for x, y in zip(self.coeffs, b)])

    def __neg__(self):
        return FieldElement(self.poly, [-x for x in self.coeffs])

    def __mul__(self, other):
        b = self._other(other)
        if b is None:
            return NotImplemented
        return FieldElement(self.poly, self.poly.mul(self.coeffs, b))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        d = self.poly.degree
        if not any(self.coeffs):
            raise ZeroDivisionError("inverse of zero")
        # Column j of the multiplication matrix is self * lambda^j.
        cols = []
        col = self.coeffs
        for _ in range(d):
            cols.append(col)
            col = self.poly.times_lambda(col)
        mat = [[cols[j][i] for j in range(d)] + [Fraction(int(i == 0))] for i in range(d)]
        for c in range(d):
            piv = next(r for r in range(c, d) if mat[r][c] != 0)
            mat[c], mat[piv] = mat[piv], mat[c]
            inv = 1 / mat[c][c]
            mat[c] = [v * inv for v in mat[c]]
            for r in range(d):
                if r != c and mat[r][c] != 0:
                    f = mat[r][c]
                    mat[r] = [v - f * w for v, w in zip(mat[r], mat[c])]
        return FieldElement(self.poly, [mat[i][d] for i in range(d)])

    def __truediv__(self, other):
        b = self._other(other)
        if b is None:
            return NotImplemented
        return self * FieldElement(self.poly, b).inverse()

    def __eq__(self, other) -> bool:
        try:
            b = self._other(other)
        except DomainError:
            return False
        return b is not None and tuple(b) == self.coeffs

    def __hash__(self) -> int:
        return hash((self.poly.q, self.coeffs))

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)

    def to_ring(self) -> RingElement:
        if not self.is_integral():
            raise DomainError(f"{self} is not in Z[lambda_{self.poly.q}]")
        return RingElement(self.poly, tuple(int(c) for c in self.coeffs))

    def __float__(self) -> float:
        return math.fsum(float(c) * p for c, p in zip(self.coeffs, self.poly._pow_float))

    def __str__(self) -> str:
        return format_coeffs(self.coeffs)

    def __repr__(self) -> str:
        return f"FieldElement(q={self.poly.q}, {str(self)!r})"


# -- functional API ------------------------------------------------------------


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    return a + b


def ring_neg(a: RingElement) -> RingElement:
    return -a


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    return a * b


def embed(a: RingElement, bits: int = 53) -> RealInterval:
    """Interval of width <= 2^-bits containing the real value of ``a``."""
    if bits < 1:
        raise DomainError("bits must be >= 1")
    return a.poly.interval(a.coeffs, bits)


def sign(a: RingElement) -> int:
    return a.poly.sign(a.coeffs)


def norm_sq(v) -> RingElement:
    """Exact x^2 + y^2 of a vector given as an (x, y) pair."""
    x, y = v[0], v[1]
    return x * x + y * y


def real_norm_sq(v, bits: int = 53) -> RealInterval:
    return embed(norm_sq(v), bits)


# -- text serialization ----------------------------------------------------------


def format_coeffs(coeffs: Sequence[Number]) -> str:
    """Serialize as ``c0+c1*L+c2*L^2`` with zero terms omitted."""
    parts = []
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        if i == 0:
            term = str(c)
        elif i == 1:
            term = f"{c}*L"
        else:
            term = f"{c}*L^{i}"
        if parts and not term.startswith("-"):
            term = "+" + term
        parts.append(term)
    return "".join(parts) if parts else "0"


_TERM = re.compile(r"^([+-]?)(\d+(?:/\d+)?)?(\*?L(?:\^(\d+))?)?$")


def _parse_powers(text: str) -> dict[int, Fraction]:
    s = text.replace(" ", "")
    if not s:
        raise DomainError("empty ring element")
    powers: dict[int, Fraction] = {}
    for term in re.findall(r"[+-]?[^+-]+", s):
        m = _TERM.match(term)
        if not m or (m.group(2) is None and m.group(3) is None):
            raise DomainError(f"cannot parse term {term!r} in {text!r}")
        sgn, num, lpart, exp = m.groups()
        c = Fraction(num) if num is not None else Fraction(1)
        if sgn == "-":
            c = -c
        k = 0 if lpart is None else int(exp or 1)
        powers[k] = powers.get(k, Fraction(0)) + c
    return powers


def _reduce_powers(poly: MinimalPolynomial, powers: dict[int, Fraction]) -> list[Fraction]:
    d = poly.degree
    out = [Fraction(0)] * d
    basis = list(poly.one_coeffs)
    top = max(powers) if powers else 0
    for k in range(top + 1):
        c = powers.get(k)
        if c:
            for i in range(d):
                out[i] += c * basis[i]
        basis = list(poly.times_lambda(tuple(basis)))
    return out


def parse_element(text: str, q: int) -> RingElement:
    """Inverse of :func:`format_coeffs`; powers of L >= d are reduced."""
    poly = minimal_polynomial(q)
    out = _reduce_powers(poly, _parse_powers(text))
    if any(c.denominator != 1 for c in out):
        raise DomainError(f"{text!r} has non-integral coefficients")
    return RingElement(poly, tuple(int(c) for c in out))


def parse_field_element(text: str, q: int) -> FieldElement:
    poly = minimal_polynomial(q)
    return FieldElement(poly, _reduce_powers(poly, _parse_powers(text)))
