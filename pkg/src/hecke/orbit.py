"""Generation of V_q = H_q . (1, 0)^T inside a disk, by the Hecke Farey tree.

Only the closed first quadrant is stored; the other three quadrants follow
from the symmetries (a, b) -> (+-a, +-b), which are realized inside H_q by
-I = S^2 and by conjugation with diag(1, -1) (which maps S -> S^-1 and
T -> T^-1).  Every stored vector carries a witness: a matrix of H_q whose
first column is the vector.  The second column is recorded as a reference
to another stored vector up to signs, so witnesses cost one integer each.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

from .errors import ConsistencyError, DomainError, EmptyInteriorError, NotAMemberError
from .ring import MinimalPolynomial, RingElement, format_coeffs, minimal_polynomial, parse_element

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Vec2:
    x: RingElement
    y: RingElement

    def __iter__(self):
        yield self.x
        yield self.y

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def scale(self, k) -> "Vec2":
        return Vec2(k * self.x, k * self.y)

    def det(self, other: "Vec2") -> RingElement:
        """det of the matrix with columns (self, other)."""
        return self.x * other.y - self.y * other.x

    @property
    def poly(self) -> MinimalPolynomial:
        return self.x.poly

    @property
    def key(self) -> tuple[int, ...]:
        return self.x.coeffs + self.y.coeffs

    @classmethod
    def from_key(cls, poly: MinimalPolynomial, key: Sequence[int]) -> "Vec2":
        d = poly.degree
        return cls(RingElement(poly, tuple(key[:d])), RingElement(poly, tuple(key[d:])))

    @classmethod
    def of(cls, q: int, x, y) -> "Vec2":
        """Build from ints or serialized strings."""
        poly = minimal_polynomial(q)

        def conv(v):
            if isinstance(v, RingElement):
                return v
            if isinstance(v, str):
                return parse_element(v, q)
            return poly.from_int(v)

        return cls(conv(x), conv(y))

    def __str__(self) -> str:
        return f"({self.x}, {self.y})"


@dataclass(frozen=True, slots=True)
class Mat2:
    """2x2 matrix [[a, b], [c, d]]; columns are (a, c) and (b, d)."""

    a: RingElement
    b: RingElement
    c: RingElement
    d: RingElement

    @classmethod
    def identity(cls, poly: MinimalPolynomial) -> "Mat2":
        return cls(poly.one, poly.zero, poly.zero, poly.one)

    @classmethod
    def from_columns(cls, first: Vec2, second: Vec2) -> "Mat2":
        return cls(first.x, second.x, first.y, second.y)

    def det(self) -> RingElement:
        return self.a * self.d - self.b * self.c

    def inverse(self) -> "Mat2":
        """Inverse of a determinant-one matrix."""
        if self.det() != 1:
            raise DomainError("inverse() is only defined for determinant 1")
        return Mat2(self.d, -self.b, -self.c, self.a)

    def column(self, i: int) -> Vec2:
        return Vec2(self.a, self.c) if i == 0 else Vec2(self.b, self.d)

    def __matmul__(self, other):
        if isinstance(other, Mat2):
            return Mat2(
                self.a * other.a + self.b * other.c,
                self.a * other.b + self.b * other.d,
                self.c * other.a + self.d * other.c,
                self.c * other.b + self.d * other.d,
            )
        if isinstance(other, Vec2):
            return Vec2(self.a * other.x + self.b * other.y, self.c * other.x + self.d * other.y)
        return NotImplemented

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def __str__(self) -> str:
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


def hecke_generators(q: int) -> tuple[Mat2, Mat2]:
    """The generators S = [[0, -1], [1, 0]] and T = [[1, lambda_q], [0, 1]]."""
    poly = minimal_polynomial(q)
    S = Mat2(poly.zero, -poly.one, poly.one, poly.zero)
    T = Mat2(poly.one, poly.lam, poly.zero, poly.one)
    return S, T


def t_power(poly: MinimalPolynomial, j: int) -> Mat2:
    return Mat2(poly.one, poly.lam * j, poly.zero, poly.one)


def farey_fan(u: Vec2, v: Vec2, q: int) -> list[Vec2]:
    """The q - 2 vectors inserted between the adjacent pair (u, v).

    Runs a_i = lambda a_{i-1} - a_{i-2} from a_1 = u, a_0 = -v and returns
    a_2 .. a_{q-1}.  The recurrence closes up with a_q = v.
    """
    lam = minimal_polynomial(q).lam
    prev, cur = -v, u
    out = []
    for _ in range(2, q):
        prev, cur = cur, cur.scale(lam) - prev
        out.append(cur)
    return out


def _as_fraction(r) -> Fraction:
    if isinstance(r, float):
        return Fraction(r).limit_denominator(10**9)
    return Fraction(r)


# Witness codes: code = 4 * idx + flags; the witness second column is the
# stored vector idx with x negated if flags & 1 and y negated if flags & 2.
_NEG_X = 1
_NEG_Y = 2


class OrbitSet:
    """V_q intersected with the closed disk of radius ``radius``.

    Build with :func:`generate_orbit` or :meth:`from_file`.
    """

    def __init__(self, poly: MinimalPolynomial, radius: Fraction, qx, qy, codes, extra_witness=None):
        self.poly = poly
        self.q = poly.q
        self.radius = Fraction(radius)
        self._qx: list[tuple] = qx
        self._qy: list[tuple] = qy
        self._codes: list[int] = codes
        self._extra = extra_witness or {}
        self._index = {x + y: i for i, (x, y) in enumerate(zip(qx, qy))}
        if len(self._index) != len(qx):
            raise ConsistencyError("duplicate vectors in orbit set")
        self._xf = [poly.to_float(x) for x in qx]
        self._yf = [poly.to_float(y) for y in qy]
        self._rows = None
        self._row_cache: dict = {}
        self._sorted_keys = None
        n_axis = sum(1 for x, y in zip(qx, qy) if not any(x) or not any(y))
        self.count = 4 * (len(qx) - n_axis) + 2 * n_axis

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return f"OrbitSet(q={self.q}, R={self.radius}, count={self.count})"

    @property
    def quadrant_size(self) -> int:
        return len(self._qx)

    # -- membership ---------------------------------------------------------------

    def _fold(self, key):
        d = self.poly.degree
        x, y = tuple(key[:d]), tuple(key[d:])
        sx = self.poly.sign(x)
        sy = self.poly.sign(y)
        if sx < 0:
            x = self.poly.neg(x)
        if sy < 0:
            y = self.poly.neg(y)
        return sx, sy, x + y

    def __contains__(self, v) -> bool:
        key = v.key if isinstance(v, Vec2) else tuple(v)
        return self._fold(key)[2] in self._index

    def index_of(self, key) -> int | None:
        return self._index.get(tuple(key))

    def covers(self, v) -> bool:
        """Whether v lies in the closed disk this set was generated for."""
        x, y = (v.x.coeffs, v.y.coeffs) if isinstance(v, Vec2) else (v[0], v[1])
        r2 = self.radius * self.radius
        return self.poly.in_ball(x, y, r2, float(r2))

    def quadrant_witness_column(self, i: int) -> tuple[tuple, tuple]:
        extra = self._extra.get(i)
        if extra is not None:
            return extra
        code = self._codes[i]
        j, flags = divmod(code, 4)
        c, d = self._qx[j], self._qy[j]
        if flags & _NEG_X:
            c = self.poly.neg(c)
        if flags & _NEG_Y:
            d = self.poly.neg(d)
        return c, d

    def witness_column(self, key) -> tuple[tuple, tuple]:
        """Second column (c, d) of the witness for the full-plane vector ``key``."""
        sx, sy, qkey = self._fold(key)
        i = self._index.get(qkey)
        if i is None:
            raise NotAMemberError(f"{format_key(self.poly, key)} is not in V_{self.q} within R={self.radius}")
        c, d = self.quadrant_witness_column(i)
        neg = self.poly.neg
        if sx < 0 and sy < 0:
            return neg(c), neg(d)
        if sy < 0:
            return neg(c), d
        if sx < 0:
            return c, neg(d)
        return c, d

    def witness(self, v) -> Mat2:
        key = v.key if isinstance(v, Vec2) else tuple(v)
        c, d = self.witness_column(key)
        dd = self.poly.degree
        R = lambda t: RingElement(self.poly, t)  # noqa: E731
        return Mat2(R(tuple(key[:dd])), R(c), R(tuple(key[dd:])), R(d))

    # -- iteration ------------------------------------------------------------------

    def iter_full(self) -> Iterator[tuple[tuple, tuple, float, float, tuple, tuple]]:
        """Yield (x, y, xf, yf, c, d) for every vector in the plane, unordered."""
        neg = self.poly.neg
        for i, (x, y) in enumerate(zip(self._qx, self._qy)):
            xf, yf = self._xf[i], self._yf[i]
            c, d = self.quadrant_witness_column(i)
            yield x, y, xf, yf, c, d
            x0, y0 = not any(x), not any(y)
            nx, ny, nc, nd = neg(x), neg(y), neg(c), neg(d)
            if not x0 and not y0:
                yield x, ny, xf, -yf, nc, d
                yield nx, y, -xf, yf, c, nd
                yield nx, ny, -xf, -yf, nc, nd
            elif y0:
                yield nx, y, -xf, yf, c, nd
            else:
                yield x, ny, xf, -yf, nc, d

    def sorted_keys(self) -> list[tuple]:
        """All full-plane keys in lexicographic order of their coefficients."""
        if self._sorted_keys is None:
            self._sorted_keys = sorted(x + y for x, y, *_ in self.iter_full())
        return self._sorted_keys

    def vectors(self) -> Iterator[Vec2]:
        for key in self.sorted_keys():
            yield Vec2.from_key(self.poly, key)

    def __iter__(self):
        return self.vectors()

    # -- rows: all (x, n) in the set with a fixed second coordinate ------------------

    def row(self, n) -> tuple[list[float], list[tuple]]:
        """Sorted real values and exact keys of all x with (x, n) in the set."""
        ncoeffs = n.coeffs if isinstance(n, RingElement) else tuple(n)
        cached = self._row_cache.get(ncoeffs)
        if cached is not None:
            return cached
        if self._rows is None:
            rows: dict = {}
            for x, y in zip(self._qx, self._qy):
                rows.setdefault(y, []).append(x)
            self._rows = rows
        yabs = ncoeffs if self.poly.sign(ncoeffs) >= 0 else self.poly.neg(ncoeffs)
        entries = []
        for x in self._rows.get(yabs, ()):
            xf = self.poly.to_float(x)
            entries.append((xf, x))
            if any(x):
                entries.append((-xf, self.poly.neg(x)))
        entries.sort()
        out = ([e[0] for e in entries], [e[1] for e in entries])
        self._row_cache[ncoeffs] = out
        return out

    def row_extent(self, n) -> float:
        """Float bound L such that every (x, n) in V_q with |x| <= L is in the set."""
        nf = float(n) if isinstance(n, RingElement) else self.poly.to_float(n)
        r2 = float(self.radius) ** 2 - nf * nf
        return math.sqrt(r2) * (1 - 1e-12) if r2 > 0 else -1.0

    # -- derived sets -------------------------------------------------------------------

    def restrict(self, radius) -> "OrbitSet":
        radius = _as_fraction(radius)
        if radius > self.radius:
            raise DomainError(f"cannot restrict R={self.radius} set to larger R={radius}")
        r2 = radius * radius
        r2f = float(r2)
        keep = [i for i, (x, y) in enumerate(zip(self._qx, self._qy)) if self.poly.in_ball(x, y, r2, r2f)]
        new_index = {old: new for new, old in enumerate(keep)}
        qx = [self._qx[i] for i in keep]
        qy = [self._qy[i] for i in keep]
        codes, extra = [], {}
        for new, old in enumerate(keep):
            j, flags = divmod(self._codes[old], 4)
            if old in self._extra or j not in new_index:
                extra[new] = self.quadrant_witness_column(old)
                codes.append(-1)
            else:
                codes.append(4 * new_index[j] + flags)
        return OrbitSet(self.poly, radius, qx, qy, codes, extra)

    # -- text export / import -------------------------------------------------------------

    def to_file(self, path) -> None:
        """Header ``q=<q> R=<R>`` then ``x y c d`` per vector, where (c, d) is
        the second column of the witness matrix."""
        path = Path(path)
        d = self.poly.degree
        with path.open("w") as fh:
            fh.write(f"q={self.q} R={self.radius}\n")
            for key in self.sorted_keys():
                c, w = self.witness_column(key)
                fh.write(f"{format_coeffs(key[:d])} {format_coeffs(key[d:])} {format_coeffs(c)} {format_coeffs(w)}\n")

    @classmethod
    def from_file(cls, path) -> "OrbitSet":
        path = Path(path)
        with path.open() as fh:
            header = fh.readline().split()
            try:
                fields = dict(tok.split("=", 1) for tok in header)
                q = int(fields["q"])
                radius = Fraction(fields["R"])
            except (KeyError, ValueError) as exc:
                raise DomainError(f"{path}: bad orbit header {header!r}") from exc
            poly = minimal_polynomial(q)
            qx, qy, wit = [], [], []
            for lineno, line in enumerate(fh, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) not in (2, 4):
                    raise DomainError(f"{path}:{lineno}: expected 2 or 4 fields")
                x = parse_element(parts[0], q).coeffs
                y = parse_element(parts[1], q).coeffs
                if poly.sign(x) < 0 or poly.sign(y) < 0:
                    continue
                qx.append(x)
                qy.append(y)
                if len(parts) == 4:
                    c = parse_element(parts[2], q).coeffs
                    w = parse_element(parts[3], q).coeffs
                    det = poly.sub(poly.mul(x, w), poly.mul(y, c))
                    if det != poly.one_coeffs:
                        raise DomainError(f"{path}:{lineno}: witness determinant is not 1")
                    wit.append((c, w))
                else:
                    wit.append(None)
        index = {x + y: i for i, (x, y) in enumerate(zip(qx, qy))}
        codes, extra = [], {}
        for i, w in enumerate(wit):
            if w is None:
                codes.append(-1)
                red = reduce_vector(Vec2.from_key(poly, qx[i] + qy[i]))
                if not red.is_member:
                    raise DomainError(f"{path}: vector {format_key(poly, qx[i] + qy[i])} could not be certified")
                g = red.witness.inverse()
                extra[i] = (g.b.coeffs, g.d.coeffs)
                continue
            c, wd = w
            flags = 0
            if poly.sign(c) < 0:
                c, flags = poly.neg(c), flags | _NEG_X
            if poly.sign(wd) < 0:
                wd, flags = poly.neg(wd), flags | _NEG_Y
            j = index.get(c + wd)
            if j is None:
                extra[i] = w
                codes.append(-1)
            else:
                codes.append(4 * j + flags)
        return cls(poly, radius, qx, qy, codes, extra)


def format_key(poly: MinimalPolynomial, key) -> str:
    d = poly.degree
    return f"({format_coeffs(key[:d])}, {format_coeffs(key[d:])})"


def generate_orbit(q: int, R) -> OrbitSet:
    """All of V_q inside the closed disk of radius R.

    Adjacent first-quadrant pairs (u, v), starting from ((1,0), (0,1)), are
    refined by :func:`farey_fan`.  Fan vectors dominate both parents
    componentwise, so a sub-pair is only refined when both of its ends lie
    in the disk.
    """
    poly = minimal_polynomial(q)
    R = _as_fraction(R)
    if R < 1:
        raise EmptyInteriorError(f"radius {R} < 1 contains no orbit vectors")
    r2 = R * R
    r2f = float(r2)
    zero, one = poly.zero_coeffs, poly.one_coeffs
    qx = [one, zero]
    qy = [zero, one]
    # (1,0): witness I, second column (0,1).  (0,1): witness S, column (-1,0).
    codes = [4 * 1, 4 * 0 + _NEG_X]
    seen = {one + zero, zero + one}
    in_ball = poly.in_ball
    times_lambda = poly.times_lambda
    nfan = q - 2
    stack = [(0, 1)]
    while stack:
        iu, iv = stack.pop()
        ux, uy = qx[iu], qy[iu]
        vx, vy = qx[iv], qy[iv]
        px, py = poly.neg(vx), poly.neg(vy)
        cx, cy = ux, uy
        chain = [iu]
        for _ in range(nfan):
            lx, ly = times_lambda(cx), times_lambda(cy)
            nx = tuple(a - b for a, b in zip(lx, px))
            ny = tuple(a - b for a, b in zip(ly, py))
            px, py, cx, cy = cx, cy, nx, ny
            if in_ball(nx, ny, r2, r2f):
                key = nx + ny
                if key in seen:
                    raise ConsistencyError(f"Farey tree produced {format_key(poly, key)} twice")
                seen.add(key)
                chain.append(len(qx))
                qx.append(nx)
                qy.append(ny)
                codes.append(-1)
            else:
                chain.append(None)
        chain.append(iv)
        for pos in range(1, nfan + 1):
            i = chain[pos]
            if i is None:
                continue
            before, after = chain[pos - 1], chain[pos + 1]
            if before is not None:
                codes[i] = 4 * before + _NEG_X + _NEG_Y  # [a_i | -a_{i-1}]
            elif after is not None:
                codes[i] = 4 * after  # [a_i | a_{i+1}]
            else:
                raise ConsistencyError("fan vector inside the disk with both neighbours outside")
        for pos in range(nfan + 1):
            a, b = chain[pos], chain[pos + 1]
            if a is not None and b is not None:
                stack.append((a, b))
    return OrbitSet(poly, R, qx, qy, codes)


def is_member(v: Vec2, s: OrbitSet) -> bool:
    """Exact lookup of v in the generated set."""
    if not s.covers(v):
        log.warning("is_member: %s lies outside the radius R=%s of the orbit set", v, s.radius)
        return False
    return v in s


@dataclass(frozen=True)
class Reduction:
    """Outcome of :func:`reduce_vector`.

    On success ``witness @ v == (t, 0)`` with t > 0; v is in V_q iff t == 1.
    """

    status: str  # "success" or "inconclusive"
    witness: Mat2 | None
    t: RingElement | None
    steps: int

    @property
    def conclusive(self) -> bool:
        return self.status == "success"

    @property
    def is_member(self) -> bool:
        return self.conclusive and self.t == 1


def _nearest_shift(poly: MinimalPolynomial, x, step) -> int:
    """Integer j minimizing |x - j*step| (step > 0), exact up to ties."""
    sf = poly.accurate_float(step)
    j0 = round(poly.accurate_float(x) / sf)
    best, best_val = None, None
    for j in (j0 - 1, j0, j0 + 1):
        r = poly.sub(x, poly.scale(j, step))
        if poly.sign(r) < 0:
            r = poly.neg(r)
        if best is None or poly.sign(poly.sub(r, best_val)) < 0:
            best, best_val = j, r
    return best


def reduce_vector(v: Vec2, max_steps: int | None = None) -> Reduction:
    """Slope reduction by T^-j (nearest multiple of lambda) and S, in turn.

    Returns a matrix h of H_q with h v = (t, 0), t > 0, when the process
    reaches the horizontal axis within the step budget.
    """
    poly = v.poly
    if not v.x and not v.y:
        raise DomainError("cannot reduce the zero vector")
    if max_steps is None:
        bits = max(max(abs(c).bit_length() for c in v.key), 1)
        max_steps = 64 * bits
    x, y = v.x.coeffs, v.y.coeffs
    h = Mat2.identity(poly)
    S, _ = hecke_generators(poly.q)
    steps = 0
    lam = poly.lam_coeffs
    while any(y):
        if steps >= max_steps:
            return Reduction("inconclusive", None, None, steps)
        ystep = poly.mul(lam, y)
        if poly.sign(ystep) < 0:
            ystep = poly.neg(ystep)
            sgn = -1
        else:
            sgn = 1
        j = _nearest_shift(poly, x, ystep) * sgn  # x - j*lam*y is minimal
        if j:
            x = poly.sub(x, poly.scale(j, poly.mul(lam, y)))
            h = t_power(poly, -j) @ h
        x, y = poly.neg(y), x
        h = S @ h
        steps += 1
    if poly.sign(x) < 0:
        x = poly.neg(x)
        h = -h
    return Reduction("success", h, RingElement(poly, x), steps)
