"""Ingredients of the second- and higher-moment formulas over H_q orbits.

Pairs of orbit vectors are normalized by the witness of the first vector:
if g has first column v1 then g^-1 (v1 | v2) = [[1, l], [0, n]] with
n = det(v1 | v2), and left multiplication by T^-j moves l by j*lambda*n.
The residue of l in the window [1, 1 + lambda|n|) labels the H_q orbit of
the pair.  For q = 3 that window is [1, |n|].
"""

from __future__ import annotations

import bisect
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    BudgetError,
    ConsistencyError,
    DegeneratePairError,
    DomainError,
    InsufficientRadiusError,
    NotAMemberError,
)
from .orbit import Mat2, OrbitSet, Vec2, _as_fraction, reduce_vector, t_power
from .ring import FieldElement, MinimalPolynomial, RingElement, format_coeffs, minimal_polynomial

log = logging.getLogger(__name__)

PHI_MODES = ("paper", "fundamental")


@dataclass(frozen=True)
class SVConstant:
    """c(q) = pi (pi - pi/q - pi/2), kept as its rational multiple of pi^2."""

    q: int
    pi_sq_coeff: Fraction

    @property
    def value(self) -> float:
        return float(self.pi_sq_coeff) * math.pi ** 2

    def __str__(self) -> str:
        return f"{self.pi_sq_coeff}*pi^2"


def sv_constant(q: int) -> SVConstant:
    if q < 3:
        raise DomainError("q must be >= 3")
    return SVConstant(q, Fraction(1, 2) - Fraction(1, q))


def orbit_density(q: int) -> float:
    """Observed limit of #(V_q in B(0,R)) / (pi R^2), namely lambda_q / c(q)."""
    return minimal_polynomial(q).lam_float / sv_constant(q).value


# -- windows and coverage ----------------------------------------------------------


def _abs(poly: MinimalPolynomial, a):
    return poly.neg(a) if poly.sign(a) < 0 else a


def _window_upper(poly: MinimalPolynomial, n_abs, mode: str):
    if mode == "paper":
        return n_abs
    if mode == "fundamental":
        return poly.add(poly.one_coeffs, poly.mul(poly.lam_coeffs, n_abs))
    raise DomainError(f"unknown phi mode {mode!r}; expected one of {PHI_MODES}")


def _require_cover(s: OrbitSet, x, y, what: str) -> None:
    if not s.covers((x, y)):
        need = math.hypot(s.poly.to_float(x), s.poly.to_float(y))
        raise InsufficientRadiusError(
            f"{what} needs an orbit set of radius >= {need:.6g}, got R={s.radius}",
            required=need,
            available=float(s.radius),
        )


def _as_ring(n, poly: MinimalPolynomial) -> RingElement:
    if isinstance(n, RingElement):
        if n.poly is not poly:
            raise DomainError(f"n belongs to q={n.q}, orbit set to q={poly.q}")
        return n
    return poly.from_int(n)


def _in_window(poly: MinimalPolynomial, a, upper, closed: bool) -> bool:
    if poly.compare_rational(a, Fraction(1)) < 0:
        return False
    c = poly.sign(poly.sub(a, upper))
    return c <= 0 if closed else c < 0


def phi_q(n, s: OrbitSet, mode: str = "paper") -> int:
    """Number of a with (a, n) in V_q and 1 <= a <= |n| (mode "paper") or
    1 <= a < 1 + lambda|n| (mode "fundamental")."""
    poly = s.poly
    n = _as_ring(n, poly)
    if not n:
        raise DomainError("phi_q(0) is undefined")
    n_abs = _abs(poly, n.coeffs)
    upper = _window_upper(poly, n_abs, mode)
    _require_cover(s, upper, n_abs, f"phi_q({n}, mode={mode})")
    floats, keys = s.row(n)
    uf = poly.to_float(upper)
    lo = bisect.bisect_left(floats, 1.0 - 1e-9)
    hi = bisect.bisect_right(floats, uf * (1 + 1e-9) + 1e-9)
    closed = mode == "paper"
    return sum(1 for a in keys[lo:hi] if _in_window(poly, a, upper, closed))


def n_in_Nq(n, s: OrbitSet, mode: str = "paper") -> bool:
    n = _as_ring(n, s.poly)
    if not n:
        return False
    return phi_q(n, s, mode) >= 1


def enumerate_Nq(q: int, bound, s: OrbitSet, mode: str = "paper") -> list[RingElement]:
    """All n with |n| <= bound that occur as second coordinates in s and
    satisfy phi_q(n) >= 1, in increasing real order."""
    poly = s.poly
    if poly.q != q:
        raise DomainError(f"orbit set is for q={poly.q}, not q={q}")
    bound = _as_fraction(bound)
    # The largest window needed sits at |n| = bound.
    if bound >= 1:
        top = _window_upper(poly, poly.from_int(math.floor(bound)).coeffs, mode)
        top_f = poly.to_float(top) + (float(bound) - math.floor(bound)) * poly.lam_float
        need = math.hypot(top_f, float(bound))
        if need > float(s.radius) * (1 + 1e-12):
            raise InsufficientRadiusError(
                f"enumerate_Nq(bound={bound}) needs radius >= {need:.6g}, got R={s.radius}",
                required=need,
                available=float(s.radius),
            )
    ys = set()
    for y in s._qy:
        if any(y) and poly.compare_rational(y, bound) <= 0:
            ys.add(y)
    out = []
    for y in ys:
        for n in (y, poly.neg(y)):
            if phi_q(RingElement(poly, n), s, mode) >= 1:
                out.append(RingElement(poly, n))
    out.sort(key=lambda r: (float(r), r.coeffs))
    return out


# -- completion and canonical pairs --------------------------------------------------------


def complete_to_matrix(v: Vec2, s: OrbitSet) -> Mat2:
    """A matrix of H_q with first column v (the witness recorded at generation)."""
    if v not in s:
        raise NotAMemberError(f"{v} is not in V_{s.q} within R={s.radius}")
    return s.witness(v)


@dataclass(frozen=True)
class CanonicalPair:
    """h (v1 | v2) = [[1, m], [0, n]] with 1 <= m < 1 + lambda|n|."""

    n: RingElement
    m: RingElement
    witness: Mat2

    @property
    def key(self) -> tuple:
        return (self.n.coeffs, self.m.coeffs)


def shift_into_window(poly: MinimalPolynomial, ell, n) -> tuple[int, tuple]:
    """Return (k, m) with m = ell - k*lambda|n| in [1, 1 + lambda|n|)."""
    if poly.degree == 1:
        step = abs(n[0])
        k, r = divmod(ell[0] - 1, step)
        return k, (r + 1,)
    step = poly.mul(poly.lam_coeffs, _abs(poly, n))
    sf = poly.to_float(step)
    k = math.floor((poly.to_float(ell) - 1.0) / sf)
    m = poly.sub(ell, poly.scale(k, step))
    while poly.compare_rational(m, Fraction(1)) < 0:
        k -= 1
        m = poly.add(m, step)
    upper = poly.add(poly.one_coeffs, step)
    while poly.sign(poly.sub(m, upper)) >= 0:
        k += 1
        m = poly.sub(m, step)
    return k, m


def _canonicalize_coeffs(poly, x1, y1, c, d, x2, y2):
    n = poly.sub(poly.mul(x1, y2), poly.mul(y1, x2))
    if not any(n):
        raise DegeneratePairError("pair is linearly dependent (determinant 0)")
    ell = poly.sub(poly.mul(d, x2), poly.mul(c, y2))
    k, m = shift_into_window(poly, ell, n)
    return n, m, k


def canonicalize_pair(v1: Vec2, v2: Vec2, s: OrbitSet) -> CanonicalPair:
    """Reduce (v1 | v2) to J_{n,m} = [[1, m], [0, n]] by h = T^-j g^-1."""
    poly = s.poly
    g = complete_to_matrix(v1, s)
    n, m, k = _canonicalize_coeffs(
        poly, v1.x.coeffs, v1.y.coeffs, g.b.coeffs, g.d.coeffs, v2.x.coeffs, v2.y.coeffs
    )
    j = k if poly.sign(n) > 0 else -k
    h = t_power(poly, -j) @ g.inverse()
    return CanonicalPair(RingElement(poly, n), RingElement(poly, m), h)


# -- pair counting -----------------------------------------------------------------------


def pair_orbit_radius(R, n_abs: float) -> int:
    """Orbit radius that :func:`count_pairs` needs to count determinant n up to R.

    With witnesses whose second column is no longer than the first (as
    generated), the normalized coordinate l satisfies |l| <= R + |n|.
    """
    R = float(R)
    return math.ceil(math.hypot(R + n_abs + 1, n_abs)) + 1


def _finalize(poly, counter: Counter, refine_m: bool) -> dict:
    out = {}
    for key in sorted(counter, key=lambda k: (k if not refine_m else k[0] + k[1])):
        if refine_m:
            nk, mk = key
            out[(RingElement(poly, nk), RingElement(poly, mk))] = counter[key]
        else:
            out[RingElement(poly, key)] = counter[key]
    return out


def _row_pairs(s: OrbitSet, R: Fraction, ns: Sequence[tuple], shard: int = 0, nshards: int = 1):
    """Yield (n, x1, y1, c, d, l) for every pair with v2 = l v1 + n w inside the ball,
    where (c, d) = w is the witness column of v1 = (x1, y1)."""
    poly = s.poly
    r2 = R * R
    r2f = float(r2)
    slack = 1e-9 * r2f
    to_float = poly.to_float
    targets = []
    for n in ns:
        floats, keys = s.row(n)
        targets.append((n, to_float(n), floats, keys, s.row_extent(n)))
    for idx, (x, y, xf, yf, c, d) in enumerate(s.iter_full()):
        if idx % nshards != shard:
            continue
        A = xf * xf + yf * yf
        if A + 1.0 > r2f + slack:
            continue
        cf, df = to_float(c), to_float(d)
        dot = xf * cf + yf * df
        W = cf * cf + df * df
        for n, nf, floats, keys, extent in targets:
            # |l v1 + n w|^2 + A <= R^2 is a quadratic in l.
            B = 2.0 * nf * dot
            C = nf * nf * W + A - r2f
            disc = B * B - 4.0 * A * C
            if disc < -1e-9 * (B * B + abs(4.0 * A * C)) - 1e-9:
                continue
            sq = math.sqrt(max(disc, 0.0))
            lo = (-B - sq) / (2.0 * A)
            hi = (-B + sq) / (2.0 * A)
            eps = 1e-7 * (1.0 + abs(lo) + abs(hi))
            lo -= eps
            hi += eps
            if hi > extent or -lo > extent:
                raise InsufficientRadiusError(
                    f"count_pairs needs row |l| <= {max(hi, -lo):.6g} for n={format_coeffs(n)} "
                    f"but the orbit set (R={s.radius}) only covers {extent:.6g}",
                    required=max(hi, -lo),
                    available=extent,
                )
            i0 = bisect.bisect_left(floats, lo)
            i1 = bisect.bisect_right(floats, hi)
            for i in range(i0, i1):
                lf = floats[i]
                v2x = lf * xf + nf * cf
                v2y = lf * yf + nf * df
                tot = A + v2x * v2x + v2y * v2y
                if tot > r2f + slack:
                    continue
                ell = keys[i]
                if tot >= r2f - slack:
                    ex = poly.add(poly.mul(ell, x), poly.mul(n, c))
                    ey = poly.add(poly.mul(ell, y), poly.mul(n, d))
                    total = poly.add(poly.norm_sq_coeffs(x, y), poly.norm_sq_coeffs(ex, ey))
                    if poly.compare_rational(total, r2) > 0:
                        continue
                yield n, x, y, c, d, ell


def _count_rows_shard(s: OrbitSet, R: Fraction, ns: Sequence[tuple], refine_m: bool, shard: int, nshards: int) -> Counter:
    poly = s.poly
    counter: Counter = Counter()
    pairs = _row_pairs(s, R, ns, shard, nshards)
    if not refine_m:
        for n, *_ in pairs:
            counter[n] += 1
    elif poly.degree == 1:
        for n, _, _, _, _, ell in pairs:
            counter[(n, ((ell[0] - 1) % abs(n[0]) + 1,))] += 1
    else:
        for n, _, _, _, _, ell in pairs:
            counter[(n, shift_into_window(poly, ell, n)[1])] += 1
    return counter


def iter_pairs(s: OrbitSet, R, n):
    """Ordered pairs (v1, v2) of V_q with det(v1 | v2) = n and
    |v1|^2 + |v2|^2 <= R^2, as Vec2 tuples (unordered iteration)."""
    poly = s.poly
    n = _as_ring(n, poly)
    if not n:
        raise DomainError("determinant 0 is the linearly dependent locus, not a D_n")
    for nn, x, y, c, d, ell in _row_pairs(s, _as_fraction(R), [n.coeffs]):
        v2x = poly.add(poly.mul(ell, x), poly.mul(nn, c))
        v2y = poly.add(poly.mul(ell, y), poly.mul(nn, d))
        yield (
            Vec2(RingElement(poly, x), RingElement(poly, y)),
            Vec2(RingElement(poly, v2x), RingElement(poly, v2y)),
        )


def _count_all_pairs(s: OrbitSet, R: Fraction, refine_m: bool) -> Counter:
    import numpy as np

    poly = s.poly
    d = poly.degree
    r2 = R * R
    r2f = float(r2)
    exact_floats = d == 1 and r2f < 2.0 ** 50
    slack = 0.0 if exact_floats else 1e-9 * r2f
    rows = []
    for x, y, xf, yf, c, w in s.iter_full():
        A = xf * xf + yf * yf
        if A + 1.0 <= r2f + slack:
            rows.append((A, x, y, c, w))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    counter: Counter = Counter()
    if not rows:
        return counter
    big = max(abs(v) for r in rows for part in r[1:] for v in part)
    dtype = np.int64 if big < 2 ** 24 else object
    A = np.array([r[0] for r in rows])
    X = np.array([r[1] for r in rows], dtype=dtype).reshape(len(rows), d)
    Y = np.array([r[2] for r in rows], dtype=dtype).reshape(len(rows), d)
    Cw = np.array([r[3] for r in rows], dtype=dtype).reshape(len(rows), d)
    Dw = np.array([r[4] for r in rows], dtype=dtype).reshape(len(rows), d)
    norms = [poly.norm_sq_coeffs(r[1], r[2]) for r in rows] if not exact_floats else None
    for i in range(len(rows)):
        lim = r2f - A[i]
        J = int(np.searchsorted(A, lim + slack, side="right"))
        if J == 0:
            break
        det = poly.mul_array(X[i], Y[:J]) - poly.mul_array(Y[i], X[:J])
        tot = A[i] + A[:J]
        keep = np.any(det != 0, axis=1)
        if not exact_floats:
            keep &= tot <= r2f + slack
            unsure = np.nonzero(keep & (tot >= r2f - slack))[0]
            for jj in unsure:
                total = poly.add(norms[i], norms[jj])
                if poly.compare_rational(total, r2) > 0:
                    keep[jj] = False
        if not keep.any():
            continue
        if not refine_m:
            sel = det[keep]
            if dtype is object:
                counter.update(tuple(int(v) for v in row) for row in sel)
            else:
                uniq, cnt = np.unique(sel, axis=0, return_counts=True)
                for row, k in zip(uniq.tolist(), cnt.tolist()):
                    counter[tuple(row)] += k
            continue
        ell = poly.mul_array(Dw[i], X[:J]) - poly.mul_array(Cw[i], Y[:J])
        sel_det = det[keep]
        sel_ell = ell[keep]
        if d == 1 and dtype is not object:
            m = (sel_ell[:, 0] - 1) % np.abs(sel_det[:, 0]) + 1
            uniq, cnt = np.unique(np.stack([sel_det[:, 0], m], axis=1), axis=0, return_counts=True)
            for (nn, mm), k in zip(uniq.tolist(), cnt.tolist()):
                counter[((nn,), (mm,))] += k
        else:
            for nrow, lrow in zip(sel_det.tolist(), sel_ell.tolist()):
                n = tuple(int(v) for v in nrow)
                counter[(n, shift_into_window(poly, tuple(int(v) for v in lrow), n)[1])] += 1
    return counter


_SHARED: dict = {}


def _shard_worker(shard: int) -> Counter:
    a = _SHARED
    return _count_rows_shard(a["s"], a["R"], a["ns"], a["refine_m"], shard, a["nshards"])


def count_pairs(q: int, R, s: OrbitSet, ns: Iterable | None = None, refine_m: bool = False, workers: int = 1) -> dict:
    """Count_q(R, n): ordered pairs (v1, v2) of V_q with det(v1 | v2) = n and
    |v1|^2 + |v2|^2 <= R^2.

    With ``ns`` given, each v1 is completed to its witness g and the
    candidates v2 = g (l, n) are read off the row y = n of ``s``; the set
    must therefore reach beyond R (see :func:`pair_orbit_radius`).  Without
    ``ns`` all pairs in the ball are scanned and every determinant reported.
    With ``refine_m`` keys are (n, m) for the canonical orbit label m.
    """
    poly = s.poly
    if poly.q != q:
        raise DomainError(f"orbit set is for q={poly.q}, not q={q}")
    R = _as_fraction(R)
    if ns is None:
        if R > s.radius:
            raise InsufficientRadiusError(f"orbit set R={s.radius} < requested R={R}")
        return _finalize(poly, _count_all_pairs(s, R, refine_m), refine_m)
    targets = []
    for n in ns:
        n = _as_ring(n, poly)
        if not n:
            raise DomainError("determinant 0 is the linearly dependent locus, not a D_n")
        if n.coeffs not in targets:
            targets.append(n.coeffs)
    if workers <= 1:
        counter = _count_rows_shard(s, R, targets, refine_m, 0, 1)
    else:
        import multiprocessing as mp
        from concurrent.futures import ProcessPoolExecutor

        for n in targets:
            s.row(n)  # build before forking so children inherit the cache
        _SHARED.update(s=s, R=R, ns=targets, refine_m=refine_m, nshards=workers)
        try:
            with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork")) as ex:
                counter = Counter()
                for part in ex.map(_shard_worker, range(workers)):
                    counter.update(part)
        finally:
            _SHARED.clear()
    out = _finalize(poly, counter, refine_m)
    if not refine_m:
        for n in targets:
            out.setdefault(RingElement(poly, n), 0)
    return out


# -- density predictions --------------------------------------------------------------------


@dataclass(frozen=True)
class PairDensity:
    """Predicted limit of Count_q(R, n) / R^2 = phi_q(n) pi^2 / (|n| c(q)).

    ``coefficient`` is the exact rational phi_q(n) * pi^2 / c(q); the
    prediction is that coefficient divided by |n|.
    """

    q: int
    n: RingElement
    phi: int
    coefficient: Fraction
    value: float
    in_Nq: bool
    mode: str


def predicted_pair_density(q: int, n, s: OrbitSet, mode: str = "paper") -> PairDensity:
    poly = s.poly
    n = _as_ring(n, poly)
    phi = phi_q(n, s, mode)
    coeff = phi / sv_constant(q).pi_sq_coeff
    value = float(coeff) / abs(float(n)) if phi else 0.0
    return PairDensity(q, n, phi, Fraction(coeff), value, phi >= 1, mode)


def predicted_orbit_density(q: int, n) -> float:
    """Per-orbit (fixed m) share pi^2 / (|n| c(q))."""
    return 1.0 / (float(sv_constant(q).pi_sq_coeff) * abs(float(n)))


@dataclass(frozen=True)
class DensityReport:
    q: int
    n: RingElement
    R: Fraction
    count: int
    predicted: float
    m: RingElement | None = None

    @property
    def empirical(self) -> float:
        return self.count / float(self.R) ** 2

    @property
    def rel_error(self) -> float:
        if self.predicted == 0:
            return math.inf if self.count else 0.0
        return abs(self.empirical - self.predicted) / self.predicted


# -- k-tuple classification ------------------------------------------------------------------


@dataclass(frozen=True)
class TupleClass:
    """Orbit class of a k-tuple of V_q vectors.

    LD: every entry is sign * v1.  LI: entries before position j (1-based)
    are sign * v1, v_j is the first independent entry, and every entry from
    j on is alpha_i v1 + beta_i v_j (alpha_1 = 0, beta_1 = 1).  The
    coefficients are kept as the ring elements n*alpha_i and n*beta_i.
    """

    kind: str
    signs: tuple[int, ...]
    j: int | None = None
    n: RingElement | None = None
    m: RingElement | None = None
    alpha_n: tuple[tuple, ...] = ()
    beta_n: tuple[tuple, ...] = ()
    witness: Mat2 | None = field(default=None, compare=False, repr=False)
    verified: int = field(default=0, compare=False)

    @property
    def alpha(self) -> tuple[FieldElement, ...]:
        return self._scaled(self.alpha_n)

    @property
    def beta(self) -> tuple[FieldElement, ...]:
        return self._scaled(self.beta_n)

    def _scaled(self, nums) -> tuple[FieldElement, ...]:
        if self.n is None:
            return ()
        poly = self.n.poly
        ninv = FieldElement(poly, self.n.coeffs).inverse()
        return tuple(FieldElement(poly, a) * ninv for a in nums)

    @property
    def key(self) -> tuple:
        if self.kind == "LD":
            return ("LD", self.signs)
        return ("LI", self.j, self.n.coeffs, self.m.coeffs, self.signs, self.alpha_n, self.beta_n)

    @property
    def label(self) -> str:
        sg = ",".join("+" if t > 0 else "-" for t in self.signs)
        if self.kind == "LD":
            return f"LD[{sg}]"
        al = ",".join(str(a) for a in self.alpha)
        be = ",".join(str(b) for b in self.beta)
        return f"LI[j={self.j};n={self.n};m={self.m};signs={sg};alpha={al};beta={be}]"


class ClassifyCache:
    """Memo tables shared by repeated :func:`classify_tuple` calls."""

    def __init__(self):
        self.pairs: dict = {}
        self.members: dict = {}
        self.witnesses: dict = {}


def _member(poly, s: OrbitSet, x, y, allow_reduction: bool, cache: ClassifyCache | None = None) -> bool:
    key = x + y
    if cache is not None:
        hit = cache.members.get(key)
        if hit is not None:
            return hit
    if s.covers((x, y)):
        out = key in s
    elif not allow_reduction:
        out = False
    else:
        red = reduce_vector(Vec2(RingElement(poly, x), RingElement(poly, y)))
        if not red.conclusive:
            raise ConsistencyError(f"membership of ({format_coeffs(x)}, {format_coeffs(y)}) is undecided")
        out = red.is_member
    if cache is not None:
        cache.members[key] = out
    return out


def _first_witness(poly, s: OrbitSet, x, y):
    """Second column of some H_q matrix with first column (x, y)."""
    if s.covers((x, y)):
        return s.witness_column(x + y)
    red = reduce_vector(Vec2(RingElement(poly, x), RingElement(poly, y)))
    if not red.is_member:
        raise NotAMemberError(f"({format_coeffs(x)}, {format_coeffs(y)}) is not in V_{poly.q}")
    g = red.witness.inverse()
    return g.b.coeffs, g.d.coeffs


def classify_tuple(
    vs: Sequence[Vec2], s: OrbitSet, allow_reduction: bool = False, cache: ClassifyCache | None = None
) -> TupleClass:
    """Classify a tuple of orbit vectors into its LD / LI orbit class.

    For LI classes every entry after v_j is checked against the criterion
    J_{n,m} (alpha_i, beta_i)^T = h v_i in V_q; a failure raises
    ConsistencyError.  Entries outside the disk of ``s`` are accepted only
    with ``allow_reduction``, certified by :func:`reduce_vector`.
    """
    if not vs:
        raise DomainError("empty tuple")
    poly = s.poly
    keys = [(v.x.coeffs, v.y.coeffs) for v in vs]
    for x, y in keys:
        if not _member(poly, s, x, y, allow_reduction, cache):
            raise NotAMemberError(f"({format_coeffs(x)}, {format_coeffs(y)}) is not in V_{poly.q} within R={s.radius}")
    mul, sub = poly.mul, poly.sub
    x1, y1 = keys[0]
    nx1, ny1 = poly.neg(x1), poly.neg(y1)
    jpos = None
    signs = [1]
    for pos in range(1, len(keys)):
        x, y = keys[pos]
        if any(sub(mul(x1, y), mul(y1, x))):
            jpos = pos
            break
        if (x, y) == (x1, y1):
            signs.append(1)
        elif (x, y) == (nx1, ny1):
            signs.append(-1)
        else:
            raise ConsistencyError("colinear orbit vectors that are not +-v1")
    k1 = x1 + y1
    wit = cache.witnesses.get(k1) if cache is not None else None
    if wit is None:
        wit = _first_witness(poly, s, x1, y1)
        if cache is not None:
            cache.witnesses[k1] = wit
    c, d = wit
    if jpos is None:
        g = Mat2(*(RingElement(poly, t) for t in (x1, c, y1, d)))
        return TupleClass("LD", tuple(signs), witness=g.inverse())
    xj, yj = keys[jpos]
    ck = (k1, xj + yj)
    hit = cache.pairs.get(ck) if cache is not None else None
    if hit is None:
        n, m, kshift = _canonicalize_coeffs(poly, x1, y1, c, d, xj, yj)
        g = Mat2(*(RingElement(poly, t) for t in (x1, c, y1, d)))
        jj = kshift if poly.sign(n) > 0 else -kshift
        h = t_power(poly, -jj) @ g.inverse()
        hit = (n, m, h, tuple(e.coeffs for e in (h.a, h.b, h.c, h.d)))
        if cache is not None:
            cache.pairs[ck] = hit
    n, m, h, (ha, hb, hc, hd) = hit
    alpha_n = [poly.zero_coeffs]
    beta_n = [n]
    verified = 0
    add = poly.add
    for pos in range(jpos + 1, len(keys)):
        x, y = keys[pos]
        a_num = sub(mul(x, yj), mul(y, xj))
        b_num = sub(mul(x1, y), mul(y1, x))
        alpha_n.append(a_num)
        beta_n.append(b_num)
        hx = add(mul(ha, x), mul(hb, y))
        hy = add(mul(hc, x), mul(hd, y))
        # h v_i = (alpha + m beta, n beta) with alpha = a_num/n, beta = b_num/n
        if hy != b_num or mul(n, hx) != add(a_num, mul(m, b_num)):
            raise ConsistencyError(f"J_(n,m)(alpha, beta) != h v at position {pos + 1}")
        if not _member(poly, s, hx, hy, True, cache):
            log.error("criterion failure: J(alpha,beta)=(%s, %s) not in V_%d", format_coeffs(hx), format_coeffs(hy), poly.q)
            raise ConsistencyError(f"J_(n,m)(alpha, beta) = ({format_coeffs(hx)}, {format_coeffs(hy)}) is not in V_{poly.q}")
        verified += 1
    return TupleClass(
        "LI",
        tuple(signs),
        j=jpos + 1,
        n=RingElement(poly, n),
        m=RingElement(poly, m),
        alpha_n=tuple(alpha_n),
        beta_n=tuple(beta_n),
        witness=h,
        verified=verified,
    )


def apply_witness(cls: TupleClass, vs: Sequence[Vec2]) -> list[Vec2]:
    return [cls.witness @ v for v in vs]


@dataclass
class CensusResult:
    q: int
    R: Fraction
    k: int
    counts: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)
    total: int = 0
    verified: int = 0
    failures: int = 0
    roundtrip_checked: int = 0
    roundtrip_failures: int = 0


def iter_ball_tuples(s: OrbitSet, R, k: int):
    """Ordered k-tuples of vectors of s with sum of squared norms <= R^2."""
    poly = s.poly
    R = _as_fraction(R)
    r2 = R * R
    r2f = float(r2)
    slack = 1e-9 * r2f
    items = []
    for x, y, xf, yf, _, _ in s.iter_full():
        a = xf * xf + yf * yf
        if a <= r2f + slack:
            items.append((a, x + y, poly.norm_sq_coeffs(x, y)))
    items.sort()
    norms = [it[0] for it in items]
    vecs = [Vec2.from_key(poly, it[1]) for it in items]

    def rec(prefix, used_f, used_exact):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        lim = bisect.bisect_right(norms, r2f - used_f + slack)
        for i in range(lim):
            tot_f = used_f + norms[i]
            tot_e = poly.add(used_exact, items[i][2])
            if tot_f > r2f - slack and poly.compare_rational(tot_e, r2) > 0:
                continue
            prefix.append(vecs[i])
            yield from rec(prefix, tot_f, tot_e)
            prefix.pop()

    yield from rec([], 0.0, poly.zero_coeffs)


def tuple_census(q: int, R, k: int, s: OrbitSet, budget: int = 2_000_000, roundtrip: bool = False) -> CensusResult:
    """Classify every k-tuple in the ball of radius R of (R^2)^k and tally
    classes.  The work grows like (#V_q in the disk)^k; beyond ``budget``
    tuples a BudgetError carrying the partial census is raised.  With
    ``roundtrip`` each tuple is moved by its class witness and classified
    again, which must give the same class."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if s.q != q:
        raise DomainError(f"orbit set is for q={s.q}, not q={q}")
    R = _as_fraction(R)
    if R > s.radius:
        raise InsufficientRadiusError(f"orbit set R={s.radius} < requested R={R}")
    res = CensusResult(q, R, k)
    cache = ClassifyCache()
    rt_cache = ClassifyCache()
    counts: Counter = Counter()
    for tup in iter_ball_tuples(s, R, k):
        if res.total >= budget:
            res.counts = dict(counts)
            raise BudgetError(f"tuple census exceeded budget of {budget} tuples", partial=res, progress=res.total)
        res.total += 1
        try:
            cls = classify_tuple(tup, s, cache=cache)
        except ConsistencyError:
            log.exception("classification failed for %s", [str(v) for v in tup])
            res.failures += 1
            continue
        res.verified += cls.verified
        key = cls.key
        counts[key] += 1
        if key not in res.labels:
            res.labels[key] = cls.label
        if roundtrip:
            res.roundtrip_checked += 1
            again = classify_tuple(apply_witness(cls, tup), s, allow_reduction=True, cache=rt_cache)
            if again.key != key:
                res.roundtrip_failures += 1
    res.counts = dict(sorted(counts.items(), key=lambda kv: res.labels[kv[0]]))
    return res
