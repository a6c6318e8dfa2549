import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hecke.errors import (
    BudgetError,
    DegeneratePairError,
    DomainError,
    InsufficientRadiusError,
    NotAMemberError,
)
from hecke.moments import (
    ClassifyCache,
    apply_witness,
    canonicalize_pair,
    classify_tuple,
    complete_to_matrix,
    count_pairs,
    enumerate_Nq,
    iter_ball_tuples,
    n_in_Nq,
    pair_orbit_radius,
    phi_q,
    predicted_pair_density,
    shift_into_window,
    sv_constant,
    tuple_census,
)
from hecke.orbit import Mat2, Vec2, generate_orbit
from hecke.oracle3 import brute_count_pairs, primitive_vectors, std_totient
from hecke.ring import minimal_polynomial


def V(q, x, y):
    return Vec2.of(q, x, y)


@pytest.fixture(scope="module")
def s3():
    return generate_orbit(3, 40)


@pytest.fixture(scope="module")
def s5():
    return generate_orbit(5, 12)


def test_sv_constant():
    assert sv_constant(3).pi_sq_coeff == Fraction(1, 6)
    assert sv_constant(3).value == pytest.approx(1.644934, abs=1e-6)
    assert sv_constant(4).pi_sq_coeff == Fraction(1, 4)
    assert sv_constant(5).pi_sq_coeff == Fraction(3, 10)
    with pytest.raises(DomainError):
        sv_constant(2)


def test_phi_q3_examples(s3):
    assert phi_q(6, s3) == 2
    assert phi_q(1, s3) == 1
    assert phi_q(-6, s3) == 2
    for n in range(1, 25):
        assert phi_q(n, s3) == std_totient(n)
        assert phi_q(n, s3, "fundamental") == std_totient(n)


def test_phi_q5_values(s5):
    p = minimal_polynomial(5)
    L = p.lam
    # frozen from a brute-force scan of the row y = n in generate_orbit(5, 12)
    expected = {p.one: (0, 1), L: (2, 2), L + 1: (0, 0), p.from_int(2): (0, 0), 2 * L: (1, 2)}
    for n, (paper, fund) in expected.items():
        assert phi_q(n, s5, "paper") == paper
        assert phi_q(n, s5, "fundamental") == fund


def test_phi_q5_lambda_matches_row_scan():
    p = minimal_polynomial(5)
    s = generate_orbit(5, 4)
    L = p.lam
    scan = [v for v in s if v.y == L and 0 < v.x <= L]
    assert phi_q(L, s) == len(scan) == 2


def test_phi_needs_radius():
    s = generate_orbit(3, 5)
    with pytest.raises(InsufficientRadiusError):
        phi_q(10, s)
    with pytest.raises(DomainError):
        phi_q(0, s)
    with pytest.raises(DomainError):
        phi_q(1, s, "bogus")


def test_nq_q3(s3):
    got = [int(float(n)) for n in enumerate_Nq(3, 20, s3)]
    assert got == [n for n in range(-20, 21) if n]
    assert not n_in_Nq(0, s3)


def test_nq_q5(s5):
    L = minimal_polynomial(5).lam
    assert enumerate_Nq(5, 3, s5) == [-L, L]
    assert [str(n) for n in enumerate_Nq(5, 3, s5, "fundamental")] == ["-1*L", "-1", "1", "1*L"]
    # det((1,0),(L,1)) = 1, so 1 is a determinant of orbit pairs even though
    # (1, 1) is not in V_5; only the fundamental window sees it.
    assert not n_in_Nq(1, s5)
    assert n_in_Nq(1, s5, "fundamental")


def test_complete_to_matrix(s3):
    assert complete_to_matrix(V(3, 1, 0), s3) == Mat2.identity(minimal_polynomial(3))
    g = complete_to_matrix(V(3, 3, 5), s3)
    assert g.det() == 1 and g.column(0) == V(3, 3, 5)
    with pytest.raises(NotAMemberError):
        complete_to_matrix(V(3, 2, 4), s3)


@pytest.mark.parametrize(
    "v1, v2, n, m",
    [((1, 0), (0, 1), 1, 1), ((1, 0), (1, 2), 2, 1), ((2, 1), (1, 1), 1, 1)],
)
def test_canonicalize_examples(s3, v1, v2, n, m):
    cp = canonicalize_pair(V(3, *v1), V(3, *v2), s3)
    assert (cp.n, cp.m) == (n, m)


def test_canonicalize_degenerate(s3):
    with pytest.raises(DegeneratePairError):
        canonicalize_pair(V(3, 1, 2), V(3, -1, -2), s3)


def _check_canonical(cp, v1, v2):
    poly = v1.poly
    M = cp.witness @ Mat2(v1.x, v2.x, v1.y, v2.y)
    assert cp.witness.det() == 1
    assert (M.a, M.c, M.b, M.d) == (1, 0, cp.m, cp.n)
    assert cp.n == v1.det(v2)
    assert cp.m >= 1 and cp.m < 1 + poly.lam * abs(cp.n)


@pytest.mark.parametrize("q", [3, 4, 5, 7])
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_canonicalize_property(q, data):
    s = generate_orbit(q, 7)
    vs = list(s)
    v1 = data.draw(st.sampled_from(vs))
    v2 = data.draw(st.sampled_from(vs))
    if not v1.det(v2):
        return
    _check_canonical(canonicalize_pair(v1, v2, s), v1, v2)


def test_shift_into_window_q5():
    p = minimal_polynomial(5)
    L = p.lam
    for ell in (p.from_int(-7), 3 * L - 2, p.from_int(40)):
        for n in (p.one, L, -L):
            k, m = shift_into_window(p, ell.coeffs, n.coeffs)
            m = p.element(m)
            assert m == ell - k * L * abs(n)
            assert 1 <= m < 1 + L * abs(n)


def test_count_pairs_matches_oracle():
    for R in (5, 12):
        s = generate_orbit(3, pair_orbit_radius(R, 6))
        got = count_pairs(3, R, s, ns=[n for n in range(-6, 7) if n])
        for n, c in got.items():
            assert c == brute_count_pairs(R, int(float(n)))


def test_count_pairs_full_scan_matches_rows():
    for q in (3, 5):
        R = 14
        p = minimal_polynomial(q)
        ns = [p.one, p.lam, 2 * p.lam, p.one]
        rows = count_pairs(q, R, generate_orbit(q, pair_orbit_radius(R, 2 * p.lam_float)), ns=ns)
        full = count_pairs(q, R, generate_orbit(q, R))
        for n in ns:
            assert rows[n] == full.get(n, 0)


def test_count_pairs_q5_frozen():
    p = minimal_polynomial(5)
    L = p.lam
    s = generate_orbit(5, pair_orbit_radius(20, 2))
    got = count_pairs(5, 20, s, ns=[1, L, L + 1, 2])
    assert got == {p.one: 1380, L: 1592, L + 1: 0, p.from_int(2): 0}
    refined = count_pairs(5, 20, s, ns=[1, L], refine_m=True)
    assert refined == {(p.one, L): 1380, (L, p.one): 796, (L, L): 796}


def test_count_pairs_symmetric_in_sign():
    s = generate_orbit(3, pair_orbit_radius(15, 4))
    got = count_pairs(3, 15, s, ns=[3, -3, 4, -4])
    vals = {int(float(k)): v for k, v in got.items()}
    assert vals[3] == vals[-3] and vals[4] == vals[-4]


def test_count_pairs_needs_radius():
    s = generate_orbit(3, 20)
    with pytest.raises(InsufficientRadiusError):
        count_pairs(3, 30, s, ns=[1])
    with pytest.raises(InsufficientRadiusError):
        count_pairs(3, 30, s)
    with pytest.raises(DomainError):
        count_pairs(3, 5, s, ns=[0])


def test_count_pairs_workers_agree():
    s = generate_orbit(3, pair_orbit_radius(30, 5))
    one = count_pairs(3, 30, s, ns=[1, 5], refine_m=True)
    two = count_pairs(3, 30, s, ns=[1, 5], refine_m=True, workers=2)
    assert one == two


def test_partition_q3():
    s = generate_orbit(3, pair_orbit_radius(40, 12))
    for n in (5, 7, 12):
        refined = count_pairs(3, 40, s, ns=[n], refine_m=True)
        ms = sorted(int(float(m)) for (_, m) in refined)
        assert ms == [a for a in range(1, n + 1) if math.gcd(a, n) == 1]
        assert sum(refined.values()) == brute_count_pairs(40, n)


def test_predicted_density(s3, s5):
    assert predicted_pair_density(3, 1, s3).value == pytest.approx(6)
    assert predicted_pair_density(3, 2, s3).value == pytest.approx(3)
    assert predicted_pair_density(3, 4, s3).value == pytest.approx(3)
    for n in range(1, 28):
        assert predicted_pair_density(3, n, s3).value == pytest.approx(6 * std_totient(n) / n)
    d = predicted_pair_density(5, 2, s5)
    assert d.value == 0 and not d.in_Nq
    assert predicted_pair_density(5, 1, s5, "fundamental").coefficient == Fraction(10, 3)


def test_classify_examples(s3):
    c = classify_tuple([V(3, 1, 0), V(3, -1, 0)], s3)
    assert c.kind == "LD" and c.signs == (1, -1)
    c = classify_tuple([V(3, 1, 0), V(3, 0, 1)], s3)
    assert (c.kind, c.j, c.n, c.m) == ("LI", 2, 1, 1)
    assert [str(a) for a in c.alpha] == ["0"] and [str(b) for b in c.beta] == ["1"]
    c = classify_tuple([V(3, 1, 0), V(3, 0, 1), V(3, 1, 1)], s3)
    assert [str(a) for a in c.alpha] == ["0", "1"] and [str(b) for b in c.beta] == ["1", "1"]
    c = classify_tuple([V(3, 2, 1), V(3, -2, -1), V(3, 1, 1), V(3, 3, 2)], s3)
    assert (c.j, c.signs, c.n) == (3, (1, -1), 1)


def test_classify_rejects_non_members(s3):
    with pytest.raises(NotAMemberError):
        classify_tuple([V(3, 2, 4)], s3)
    with pytest.raises(DomainError):
        classify_tuple([], s3)


@pytest.mark.parametrize("q", [3, 5, 7])
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_classify_roundtrip(q, data):
    s = generate_orbit(q, 6)
    vs = data.draw(st.lists(st.sampled_from(list(s)), min_size=1, max_size=4))
    c = classify_tuple(vs, s)
    moved = apply_witness(c, vs)
    assert moved[0] == V(q, 1, 0)
    again = classify_tuple(moved, s, allow_reduction=True, cache=ClassifyCache())
    assert again.key == c.key


def test_census_k1():
    s = generate_orbit(3, 6)
    res = tuple_census(3, 6, 1, s)
    assert res.counts == {("LD", (1,)): len(s)}


def test_census_k2_against_oracle():
    R = 5
    s = generate_orbit(3, R)
    res = tuple_census(3, R, 2, s)
    prim = primitive_vectors(R)
    ld_plus = sum(1 for x, y in prim if 2 * (x * x + y * y) <= R * R)
    assert res.counts[("LD", (1, 1))] == ld_plus
    assert res.counts[("LD", (1, -1))] == ld_plus
    li = sum(c for key, c in res.counts.items() if key[0] == "LI")
    assert li == sum(brute_count_pairs(R, n) for n in range(-2 * R * R, 2 * R * R + 1) if n)
    assert res.total == sum(res.counts.values())


def test_census_budget():
    s = generate_orbit(3, 6)
    with pytest.raises(BudgetError) as info:
        tuple_census(3, 6, 2, s, budget=50)
    assert info.value.progress == 50
    assert sum(info.value.partial.counts.values()) == 50


def test_ball_tuples_boundary_included():
    s = generate_orbit(3, 10)
    tuples = set(iter_ball_tuples(s, 10, 2))
    assert (V(3, 1, 7), V(3, 7, 1)) in tuples  # 50 + 50 = 100 exactly
    assert (V(3, 1, 7), V(3, 7, 2)) not in tuples
