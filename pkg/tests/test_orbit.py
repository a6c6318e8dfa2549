import itertools
import math
from fractions import Fraction

import pytest

from hecke.errors import DomainError, EmptyInteriorError, NotAMemberError
from hecke.orbit import (
    Mat2,
    OrbitSet,
    Vec2,
    farey_fan,
    generate_orbit,
    hecke_generators,
    is_member,
    reduce_vector,
)
from hecke.oracle3 import primitive_vectors
from hecke.ring import minimal_polynomial


def V(q, x, y):
    return Vec2.of(q, x, y)


def int_keys(s):
    return {(k[0], k[1]) for k in s.sorted_keys()}


def test_generators():
    S, T = hecke_generators(3)
    assert (T.a, T.b, T.c, T.d) == (1, 1, 0, 1)
    for q in (3, 4, 5, 7):
        S, T = hecke_generators(q)
        assert S.det() == 1 and T.det() == 1
    S, T = hecke_generators(5)
    assert T.b * T.b == T.b + 1


def test_farey_fan_examples():
    p4, p5 = minimal_polynomial(4), minimal_polynomial(5)
    assert farey_fan(V(3, 1, 0), V(3, 0, 1), 3) == [V(3, 1, 1)]
    L4 = p4.lam
    assert farey_fan(V(4, 1, 0), V(4, 0, 1), 4) == [Vec2(L4, p4.one), Vec2(p4.one, L4)]
    L5 = p5.lam
    assert farey_fan(V(5, 1, 0), V(5, 0, 1), 5) == [Vec2(L5, p5.one), Vec2(L5, L5), Vec2(p5.one, L5)]


def test_fan_dominates_parents():
    q = 7
    u, v = V(q, 1, 0), V(q, 0, 1)
    fan = farey_fan(u, v, q)
    for w in fan:
        assert w.x >= u.x and w.y >= u.y or w.x >= v.x and w.y >= v.y
        assert w.x >= 0 and w.y >= 0
    # each consecutive pair in the fan is again an adjacent pair of determinant 1
    chain = [u] + fan + [v]
    for a, b in zip(chain, chain[1:]):
        assert a.det(b) == 1


def test_small_radius_q3():
    s = generate_orbit(3, Fraction(5, 2))
    expected = {(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)}
    expected |= {(a, b) for a in (-2, -1, 1, 2) for b in (-2, -1, 1, 2) if abs(a) != abs(b)}
    assert int_keys(s) == expected
    assert len(s) == 16


def test_radius_one_is_axis_vectors():
    assert int_keys(generate_orbit(3, 1)) == {(1, 0), (-1, 0), (0, 1), (0, -1)}


def test_empty_interior():
    with pytest.raises(EmptyInteriorError):
        generate_orbit(3, Fraction(1, 2))


@pytest.mark.parametrize("R", [10, 37])
def test_q3_matches_oracle(R):
    assert int_keys(generate_orbit(3, R)) == set(primitive_vectors(R))


@pytest.mark.parametrize("q", [3, 4, 5, 7])
def test_radius_monotone_and_restrict(q):
    small, big = generate_orbit(q, 8), generate_orbit(q, 13)
    assert set(small.sorted_keys()) <= set(big.sorted_keys())
    assert big.restrict(8).sorted_keys() == small.sorted_keys()
    assert V(q, 1, 0) in small


@pytest.mark.parametrize("q", [3, 4, 5, 7])
def test_witnesses(q):
    s = generate_orbit(q, 12)
    for v in s:
        g = s.witness(v)
        assert g.det() == 1
        assert g.column(0) == v


@pytest.mark.parametrize("q", [4, 5, 7])
def test_every_vector_reduces(q):
    s = generate_orbit(q, 15)
    for v in s:
        red = reduce_vector(v)
        assert red.is_member, v
        assert red.witness @ v == V(q, 1, 0)


@pytest.mark.parametrize("q", [4, 5])
def test_completeness_against_coefficient_box(q):
    """Every element of a coefficient box inside the disk that reduces to
    (1, 0) must have been generated; reductions that run out of budget
    must not involve generated vectors."""
    poly = minimal_polynomial(q)
    R = 4
    s = generate_orbit(q, R)
    rng = range(-4, 5)
    found = set()
    for cx in itertools.product(rng, repeat=poly.degree):
        x = poly.element(cx)
        if abs(float(x)) > R:
            continue
        for cy in itertools.product(rng, repeat=poly.degree):
            y = poly.element(cy)
            v = Vec2(x, y)
            if not s.covers(v) or (not x and not y):
                continue
            red = reduce_vector(v, max_steps=40)
            if not red.conclusive:
                assert v not in s
            elif red.is_member:
                found.add(v.key)
                assert v in s
    assert found


def test_membership_examples():
    assert not is_member(V(3, 2, 4), generate_orbit(3, 5))
    s5 = generate_orbit(5, Fraction(23, 10))
    L = minimal_polynomial(5).lam
    assert is_member(Vec2(L, L), s5)
    assert not is_member(V(5, 1, 1), s5)
    assert not reduce_vector(V(5, 1, 1)).is_member


def test_outside_radius_is_not_member(caplog):
    s = generate_orbit(3, 5)
    assert not is_member(V(3, 7, 1), s)
    assert "outside" in caplog.text


def test_reduce_examples():
    red = reduce_vector(V(3, 3, 5))
    assert red.is_member and red.t == 1
    red = reduce_vector(V(3, 2, 4))
    assert red.conclusive and not red.is_member and red.t == 2
    red = reduce_vector(V(5, 1, 0))
    assert red.witness == Mat2.identity(minimal_polynomial(5))


def test_reduce_and_membership_agree():
    s = generate_orbit(5, 6)
    p = minimal_polynomial(5)
    for a in range(-4, 5):
        for b in range(-4, 5):
            for c in range(0, 4):
                v = Vec2(p.element((a, c)), p.element((b, 0)))
                if s.covers(v) and (a or b or c):
                    red = reduce_vector(v)
                    if red.conclusive:
                        assert red.is_member == (v in s)


def test_witness_of_non_member():
    s = generate_orbit(3, 5)
    with pytest.raises(NotAMemberError):
        s.witness(V(3, 2, 4))


@pytest.mark.parametrize("q", [3, 5])
def test_file_round_trip(tmp_path, q):
    s = generate_orbit(q, 9)
    path = tmp_path / "orbit.txt"
    s.to_file(path)
    t = OrbitSet.from_file(path)
    assert t.radius == s.radius and t.sorted_keys() == s.sorted_keys()
    for v in t:
        assert t.witness(v).det() == 1


def test_file_with_bare_vectors(tmp_path):
    path = tmp_path / "orbit.txt"
    path.write_text("q=3 R=2\n1 0\n0 1\n1 1\n-1 0\n0 -1\n-1 -1\n1 -1\n-1 1\n")
    s = OrbitSet.from_file(path)
    assert s.witness(V(3, 1, 1)).column(0) == V(3, 1, 1)


def test_bad_file(tmp_path):
    path = tmp_path / "orbit.txt"
    path.write_text("q=3 R=2\n1 0 5 2\n")
    with pytest.raises(DomainError):
        OrbitSet.from_file(path)


@pytest.mark.parametrize("q", [4, 5, 7])
def test_density_tracks_lambda_over_c(q):
    s = generate_orbit(q, 120)
    lam = 2 * math.cos(math.pi / q)
    c = math.pi**2 * (0.5 - 1 / q)
    assert s.count / (math.pi * 120**2) == pytest.approx(lam / c, rel=0.02)
