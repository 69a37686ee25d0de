import math
import random

import pytest

from truncgrp import (NonUnitError, ParseError, field_make, parse_element,
                      ring_make)


def _naive_irreducible(coeffs, p):
    """Degree <= 3 polynomial irreducibility by root search (no factor of
    degree 1 exists iff irreducible for deg 2 and 3)."""
    deg = len(coeffs) - 1
    assert deg in (2, 3)
    for a in range(p):
        v = sum(c * a ** i for i, c in enumerate(coeffs)) % p
        if v == 0:
            return False
    return True


def test_field_modulus_choices_are_frozen_and_minimal():
    assert field_make(2, 2).modulus == (1, 1, 1)
    assert field_make(3, 2).modulus == (1, 0, 1)
    assert field_make(5, 2).modulus == (2, 0, 1)
    assert field_make(2, 3).modulus == (1, 1, 0, 1)
    # independently: each is irreducible and every smaller candidate in the
    # little-endian constant-coefficient scan is reducible
    for p, f in [(2, 2), (3, 2), (5, 2), (2, 3)]:
        mod = field_make(p, f).modulus
        assert mod[-1] == 1 and len(mod) == f + 1
        assert _naive_irreducible(mod, p)
        code = sum(c * p ** i for i, c in enumerate(mod[:-1]))
        for smaller in range(code):
            cand = []
            k = smaller
            for _ in range(f):
                cand.append(k % p)
                k //= p
            cand.append(1)
            assert not _naive_irreducible(tuple(cand), p)


def test_prime_field_matches_integer_arithmetic(rng):
    F = field_make(7, 1)
    for _ in range(200):
        a, b = rng.randrange(7), rng.randrange(7)
        assert F.add(F.from_int(a), F.from_int(b)) == F.from_int(a + b)
        assert F.mul(F.from_int(a), F.from_int(b)) == F.from_int(a * b)
        if a:
            assert F.mul(F.from_int(a), F.inv(F.from_int(a))) == F.one


def test_f4_multiplication_table():
    F = field_make(2, 2)
    o, x = F.one, (0, 1)
    x1 = F.add(x, o)
    # x^2 = x + 1 with modulus x^2 + x + 1
    assert F.mul(x, x) == x1
    assert F.mul(x, x1) == o
    assert F.mul(x1, x1) == x
    assert F.pow(x, 3) == o
    # frobenius is squaring
    for a in F.elements():
        assert F.frobenius(a) == F.mul(a, a)


def test_field_index_bijective():
    for p, f in [(2, 1), (3, 1), (2, 2), (3, 2), (5, 1)]:
        F = field_make(p, f)
        seen = {F.index(a) for a in F.elements()}
        assert seen == set(range(F.q))
        for k in range(F.q):
            assert F.index(F.from_index(k)) == k


def test_multiplicative_generator_has_full_order():
    for p, f in [(2, 1), (3, 1), (5, 1), (2, 2), (3, 2), (7, 1)]:
        F = field_make(p, f)
        g = F.multiplicative_generator()
        seen = set()
        a = F.one
        for _ in range(F.q - 1):
            seen.add(a)
            a = F.mul(a, g)
        assert a == F.one
        assert len(seen) == F.q - 1


# ---------------------------------------------------------------------------

def test_witt_f1_matches_integers_mod_pr(rng):
    R = ring_make("witt", 3, 1, 3)
    assert R.label == "Z/27"
    for _ in range(300):
        a, b = rng.randrange(27), rng.randrange(27)
        assert R.add(R.from_int(a), R.from_int(b)) == R.from_int(a + b)
        assert R.mul(R.from_int(a), R.from_int(b)) == R.from_int(a * b)
    assert R.characteristic == 27
    assert R.int_mul(R.one, 27) == R.zero
    assert R.int_mul(R.one, 9) != R.zero


def test_poly_characteristic_is_p():
    R = ring_make("poly", 3, 1, 3)
    assert R.characteristic == 3
    assert R.int_mul(R.one, 3) == R.zero
    a = parse_element(R, "1+2t+t^2")
    assert R.add(R.add(a, a), a) == R.zero


def test_galois_ring_reduction_by_hand():
    # GR(4, 2) with modulus lifted from x^2 + x + 1: x^2 = -x - 1 = 3 + 3x
    R = ring_make("witt", 2, 2, 2)
    assert R.mhat == (1, 1, 1)
    x = R.from_coords((0, 1))
    assert R.mul(x, x) == R.from_coords((3, 3))
    one_x = R.from_coords((1, 1))
    assert R.mul(one_x, x) == R.from_coords((3, 0))
    # unit count: |GR(4,2)^x| = q^(r-1) (q - 1) = 4 * 3
    units = sum(1 for a in R.elements() if R.is_unit(a))
    assert units == 12


def test_teichmuller_values_frozen():
    R25 = ring_make("witt", 5, 1, 2)
    t2 = R25.teichmuller(R25.residue(R25.from_int(2)))
    assert t2 == R25.from_int(7)  # 2^5 = 32 = 7 mod 25
    assert R25.pow(t2, 5) == t2
    R27 = ring_make("witt", 3, 1, 3)
    assert R27.teichmuller(R27.residue(R27.from_int(2))) == R27.from_int(26)
    R9 = ring_make("witt", 3, 1, 2)
    assert R9.teichmuller(R9.residue(R9.from_int(2))) == R9.from_int(8)


def test_teichmuller_is_multiplicative_and_fixed():
    for kind, p, f, r in [("witt", 5, 1, 2), ("witt", 2, 2, 2), ("poly", 3, 1, 3)]:
        R = ring_make(kind, p, f, r)
        F = R.field
        lifts = {a: R.teichmuller(a) for a in F.elements()}
        for a in F.elements():
            ta = lifts[a]
            assert R.residue(ta) == a
            assert R.pow(ta, R.q) == ta
            for b in F.elements():
                assert R.mul(ta, lifts[b]) == lifts[F.mul(a, b)]


def test_witt_digits_of_12_in_z25():
    R = ring_make("witt", 5, 1, 2)
    d = R.witt_digits(R.from_int(12))
    assert d == (R.field.from_int(2), R.field.from_int(1))
    # greedy expansion by hand: tau(2) = 7, (12 - 7)/5 = 1, tau(1) = 1
    assert R.from_digits(d) == R.from_int(7 + 5 * 1)
    assert R.from_int(7 + 5) == R.from_int(12)


def test_digit_expansion_roundtrip_everywhere():
    for kind, p, f, r in [("witt", 2, 1, 3), ("witt", 3, 2, 2),
                          ("poly", 2, 2, 2), ("poly", 5, 1, 3)]:
        R = ring_make(kind, p, f, r)
        for a in R.elements():
            d = R.witt_digits(a)
            assert len(d) == r
            assert R.from_digits(d) == a


def test_valuation_and_units():
    R = ring_make("poly", 3, 1, 3)
    assert R.valuation(R.zero) == 3
    assert R.valuation(R.one) == 0
    assert R.valuation(R.pi) == 1
    assert R.valuation(R.mul(R.pi, R.pi)) == 2
    units = [a for a in R.elements() if R.is_unit(a)]
    assert len(units) == 2 * 9  # (q-1) q^(r-1)
    for a in units:
        assert R.mul(a, R.inv(a)) == R.one
    with pytest.raises(NonUnitError):
        R.inv(R.pi)
    with pytest.raises(NonUnitError):
        R.inv(R.zero)


def test_inverse_on_random_units(rng):
    for kind, p, f, r in [("witt", 2, 1, 4), ("witt", 7, 1, 2),
                          ("witt", 2, 2, 3), ("poly", 3, 2, 2)]:
        R = ring_make(kind, p, f, r)
        found = 0
        while found < 25:
            a = R.rand(rng)
            if not R.is_unit(a):
                continue
            assert R.mul(a, R.inv(a)) == R.one
            found += 1


def test_reduction_is_a_homomorphism(rng):
    R = ring_make("witt", 3, 1, 3)
    R9 = R.truncate(2)
    assert R9.label == "Z/9"
    for _ in range(100):
        a, b = R.rand(rng), R.rand(rng)
        assert R.reduce_to(R.mul(a, b), 2) == R9.mul(R.reduce_to(a, 2), R.reduce_to(b, 2))
        assert R.reduce_to(R.add(a, b), 2) == R9.add(R.reduce_to(a, 2), R.reduce_to(b, 2))
    # composing two reductions = reducing once
    for a in R.elements():
        assert R9.reduce_to(R.reduce_to(a, 2), 1) == R.reduce_to(a, 1)


def test_truncate_caches_and_degenerate_cases():
    R = ring_make("poly", 2, 2, 3)
    assert R.truncate(3) is R
    assert R.truncate(1) is ring_make("poly", 2, 2, 1)


def test_index_and_coords_roundtrip():
    for kind, p, f, r in [("witt", 3, 1, 2), ("witt", 2, 2, 2), ("poly", 3, 2, 2)]:
        R = ring_make(kind, p, f, r)
        idxs = sorted(R.index(a) for a in R.elements())
        assert idxs == list(range(R.size))
        for a in R.elements():
            assert R.from_index(R.index(a)) == a
            assert R.from_coords(R.coords(a)) == a


def test_encode_decode_roundtrip(rng):
    for kind, p, f, r in [("witt", 251, 1, 2), ("poly", 7, 2, 2)]:
        R = ring_make(kind, p, f, r)
        for _ in range(50):
            a = R.rand(rng)
            blob = R.encode(a)
            assert isinstance(blob, bytes)
            assert R.decode(blob) == a


def test_selftest_grid():
    for kind, p, f, r in [("witt", 2, 1, 3), ("witt", 5, 2, 2),
                          ("poly", 2, 2, 3), ("poly", 7, 1, 2)]:
        rep = ring_make(kind, p, f, r).selftest(seed=3)
        assert rep.ok, rep.failures()
        names = {c.name for c in rep.checks}
        assert "characteristic" in names
        assert "teichmuller-multiplicative" in names


def test_selftest_zmod_agreement_runs_for_f1():
    rep = ring_make("witt", 3, 1, 2).selftest()
    modes = {c.name: c.mode for c in rep.checks}
    assert modes["zmod-agreement"] != "skipped"


# ---------------------------------------------------------------------------
# parser

def test_parse_witt_integers():
    R = ring_make("witt", 5, 1, 2)
    assert parse_element(R, "7") == R.from_int(7)
    assert parse_element(R, "-1") == R.from_int(24)
    assert parse_element(R, "2^3") == R.from_int(8)
    assert parse_element(R, "3*4+1") == R.from_int(13)
    assert parse_element(R, "2(3+4)") == R.from_int(14)


def test_parse_poly_literals():
    R = ring_make("poly", 5, 1, 2)
    assert parse_element(R, "t") == R.pi
    assert parse_element(R, "1+2t") == R.add(R.one, R.int_mul(R.pi, 2))
    assert parse_element(R, "t^2") == R.zero
    assert parse_element(R, "(1+2t)^2") == parse_element(R, "1+4t")
    R3 = ring_make("poly", 3, 1, 3)
    a = parse_element(R3, "1+2t+t^2")
    assert R3.render(a) == "1+2t+t^2"


def test_parse_extension_generator():
    R = ring_make("witt", 2, 2, 2)
    x = parse_element(R, "x")
    assert x == R.from_coords((0, 1))
    assert parse_element(R, "x^2") == R.from_coords((3, 3))
    assert parse_element(R, "1+2x") == R.from_coords((1, 2))
    Rp = ring_make("poly", 2, 2, 2)
    xt = parse_element(Rp, "x t")
    assert Rp.valuation(xt) == 1


def test_parse_render_roundtrip(rng):
    for kind, p, f, r in [("witt", 3, 1, 3), ("witt", 2, 2, 2),
                          ("poly", 5, 1, 2), ("poly", 2, 2, 2)]:
        R = ring_make(kind, p, f, r)
        for _ in range(60):
            a = R.rand(rng)
            assert parse_element(R, R.render(a)) == a


def test_parse_errors_carry_positions():
    R = ring_make("witt", 5, 1, 2)
    with pytest.raises(ParseError) as ei:
        parse_element(R, "1+")
    assert ei.value.position == 2
    with pytest.raises(ParseError):
        parse_element(R, "(2")
    with pytest.raises(ParseError) as ei:
        parse_element(R, "1+t")  # no 't' in witt kind
    assert ei.value.position == 2
    with pytest.raises(ParseError):
        parse_element(R, "x")  # f = 1
    with pytest.raises(ParseError) as ei:
        parse_element(R, "3 @ 4")
    assert "@" in str(ei.value)
    with pytest.raises(ParseError):
        parse_element(R, "1 2^")
    # base position offsets propagate (matrix parsing relies on this)
    with pytest.raises(ParseError) as ei:
        parse_element(R, "1+", base_pos=10)
    assert ei.value.position == 12


def test_parse_rejects_trailing_garbage():
    R = ring_make("poly", 3, 1, 2)
    with pytest.raises(ParseError):
        parse_element(R, "1+t)")


def test_pow_negative_exponent_inverts():
    R = ring_make("witt", 5, 1, 2)
    a = R.from_int(7)
    assert R.pow(a, -1) == R.from_int(18)
    assert R.pow(a, -2) == R.mul(R.from_int(18), R.from_int(18))
    assert math.gcd(7, 25) == 1  # sanity: 7 really is a unit
