import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entire_julia.logcomplex import (
    LN2_HI, LN2_LO, PI_HI, PI_LO, TWO_PI_HI, TWO_PI_LO, LogComplex, LogComplexArray, dd_add,
    two_prod, two_sum, wrap_phase,
)


def phase_diff(a, b):
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


def test_split_constants_match_mpmath():
    with mpmath.workprec(200):
        for hi, lo, ref in ((LN2_HI, LN2_LO, mpmath.log(2)), (PI_HI, PI_LO, mpmath.pi),
                            (TWO_PI_HI, TWO_PI_LO, 2 * mpmath.pi)):
            assert abs(mpmath.mpf(hi) + mpmath.mpf(lo) - ref) < mpmath.mpf(2) ** -100


def test_two_sum_two_prod_exact():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=100) * 1e8, rng.normal(size=100)
    with mpmath.workprec(300):
        for x, y in zip(a, b):
            s, e = two_sum(x, y)
            assert mpmath.mpf(s) + mpmath.mpf(e) == mpmath.mpf(x) + mpmath.mpf(y)
            p, e = two_prod(x, y)
            assert mpmath.mpf(p) + mpmath.mpf(e) == mpmath.mpf(x) * mpmath.mpf(y)


# examples


def test_mul_examples():
    one = LogComplex(0.0, 0.0)
    r = one * one
    assert (r.log_mag, r.phase) == (0.0, 0.0)
    assert (LogComplex.zero() * LogComplex(5.0, 1.0)).is_zero
    r = LogComplex(math.log(2), math.pi / 2) * LogComplex(math.log(3), math.pi / 2)
    assert r.log_abs == pytest.approx(math.log(6), abs=1e-15)
    assert r.phase == -math.pi


def test_pow_examples():
    r = LogComplex(0.0, 0.0) ** 1024
    assert (r.log_mag, r.phase) == (0.0, 0.0)
    r = LogComplex(math.log(2), 0.0) ** 10
    assert r.log_abs == pytest.approx(math.log(1024), abs=1e-13)
    assert r.phase == 0.0
    r = LogComplex(0.0, 2 * math.pi / 1024) ** 1024
    assert phase_diff(r.phase, 0.0) < 1e-12
    assert (LogComplex(1.0, 1.0) ** 0).log_abs == 0.0
    with pytest.raises(ValueError):
        LogComplex(1.0) ** -1


def test_add_examples():
    x = LogComplex(1.5, 0.3)
    assert x + LogComplex.zero() == x
    assert (LogComplex(0.0, 0.0) + LogComplex(0.0, -math.pi)).is_zero
    r = LogComplex(math.log(3), 0.0) + LogComplex(math.log(4), math.pi / 2)
    assert r.log_abs == pytest.approx(math.log(5), abs=1e-15)
    assert r.phase == pytest.approx(math.atan2(4, 3), abs=1e-15)


def test_invariants():
    for ph in (3 * math.pi, -3 * math.pi, math.pi, 100.0):
        w = LogComplex(0.0, ph).phase
        assert -math.pi <= w < math.pi
        assert phase_diff(w, ph) < 1e-14
    z = LogComplex.zero()
    assert z.phase == 0.0 and z.to_cartesian() == 0
    with pytest.raises(ValueError):
        LogComplex(math.inf)
    with pytest.raises(ValueError):
        LogComplex(math.nan)
    for w in (3 + 4j, -1e-300j, 1e300 - 1e300j, -2.5):
        back = LogComplex.from_cartesian(w).to_cartesian()
        assert abs(back - w) <= 1e-12 * abs(w)


def test_wrap_phase_range():
    ph = np.array([-math.pi, math.pi, 7.0, -7.0, 1e6])
    w = wrap_phase(ph)
    assert np.all((w >= -math.pi) & (w < math.pi))


def test_huge_power_phase_against_mpmath():
    a = LogComplex.from_polar(0.1, 0.7)
    for n in (2 ** 20, 2 ** 30, 3 ** 18):
        r = a ** n
        with mpmath.workprec(200):
            ph = mpmath.mpf(0.7) * n
            ref = float(ph - 2 * mpmath.pi * mpmath.floor((ph + mpmath.pi) / (2 * mpmath.pi)))
        assert phase_diff(r.phase, ref) < 1e-9
        assert r.log_abs == pytest.approx(0.1 * n, rel=1e-15)
        assert not r.phase_unreliable


def test_pow_flags_unreliable_phase():
    a = LogComplex(0.0, 0.5, 1e-12)
    assert (a ** (2 ** 40)).phase_unreliable


def test_cancellation_enlarges_phase_err():
    a = LogComplex(0.0, 0.0)
    b = LogComplex(0.0, -math.pi + 1e-10)
    assert (a + b).phase_err > a.phase_err + b.phase_err


def test_double_double_keeps_small_differences():
    big = LogComplex.from_polar(1e23)
    r = big.scale(1e-7)
    hi, lo = dd_add(r.log_mag, r.log_lo, -1e23, 0.0)
    assert hi + lo == pytest.approx(1e-7, rel=1e-9)


# reference comparisons


def _random_pairs(n, seed):
    rng = np.random.default_rng(seed)
    lm = rng.uniform(math.log(1e-100), math.log(1e100), (2, n))
    ph = rng.uniform(-math.pi, math.pi, (2, n))
    return lm, ph


def test_mul_add_against_extended_precision_million_pairs():
    lm, ph = _random_pairs(10 ** 6, 3)
    a = LogComplexArray(lm[0], ph[0])
    b = LogComplexArray(lm[1], ph[1])
    p = a * b
    ref_lm = lm[0].astype(np.longdouble) + lm[1]
    assert np.max(np.abs(p.hi + p.lo - ref_lm) / np.abs(ref_lm)) <= 1e-9
    ref_ph = np.angle(np.exp(1j * (ph[0] + ph[1])))
    assert np.max(np.abs(np.angle(np.exp(1j * (p.phase - ref_ph))))) <= 1e-9

    s = a + b
    # extended-precision cartesian sum, scaled by the larger operand
    big = np.maximum(lm[0], lm[1]).astype(np.longdouble)
    za = np.exp(lm[0] - big) * (np.cos(ph[0].astype(np.longdouble)) + 1j * np.sin(ph[0].astype(np.longdouble)))
    zb = np.exp(lm[1] - big) * (np.cos(ph[1].astype(np.longdouble)) + 1j * np.sin(ph[1].astype(np.longdouble)))
    zs = za + zb
    ok = np.abs(zs) > 1e-6
    ref_lm = big + np.log(np.abs(zs))
    rel = np.abs((s.hi + s.lo) - ref_lm) / np.maximum(np.abs(ref_lm), 1.0)
    assert np.max(rel[ok]) <= 1e-9
    dph = np.angle(np.exp(1j * (s.phase - np.angle(zs).astype(float))))
    assert np.max(np.abs(dph[ok])) <= 1e-9


def test_add_against_mpmath_128bit():
    lm, ph = _random_pairs(2000, 4)
    with mpmath.workprec(128):
        for i in range(lm.shape[1]):
            r = LogComplex(lm[0, i], ph[0, i]) + LogComplex(lm[1, i], ph[1, i])
            za = mpmath.exp(mpmath.mpf(lm[0, i]) + 1j * mpmath.mpf(ph[0, i]))
            zb = mpmath.exp(mpmath.mpf(lm[1, i]) + 1j * mpmath.mpf(ph[1, i]))
            ref = za + zb
            assert abs(r.log_abs - float(mpmath.log(abs(ref)))) <= 1e-9 * max(1.0, abs(r.log_abs))
            assert phase_diff(r.phase, float(mpmath.arg(ref))) <= 1e-9


def test_array_matches_scalar():
    lm, ph = _random_pairs(50, 5)
    a, b = LogComplexArray(lm[0], ph[0]), LogComplexArray(lm[1], ph[1])
    for op in (lambda x, y: x * y, lambda x, y: x + y, lambda x, y: x - y, lambda x, y: x / y):
        arr = op(a, b)
        for i in range(50):
            sc = op(a.item(i), b.item(i))
            assert arr.item(i).log_abs == pytest.approx(sc.log_abs, abs=1e-12)
            assert phase_diff(arr.item(i).phase, sc.phase) < 1e-12


# properties

finite_lm = st.floats(-200, 200, allow_nan=False)
phases = st.floats(-math.pi, math.pi, exclude_max=True)


@settings(max_examples=300, deadline=None)
@given(finite_lm, phases, st.integers(0, 2 ** 15), st.integers(0, 2 ** 15))
def test_pow_additive(lm, ph, m, n):
    a = LogComplex(lm / 2 ** 16, ph)
    lhs = a ** (m + n)
    rhs = (a ** m) * (a ** n)
    assert lhs.log_abs == pytest.approx(rhs.log_abs, abs=1e-9)
    assert phase_diff(lhs.phase, rhs.phase) <= 1e-9


@settings(max_examples=300, deadline=None)
@given(finite_lm, phases, finite_lm, phases, finite_lm, phases)
def test_add_associative(l1, p1, l2, p2, l3, p3):
    a, b, c = LogComplex(l1 / 10, p1), LogComplex(l2 / 10, p2), LogComplex(l3 / 10, p3)
    x, y = (a + b) + c, a + (b + c)
    # near-total cancellation leaves no reliable digits to compare
    scale = max(a.log_abs, b.log_abs, c.log_abs)
    if x.is_zero or y.is_zero or x.log_abs < scale - 12:
        return
    tol = 1e-9 * math.exp(scale - min(x.log_abs, y.log_abs))
    assert x.log_abs == pytest.approx(y.log_abs, abs=tol)
    assert phase_diff(x.phase, y.phase) <= tol


@settings(max_examples=200, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-300, max_magnitude=1e300, allow_nan=False, allow_infinity=False))
def test_cartesian_round_trip(z):
    back = LogComplex.from_cartesian(z).to_cartesian()
    assert abs(back - z) <= 1e-12 * abs(z)
