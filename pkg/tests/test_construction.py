import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entire_julia.construction import (
    C_value, Params, Schedule, _F_array, build_schedule, cardioid_c, eval_F, eval_H, eval_f,
    eval_f_array, model_error, model_power, n_index, sample_annulus, smallest_valid_R,
    truncation_index, validate_R, verify_lemmas, H_array,
)
from entire_julia.errors import DomainError, FeasibilityError, OutOfRange, ScheduleError
from entire_julia.logcomplex import LogComplex, LogComplexArray


def phase_diff(a, b):
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


# n_index, cardioid_c

def test_n_index_examples():
    assert n_index(10, 1) == 1024
    assert n_index(10, 0) == 512
    assert 2 ** 10 + sum(n_index(10, k) for k in (1, 2, 3)) == 8192 == n_index(10, 4)
    with pytest.raises(OverflowError):
        n_index(40, 24)


@given(st.integers(1, 16), st.integers(1, 30))
def test_n_index_identities(N, k):
    assert n_index(N, k) == 2 * n_index(N, k - 1)
    assert 2 ** N + sum(n_index(N, j) for j in range(1, k + 1)) == n_index(N, k + 1)


def test_cardioid_c_examples():
    assert cardioid_c(0) == 0
    assert cardioid_c(0.8) == pytest.approx(0.24, abs=1e-15)
    assert cardioid_c(0.5j) == pytest.approx(0.0625 + 0.25j, abs=1e-15)
    with pytest.raises(DomainError):
        cardioid_c(1.0)


def test_fixed_point_multiplier():
    for mu in (0.3, 0.5j, -0.7 + 0.2j):
        c, p = cardioid_c(mu), mu / 2
        assert abs(p * p + c - p) < 1e-15
        assert abs(2 * p - mu) < 1e-15


def test_params_validation():
    with pytest.raises(DomainError):
        Params(1.0, 10, 2.0, 3)
    with pytest.raises(DomainError):
        Params(0.0, 3, 2.0, 3)
    Params(0.0, 3, 2.0, 3, conformant=False)


# validate_R against a direct 100-bit iteration

def ratio_oracle(c, N, R, n_angles):
    lo, hi = math.inf, 0.0
    with mpmath.workprec(100):
        cc = mpmath.mpc(c)
        for i in range(n_angles):
            th = -math.pi + 2 * math.pi * (i + 0.5) / n_angles
            z = mpmath.mpf(R) * mpmath.expjpi(mpmath.mpf(th) / mpmath.pi)
            w = z
            for _ in range(N):
                w = w * w + cc
            r = float(abs(w / z ** (2 ** N)))
            lo, hi = min(lo, r), max(hi, r)
    return lo, hi


def test_validate_R_c0():
    for R in (1.0, 3.0, 1e6):
        rep = validate_R(0.0, 10, R)
        assert rep.ok and rep.min_ratio == pytest.approx(1.0) and rep.max_ratio == pytest.approx(1.0)
    assert smallest_valid_R(0.0, 10) == 1.0


@pytest.mark.parametrize("R, expected", [(1.01, False), (10.0, False), (20.0, True)])
def test_validate_R_against_oracle(R, expected):
    rep = validate_R(0.24, 10, R)
    lo, hi = ratio_oracle(0.24, 10, R, rep.n_angles)
    assert rep.ok is expected
    assert (0.5005 <= lo and hi <= 1.998) is expected
    if math.isfinite(rep.max_ratio):
        assert rep.min_ratio == pytest.approx(lo, rel=1e-9)
        assert rep.max_ratio == pytest.approx(hi, rel=1e-9)


def test_smallest_valid_R_is_threshold():
    R = smallest_valid_R(0.24, 10)
    assert validate_R(0.24, 10, R).ok
    assert not validate_R(0.24, 10, R * (1 - 1e-4)).ok
    assert 13.0 < R < 14.0


# schedule

def test_schedule_c0_examples(sched_c0):
    s = sched_c0
    assert s.logR(1)[0] == pytest.approx(math.log(4), abs=1e-15)
    # growth window for log R_2
    n1, n0 = s.n[1], s.n[0]
    lower = n1 * math.log(2) + (2 ** 9 + n0) * math.log(4)
    upper = math.log(8) + s.logC(1)[0] + 2 * n1 * math.log(2)
    assert lower <= s.logR(2)[0] <= upper


def test_schedule_c0_closed_form(sched_c0):
    # for c = 0 the max of |z^1024 (1 - (z/4)^1024 / 2)| on |z| = 8 is 8^1024 (1 + 2^1023)
    with mpmath.workprec(200):
        ref = 1024 * mpmath.log(8) + mpmath.log(1 + mpmath.mpf(2) ** 1023)
        hi, lo = sched_c0.logR(2)
        assert abs(mpmath.mpf(hi) + mpmath.mpf(lo) - ref) < 1e-20


def test_schedule_c0_brute_force_max(sched_c0):
    # independent dense sampling of log|f_1| on |z| = 2 R_1 = 8
    rng = np.random.default_rng(7)
    theta = rng.uniform(-math.pi, math.pi, 2 ** 20)
    phi = np.mod(1024 * theta, 2 * math.pi)
    # log|1 - 2^1023 e^{i phi}| = 1023 log 2 + log|e^{i phi} - 2^-1023|
    vals = 1024 * math.log(8) + 1023 * math.log(2) + np.log(np.abs(np.exp(1j * phi) - 2.0 ** -1023))
    assert abs(vals.max() - sched_c0.logR(2)[0]) <= 1e-9 * sched_c0.logR(2)[0]
    assert vals.max() <= sched_c0.logR(2)[0] + 1e-9


def test_schedule_invariants(sched_c0, sched_half, sched_small):
    for s in (sched_c0, sched_half, sched_small):
        lr = s.logR_hi[1:s.top + 1]
        assert np.all(np.diff(lr) > 0)
        assert np.all(lr[1:] >= math.log(4) + 2 * lr[:-1])
        for k in range(1, s.top + 1):
            assert s.logC_sign[k] == (-1) ** (k - 1)
        # Corollary 8.1 in log form; the double-double pairs are summed exactly
        with mpmath.workprec(200):
            for k in range(1, s.K_max + 1):
                d = (mpmath.fsum(map(mpmath.mpf, s.logR(k + 1))) - mpmath.fsum(map(mpmath.mpf, s.logC(k)))
                     - 2 * s.n[k] * mpmath.log(2))
                assert abs(d) <= math.log(8)


def test_C_value(sched_c0):
    s = sched_c0
    c1 = C_value(s, 1)
    assert c1.log_abs == pytest.approx(-math.log(2) + 1024 * math.log(4), rel=1e-15)
    assert c1.phase == 0.0
    c2 = C_value(s, 2)
    assert c2.phase == -math.pi
    assert c2.log_abs >= s.n[1] * s.logR(2)[0] - 2 * math.log(2)
    with pytest.raises(IndexError):
        C_value(s, s.top + 1)


def test_schedule_errors():
    with pytest.raises(FeasibilityError):
        build_schedule(Params(0.0, 10, 2.0, 13))
    with pytest.raises(ScheduleError):
        build_schedule(Params(0.5, 10, 2.0, 2))
    with pytest.raises(FeasibilityError):
        build_schedule(Params(0.5, 3, 2.0, 12, conformant=False))


def test_schedule_json_round_trip(sched_small):
    text = sched_small.to_json()
    back = Schedule.from_json(text)
    assert back.to_json() == text
    assert back.hash() == sched_small.hash()
    assert len(sched_small.hash()) == 16
    d = sched_small.to_dict()
    for key in ("mu", "c", "N", "R", "K_max", "conformant", "n", "logR", "logC", "checks"):
        assert key in d


def test_build_is_deterministic():
    p = Params(0.5, 3, 2.0, 3, conformant=False)
    assert build_schedule(p).to_json() == build_schedule(p).to_json()


# H, F

def test_eval_H_examples():
    for m in (1, 3, 1024):
        assert eval_H(m, LogComplex.zero()).is_zero
        r = eval_H(m, LogComplex.one())
        assert r.log_abs == pytest.approx(0.0, abs=1e-15)
    w = LogComplex(0.0, math.pi / 5)  # w^5 = -1
    r = eval_H(5, w)
    assert r.log_abs == pytest.approx(math.log(3), abs=1e-14)
    assert phase_diff(r.phase, -math.pi) < 1e-14


def test_eval_F_examples(sched_c0):
    s = sched_c0
    for k in (1, 2, 5):
        assert eval_F(s, k, LogComplex.zero()).log_abs == 0.0
        r = eval_F(s, k, LogComplex(*s.logR(k)[:1], 0.0, 0.0, s.logR(k)[1]))
        assert r.log_abs == pytest.approx(math.log(0.5), abs=1e-12)
        # (z/R_k)^n_k = 2
        hi, lo = s.logR(k)
        z = LogComplex(hi, 0.0, 0.0, lo).scale(math.log(2) / s.n[k])
        assert eval_F(s, k, z).log_abs < -20
    with pytest.raises(IndexError):
        eval_F(s, 0, LogComplex.one())


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
def test_F_identity(sched_c0, k):
    s = sched_c0
    z, _ = sample_annulus(s, k, -0.3, 0.2, 10 ** 4, np.random.default_rng(k))
    lhs = _F_array(s.scales, k, z)
    w = z.scale(-s.logR_hi[k], -s.logR_lo[k])
    rhs = (w ** s.n[k]).reciprocal() * H_array(s.n[k], w)
    rhs = rhs.scale(-math.log(2))
    ok = lhs.hi > -30
    d = np.abs((lhs.hi + lhs.lo) - (rhs.hi + rhs.lo))[ok]
    assert d.max() <= 1e-9


# f

def test_eval_f_zero(sched_half):
    s = sched_half
    f0 = eval_f(s, LogComplex.zero())
    w = 0j
    for _ in range(10):
        w = w * w + s.c
    assert abs(f0.to_cartesian() - w) < 1e-15


def test_eval_f_cartesian_oracle_c0(sched_c0):
    s = sched_c0
    rng = np.random.default_rng(2)
    for th in rng.uniform(-math.pi, math.pi, 50):
        z = 3 * np.exp(1j * th)
        logmag = 1024 * math.log(3)
        ph = float(np.angle((z / 3) ** 1024))
        for j in range(1, s.top + 1):
            Rj = math.exp(s.logR(j)[0]) if s.logR(j)[0] < 700 else math.inf
            Fj = 1 - 0.5 * (z / Rj) ** s.n[j]
            logmag += math.log(abs(Fj))
            ph += np.angle(Fj)
        r = eval_f(s, LogComplex.from_cartesian(z))
        assert abs(r.log_abs - logmag) <= 1e-10 * logmag
        assert phase_diff(r.phase, ph) <= 1e-9


def test_eval_f_truncation_consistency(sched_half):
    s = sched_half
    rng = np.random.default_rng(3)
    limit = s.certified_log_radius[0]
    for lr in rng.uniform(0.0, limit - 1.0, 200):
        z = LogComplex(float(lr), float(rng.uniform(-math.pi, math.pi)))
        for t in (1e-4, 1e-8):
            a = eval_f(s, z, t)
            b = eval_f(s, z, t / 10)
            assert abs(a.log_abs - b.log_abs) <= 2 * t


def test_eval_f_errors(sched_small):
    s = sched_small
    with pytest.raises(ValueError):
        eval_f(s, LogComplex.one(), rel_tol=0.5)
    with pytest.raises(OutOfRange):
        eval_f(s, LogComplex(s.logR(s.top)[0]))
    assert truncation_index(s, 0.0, 1e-10) <= 1


def test_eval_f_depth_grows_with_radius(sched_c0):
    s = sched_c0
    depths = [eval_f(s, LogComplex(s.logR(k)[0]), return_depth=True)[1] for k in range(1, s.top)]
    assert depths == sorted(depths)
    assert all(d >= k for k, d in enumerate(depths, start=1))


def test_eval_f_array_matches_scalar(sched_half):
    s = sched_half
    z, _ = sample_annulus(s, 2, -1.0, 1.0, 20, np.random.default_rng(4))
    arr = eval_f_array(s, z)
    for i in range(20):
        sc = eval_f(s, z.item(i), 1e-11)
        assert arr.item(i).log_abs == pytest.approx(sc.log_abs, rel=1e-14)


def test_B_inner_half_power_model(sched_half):
    s = sched_half
    for k in range(2, s.K_max + 1):
        top = 0.5 * (s.logR_hi[k + 1] - s.logR_hi[k])
        z, _ = sample_annulus(s, k, math.log(4), top, 2000, np.random.default_rng(k))
        assert model_error(eval_f_array(s, z), model_power(s, k, z)).max() <= 1e-4


# verify_lemmas

def test_verify_lemmas_c0(sched_c0):
    rep = verify_lemmas(sched_c0)
    assert rep.passed, rep.failures
    assert rep.get("lemma_5_1")["status"] == "exact"
    assert rep.get("cor_8_1")["worst_value"] <= math.log(8)
    for k in range(2, 7):
        assert rep.get(f"lemma_7_2_A{k}")["worst_value"] <= 1e-6
    assert rep.get("lemma_7_2_A1")["status"] == "reported"
    assert any(i.startswith("thm_8_2") for i in rep.ids())


def test_verify_lemmas_exploratory_skips(sched_small):
    rep = verify_lemmas(sched_small, n_samples=256)
    assert rep.get("lemma_5_2")["status"] == "skipped"
    assert rep.get("lemma_5_1")["status"] == "exact"
