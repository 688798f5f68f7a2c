"""Complex numbers stored as (log-magnitude, phase).

Magnitudes in this package routinely exceed ``exp(1e20)``, so values are kept
as ``log|w|`` and ``arg w``.  The log-magnitude is a double-double pair
``(log_mag, log_lo)``: the high word is the ordinary binary64 value and the
low word carries the rounding residue, which is what keeps differences of
enormous logs (``log|f| - log|C_k|`` and friends) meaningful.

Phases live in ``[-pi, pi)`` together with an explicit bound on accumulated
absolute error.  Integer powers use an exact two-product before reducing
modulo ``2*pi`` against a head/tail split of ``2*pi``.

Both a scalar type (:class:`LogComplex`) and a vectorised container
(:class:`LogComplexArray`) are provided; they share the same kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# head/tail splits, verified against mpmath in the tests
LN2_HI = 0.6931471805599453
LN2_LO = 2.3190468138462996e-17
PI_HI = 3.141592653589793
PI_LO = 1.2246467991473532e-16
TWO_PI_HI = 6.283185307179586
TWO_PI_LO = 2.4492935982947064e-16

EPS = 2.220446049250313e-16
UNRELIABLE_PHASE = 1e-3
CANCELLATION = 1e-8

_SPLITTER = 134217729.0  # 2**27 + 1


# ---------------------------------------------------------------------------
# double-double helpers (work on floats and numpy arrays alike)

def two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    """Exact product ``a*b = p + e`` (Dekker)."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def dd_add(ahi, alo, bhi, blo):
    with np.errstate(invalid="ignore"):
        s, e = two_sum(ahi, bhi)
        e = e + (alo + blo)
        hi, lo = _quick_two_sum(s, e)
    return _finite_lo(hi, lo)


def dd_scale(hi, lo, n):
    """Multiply the pair ``(hi, lo)`` by a float ``n``."""
    with np.errstate(invalid="ignore"):
        p, e = two_prod(hi, n)
        e = e + lo * n
        rhi, rlo = _quick_two_sum(p, e)
    return _finite_lo(rhi, rlo)


def dd_sub(ahi, alo, bhi, blo):
    return dd_add(ahi, alo, -bhi, -blo)


def _finite_lo(hi, lo):
    if isinstance(hi, np.ndarray) or isinstance(lo, np.ndarray):
        lo = np.where(np.isfinite(hi), lo, 0.0)
        return hi, lo
    if not math.isfinite(hi):
        return hi, 0.0
    return hi, lo


def wrap_phase(hi, lo=0.0):
    """Reduce ``hi + lo`` modulo 2*pi into ``[-pi, pi)``."""
    k = np.rint(hi / TWO_PI_HI)
    p, e = two_prod(k, TWO_PI_HI)
    r = (hi - p) + ((lo - e) - k * TWO_PI_LO)
    r = np.where(r >= PI_HI, r - TWO_PI_HI, r)
    r = np.where(r < -PI_HI, r + TWO_PI_HI, r)
    if np.ndim(r) == 0:
        return float(r)
    return r


# ---------------------------------------------------------------------------
# kernels shared by the scalar and array types

def _mul(a, b):
    hi, lo = dd_add(a[0], a[1], b[0], b[1])
    ph = wrap_phase(a[2] + b[2])
    return hi, lo, ph, a[3] + b[3]


def _pow(a, n):
    n = int(n)
    if n < 0:
        raise ValueError("exponent must be nonnegative")
    if n == 0:
        one = np.zeros_like(np.asarray(a[0], dtype=float))
        return one, one.copy(), one.copy(), one.copy()
    fn = float(n)
    hi, lo = dd_scale(a[0], a[1], fn)
    p, e = two_prod(a[2], fn)
    ph = wrap_phase(p, e)
    return hi, lo, ph, fn * a[3] + 2 * EPS


def _add(a, b):
    ahi, alo, aph, aerr = (np.asarray(x, dtype=float) for x in a)
    bhi, blo, bph, berr = (np.asarray(x, dtype=float) for x in b)
    swap = (bhi > ahi) | ((bhi == ahi) & (blo > alo))
    hi1 = np.where(swap, bhi, ahi)
    lo1 = np.where(swap, blo, alo)
    ph1 = np.where(swap, bph, aph)
    er1 = np.where(swap, berr, aerr)
    hi2 = np.where(swap, ahi, bhi)
    lo2 = np.where(swap, alo, blo)
    ph2 = np.where(swap, aph, bph)
    er2 = np.where(swap, aerr, berr)

    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        d = (hi2 - hi1) + (lo2 - lo1)
        d = np.where(np.isneginf(hi2), -np.inf, d)
        d = np.where(np.isneginf(hi1), -np.inf, d)
        m = np.exp(d)
        dphi = ph2 - ph1
        rx = m * np.cos(dphi)
        ry = m * np.sin(dphi)
        sx = 1.0 + rx
        small = m < 0.5
        lmod = np.where(
            small,
            0.5 * np.log1p(np.where(small, 2.0 * rx + m * m, 0.0)),
            np.log(np.hypot(sx, ry)),
        )
        mod = np.exp(lmod)
        ph = wrap_phase(ph1 + np.arctan2(ry, sx))
        err = er1 + (m * (er1 + er2) + 2 * EPS * (1.0 + m)) / mod
        hi, lo = dd_add(hi1, lo1, lmod, 0.0)

    # below the representation floor the sum is indistinguishable from 0
    zero = np.isneginf(hi1) | (mod <= 4 * EPS)
    hi = np.where(zero, -np.inf, hi)
    lo = np.where(zero, 0.0, lo)
    ph = np.where(zero, 0.0, ph)
    err = np.where(zero, 0.0, err)
    return hi, lo, ph, err


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogComplex:
    """A nonzero complex number ``exp(log_mag + log_lo) * exp(i*phase)``.

    ``log_mag = -inf`` encodes zero.  ``phase_err`` bounds the accumulated
    absolute phase error; once it exceeds 1e-3 rad the value is flagged
    phase-unreliable (see :attr:`phase_unreliable`).
    """

    log_mag: float
    phase: float = 0.0
    phase_err: float = 0.0
    log_lo: float = 0.0

    def __post_init__(self):
        if math.isnan(self.log_mag) or self.log_mag == math.inf:
            raise ValueError(f"invalid log magnitude {self.log_mag!r}")
        if math.isinf(self.log_mag):
            object.__setattr__(self, "phase", 0.0)
            object.__setattr__(self, "log_lo", 0.0)
        elif not (-PI_HI <= self.phase < PI_HI):
            object.__setattr__(self, "phase", wrap_phase(self.phase))

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(-math.inf)

    @classmethod
    def one(cls) -> "LogComplex":
        return cls(0.0)

    @classmethod
    def from_cartesian(cls, z: complex) -> "LogComplex":
        z = complex(z)
        if z == 0:
            return cls.zero()
        a = max(abs(z.real), abs(z.imag))
        # scale first so |z| can't overflow
        log_mag = math.log(a) + 0.5 * math.log1p((min(abs(z.real), abs(z.imag)) / a) ** 2)
        return cls(log_mag, math.atan2(z.imag, z.real), EPS * PI_HI)

    @classmethod
    def from_polar(cls, log_mag: float, phase: float = 0.0, log_lo: float = 0.0) -> "LogComplex":
        return cls(float(log_mag), wrap_phase(float(phase)), 0.0, float(log_lo))

    @property
    def is_zero(self) -> bool:
        return self.log_mag == -math.inf

    @property
    def phase_unreliable(self) -> bool:
        return self.phase_err > UNRELIABLE_PHASE

    @property
    def log_abs(self) -> float:
        return self.log_mag + self.log_lo

    def to_cartesian(self) -> complex:
        if self.is_zero:
            return 0j
        r = math.exp(self.log_mag + self.log_lo)
        return complex(r * math.cos(self.phase), r * math.sin(self.phase))

    def _parts(self):
        return (self.log_mag, self.log_lo, self.phase, self.phase_err)

    @classmethod
    def _from_parts(cls, hi, lo, ph, err) -> "LogComplex":
        return cls(float(hi), float(ph), float(err), float(lo))

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        return lc_mul(self, other)

    def __add__(self, other: "LogComplex") -> "LogComplex":
        return lc_add(self, other)

    def __sub__(self, other: "LogComplex") -> "LogComplex":
        return lc_add(self, -other)

    def __neg__(self) -> "LogComplex":
        if self.is_zero:
            return self
        return LogComplex(self.log_mag, wrap_phase(self.phase + PI_HI, PI_LO),
                          self.phase_err, self.log_lo)

    def __pow__(self, n: int) -> "LogComplex":
        return lc_pow_int(self, n)

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        return lc_mul(self, other.reciprocal())

    def reciprocal(self) -> "LogComplex":
        if self.is_zero:
            raise ZeroDivisionError("reciprocal of zero")
        return LogComplex(-self.log_mag, wrap_phase(-self.phase), self.phase_err, -self.log_lo)

    def scale(self, log_factor: float, log_factor_lo: float = 0.0) -> "LogComplex":
        """Multiply by the positive real ``exp(log_factor)``."""
        hi, lo = dd_add(self.log_mag, self.log_lo, log_factor, log_factor_lo)
        return LogComplex(float(hi), self.phase, self.phase_err, float(lo))


def lc_mul(a: LogComplex, b: LogComplex) -> LogComplex:
    if a.is_zero or b.is_zero:
        return LogComplex.zero()
    return LogComplex._from_parts(*_mul(a._parts(), b._parts()))


def lc_pow_int(a: LogComplex, n: int) -> LogComplex:
    """``a**n`` for a nonnegative integer ``n``.

    Phase accuracy is maintained for ``n <= 2**30``; beyond that, or whenever
    ``n * a.phase_err`` exceeds 1e-3, the result reports
    ``phase_unreliable``.
    """
    if n < 0:
        raise ValueError("exponent must be nonnegative")
    if n == 0:
        return LogComplex.one()
    if a.is_zero:
        return LogComplex.zero()
    hi, lo, ph, err = _pow(a._parts(), n)
    if n > 2 ** 30:
        err = max(float(err), n * EPS * PI_HI)
    return LogComplex._from_parts(hi, lo, ph, err)


def lc_add(a: LogComplex, b: LogComplex) -> LogComplex:
    if b.is_zero:
        return a
    if a.is_zero:
        return b
    return LogComplex._from_parts(*_add(a._parts(), b._parts()))


# ---------------------------------------------------------------------------

class LogComplexArray:
    """Vectorised counterpart of :class:`LogComplex` (same semantics)."""

    __slots__ = ("hi", "lo", "phase", "err")

    def __init__(self, hi, phase=None, err=None, lo=None):
        self.hi = np.asarray(hi, dtype=float)
        shape = self.hi.shape
        self.lo = np.zeros(shape) if lo is None else np.broadcast_to(np.asarray(lo, dtype=float), shape).copy()
        self.phase = np.zeros(shape) if phase is None else np.broadcast_to(np.asarray(phase, dtype=float), shape).copy()
        self.err = np.zeros(shape) if err is None else np.broadcast_to(np.asarray(err, dtype=float), shape).copy()

    @classmethod
    def from_cartesian(cls, z) -> "LogComplexArray":
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            hi = np.log(np.abs(z))
        return cls(hi, np.where(z == 0, 0.0, np.angle(z)), np.full(z.shape, EPS * PI_HI))

    @classmethod
    def from_scalar(cls, w: LogComplex, shape=()) -> "LogComplexArray":
        return cls(np.full(shape, w.log_mag), np.full(shape, w.phase),
                   np.full(shape, w.phase_err), np.full(shape, w.log_lo))

    @classmethod
    def constant(cls, value: complex, shape) -> "LogComplexArray":
        return cls.from_scalar(LogComplex.from_cartesian(value), shape)

    def __len__(self):
        return len(self.hi)

    @property
    def shape(self):
        return self.hi.shape

    def __getitem__(self, idx) -> "LogComplexArray":
        return LogComplexArray(self.hi[idx], self.phase[idx], self.err[idx], self.lo[idx])

    def __setitem__(self, idx, value: "LogComplexArray"):
        self.hi[idx] = value.hi
        self.lo[idx] = value.lo
        self.phase[idx] = value.phase
        self.err[idx] = value.err

    def item(self, i) -> LogComplex:
        return LogComplex(float(self.hi[i]), float(self.phase[i]), float(self.err[i]), float(self.lo[i]))

    def copy(self) -> "LogComplexArray":
        return LogComplexArray(self.hi.copy(), self.phase.copy(), self.err.copy(), self.lo.copy())

    def _parts(self):
        return (self.hi, self.lo, self.phase, self.err)

    @classmethod
    def _from_parts(cls, hi, lo, ph, err) -> "LogComplexArray":
        return cls(hi, ph, err, lo)

    @property
    def is_zero(self):
        return np.isneginf(self.hi)

    @property
    def phase_unreliable(self):
        return self.err > UNRELIABLE_PHASE

    def to_cartesian(self):
        with np.errstate(over="ignore"):
            r = np.exp(self.hi + self.lo)
        return r * np.exp(1j * self.phase)

    def __mul__(self, other) -> "LogComplexArray":
        other = _as_array_operand(other, self.shape)
        hi, lo, ph, err = _mul(self._parts(), other._parts())
        zero = self.is_zero | other.is_zero
        return LogComplexArray(np.where(zero, -np.inf, hi), np.where(zero, 0.0, ph),
                               np.where(zero, 0.0, err), np.where(zero, 0.0, lo))

    def __add__(self, other) -> "LogComplexArray":
        other = _as_array_operand(other, self.shape)
        return LogComplexArray._from_parts(*_add(self._parts(), other._parts()))

    def __neg__(self) -> "LogComplexArray":
        ph = np.where(self.is_zero, 0.0, wrap_phase(self.phase + PI_HI, PI_LO))
        return LogComplexArray(self.hi, ph, self.err, self.lo)

    def __sub__(self, other) -> "LogComplexArray":
        return self + (-_as_array_operand(other, self.shape))

    def __pow__(self, n: int) -> "LogComplexArray":
        if n == 0:
            return LogComplexArray(np.zeros(self.shape))
        hi, lo, ph, err = _pow(self._parts(), n)
        zero = self.is_zero
        return LogComplexArray(np.where(zero, -np.inf, hi), np.where(zero, 0.0, ph),
                               np.where(zero, 0.0, err), np.where(zero, 0.0, lo))

    def reciprocal(self) -> "LogComplexArray":
        return LogComplexArray(-self.hi, wrap_phase(-self.phase), self.err, -self.lo)

    def __truediv__(self, other) -> "LogComplexArray":
        return self * _as_array_operand(other, self.shape).reciprocal()

    def scale(self, log_factor, log_factor_lo=0.0) -> "LogComplexArray":
        hi, lo = dd_add(self.hi, self.lo, log_factor, log_factor_lo)
        return LogComplexArray(hi, self.phase, self.err, lo)

    def log_minus(self, hi, lo=0.0):
        """``log|self| - (hi + lo)`` as a plain float array."""
        dhi, dlo = dd_sub(self.hi, self.lo, hi, lo)
        return dhi + dlo


def _as_array_operand(x, shape) -> LogComplexArray:
    if isinstance(x, LogComplexArray):
        return x
    if isinstance(x, LogComplex):
        return LogComplexArray.from_scalar(x, shape)
    return LogComplexArray.constant(x, shape)
