"""Plane decomposition into the core disk and the annuli A_k, B_k, and orbit fates.

Annuli are half-open in |z|:

    Core:  |z| < R_1/4
    A(k):  R_k/4 <= |z| < 4 R_k
    B(k):  4 R_k <= |z| < R_{k+1}/4

Inside A(k) the bands V_k (3/2 <= |z/R_k| <= 5/2) and U_k (5/4 <= |z/R_k| <= 3)
are flagged, and the remaining points are tested for membership in a petal
of ``H_{n_k}``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .construction import (
    LOG4,
    Schedule,
    circle_max,
    eval_f,
    eval_f_array,
    n_index,
)
from .errors import OutOfRange, PrecisionLoss
from .logcomplex import LN2_HI, PI_HI, TWO_PI_HI, LogComplex, LogComplexArray, dd_add, dd_sub
from .report import CheckReport

ZONES = ("Core", "A", "B")
SUBZONES = (None, "U", "V", "PetalCandidate")
LOG_U = (math.log(1.25), math.log(3.0))
LOG_V = (math.log(1.5), math.log(2.5))
LEVEL_TOL = 1e-9
TRAP_TOL = 1e-6

# petal_membership_array codes; petals are 0..m-1
INNER, OUTER, BOUNDARY = -1, -2, -3


@dataclass(frozen=True)
class RegionLabel:
    zone: str
    k: int | None = None
    subzone: str | None = None
    petal_hint: int | None = None

    @property
    def code(self) -> int:
        """``16 * zone_index + sub``; zone_index is 0 for Core, 2k-1 for A_k, 2k for B_k."""
        zi = 0 if self.zone == "Core" else (2 * self.k - 1 if self.zone == "A" else 2 * self.k)
        return 16 * zi + SUBZONES.index(self.subzone)

    @classmethod
    def from_code(cls, code: int, petal_hint: int | None = None) -> "RegionLabel":
        zi, sub = divmod(int(code), 16)
        if zi == 0:
            return cls("Core")
        k = (zi + 1) // 2
        return cls("A" if zi % 2 else "B", k, SUBZONES[sub], petal_hint)

    def __str__(self):
        s = self.zone if self.k is None else f"{self.zone}({self.k})"
        if self.subzone:
            s += f"/{self.subzone}"
        if self.petal_hint is not None:
            s += f"#{self.petal_hint}"
        return s


# ---------------------------------------------------------------------------
# petals of H_m(w) = w^m (2 - w^m)

def petal_membership_array(m: int, w: LogComplexArray, tol: float = LEVEL_TOL) -> np.ndarray:
    """Petal index (0..m-1), or INNER / OUTER / BOUNDARY, for each ``w``.

    The sublevel set ``|H_m| < 1`` is, in ``s = w**m``, the region
    ``|1 - (1-s)**2| < 1``.  Its two lobes meet only at ``s = 1`` and are
    separated by the line ``Re s = 1``, on which ``|H| >= 1``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    s = w ** m
    two = LogComplexArray(np.full(w.shape, LN2_HI))
    logH = (s * (two - s)).hi
    out = np.full(w.shape, OUTER, dtype=np.int64)
    inside = logH < -tol
    near = np.abs(logH) <= tol
    out[near] = BOUNDARY
    if inside.any():
        with np.errstate(over="ignore", invalid="ignore"):
            re = s[inside].to_cartesian().real
        idx = np.rint(m * w.phase[inside] / TWO_PI_HI).astype(np.int64) % m
        cls = np.where(re > 1 + tol, idx, np.where(re < 1 - tol, INNER, BOUNDARY))
        out[inside] = cls
    return out


def petal_membership(m: int, w: LogComplex) -> str:
    """``'petal(i)'``, ``'inner'``, ``'outer'`` or ``'boundary_zone'``."""
    code = int(petal_membership_array(m, LogComplexArray.from_scalar(w, (1,)))[0])
    if code >= 0:
        return f"petal({code})"
    return {INNER: "inner", OUTER: "outer", BOUNDARY: "boundary_zone"}[code]


# ---------------------------------------------------------------------------
# classification

def zone_bounds(schedule: Schedule) -> np.ndarray:
    """Lower log-radius of zone index 1, 2, ... (A_1, B_1, A_2, ...) and the certified limit."""
    edges = []
    for k in range(1, schedule.top + 1):
        hi, lo = schedule.logR(k)
        edges.append(dd_sub(hi, lo, *LOG4))
        edges.append(dd_add(hi, lo, *LOG4))
    # the last entry (4 R_{K+1}) is replaced by the certified limit R_{K+1}/4
    edges[-1] = schedule.certified_log_radius
    return np.array(edges)


def classify_array(schedule: Schedule, z: LogComplexArray, petals: bool = True):
    """Vectorised :func:`classify`.

    Returns ``(codes, petal)``; ``codes`` is -1 beyond the certified range and
    ``petal`` is the petal index (or -1) for PetalCandidate points.
    """
    edges = zone_bounds(schedule)
    n_edges = len(edges) - 1
    # double-double comparison: count edges not exceeding |z|
    zi = np.zeros(z.shape, dtype=np.int64)
    for e_hi, e_lo in edges[:n_edges]:
        d_hi, d_lo = dd_sub(z.hi, z.lo, e_hi, e_lo)
        zi += (d_hi + d_lo) >= 0
    lim_hi, lim_lo = edges[n_edges]
    d_hi, d_lo = dd_sub(z.hi, z.lo, lim_hi, lim_lo)
    beyond = (d_hi + d_lo) >= 0
    codes = 16 * zi
    petal = np.full(z.shape, -1, dtype=np.int64)
    for k in range(1, schedule.K_max + 1):
        inA = (zi == 2 * k - 1) & ~beyond
        if not inA.any():
            continue
        hi, lo = schedule.logR(k)
        lu_hi, lu_lo = dd_sub(z.hi[inA], z.lo[inA], hi, lo)
        lu = lu_hi + lu_lo
        sub = np.zeros(lu.shape, dtype=np.int64)
        isU = (lu >= LOG_U[0]) & (lu <= LOG_U[1])
        isV = (lu >= LOG_V[0]) & (lu <= LOG_V[1])
        sub[isU] = 1
        sub[isV] = 2
        if petals:
            rest = np.flatnonzero(~isU)
            if rest.size:
                za = z[inA]
                w = za[rest].scale(-hi, -lo)
                pm = petal_membership_array(schedule.n[k], w)
                hit = pm >= 0
                sub[rest[hit]] = 3
                tmp = np.full(lu.shape, -1, dtype=np.int64)
                tmp[rest[hit]] = pm[hit]
                petal[inA] = tmp
        codes[inA] += sub
    codes[beyond] = -1
    petal[beyond] = -1
    return codes, petal


def classify(schedule: Schedule, z: LogComplex) -> RegionLabel:
    """Zone, band and petal candidacy of ``z``.

    Raises :class:`OutOfRange` at or past ``R_{K_max+1}/4``.
    """
    codes, petal = classify_array(schedule, LogComplexArray.from_scalar(z, (1,)))
    code = int(codes[0])
    if code < 0:
        raise OutOfRange("point lies beyond the schedule's certified range")
    p = int(petal[0])
    return RegionLabel.from_code(code, p if p >= 0 else None)


def zone_level(codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split codes into (zone letter index 0/1/2, k)."""
    zi = np.asarray(codes) // 16
    zone = np.where(zi == 0, 0, np.where(zi % 2 == 1, 1, 2))
    k = (zi + 1) // 2
    return zone, k


# ---------------------------------------------------------------------------
# orbits

FATES = ("Undecided", "EscapesViaB", "FastEscaping", "Trapdoor", "BoundedCore")


@dataclass
class OrbitFate:
    tag: str
    detail: dict = field(default_factory=dict)


@dataclass
class Step:
    n: int
    label: RegionLabel
    log_abs: float
    phase: float


@dataclass
class Itinerary:
    steps: list
    backward_events: list
    fate: OrbitFate
    flags: dict = field(default_factory=dict)

    def recompute_backward_events(self) -> list:
        out = []
        for a, b in zip(self.steps, self.steps[1:]):
            if a.label.zone == "A" and b.label.zone == "A" and b.label.k <= a.label.k:
                out.append(a.n)
        return out


@dataclass
class SSequence:
    log_S: np.ndarray
    truncated: bool


def compute_S_sequence(schedule: Schedule, S0: float | None = None, length: int = 8,
                       log_S0: float | None = None) -> SSequence:
    """``S_{n+1} = max_{|z| = S_n} |f(z)|`` in log form, starting in B_1.

    Stops (``truncated=True``) once the next circle would leave the certified range.
    """
    if log_S0 is None:
        if S0 is None:
            raise ValueError("give S0 or log_S0")
        log_S0 = math.log(S0)
    lr1 = schedule.logR(1)[0]
    if not (lr1 + LOG4[0] <= log_S0 < schedule.logR(2)[0] - LOG4[0]):
        raise ValueError("the circle |z| = S0 must lie in B_1")
    limit = schedule.certified_log_radius[0]
    out = [float(log_S0)]
    sc = schedule.scales
    while len(out) < length:
        cur = out[-1]
        k = int(np.searchsorted(schedule.logR_hi[1:schedule.top + 1], cur, side="right"))
        n_coarse = min(max(2 ** 14, 16 * n_index(schedule.N, min(k + 1, 40))), 2 ** 24)
        hi, lo, _ = circle_max(sc, (cur, 0.0), schedule.top, n_coarse)
        if hi >= limit:
            return SSequence(np.array(out), True)
        out.append(hi)
    return SSequence(np.array(out), False)


def _fast_escaping(log_abs_chain, log_S, rtol=1e-12) -> bool:
    """Is there a shift j with ``|z_n| >= S_{j+n}`` along the whole known chain?"""
    a = np.asarray(log_abs_chain)
    S = np.asarray(log_S)
    for j in range(len(S)):
        m = min(len(a), len(S) - j)
        if m < 2:
            break
        if np.all(a[:m] >= S[j:j + m] - rtol * np.abs(S[j:j + m])):
            return True
    return False


def _fixed_point(schedule: Schedule) -> complex:
    return schedule.mu / 2


def orbit(schedule: Schedule, z0: LogComplex, max_iter: int = 100, rel_tol: float = 1e-10,
          S: SSequence | None = None, strict: bool = False) -> Itinerary:
    """Iterate ``f`` from ``z0`` and record the zone of every iterate.

    Stops on entering any B(k) (EscapesViaB, upgraded to FastEscaping when an
    S-sequence is given and the chain dominates it), on landing within 1e-6 of
    the attracting fixed point in the core (Trapdoor), on leaving the certified
    range, or on phase-precision loss.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    steps, flags = [], {}
    z = z0
    fate = None
    fp = _fixed_point(schedule)
    for n in range(max_iter + 1):
        try:
            lab = classify(schedule, z)
        except OutOfRange:
            fate = OrbitFate("Undecided", {"reason": "out_of_range", "step": n})
            break
        steps.append(Step(n, lab, z.log_abs, z.phase))
        if lab.zone == "B":
            fate = OrbitFate("EscapesViaB", {"entry": n, "k": lab.k})
            if S is not None:
                chain = [z.log_abs]
                w = z
                while True:
                    try:
                        w = eval_f(schedule, w, rel_tol)
                        classify(schedule, w)
                    except OutOfRange:
                        break
                    chain.append(w.log_abs)
                if _fast_escaping(chain, S.log_S):
                    fate = OrbitFate("FastEscaping", {"entry": n, "k": lab.k, "chain": len(chain)})
            break
        if lab.zone == "Core" and abs(z.to_cartesian() - fp) < TRAP_TOL:
            fate = OrbitFate("Trapdoor", {"entry": n})
            break
        if n == max_iter:
            break
        try:
            z = eval_f(schedule, z, rel_tol)
        except OutOfRange:
            fate = OrbitFate("Undecided", {"reason": "out_of_range", "step": n + 1})
            break
        if z.phase_unreliable:
            flags["precision_loss"] = n + 1
            it = Itinerary(steps, [], OrbitFate("Undecided", {"reason": "precision_loss", "step": n + 1}), flags)
            it.backward_events = it.recompute_backward_events()
            if strict:
                err = PrecisionLoss(f"phase unreliable at step {n + 1}")
                err.itinerary = it
                raise err
            return it
    if fate is None:
        if steps and steps[-1].label.zone == "Core":
            fate = OrbitFate("BoundedCore", {"max_iter": max_iter})
        else:
            fate = OrbitFate("Undecided", {"reason": "max_iter", "max_iter": max_iter})
    it = Itinerary(steps, [], fate, flags)
    it.backward_events = it.recompute_backward_events()
    return it


@dataclass
class BatchResult:
    """Per-seed outcome of :func:`orbit_batch`; ``fate`` indexes FATES."""

    fate: np.ndarray
    steps: np.ndarray
    entry_k: np.ndarray
    backward: np.ndarray

    def key(self) -> np.ndarray:
        """Fate key constant on Fatou components: tag and escape level ``k - steps``."""
        lvl = np.where(self.fate >= 1, self.entry_k - self.steps, 0)
        lvl = np.where((self.fate == 1) | (self.fate == 2), lvl, 0)
        return self.fate.astype(np.int64) * 4096 + lvl


def orbit_batch(schedule: Schedule, z0: LogComplexArray, max_iter: int = 100,
                S: SSequence | None = None, chunk: int = 2 ** 16) -> BatchResult:
    """Vectorised orbits with the same stopping rules as :func:`orbit`.

    Uses every known factor of ``f`` (no per-point truncation), which is exact
    to working precision inside the certified range.
    """
    shape = z0.shape
    flat = LogComplexArray(z0.hi.ravel(), z0.phase.ravel(), z0.err.ravel(), z0.lo.ravel())
    P = flat.shape[0]
    fate = np.zeros(P, dtype=np.int64)
    steps = np.zeros(P, dtype=np.int64)
    entry_k = np.zeros(P, dtype=np.int64)
    back = np.zeros(P, dtype=np.int64)
    fp = _fixed_point(schedule)
    for s0 in range(0, P, chunk):
        idx = np.arange(s0, min(P, s0 + chunk))
        z = flat[idx]
        prev_zone = np.full(idx.shape, -1)
        prev_k = np.zeros(idx.shape, dtype=np.int64)
        for n in range(max_iter + 1):
            codes, _ = classify_array(schedule, z, petals=False)
            zone, k = zone_level(codes)
            out = codes < 0
            zone = np.where(out, -1, zone)
            back[idx] += (prev_zone == 1) & (zone == 1) & (k <= prev_k)
            steps[idx] = n
            done = out.copy()
            inB = zone == 2
            fate[idx[inB]] = 1
            entry_k[idx[inB]] = k[inB]
            done |= inB
            core = zone == 0
            if core.any():
                zc = z[core].to_cartesian()
                trap = np.zeros(core.shape, dtype=bool)
                trap[core] = np.abs(zc - fp) < TRAP_TOL
                fate[idx[trap]] = 3
                done |= trap
            if n == max_iter:
                fate[idx[core & ~done]] = 4
                break
            keep = ~done
            if S is not None and inB.any():
                _upgrade_fast(schedule, z[inB], idx[inB], fate, S)
            if not keep.any():
                break
            idx, z = idx[keep], z[keep]
            prev_zone, prev_k = zone[keep], k[keep]
            z = eval_f_array(schedule, z)
            bad = z.phase_unreliable
            if bad.any():
                steps[idx[bad]] = n + 1
                idx, z = idx[~bad], z[~bad]
                prev_zone, prev_k = prev_zone[~bad], prev_k[~bad]
                if not idx.size:
                    break
    return BatchResult(fate.reshape(shape), steps.reshape(shape), entry_k.reshape(shape),
                       back.reshape(shape))


def _upgrade_fast(schedule, z, idx, fate, S):
    chains = [z.hi.copy()]
    limit = schedule.certified_log_radius[0]
    w = z
    while True:
        w = eval_f_array(schedule, w)
        if not np.all(w.hi < limit):
            break
        chains.append(w.hi.copy())
    chains = np.array(chains)
    for i in range(len(idx)):
        if _fast_escaping(chains[:, i], S.log_S):
            fate[idx[i]] = 2


@dataclass
class FateSummary:
    seeds: LogComplexArray
    result: BatchResult
    max_iter: int

    @property
    def counts(self) -> dict:
        f = self.result.fate.ravel()
        return {name: int(np.sum(f == i)) for i, name in enumerate(FATES)}

    @property
    def backward_histogram(self) -> dict:
        vals, cnt = np.unique(self.result.backward.ravel(), return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, cnt)}

    def fraction_with_backward(self) -> float:
        return float(np.mean(self.result.backward.ravel() >= 1))

    def to_csv(self, path):
        z = self.seeds
        with np.errstate(over="ignore", invalid="ignore"):
            zc = z.to_cartesian().ravel()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed_re", "seed_im", "log_r", "theta", "fate", "steps", "backward_events"])
            for i in range(zc.size):
                w.writerow([repr(float(zc[i].real)), repr(float(zc[i].imag)),
                            repr(float(z.hi.ravel()[i])), repr(float(z.phase.ravel()[i])),
                            FATES[int(self.result.fate.ravel()[i])],
                            int(self.result.steps.ravel()[i]), int(self.result.backward.ravel()[i])])


def fate_statistics(schedule: Schedule, seeds: LogComplexArray, max_iter: int = 100,
                    S: SSequence | None = None) -> FateSummary:
    """Fate counts and backward-event histogram for a seed set."""
    return FateSummary(seeds, orbit_batch(schedule, seeds, max_iter, S), max_iter)


# ---------------------------------------------------------------------------

def _circle(schedule: Schedule, k: int, log_factor: float, n: int, rng) -> LogComplexArray:
    hi, lo = schedule.logR(k)
    theta = -PI_HI + (np.arange(n) + rng.uniform()) * (TWO_PI_HI / n)
    r_hi, r_lo = dd_add(hi, lo, log_factor, 0.0)
    return LogComplexArray(np.full(n, r_hi), theta, None, np.full(n, r_lo))


def _window_margin(f: LogComplexArray, lo_edge, hi_edge) -> float:
    """Smallest signed distance (in log) of ``log|f|`` inside ``[lo, hi)``."""
    a = f.log_minus(*lo_edge)
    b = -f.log_minus(*hi_edge)
    return float(min(a.min(), b.min()))


def check_mapping(schedule: Schedule, n_samples: int = 2 ** 12, seed: int = 0,
                  n_B_circles: int = 4) -> CheckReport:
    """Sampled containments for the boundary circles of V_k and for B_k.

    For each k <= K_max - 1: ``f(|z| = 5R_k/2)`` must land in the B_{k+1}
    window, ``f(|z| = 3R_k/2)`` in the B_k window, and images of circles in
    B_k in the B_{k+1} window.
    """
    rng = np.random.default_rng(seed)
    rep = CheckReport()

    def window(k):
        return dd_add(*schedule.logR(k), *LOG4), dd_sub(*schedule.logR(k + 1), *LOG4)

    for k in range(1, schedule.K_max):
        lo_edge, hi_edge = window(k + 1)
        f = eval_f_array(schedule, _circle(schedule, k, math.log(2.5), n_samples, rng))
        m = _window_margin(f, lo_edge, hi_edge)
        rep.add(f"thm_8_2_outer_V{k}", "pass" if m > 0 else "fail", m, 0.0)

        lo_edge, hi_edge = window(k)
        f = eval_f_array(schedule, _circle(schedule, k, math.log(1.5), n_samples, rng))
        m = _window_margin(f, lo_edge, hi_edge)
        rep.add(f"thm_8_2_inner_V{k}", "pass" if m > 0 else "fail", m, 0.0)

        lo_edge, hi_edge = window(k + 1)
        top = schedule.logR_hi[k + 1] - schedule.logR_hi[k] - LOG4[0]
        radii = [math.log(8.0)] + list(rng.uniform(LOG4[0], top, n_B_circles - 1))
        worst = math.inf
        for lf in radii:
            f = eval_f_array(schedule, _circle(schedule, k, lf, n_samples, rng))
            worst = min(worst, _window_margin(f, lo_edge, hi_edge))
        rep.add(f"thm_8_2_B{k}", "pass" if worst > 0 else "fail", worst, 0.0)
    return rep
