"""Box-counting and Whitney critical-exponent dimension estimates."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .construction import cardioid_c
from .errors import InsufficientScales, NoBracket, ResolutionError, Unreachable
from .quadratic import julia_points_iim

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# box counting

@dataclass
class CountsTable:
    levels: np.ndarray
    counts: np.ndarray
    extent: float
    kind: str

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "count"])
            for n, c in zip(self.levels, self.counts):
                w.writerow([int(n), int(c)])


def _as_points(points) -> np.ndarray:
    p = np.asarray(points)
    if np.iscomplexobj(p):
        return np.column_stack([p.real.ravel(), p.imag.ravel()])
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("points must be complex or an (n, 2) array")
    return p


def _pad_pow2(mask: np.ndarray) -> tuple[np.ndarray, int]:
    ny, nx = mask.shape
    M = max(0, math.ceil(math.log2(max(ny, nx))))
    out = np.zeros((1 << M, 1 << M), dtype=bool)
    out[:ny, :nx] = mask
    return out, M


def _or_pool(mask: np.ndarray, factor: int) -> np.ndarray:
    s = mask.shape[0] // factor
    return mask.reshape(s, factor, s, factor).any(axis=(1, 3))


def point_resolution_floor(p: np.ndarray, extent: float) -> int:
    """Finest level whose boxes are no smaller than the median nearest-neighbour gap."""
    from scipy.spatial import cKDTree

    u = np.unique(p, axis=0)
    if len(u) < 2:
        return 0
    d, _ = cKDTree(u).query(u, k=2)
    gap = float(np.median(d[:, 1]))
    return int(math.floor(math.log2(extent / gap)))


def box_count(points=None, mask=None, levels=None) -> CountsTable:
    """Occupied dyadic boxes of side ``2**-n`` (relative to the bounding square).

    Points are boxed over their bounding square; masks over the grid padded
    to a power-of-two square, with level ``n`` boxes made of ``2**(M-n)`` pixels.
    """
    if (points is None) == (mask is None):
        raise ValueError("give exactly one of points or mask")
    if mask is not None:
        m = np.asarray(getattr(mask, "cells", mask)).astype(bool)
        if not m.any():
            raise ValueError("empty mask")
        padded, M = _pad_pow2(m)
        levels = list(range(M + 1)) if levels is None else list(levels)
        counts = []
        for n in levels:
            if n < 0 or n > M:
                raise ResolutionError(f"level {n} is outside 0..{M} for this mask")
            counts.append(int(_or_pool(padded, 1 << (M - n)).sum()))
        return CountsTable(np.array(levels), np.array(counts), float(1 << M), "mask")
    p = _as_points(points)
    if not len(p):
        raise ValueError("empty point set")
    lo = p.min(axis=0)
    L = float((p.max(axis=0) - lo).max())
    if L == 0:
        L = 1.0
    floor = int(math.floor(math.log2(len(p))))
    levels = list(range(floor + 1)) if levels is None else list(levels)
    if levels and max(levels) > floor:
        floor = max(floor, point_resolution_floor(p, L))
    counts = []
    for n in levels:
        if n < 0 or n > floor or n > 31:
            raise ResolutionError(f"level {n} exceeds the resolution floor {floor} of this point set")
        k = 1 << n
        ij = np.minimum(((p - lo) / L * k).astype(np.int64), k - 1)
        counts.append(int(np.unique(ij[:, 0] * k + ij[:, 1]).size))
    return CountsTable(np.array(levels), np.array(counts), L, "points")


@dataclass
class DimensionEstimate:
    value: float
    method: str
    scale_range: tuple
    residual: float
    counts_table: object = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"method": self.method, "value": self.value, "scale_range": list(self.scale_range),
             "residual": self.residual}
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _linfit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


def fit_dimension(table: CountsTable, levels=None) -> DimensionEstimate:
    """Least-squares slope of ``log2 N`` against the level ``n``."""
    lv = np.asarray(table.levels)
    cn = np.asarray(table.counts, dtype=float)
    if levels is not None:
        keep = np.isin(lv, list(levels))
        lv, cn = lv[keep], cn[keep]
    if len(lv) < 4:
        raise InsufficientScales(f"need at least 4 scales, got {len(lv)}")
    if np.any(cn <= 0):
        raise ValueError("counts must be positive")
    slope, _, res = _linfit(lv.astype(float), np.log2(cn))
    rng = (table.extent * 2.0 ** -lv.max(), table.extent * 2.0 ** -lv.min())
    return DimensionEstimate(slope, "box", rng, res, table)


# ---------------------------------------------------------------------------
# Whitney decomposition

@dataclass
class WhitneyDecomposition:
    """Maximal dyadic cubes with ``diam <= dist`` to the complement.

    Cube ``(level, i, j)`` covers rows ``i*s .. (i+1)*s`` and columns
    ``j*s .. (j+1)*s`` of the padded ``2**M`` grid, ``s = 2**(M - level)``.
    """

    level: np.ndarray
    i: np.ndarray
    j: np.ndarray
    M: int
    shape: tuple
    valid_finest: np.ndarray = None

    def __len__(self):
        return int(self.level.size)

    def diam(self) -> np.ndarray:
        """Diameters in units where the padded grid has side 1."""
        return SQRT2 * 2.0 ** -self.level.astype(float)

    def per_level(self, max_level=None) -> tuple[np.ndarray, np.ndarray]:
        top = self.M if max_level is None else max_level
        lv = np.arange(top + 1)
        return lv, np.bincount(self.level, minlength=top + 1)[: top + 1]

    def paint(self) -> np.ndarray:
        """How many cubes cover each pixel of the padded grid."""
        n = 1 << self.M
        cover = np.zeros((n + 1, n + 1), dtype=np.int64)
        s = 1 << (self.M - self.level)
        r0, c0 = self.i * s, self.j * s
        np.add.at(cover, (r0, c0), 1)
        np.add.at(cover, (r0 + s, c0), -1)
        np.add.at(cover, (r0, c0 + s), -1)
        np.add.at(cover, (r0 + s, c0 + s), 1)
        return cover.cumsum(0).cumsum(1)[:n, :n]

    def check(self) -> bool:
        """Pairwise disjoint and covering every pixel valid at the finest level."""
        cover = self.paint()
        if cover.max(initial=0) > 1:
            return False
        if self.valid_finest is not None and np.any(self.valid_finest & (cover == 0)):
            return False
        return True

    def restrict(self, keep: np.ndarray) -> "WhitneyDecomposition":
        return WhitneyDecomposition(self.level[keep], self.i[keep], self.j[keep], self.M,
                                    self.shape, None)


def _min_pool(a: np.ndarray, factor: int) -> np.ndarray:
    s = a.shape[0] // factor
    return a.reshape(s, factor, s, factor).min(axis=(1, 3))


def whitney_decompose(omega, max_level: int | None = None, near_K: bool = True) -> WhitneyDecomposition:
    """Whitney cubes of the open set marked True in ``omega``.

    Distances come from the exact Euclidean distance transform to the nearest
    complement pixel; a cube is admissible when its smallest pixel distance,
    less one pixel, is at least its diameter.  With ``near_K`` the cubes are
    restricted to within one bounding-box diameter of the complement K.
    """
    om = np.asarray(getattr(omega, "cells", omega)).astype(bool)
    if om.all():
        raise ValueError("omega has empty complement")
    padded, M = _pad_pow2(om)
    # padding is outside the window, not part of K
    pad = np.zeros_like(padded)
    pad[: om.shape[0], : om.shape[1]] = True
    K = pad & ~padded
    edt = ndimage.distance_transform_edt(~K)
    edt[~pad] = -np.inf
    top = M if max_level is None else max_level
    if top > M or top < 0:
        raise ResolutionError(f"max_level {top} is outside 0..{M}")

    valid = []
    for n in range(top + 1):
        s = 1 << (M - n)
        valid.append(_min_pool(edt, s) - 1.0 >= SQRT2 * s)
    L, I, J = [], [], []
    for n in range(top + 1):
        v = valid[n]
        if n > 0:
            parent = np.repeat(np.repeat(valid[n - 1], 2, axis=0), 2, axis=1)
            v = v & ~parent
        ii, jj = np.nonzero(v)
        L.append(np.full(ii.size, n))
        I.append(ii)
        J.append(jj)
    dec = WhitneyDecomposition(np.concatenate(L), np.concatenate(I), np.concatenate(J), M,
                               om.shape, valid[top] if top == M else None)
    if near_K:
        ki, kj = np.nonzero(K)
        bbox = math.hypot(ki.max() - ki.min() + 1, kj.max() - kj.min() + 1)
        # a point-like K has no usable bounding box
        bbox = max(bbox, (1 << M) / 8)
        s = 1 << (M - dec.level)
        ci = np.minimum(dec.i * s + s // 2, (1 << M) - 1)
        cj = np.minimum(dec.j * s + s // 2, (1 << M) - 1)
        dec = dec.restrict(edt[ci, cj] <= bbox)
    return dec


DEFAULT_ALPHAS = tuple(np.round(np.arange(-0.5, 2.51, 0.1), 10))


@dataclass
class CriticalExponent:
    value: float
    bracket: tuple
    alphas: np.ndarray
    growth: np.ndarray
    levels: np.ndarray
    partial_sums: np.ndarray
    residual: float

    def as_estimate(self, scale_range) -> DimensionEstimate:
        return DimensionEstimate(self.value, "whitney", scale_range, self.residual,
                                 None, {"bracket": list(self.bracket)})

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "level", "partial_sum"])
            for a, row in zip(self.alphas, self.partial_sums):
                for lv, v in zip(self.levels, row):
                    w.writerow([repr(float(a)), int(lv), repr(float(v))])


def critical_exponent(dec: WhitneyDecomposition, alphas=DEFAULT_ALPHAS, fit_levels=None) -> CriticalExponent:
    """Zero crossing in alpha of the growth rate of the per-level Whitney sums.

    For each alpha the level-L term ``T_L = sum_{level L} diam**alpha`` is fitted
    as ``2**(g L)``; the partial sums ``S_L`` diverge exactly when ``g > 0``.
    The estimate interpolates linearly between the bracketing alphas and is
    clipped at 0.
    """
    alphas = np.asarray(sorted(alphas), dtype=float)
    lv, cnt = dec.per_level()
    if fit_levels is None:
        # coarse levels see the window, the finest one is clipped by the pixel floor
        fit_levels = np.arange(dec.M // 2, dec.M)
    fit_levels = np.asarray(list(fit_levels))
    if len(fit_levels) < 4:
        raise InsufficientScales("need at least 4 levels to fit growth rates")
    diam = SQRT2 * 2.0 ** -lv.astype(float)
    with np.errstate(divide="ignore"):
        logc = np.log2(cnt.astype(float))
    growth = np.empty(alphas.size)
    sums = np.empty((alphas.size, lv.size))
    res = 0.0
    for a_i, a in enumerate(alphas):
        terms = cnt * diam ** a
        sums[a_i] = np.cumsum(terms)
        y = logc[fit_levels] + a * np.log2(diam[fit_levels])
        if not np.all(np.isfinite(y)):
            raise InsufficientScales("empty Whitney levels inside the fit range")
        g, _, r = _linfit(fit_levels.astype(float), y)
        growth[a_i] = g
        res = max(res, r)
    sign = np.sign(growth)
    cross = np.flatnonzero((sign[:-1] > 0) & (sign[1:] <= 0))
    if cross.size == 0:
        if np.all(growth <= 0) and alphas[0] <= 0:
            value, br = 0.0, (alphas[0], alphas[0])
        else:
            raise NoBracket("growth rate does not change sign over the tested alphas")
    else:
        i = int(cross[0])
        a0, a1, g0, g1 = alphas[i], alphas[i + 1], growth[i], growth[i + 1]
        value = a0 + g0 * (a1 - a0) / (g0 - g1)
        br = (a0, a1)
    return CriticalExponent(max(0.0, float(value)), (float(br[0]), float(br[1])), alphas, growth,
                            lv, sums, res)


# ---------------------------------------------------------------------------
# base quadratic

def default_point_levels(n_points: int) -> list:
    top = max(8, int(math.floor(math.log2(n_points))) - 6)
    return list(range(4, top + 1))


def estimate_quadratic_dim(c: complex, n_points: int = 10 ** 6, seed: int = 0,
                           levels=None, check_points: int | None = 10 ** 5) -> DimensionEstimate:
    """Box-count dimension of inverse-iteration samples of J(z**2 + c).

    When ``check_points`` is set, a second estimate from that many points is
    attached as a convergence diagnostic.
    """
    pts = julia_points_iim(c, n_points, seed)
    lv = default_point_levels(n_points) if levels is None else levels
    est = fit_dimension(box_count(points=pts, levels=lv))
    est.extra["n_points"] = n_points
    c = complex(c)
    est.extra["c"] = [c.real, c.imag]
    if check_points:
        sub = fit_dimension(box_count(points=pts[:check_points], levels=default_point_levels(check_points)))
        est.extra["convergence"] = {"n_points": [check_points, n_points], "values": [sub.value, est.value]}
    return est


def small_c_dimension(c: complex) -> float:
    """Small-|c| asymptotic ``1 + |c|**2 / (4 ln 2)``."""
    return 1.0 + abs(complex(c)) ** 2 / (4 * math.log(2))


@dataclass
class FindCResult:
    mu: float
    c: complex
    estimate: float
    best_effort: bool
    history: list


def find_c_for_dimension(s: float, tol: float = 0.02, n_points: int = 2 * 10 ** 5, seed: int = 0,
                         t_range=(0.02, 0.98), max_steps: int = 20) -> FindCResult:
    """Bisection over real ``mu = t`` for a target box-count dimension.

    The estimate is treated as increasing in t; targets outside the values
    at the ends of ``t_range`` (widened by ``tol``) raise :class:`Unreachable`.
    """
    def est(t):
        return estimate_quadratic_dim(cardioid_c(t), n_points, seed, check_points=None).value

    t_lo, t_hi = t_range
    e_lo, e_hi = est(t_lo), est(t_hi)
    history = [(t_lo, e_lo), (t_hi, e_hi)]
    if not (e_lo - tol <= s <= e_hi + tol):
        raise Unreachable(s, (e_lo, e_hi))
    best = min(history, key=lambda p: abs(p[1] - s))
    a, b = t_lo, t_hi
    for _ in range(max_steps):
        if abs(best[1] - s) <= tol:
            break
        m = 0.5 * (a + b)
        e = est(m)
        history.append((m, e))
        if abs(e - s) < abs(best[1] - s):
            best = (m, e)
        if e < s:
            a = m
        else:
            b = m
    t, e = best
    return FindCResult(t, cardioid_c(t), e, abs(e - s) > tol, history)


# ---------------------------------------------------------------------------
# estimator objects

class BoxCountingDimension(BaseEstimator):
    """Box-counting dimension of a point cloud ``(n, 2)`` or a 2-D mask."""

    def __init__(self, levels=None, input="points"):
        self.levels = levels
        self.input = input

    def fit(self, X, y=None):
        if self.input == "points":
            X = check_array(X, ensure_min_features=2)
            table = box_count(points=X)
        elif self.input == "mask":
            X = check_array(X, dtype=None, ensure_min_features=1)
            table = box_count(mask=X)
        else:
            raise ValueError("input must be 'points' or 'mask'")
        self.counts_ = table
        self.estimate_ = fit_dimension(table, self.levels)
        self.dimension_ = self.estimate_.value
        return self


class WhitneyCriticalExponent(BaseEstimator):
    """Critical exponent of the Whitney decomposition of the complement of a mask of K."""

    def __init__(self, alphas=DEFAULT_ALPHAS, fit_levels=None, max_level=None):
        self.alphas = alphas
        self.fit_levels = fit_levels
        self.max_level = max_level

    def fit(self, X, y=None):
        K = check_array(X, dtype=None).astype(bool)
        self.decomposition_ = whitney_decompose(~K, self.max_level)
        self.result_ = critical_exponent(self.decomposition_, self.alphas, self.fit_levels)
        self.dimension_ = self.result_.value
        return self

    def partial_sums(self):
        check_is_fitted(self, "result_")
        return self.result_.partial_sums


class QuadraticJuliaDimension(BaseEstimator):
    """Box-count dimension of J(z**2 + c) for each parameter in ``X`` (complex, shape (n,))."""

    def __init__(self, n_points=10 ** 6, seed=0, levels=None):
        self.n_points = n_points
        self.seed = seed
        self.levels = levels

    def fit(self, X, y=None):
        cs = np.atleast_1d(np.asarray(X, dtype=complex)).ravel()
        self.estimates_ = [estimate_quadratic_dim(c, self.n_points, self.seed, self.levels, None) for c in cs]
        self.dimensions_ = np.array([e.value for e in self.estimates_])
        return self

    def predict(self, X):
        check_is_fitted(self, "dimensions_")
        return np.array([estimate_quadratic_dim(c, self.n_points, self.seed, self.levels, None).value
                         for c in np.atleast_1d(np.asarray(X, dtype=complex)).ravel()])
