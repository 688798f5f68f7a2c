"""Dynamics of the base polynomial f_0(z) = z**2 + c."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import PixelGrid


@dataclass(frozen=True)
class Escaped:
    step: int


def f0_iterate(z: complex, c: complex, n: int):
    """``f_0^n(z)``, or :class:`Escaped` once ``|z| > 2 + |c|``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    z, c = complex(z), complex(c)
    radius = 2 + abs(c)
    for step in range(1, n + 1):
        z = z * z + c
        if abs(z) > radius:
            return Escaped(step)
    return z


def escape_steps(z: np.ndarray, c: complex, max_iter: int) -> np.ndarray:
    """First step at which ``|f_0^n(z)| > 2 + |c|``; ``max_iter + 1`` if never."""
    z = np.array(z, dtype=complex)
    radius = 2 + abs(c)
    out = np.full(z.shape, max_iter + 1, dtype=np.int64)
    out[np.abs(z) > radius] = 0
    live = np.flatnonzero((out > max_iter).ravel())
    w = z.ravel()[live]
    flat = out.ravel()
    for step in range(1, max_iter + 1):
        if not live.size:
            break
        w = w * w + c
        esc = np.abs(w) > radius
        flat[live[esc]] = step
        live, w = live[~esc], w[~esc]
    return flat.reshape(z.shape)


def filled_julia_mask(c: complex, window, resolution, max_iter: int = 500) -> PixelGrid:
    """Code 1 where the pixel centre survives ``max_iter`` steps, else 0."""
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    nx, ny = resolution
    steps = escape_steps(window.centers(nx, ny), c, max_iter)
    return PixelGrid(window, (steps > max_iter).astype(np.uint8),
                     {"c": [complex(c).real, complex(c).imag], "max_iter": max_iter})


def in_main_cardioid(c: complex) -> bool:
    return abs(1 - np.sqrt(1 - 4 * complex(c))) < 1


def repelling_fixed_point(c: complex) -> complex:
    """Root of ``z**2 - z + c`` with ``|2z| > 1``."""
    if not in_main_cardioid(c):
        raise DomainError(f"c = {c} is outside the main cardioid")
    roots = np.roots([1, -1, complex(c)])
    return complex(roots[np.argmax(np.abs(roots))])


def julia_points_iim(c: complex, count: int, seed: int = 0, burn_in: int = 100,
                     chains: int = 1024) -> np.ndarray:
    """Points of J(z**2 + c) by random inverse iteration from the repelling fixed point.

    ``chains`` independent walkers advance together; each one discards
    ``burn_in`` steps before recording.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    c = complex(c)
    z0 = repelling_fixed_point(c)
    rng = np.random.default_rng(seed)
    chains = min(chains, count)
    per = -(-count // chains)
    z = np.full(chains, z0, dtype=complex)
    for _ in range(burn_in):
        z = np.sqrt(z - c) * rng.choice((-1.0, 1.0), chains)
    out = np.empty((per, chains), dtype=complex)
    for i in range(per):
        z = np.sqrt(z - c) * rng.choice((-1.0, 1.0), chains)
        out[i] = z
    return out.ravel()[:count]


def write_points_csv(points: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for p in np.asarray(points, dtype=complex):
            w.writerow([repr(float(p.real)), repr(float(p.imag))])
