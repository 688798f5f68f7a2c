"""Region and fate rasters, and bit-exact PGM/PPM output."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import OutOfRange
from .grid import CartesianWindow, LogPolarWindow, PixelGrid
from .partition import BatchResult, classify_array, orbit_batch

FATE_PALETTE = np.array([
    [128, 128, 128],  # Undecided
    [40, 80, 200],    # EscapesViaB
    [60, 200, 230],   # FastEscaping
    [200, 40, 40],    # Trapdoor
    [230, 200, 50],   # BoundedCore
], dtype=np.uint8)


def annulus_window(schedule, k: int, theta=(-math.pi, math.pi)) -> LogPolarWindow:
    """Log-polar window exactly covering A_k (anchored at ``log R_k``)."""
    return LogPolarWindow(-math.log(4), math.log(4), theta[0], theta[1], anchor_k=k)


def _row_chunks(fn, z, threads: int):
    """Apply ``fn`` to row blocks of ``z`` (possibly in threads) and stack in row order."""
    ny = z.shape[0]
    if threads <= 1 or ny < 2 * threads:
        return [fn(z)]
    from concurrent.futures import ThreadPoolExecutor

    edges = np.linspace(0, ny, threads + 1).astype(int)
    blocks = [z[a:b] for a, b in zip(edges[:-1], edges[1:])]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, blocks))


def render_regions(schedule, window, resolution, threads: int = 1) -> PixelGrid:
    """Label every pixel centre with its region code ``16 * zone_index + sub``.

    zone_index is 0 for the core, 2k-1 for A_k and 2k for B_k; sub is 0 (none),
    1 (U), 2 (V) or 3 (petal candidate).  Petal indices go to ``layers['petal']``.
    """
    nx, ny = resolution
    z = window.points(nx, ny, schedule)
    parts = _row_chunks(lambda b: classify_array(schedule, b), z, threads)
    codes = np.concatenate([p[0] for p in parts])
    petal = np.concatenate([p[1] for p in parts])
    if np.any(codes < 0):
        raise OutOfRange("window extends beyond the schedule's certified range")
    if codes.max() > 255:
        raise OutOfRange("region codes above 255 cannot be stored")
    g = PixelGrid(window, codes.astype(np.uint8), {"content": "regions"})
    g.layers["petal"] = petal
    return g


def boundary_mask(keys: np.ndarray) -> np.ndarray:
    """Pixels whose 4-neighbourhood holds at least two distinct keys."""
    k = np.asarray(keys)
    m = np.zeros(k.shape, dtype=bool)
    dv = k[1:, :] != k[:-1, :]
    dh = k[:, 1:] != k[:, :-1]
    m[1:, :] |= dv
    m[:-1, :] |= dv
    m[:, 1:] |= dh
    m[:, :-1] |= dh
    return m


def render_fates(schedule, window, resolution, max_iter: int = 50, S=None, threads: int = 1) -> PixelGrid:
    """Fate code (index into FATES) of every pixel centre.

    ``layers['boundary']`` marks pixels bordering a different fate; fates are
    compared by tag together with the escape level (entry index minus entry
    step) so distinct escaping components stay distinct.
    """
    nx, ny = resolution
    z = window.points(nx, ny, schedule)
    codes, _ = classify_array(schedule, z, petals=False)
    if np.any(codes < 0):
        raise OutOfRange("window extends beyond the schedule's certified range")
    parts = _row_chunks(lambda b: orbit_batch(schedule, b, max_iter, S), z, threads)
    res = BatchResult(*(np.concatenate([getattr(p, f) for p in parts])
                        for f in ("fate", "steps", "entry_k", "backward")))
    g = PixelGrid(window, res.fate.astype(np.uint8), {"content": "fates", "max_iter": max_iter})
    g.layers["boundary"] = boundary_mask(res.key())
    g.layers["steps"] = res.steps
    g.layers["backward"] = res.backward
    return g


def render_filled_julia(c, window: CartesianWindow, resolution, max_iter: int = 500) -> PixelGrid:
    from .quadratic import filled_julia_mask

    return filled_julia_mask(c, window, resolution, max_iter)


# ---------------------------------------------------------------------------
# files

def _cells(grid) -> np.ndarray:
    a = np.asarray(getattr(grid, "cells", grid))
    if a.ndim != 2:
        raise ValueError("expected a 2-D grid")
    return a


def write_pgm(grid, path) -> None:
    """Binary ``P5`` greymap, maxval 255, rows top to bottom."""
    a = _cells(grid)
    if a.size and (a.min() < 0 or a.max() > 255):
        raise ValueError("PGM codes must lie in 0..255")
    ny, nx = a.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(a, dtype=np.uint8).tobytes())


def write_ppm(grid, path, palette=FATE_PALETTE) -> None:
    """Binary ``P6`` pixmap with cell codes mapped through ``palette``."""
    a = _cells(grid)
    pal = np.asarray(palette, dtype=np.uint8)
    if a.size and (a.min() < 0 or a.max() >= len(pal)):
        raise ValueError("cell code outside the palette")
    ny, nx = a.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pal[a]).tobytes())


def _read_header(data: bytes, magic: bytes):
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != magic:
        raise ValueError(f"not a {magic.decode()} file")
    return int(fields[1]), int(fields[2]), int(fields[3]), pos + 1


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    nx, ny, maxval, pos = _read_header(data, b"P5")
    if maxval != 255:
        raise ValueError("only maxval 255 is supported")
    return np.frombuffer(data, dtype=np.uint8, count=nx * ny, offset=pos).reshape(ny, nx).copy()


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    nx, ny, maxval, pos = _read_header(data, b"P6")
    return np.frombuffer(data, dtype=np.uint8, count=3 * nx * ny, offset=pos).reshape(ny, nx, 3).copy()


def write_sidecar(grid: PixelGrid, path, schedule_hash: str | None = None) -> None:
    Path(path).write_text(json.dumps(grid.sidecar(schedule_hash), indent=2, sort_keys=True))
