"""Test geometries and the acceptance result log."""
import numpy as np

ACCEPTANCE = {}


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    return line


def segment_mask(n=4096, frac=0.75):
    m = np.zeros((n, n), dtype=bool)
    a = int(n * (1 - frac) / 2)
    m[n // 2, a:a + int(n * frac)] = True
    return m


def square_mask(n=4096, frac=0.75):
    m = np.zeros((n, n), dtype=bool)
    a = int(n * (1 - frac) / 2)
    b = a + int(n * frac)
    m[a:b, a:b] = True
    return m


def cantor_indicator(n, depth):
    """Pixels of [0, 1) whose centre survives ``depth`` middle-third removals."""
    u = (np.arange(n) + 0.5) / n
    ok = np.ones(n, dtype=bool)
    for _ in range(depth):
        u = u * 3
        d = np.floor(u)
        ok &= d != 1
        u -= d
    return ok


def cantor_points(depth=12):
    """Left endpoints of the depth-``depth`` middle-thirds intervals, on the real axis."""
    x = np.zeros(1)
    for d in range(1, depth + 1):
        x = np.concatenate([x, x + 2 * 3.0 ** -d])
    return x + 0j


def cantor_dust_mask(n=4096, depth=7):
    """Product dust with one pixel per depth-``depth`` interval in a 3**depth sub-square."""
    side = 3 ** depth
    c = cantor_indicator(side, depth)
    m = np.zeros((n, n), dtype=bool)
    m[:side, :side] = np.outer(c, c)
    return m
