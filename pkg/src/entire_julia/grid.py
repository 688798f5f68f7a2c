"""Sampling windows and pixel grids."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .logcomplex import LogComplexArray


@dataclass(frozen=True)
class CartesianWindow:
    center: complex
    width: float
    height: float

    kind = "cartesian"

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("window width and height must be positive")

    def centers(self, nx: int, ny: int) -> np.ndarray:
        """Complex pixel centres, shape (ny, nx); row 0 is the top edge."""
        c = complex(self.center)
        x = c.real - self.width / 2 + (np.arange(nx) + 0.5) * (self.width / nx)
        y = c.imag + self.height / 2 - (np.arange(ny) + 0.5) * (self.height / ny)
        return x[None, :] + 1j * y[:, None]

    def points(self, nx: int, ny: int, schedule=None) -> LogComplexArray:
        return LogComplexArray.from_cartesian(self.centers(nx, ny))

    def bounds(self) -> dict:
        c = complex(self.center)
        return {"center": [c.real, c.imag], "width": self.width, "height": self.height}


@dataclass(frozen=True)
class LogPolarWindow:
    """Columns run over ``log r`` (left to right), rows over ``theta`` (top = largest).

    With ``anchor_k`` set, the log-radius bounds are offsets from ``log R_k``.
    """

    log_r_min: float
    log_r_max: float
    theta_min: float = -math.pi
    theta_max: float = math.pi
    anchor_k: int | None = None

    kind = "logpolar"

    def __post_init__(self):
        if not (self.log_r_max > self.log_r_min and self.theta_max > self.theta_min):
            raise ValueError("empty log-polar window")

    def axes(self, nx: int, ny: int):
        lr = self.log_r_min + (np.arange(nx) + 0.5) * ((self.log_r_max - self.log_r_min) / nx)
        th = self.theta_max - (np.arange(ny) + 0.5) * ((self.theta_max - self.theta_min) / ny)
        return lr, th

    def points(self, nx: int, ny: int, schedule=None) -> LogComplexArray:
        lr, th = self.axes(nx, ny)
        hi = np.broadcast_to(lr[None, :], (ny, nx)).copy()
        lo = np.zeros((ny, nx))
        if self.anchor_k is not None:
            if schedule is None:
                raise ValueError("an anchored window needs a schedule")
            from .logcomplex import dd_add
            a_hi, a_lo = schedule.logR(self.anchor_k)
            hi, lo = dd_add(a_hi, a_lo, hi, lo)
        phase = np.broadcast_to(th[:, None], (ny, nx)).copy()
        return LogComplexArray(hi, phase, None, lo)

    def bounds(self) -> dict:
        return {"log_r": [self.log_r_min, self.log_r_max], "theta": [self.theta_min, self.theta_max],
                "anchor_k": self.anchor_k}


def window_from_dict(d: dict):
    if d.get("kind", "cartesian") == "cartesian":
        c = d["center"]
        return CartesianWindow(complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c),
                               float(d["width"]), float(d.get("height", d["width"])))
    return LogPolarWindow(float(d["log_r"][0]), float(d["log_r"][1]),
                          float(d.get("theta", [-math.pi, math.pi])[0]),
                          float(d.get("theta", [-math.pi, math.pi])[1]), d.get("anchor_k"))


@dataclass
class PixelGrid:
    window: object
    cells: np.ndarray
    meta: dict = field(default_factory=dict)
    # auxiliary per-pixel arrays, not written to the sidecar
    layers: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cells.ndim != 2 or min(self.cells.shape) < 1:
            raise ValueError("cells must be a nonempty 2-D array")

    @property
    def resolution(self) -> tuple[int, int]:
        ny, nx = self.cells.shape
        return nx, ny

    def sidecar(self, schedule_hash: str | None = None) -> dict:
        nx, ny = self.resolution
        out = {"kind": self.window.kind, "bounds": self.window.bounds(), "resolution": [nx, ny],
               "schedule_hash": schedule_hash}
        out.update(self.meta)
        return out
