"""Uniform channel grid: periodic in x, wall-bounded in y.

Node layout: nx periodic nodes x_j = j*dx on [0, Lx); ny nodes
y_i = i*dy on [0, Ly] with both wall rows present (dy = Ly/(ny-1)).
Arrays are indexed [i, j] = (y-row, x-column).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Grid2:
    Lx: float
    Ly: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise ConfigError(f"domain lengths must be positive, got {self.Lx}, {self.Ly}")
        if self.nx < 8 or self.ny < 8:
            raise ConfigError(f"grid too coarse: nx={self.nx}, ny={self.ny} (need >= 8)")

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / (self.ny - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return self.dy * np.arange(self.ny)

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Cell-area quadrature weights, shape (ny, nx): trapezoid in y
        (half-weight wall rows), uniform in the periodic direction."""
        wy = np.full(self.ny, self.dy)
        wy[0] = wy[-1] = 0.5 * self.dy
        return np.broadcast_to((wy * self.dx)[:, None], (self.ny, self.nx)).copy()

    def snap_offset(self, r) -> tuple[int, int]:
        """Snap a physical offset (rx, ry) to integer grid steps (di, dj)."""
        rx, ry = float(r[0]), float(r[1])
        return int(round(ry / self.dy)), int(round(rx / self.dx))

    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)
