"""Channel geometry: wall distance, projection to the nearest wall, boundary
strips and tube integration.

The domain is Omega = [0,Lx) x [0,Ly], periodic in x with solid walls at
y = 0 and y = Ly. Everything here is closed form: d(x) = min(y, Ly - y),
the projection pi(x) drops straight down/up, and the level set
N(y) = {d = y} has measure 2*Lx (both walls).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grid import Grid2


@dataclass(frozen=True)
class ChannelDomain:
    """Flat channel with its grid.

    h_omega = Ly/2 is the threshold below which the nearest-wall projection
    is unique; tie_tolerance (= dy/2) guards the equidistant midline.
    """

    grid: Grid2
    tie_tolerance: float = field(default=0.0)

    def __post_init__(self):
        if self.tie_tolerance == 0.0:
            object.__setattr__(self, "tie_tolerance", 0.5 * self.grid.dy)

    @property
    def Lx(self) -> float:
        return self.grid.Lx

    @property
    def Ly(self) -> float:
        return self.grid.Ly

    @property
    def h_omega(self) -> float:
        return 0.5 * self.grid.Ly

    # -- pointwise geometry -------------------------------------------------

    def distance(self, point) -> float:
        """Distance to the nearest wall, d(x) = min(y, Ly - y)."""
        y = float(point[1])
        if y < 0.0 or y > self.Ly:
            raise ConfigError(f"point y={y} outside channel [0, {self.Ly}]")
        return min(y, self.Ly - y)

    def project_to_wall(self, point):
        """Nearest boundary point and outward normal, ((x, wall_y), n_hat).

        Raises ConfigError for points too close to the midline, where the
        projection is not unique.
        """
        x, y = float(point[0]), float(point[1])
        d = self.distance(point)
        if abs(y - 0.5 * self.Ly) <= self.tie_tolerance:
            raise ConfigError(
                f"projection not unique at y={y} (within {self.tie_tolerance} of midline)"
            )
        if d >= self.h_omega - self.tie_tolerance:
            raise ConfigError(f"distance {d} too close to h_omega={self.h_omega}")
        if y < 0.5 * self.Ly:
            return (x, 0.0), (0.0, -1.0)
        return (x, self.Ly), (0.0, 1.0)

    # -- gridded geometry ---------------------------------------------------

    def distance_field(self) -> np.ndarray:
        """d(x) sampled at every node, shape (ny, nx)."""
        y = self.grid.y
        d = np.minimum(y, self.Ly - y)
        return np.broadcast_to(d[:, None], self.grid.shape()).copy()

    def normal_field(self) -> np.ndarray:
        """Outward normal of the nearest wall, n_hat(pi(x)), shape (2, ny, nx).

        The midline row (if any) gets the bottom-wall normal; callers that
        care about uniqueness must stay below h_omega.
        """
        ny, nx = self.grid.shape()
        n = np.zeros((2, ny, nx))
        bottom = self.grid.y < 0.5 * self.Ly
        n[1, bottom, :] = -1.0
        n[1, ~bottom, :] = 1.0
        return n

    def strip_region(self, a: float, side: str = "near") -> np.ndarray:
        """Boolean mask of Omega_a = {d < a} ("near") or Omega^a = {d >= a}
        ("far"). The two masks partition the grid."""
        if not (0.0 < a < 0.5 * self.Ly):
            raise ConfigError(f"strip width a={a} outside (0, {0.5 * self.Ly})")
        near = self.distance_field() < a
        if side == "near":
            return near
        if side == "far":
            return ~near
        raise ConfigError(f"side must be 'near' or 'far', got {side!r}")

    def tube_integral(self, profile, h: float) -> float:
        """integral over Omega_h of f(d(x)) dx, via the coarea form
        int_0^h f(y) |N(y)| dy with |N(y)| = 2*Lx.

        Composite trapezoid on the grid-aligned nodes of [0, h], with the
        partial end panel closed by evaluating f at y = h exactly.
        """
        if not (0.0 < h < 0.5 * self.Ly):
            raise ConfigError(f"tube depth h={h} outside (0, {0.5 * self.Ly})")
        dy = self.grid.dy
        n_full = int(np.floor(h / dy * (1 + 1e-12)))
        nodes = dy * np.arange(n_full + 1)
        if nodes[-1] < h - 1e-12 * self.Ly:
            nodes = np.append(nodes, h)
        vals = np.asarray([profile(float(yv)) for yv in nodes], dtype=float)
        return 2.0 * self.Lx * float(np.trapezoid(vals, nodes))
