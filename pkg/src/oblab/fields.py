"""Gridded scalar/vector/tensor fields with validity masks, shifts and
increments, finite-difference calculus, region-restricted norms, and the
OBL1 snapshot file format.

A Field stores values with shape comps + (ny, nx) where comps is () for a
scalar, (2,) for a vector and (2, 2) for a tensor (entry [i, j] of a
velocity-gradient tensor is d_i u_j). The boolean mask ``valid`` (shape
(ny, nx)) marks where the values are meaningful; invalid entries are kept
at 0.0 so all arrays stay finite.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import Grid2

BC_TOLERANCE = 1e-12  # imposed no-slip rows are exact, not approximated
SNAPSHOT_MAGIC = b"OBL1"


@dataclass(frozen=True)
class Field:
    grid: Grid2
    values: np.ndarray  # comps + (ny, nx), float64
    valid: np.ndarray   # (ny, nx), bool

    def __post_init__(self):
        ny, nx = self.grid.shape()
        if self.values.shape[-2:] != (ny, nx):
            raise ConfigError(f"values shape {self.values.shape} does not match grid {(ny, nx)}")
        if self.valid.shape != (ny, nx):
            raise ConfigError("valid mask shape does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("field contains non-finite values")

    @property
    def comps(self) -> tuple:
        return self.values.shape[:-2]

    def masked(self) -> "Field":
        """Return a copy with invalid entries zeroed."""
        vals = np.where(self.valid, self.values, 0.0)
        return Field(self.grid, vals, self.valid.copy())

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, self.values * c, self.valid.copy())

    __rmul__ = __mul__


def scalar_field(grid: Grid2, values, valid=None) -> Field:
    values = np.ascontiguousarray(values, dtype=np.float64)
    if valid is None:
        valid = np.ones(grid.shape(), dtype=bool)
    return Field(grid, values, np.asarray(valid, dtype=bool))


def vector_field(grid: Grid2, u1, u2, valid=None) -> Field:
    vals = np.stack([np.asarray(u1, dtype=np.float64), np.asarray(u2, dtype=np.float64)])
    if valid is None:
        valid = np.ones(grid.shape(), dtype=bool)
    return Field(grid, np.ascontiguousarray(vals), np.asarray(valid, dtype=bool))


def from_function(grid: Grid2, *funcs) -> Field:
    """Sample one callable (scalar) or several (vector components) of (x, y)."""
    X, Y = np.meshgrid(grid.x, grid.y)
    arrays = [np.asarray(f(X, Y), dtype=np.float64) + np.zeros_like(X) for f in funcs]
    if len(arrays) == 1:
        return scalar_field(grid, arrays[0])
    return Field(grid, np.ascontiguousarray(np.stack(arrays)),
                 np.ones(grid.shape(), dtype=bool))


def check_no_slip(u: Field, tol: float = BC_TOLERANCE) -> float:
    """Max |u| over the wall rows; raises if it exceeds tol."""
    worst = float(np.max(np.abs(u.values[..., [0, -1], :])))
    if worst > tol:
        raise ConfigError(f"no-slip violation: wall |u| = {worst:.3e} > {tol:.0e}")
    return worst


# -- shifts and increments --------------------------------------------------

def shift(f: Field, r) -> Field:
    """f(. + r) with r snapped to the grid: periodic wrap in x, rows shifted
    out of [0, Ly] in y marked invalid."""
    di, dj = f.grid.snap_offset(r)
    ny = f.grid.ny
    if abs(di) >= ny:
        raise ConfigError(f"offset r_y={r[1]} leaves an empty valid region")
    vals = np.roll(f.values, -dj, axis=-1)
    out = np.zeros_like(vals)
    ok = np.zeros(f.grid.shape(), dtype=bool)
    src_valid = np.roll(f.valid, -dj, axis=-1)
    if di >= 0:
        out[..., : ny - di, :] = vals[..., di:, :]
        ok[: ny - di, :] = src_valid[di:, :]
    else:
        out[..., -di:, :] = vals[..., : ny + di, :]
        ok[-di:, :] = src_valid[: ny + di, :]
    return Field(f.grid, out, ok)


def increment(f: Field, r) -> Field:
    """delta f(r; x) = f(x + r) - f(x) on the common valid region."""
    sh = shift(f, r)
    ok = sh.valid & f.valid
    vals = np.where(ok, sh.values - f.values, 0.0)
    return Field(f.grid, vals, ok)


# -- finite-difference calculus --------------------------------------------

def _ddx(vals: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(vals, -1, axis=-1) - np.roll(vals, 1, axis=-1)) / (2.0 * dx)


def _ddy(vals: np.ndarray, dy: float) -> np.ndarray:
    out = np.empty_like(vals)
    out[..., 1:-1, :] = (vals[..., 2:, :] - vals[..., :-2, :]) / (2.0 * dy)
    # one-sided second order at the wall rows
    out[..., 0, :] = (-3.0 * vals[..., 0, :] + 4.0 * vals[..., 1, :] - vals[..., 2, :]) / (2.0 * dy)
    out[..., -1, :] = (3.0 * vals[..., -1, :] - 4.0 * vals[..., -2, :] + vals[..., -3, :]) / (2.0 * dy)
    return out


def _erode(valid: np.ndarray) -> np.ndarray:
    """Shrink a mask by one node in y (x is periodic and full-width)."""
    out = valid.copy()
    out[1:-1] &= valid[2:] & valid[:-2]
    if valid.shape[0] >= 3:
        out[0] &= valid[1] & valid[2]
        out[-1] &= valid[-2] & valid[-3]
    return out


def gradient(f: Field) -> Field:
    """Gradient: scalar -> (2,)+grid with [0]=d/dx, [1]=d/dy; vector ->
    (2,2)+grid with [i,j] = d_i u_j."""
    gx = _ddx(f.values, f.grid.dx)
    gy = _ddy(f.values, f.grid.dy)
    vals = np.stack([gx, gy])
    ok = _erode(f.valid)
    vals = np.where(ok, vals, 0.0)
    return Field(f.grid, vals, ok)


def divergence(u: Field) -> Field:
    if u.comps != (2,):
        raise ConfigError("divergence needs a vector field")
    vals = _ddx(u.values[0], u.grid.dx) + _ddy(u.values[1], u.grid.dy)
    ok = _erode(u.valid)
    return Field(u.grid, np.where(ok, vals, 0.0), ok)


def laplacian(f: Field) -> Field:
    """Defined as divergence(gradient(f)) so the composition identity is
    exact by construction (wide stride-2 stencil in each direction)."""
    g = gradient(f)
    vals = _ddx(g.values[0], f.grid.dx) + _ddy(g.values[1], f.grid.dy)
    ok = _erode(g.valid)
    return Field(f.grid, np.where(ok, vals, 0.0), ok)


# -- norms ------------------------------------------------------------------

def magnitude(f: Field) -> np.ndarray:
    """Pointwise Euclidean magnitude over component axes, shape (ny, nx)."""
    v = f.values.reshape((-1,) + f.grid.shape())
    return np.sqrt(np.sum(v * v, axis=0))


def region_norm(f: Field, region: np.ndarray | None, p: float) -> float:
    """L^p norm over region & valid with cell-area quadrature weights
    (p = inf gives the max of |f|)."""
    mask = f.valid if region is None else (np.asarray(region, dtype=bool) & f.valid)
    if not mask.any():
        raise ConfigError("region_norm over an empty region")
    mag = magnitude(f)
    if np.isinf(p):
        return float(np.max(mag[mask]))
    w = f.grid.quad_weights
    return float(np.sum(w[mask] * mag[mask] ** p) ** (1.0 / p))


def region_average(f: Field, region: np.ndarray | None, p: float) -> float:
    """Weighted region average of |f|^p (used by structure functions)."""
    mask = f.valid if region is None else (np.asarray(region, dtype=bool) & f.valid)
    if not mask.any():
        raise ConfigError("average over an empty region")
    w = f.grid.quad_weights
    mag = magnitude(f)
    return float(np.sum(w[mask] * mag[mask] ** p) / np.sum(w[mask]))


def time_norm(times, series, q: float) -> float:
    """L^q norm in time by composite trapezoid (max for q = inf)."""
    series = np.asarray(series, dtype=float)
    if np.isinf(q):
        return float(np.max(np.abs(series)))
    times = np.asarray(times, dtype=float)
    if len(times) == 1:
        return float(np.abs(series[0]))
    return float(np.trapezoid(np.abs(series) ** q, times) ** (1.0 / q))


def integrate(grid: Grid2, values: np.ndarray, region: np.ndarray | None = None) -> float:
    """Plain quadrature integral of a (ny, nx) array."""
    w = grid.quad_weights
    if region is not None:
        return float(np.sum((w * values)[np.asarray(region, dtype=bool)]))
    return float(np.sum(w * values))


# -- snapshots and the OBL1 file format -------------------------------------

@dataclass(frozen=True)
class Snapshot:
    """One solver output: velocity (no-slip), pressure, time, viscosity."""

    t: float
    u: Field      # vector
    p: Field      # scalar
    nu: float

    @property
    def grid(self) -> Grid2:
        return self.u.grid


_HEADER = struct.Struct("<4sIIdddd")


def write_snapshot(path, snap: Snapshot) -> None:
    g = snap.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, g.nx, g.ny, g.Lx, g.Ly, snap.t, snap.nu))
        for arr in (snap.u.values[0], snap.u.values[1], snap.p.values):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshot(path) -> Snapshot:
    raw = Path(path).read_bytes()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise ConfigError(f"{path}: not an OBL1 snapshot")
    magic, nx, ny, Lx, Ly, t, nu = _HEADER.unpack_from(raw)
    grid = Grid2(Lx=Lx, Ly=Ly, nx=nx, ny=ny)
    n = nx * ny
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size, count=3 * n)
    u1, u2, p = (body[k * n:(k + 1) * n].reshape(ny, nx).copy() for k in range(3))
    return Snapshot(t=t, u=vector_field(grid, u1, u2), p=scalar_field(grid, p), nu=nu)
