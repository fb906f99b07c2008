"""2D incompressible Navier-Stokes in a channel (periodic x, no-slip walls)
via an explicit RK2 predictor and a single exact pressure projection per
step, plus closed-form reference flows.

The projection solves the *composed* discrete Poisson problem: the
centered-divergence of the centered-gradient correction, with the wall
rows of the corrected normal velocity zeroed (the no-slip re-imposition),
Fourier-diagonalized in x and solved as a banded system in y. Because
the solve inverts exactly the operator that the subsequent divergence
check applies, post-projection interior divergence is at rounding level.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.sparse import block_diag, lil_matrix
from scipy.sparse.linalg import splu

from .errors import ConfigError, NumericError
from .fields import Field, Snapshot, check_no_slip, scalar_field, vector_field
from .grid import Grid2

SCENARIOS = ("poiseuille", "decaying_shear", "dipole_wall", "custom_snapshot")
DIV_TOLERANCE = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid2
    nu: float
    dt: float
    T: float
    scenario: str = "decaying_shear"
    mode_n: int = 1              # wavenumber for decaying_shear
    forcing: float = 0.0         # body force (G, 0) for poiseuille
    cfl_limit: float = 0.9
    snapshot_path: str | None = None  # for custom_snapshot
    snapshot_every: int = 0      # 0 = first and last only

    def __post_init__(self):
        if self.nu <= 0:
            raise ConfigError(f"viscosity must be positive, got {self.nu}")
        if self.dt <= 0 or self.T <= 0:
            raise ConfigError("dt and T must be positive")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.scenario == "custom_snapshot" and not self.snapshot_path:
            raise ConfigError("custom_snapshot scenario needs snapshot_path")


class PressureProjector:
    """Factorized composed Poisson operator for the channel projection."""

    def __init__(self, grid: Grid2):
        self.grid = grid
        nx, ny = grid.nx, grid.ny
        dx, dy = grid.dx, grid.dy
        theta = 2.0 * np.pi * np.fft.fftfreq(nx) * 1.0
        self.lam = -((np.sin(theta) / dx) ** 2)  # D_x G_x multiplier per x-mode
        c = 1.0 / (4.0 * dy * dy)
        self.pinned = np.abs(np.sin(theta)) < 1e-14
        blocks = []
        for m in range(nx):
            A = lil_matrix((ny, ny))
            lam = self.lam[m]
            for i in range(1, ny - 1):
                # (D_y q)_i with q = G_y p, q zeroed on wall rows
                if i + 1 <= ny - 2:
                    A[i, i + 2] += c
                    A[i, i] += -c
                if i - 1 >= 1:
                    A[i, i - 2] += c
                    A[i, i] += -c
                A[i, i] += lam
            if self.pinned[m]:
                # The stride-2 stencil decouples y parities; for lam = 0 the
                # interior rows are rank-deficient by one (the wall zeros make
                # the odd-row chain compatible automatically). Pin the gauge
                # of each parity and trade the redundant row for a one-sided
                # Neumann condition that anchors the remaining affine mode.
                A[0, :] = 0.0
                A[0, 0] = 1.0
                A[1, :] = 0.0
                A[1, 2], A[1, 0] = 1.0, -1.0
                A[ny - 1, ny - 1], A[ny - 1, ny - 2], A[ny - 1, ny - 3] = 0.0, 0.0, 0.0
                A[ny - 1, 1] = 1.0
            else:
                A[0, 0], A[0, 1], A[0, 2] = -3.0, 4.0, -1.0  # one-sided Neumann
                A[ny - 1, ny - 1] = 3.0
                A[ny - 1, ny - 2] = -4.0
                A[ny - 1, ny - 3] = 1.0
            blocks.append(A.tocsc())
        self.lu = splu(block_diag(blocks, format="csc"))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve the composed Poisson problem; rhs and result are (ny, nx)."""
        ny, nx = rhs.shape
        rhat = np.fft.fft(rhs, axis=1).T.copy()  # (nx, ny), mode-major
        rhat[:, 0] = 0.0
        rhat[:, -1] = 0.0
        rhat[self.pinned, 1] = 0.0  # rows repurposed as gauge constraints
        flat = rhat.ravel()
        sol = self.lu.solve(flat.real) + 1j * self.lu.solve(flat.imag)
        phat = sol.reshape(nx, ny).T
        return np.fft.ifft(phat, axis=1).real


def _ddx(a, dx):
    return (np.roll(a, -1, axis=-1) - np.roll(a, 1, axis=-1)) / (2.0 * dx)


def _ddy_interior(a, dy):
    out = np.zeros_like(a)
    out[..., 1:-1, :] = (a[..., 2:, :] - a[..., :-2, :]) / (2.0 * dy)
    return out


def _grad_p(p, grid):
    gx = _ddx(p, grid.dx)
    gy = np.zeros_like(p)
    gy[1:-1] = (p[2:] - p[:-2]) / (2.0 * grid.dy)
    return gx, gy


def _divergence_interior(u1, u2, grid):
    div = _ddx(u1, grid.dx) + _ddy_interior(u2, grid.dy)
    div[0] = 0.0
    div[-1] = 0.0
    return div


def _laplacian(a, grid):
    lap = (np.roll(a, -1, axis=-1) - 2.0 * a + np.roll(a, 1, axis=-1)) / grid.dx ** 2
    out = np.zeros_like(a)
    out[..., 1:-1, :] = lap[..., 1:-1, :] + (
        a[..., 2:, :] - 2.0 * a[..., 1:-1, :] + a[..., :-2, :]) / grid.dy ** 2
    return out


def _dissipation_quadratic_form(u, grid):
    """-int u . (lap u) with the solver's compact Laplacian.

    This is the form that enters the discrete energy identity exactly, so
    the ledger's inequality is tight; it equals ||grad u||^2 up to O(dx^2)
    for smooth fields.
    """
    total = 0.0
    w = grid.quad_weights
    for comp in u:
        total -= float(np.sum(w * comp * _laplacian(comp[None], grid)[0]))
    return total


def gradient_sq_integral(u, grid, region=None):
    """||grad u||_L2^2 with one-sided wall rows (captures wall shear)."""
    total = 0.0
    w = grid.quad_weights
    for comp in u:
        gx = _ddx(comp, grid.dx)
        gy = np.empty_like(comp)
        gy[1:-1] = (comp[2:] - comp[:-2]) / (2.0 * grid.dy)
        gy[0] = (-3.0 * comp[0] + 4.0 * comp[1] - comp[2]) / (2.0 * grid.dy)
        gy[-1] = (3.0 * comp[-1] - 4.0 * comp[-2] + comp[-3]) / (2.0 * grid.dy)
        sq = w * (gx ** 2 + gy ** 2)
        if region is not None:
            sq = sq[np.asarray(region, dtype=bool)]
        total += float(np.sum(sq))
    return total


class ChannelSolver:
    """Owns the evolving state of one simulation."""

    def __init__(self, config: SolverConfig):
        self.config = config
        self.grid = config.grid
        self.projector = PressureProjector(self.grid)
        self.t = 0.0
        self.u = self._initial_velocity()
        self.p = np.zeros(self.grid.shape())
        self.gauge_constant = 0.0
        self._project(self.u)  # clean initial data
        self.u[:, 0] = 0.0
        self.u[:, -1] = 0.0

    # -- initial data -----------------------------------------------------

    def _initial_velocity(self) -> np.ndarray:
        g = self.grid
        cfg = self.config
        u = np.zeros((2,) + g.shape())
        if cfg.scenario == "decaying_shear":
            u[0] = np.sin(cfg.mode_n * np.pi * g.y / g.Ly)[:, None]
        elif cfg.scenario == "dipole_wall":
            X, Y = np.meshgrid(g.x, g.y)
            r0 = g.Ly / 10.0
            yc = g.Ly / 4.0
            for sign, xc in ((1.0, g.Lx / 2.0 - r0), (-1.0, g.Lx / 2.0 + r0)):
                dxp = X - xc
                dyp = Y - yc
                blob = sign * np.exp(-(dxp ** 2 + dyp ** 2) / r0 ** 2)
                u[0] += -dyp * blob
                u[1] += dxp * blob
            u /= max(np.max(np.abs(u)), 1e-300)
        elif cfg.scenario == "custom_snapshot":
            from .fields import read_snapshot
            snap = read_snapshot(cfg.snapshot_path)
            if snap.grid != g:
                raise ConfigError("custom snapshot grid does not match config grid")
            u = snap.u.values.copy()
        # poiseuille starts from rest
        u[:, 0] = 0.0
        u[:, -1] = 0.0
        return u

    # -- dynamics ---------------------------------------------------------

    def _rhs(self, u):
        g = self.grid
        nu = self.config.nu
        adv = np.zeros_like(u)
        for c in range(2):
            adv[c] = u[0] * _ddx(u[c], g.dx) + u[1] * _ddy_interior(u[c], g.dy)
        out = -adv + nu * _laplacian(u, g)
        out[0] += self.config.forcing
        out[:, 0] = 0.0
        out[:, -1] = 0.0
        return out

    def _check_cfl(self):
        g = self.grid
        dmin = min(g.dx, g.dy)
        umax = float(np.max(np.abs(self.u)))
        limit = dmin ** 2 / (4.0 * self.config.nu)
        if umax > 0:
            limit = min(limit, dmin / umax)
        if self.config.dt > self.config.cfl_limit * limit:
            raise NumericError(
                f"time step {self.config.dt} exceeds stability limit "
                f"{self.config.cfl_limit * limit:.3e} at t={self.t:.4f}")

    def _project(self, u):
        g = self.grid
        dt = self.config.dt
        div = _divergence_interior(u[0], u[1], g)
        phi = self.projector.solve(div / dt)
        gx, gy = _grad_p(phi, g)
        u[0] -= dt * gx
        u[1] -= dt * gy
        # The pinned x-modes leave a parity nullvector in u2 (constant on odd
        # rows, invisible to the centered divergence); remove it exactly.
        odd = u[1][1:-1:2]
        fhat = np.fft.fft(odd, axis=1)
        fhat[:, self.projector.pinned] -= fhat[:, self.projector.pinned].mean(axis=0)
        u[1][1:-1:2] = np.fft.ifft(fhat, axis=1).real
        mean = float(np.sum(g.quad_weights * phi) / (g.Lx * g.Ly))
        self.gauge_constant = mean
        self.p = phi - mean
        return u

    def step(self):
        self._check_cfl()
        dt = self.config.dt
        k1 = self._rhs(self.u)
        u_mid = self.u + dt * k1
        u_mid[:, 0] = 0.0
        u_mid[:, -1] = 0.0
        k2 = self._rhs(u_mid)
        u_star = self.u + 0.5 * dt * (k1 + k2)
        u_star[:, 0] = 0.0
        u_star[:, -1] = 0.0
        self._project(u_star)
        u_star[:, 0] = 0.0
        u_star[:, -1] = 0.0
        div = _divergence_interior(u_star[0], u_star[1], self.grid)
        worst = float(np.max(np.abs(div)))
        if worst > DIV_TOLERANCE:
            raise NumericError(f"projection left divergence {worst:.3e} at t={self.t:.4f}")
        if not np.all(np.isfinite(u_star)):
            raise NumericError(f"solution blew up at t={self.t:.4f}")
        self.u = u_star
        self.t += dt

    def snapshot(self) -> Snapshot:
        snap = Snapshot(t=self.t,
                        u=vector_field(self.grid, self.u[0].copy(), self.u[1].copy()),
                        p=scalar_field(self.grid, self.p.copy()),
                        nu=self.config.nu)
        check_no_slip(snap.u)
        return snap

    def kinetic_energy(self) -> float:
        w = self.grid.quad_weights
        return 0.5 * float(np.sum(w * (self.u[0] ** 2 + self.u[1] ** 2)))


@dataclass
class EnergyLedger:
    """Per-step kinetic energy, cumulative dissipation and forcing work."""

    times: np.ndarray
    kinetic_energy: np.ndarray
    dissipation: np.ndarray    # cumulative nu * int ||grad u||^2
    forcing_work: np.ndarray   # cumulative int f . u
    inequality_slack: float = dfield(init=False)
    inequality_ok: bool = dfield(init=False)

    def __post_init__(self):
        ke0 = self.kinetic_energy[0]
        budget = self.kinetic_energy + self.dissipation - self.forcing_work - ke0
        self.inequality_slack = float(np.max(budget))
        scale = max(ke0, float(np.max(self.kinetic_energy)), float(self.forcing_work[-1]))
        self.inequality_ok = bool(self.inequality_slack <= 1e-6 * max(scale, 1e-300))

    def to_csv(self) -> str:
        lines = ["t[s],kinetic_energy[L^4/T^2],cumulative_dissipation[L^4/T^2],"
                 "cumulative_forcing_work[L^4/T^2]"]
        for row in zip(self.times, self.kinetic_energy, self.dissipation, self.forcing_work):
            lines.append(",".join(f"{v:.12g}" for v in row))
        return "\n".join(lines) + "\n"


def run(config: SolverConfig):
    """Advance to T; returns (snapshots, ledger)."""
    solver = ChannelSolver(config)
    n_steps = int(round(config.T / config.dt))
    if abs(n_steps * config.dt - config.T) > 1e-9 * config.T:
        raise ConfigError("T must be an integer multiple of dt")
    every = config.snapshot_every or n_steps
    snapshots = [solver.snapshot()]
    times = [0.0]
    ke = [solver.kinetic_energy()]
    diss_rate = [_dissipation_quadratic_form(solver.u, config.grid)]
    work_rate = [config.forcing * _u1_integral(solver.u, config.grid)]
    for k in range(n_steps):
        solver.step()
        times.append(solver.t)
        ke.append(solver.kinetic_energy())
        diss_rate.append(_dissipation_quadratic_form(solver.u, config.grid))
        work_rate.append(config.forcing * _u1_integral(solver.u, config.grid))
        if (k + 1) % every == 0 or k == n_steps - 1:
            snapshots.append(solver.snapshot())
    times = np.array(times)
    diss = config.nu * cumulative_trapezoid(np.array(diss_rate), times, initial=0.0)
    work = cumulative_trapezoid(np.array(work_rate), times, initial=0.0)
    ledger = EnergyLedger(times=times, kinetic_energy=np.array(ke),
                          dissipation=diss, forcing_work=work)
    return snapshots, ledger


def _u1_integral(u, grid):
    return float(np.sum(grid.quad_weights * u[0]))


# -- closed-form references ---------------------------------------------

def decaying_shear_exact(grid: Grid2, nu: float, n: int, t: float) -> np.ndarray:
    lam = (n * np.pi / grid.Ly) ** 2
    return np.sin(n * np.pi * grid.y / grid.Ly)[:, None] * np.exp(-nu * lam * t) \
        * np.ones((1, grid.nx))


def poiseuille_exact(grid: Grid2, nu: float, G: float) -> np.ndarray:
    y = grid.y
    return (G * y * (grid.Ly - y) / (2.0 * nu))[:, None] * np.ones((1, grid.nx))


@dataclass(frozen=True)
class EulerReference:
    """Steady shear Euler flow v = (V(y), 0) with stream function psi."""

    v: Field
    psi: Field
    dpsi_dt: float  # identically zero for steady profiles
    grad_v_max: float

    @property
    def grid(self) -> Grid2:
        return self.v.grid


def euler_reference(grid: Grid2, profile) -> EulerReference:
    """Build the reference from a zero-mean profile V(y).

    psi(y) = -int_0^y V; the stream function vanishes at both walls only
    when V has zero mean, which is enforced here.
    """
    V = np.asarray(profile(grid.y), dtype=np.float64)
    mean = float(np.trapezoid(V, grid.y)) / grid.Ly
    if abs(mean) > 1e-10 * max(1.0, float(np.max(np.abs(V)))):
        raise ConfigError(f"profile must have zero mean (got mean {mean:.3e}); "
                          "otherwise the stream function cannot vanish at both walls")
    psi = -cumulative_trapezoid(V, grid.y, initial=0.0)
    if abs(psi[-1]) > 1e-8 * grid.Ly * max(1.0, float(np.max(np.abs(V)))):
        raise ConfigError(f"stream function misses the far wall by {psi[-1]:.3e}")
    ones = np.ones((1, grid.nx))
    v = vector_field(grid, V[:, None] * ones, np.zeros(grid.shape()))
    psi_f = scalar_field(grid, psi[:, None] * ones)
    dV = np.gradient(V, grid.y)
    return EulerReference(v=v, psi=psi_f, dpsi_dt=0.0,
                          grad_v_max=float(np.max(np.abs(dV))))
