"""Localized resolved energy budget: spatial current, bulk flux, boundary
production, resolved dissipation, balance residual, and near-wall moduli.

All coarse-grained quantities use the increment-sum mollified gradient,
never a finite-difference of the filtered field, so the assembled terms
are the objects the interior estimates control.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ScaleError
from .fields import Field, integrate, shift, time_norm
from .geometry import ChannelDomain
from .mollify import MollifierKernel, cet_commutator, check_scales, \
    mollified_gradient, mollify


@dataclass(frozen=True)
class BudgetScales:
    ell: float
    h: float
    nu: float = 0.0
    sigma: float = 1.0 / 3.0   # assumed interior regularity, for reporting
    mode: str = "euler"

    def __post_init__(self):
        if self.mode not in ("euler", "ns"):
            raise ConfigError(f"mode must be euler or ns, got {self.mode!r}")
        if self.mode == "ns" and self.nu <= 0:
            raise ConfigError("ns mode requires positive viscosity")
        if not 0.0 < self.ell < self.h / 4.0:
            raise ScaleError(f"need 0 < ell < h/4, got ell={self.ell}, h={self.h}")


class BudgetTerms:
    """All per-snapshot coarse-grained fields for one (ell, h) pair.

    Computed once and shared by the individual term accessors.
    """

    def __init__(self, u: Field, p: Field | None, domain: ChannelDomain,
                 scales: BudgetScales):
        check_scales(scales.ell, scales.h, domain.h_omega)
        if scales.h >= domain.h_omega:
            raise ScaleError("cutoff scale must stay below the channel midline")
        self.domain = domain
        self.scales = scales
        self.grid = u.grid
        self.kernel = MollifierKernel(u.grid, scales.ell)
        self.ubar = mollify(u, self.kernel)
        self.pbar = mollify(p, self.kernel) if p is not None else None
        self.tau = cet_commutator(u, u, self.kernel)
        self.gradu = mollified_gradient(u, self.kernel)  # [a, j] = d_a ubar_j
        from .mollify import CutoffProfile
        profile = CutoffProfile(scales.h - scales.ell, scales.h)
        d = domain.distance_field()
        ok = np.ones(self.grid.shape(), dtype=bool)
        self.theta = Field(self.grid, profile.value(d), ok)
        self.eta_prime = profile.derivative(d)
        self.n_hat = domain.normal_field()
        self.dtheta = Field(self.grid, -self.eta_prime[None] * self.n_hat, ok.copy())

    # -- pointwise term fields -------------------------------------------

    def energy_head(self) -> np.ndarray:
        """(1/2)|ubar|^2 + pbar, the Bernoulli head of the current."""
        head = 0.5 * np.sum(self.ubar.values ** 2, axis=0)
        if self.pbar is not None:
            head = head + self.pbar.values
        return head

    def spatial_current(self) -> Field:
        """J = (head) ubar + ubar . tau  (- nu grad(ubar) . ubar in ns mode)."""
        if self.pbar is None:
            raise ConfigError("spatial current needs the pressure snapshot")
        head = self.energy_head()
        ub, tau = self.ubar.values, self.tau.values
        J = head[None] * ub + np.einsum("jyx,jiyx->iyx", ub, tau)
        if self.scales.mode == "ns":
            J = J - self.scales.nu * np.einsum("ijyx,jyx->iyx", self.gradu.values, ub)
        ok = self.ubar.valid
        return Field(self.grid, np.where(ok, J, 0.0), ok.copy())

    def bulk_flux(self) -> Field:
        """Pi = theta grad(ubar) : tau."""
        vals = self.theta.values * np.einsum(
            "ajyx,ajyx->yx", self.gradu.values, self.tau.values)
        ok = np.ones(self.grid.shape(), dtype=bool)
        return Field(self.grid, vals, ok)

    def boundary_production(self) -> Field:
        """B = -eta'(d) [ head (n.ubar) + ubar.tau.n ] (+ nu eta' n.grad(ubar).ubar)."""
        if self.pbar is None:
            raise ConfigError("boundary production needs the pressure snapshot")
        head = self.energy_head()
        ub, tau, n = self.ubar.values, self.tau.values, self.n_hat
        n_dot_ub = np.einsum("iyx,iyx->yx", n, ub)
        u_tau_n = np.einsum("jyx,jiyx,iyx->yx", ub, tau, n)
        vals = -self.eta_prime * (head * n_dot_ub + u_tau_n)
        if self.scales.mode == "ns":
            vals = vals + self.scales.nu * self.eta_prime * np.einsum(
                "ayx,ajyx,jyx->yx", n, self.gradu.values, ub)
        ok = np.ones(self.grid.shape(), dtype=bool)
        return Field(self.grid, vals, ok)

    def resolved_dissipation(self) -> Field:
        """D = nu theta |grad ubar|^2 (ns mode only)."""
        if self.scales.mode != "ns" or self.scales.nu <= 0:
            raise ConfigError("resolved dissipation is an ns-mode quantity")
        vals = self.scales.nu * self.theta.values * np.sum(self.gradu.values ** 2, axis=(0, 1))
        ok = np.ones(self.grid.shape(), dtype=bool)
        return Field(self.grid, vals, ok)

    def resolved_energy(self) -> float:
        return integrate(self.grid, self.theta.values * 0.5 *
                         np.sum(self.ubar.values ** 2, axis=0))

    def current_divergence_integral(self) -> float:
        """int div(theta J): vanishes up to stencil error since theta
        vanishes near the walls."""
        from .fields import divergence
        J = self.spatial_current()
        thJ = Field(self.grid, self.theta.values[None] * J.values,
                    np.ones(self.grid.shape(), dtype=bool))
        return integrate(self.grid, divergence(thJ).values)


def spatial_current(u: Field, p: Field, domain: ChannelDomain,
                    scales: BudgetScales) -> Field:
    return BudgetTerms(u, p, domain, scales).spatial_current()


def bulk_flux(u: Field, domain: ChannelDomain, scales: BudgetScales) -> Field:
    return BudgetTerms(u, None, domain, scales).bulk_flux()


def boundary_production(u: Field, p: Field, domain: ChannelDomain,
                        scales: BudgetScales) -> Field:
    return BudgetTerms(u, p, domain, scales).boundary_production()


def resolved_dissipation(u: Field, domain: ChannelDomain,
                         scales: BudgetScales) -> Field:
    return BudgetTerms(u, None, domain, scales).resolved_dissipation()


def wall_modulus(u: Field, domain: ChannelDomain, delta: float,
                 which: str = "normal") -> float:
    """sup over the wall strip of |n.u| (normal) or |u| (full)."""
    if delta >= domain.h_omega:
        raise ConfigError("strip width must stay below the channel midline")
    strip = domain.strip_region(delta, side="near") & u.valid
    if not strip.any():
        return 0.0
    if which == "normal":
        vals = np.abs(np.einsum("iyx,iyx->yx", domain.normal_field(), u.values))
    elif which == "full":
        vals = np.sqrt(np.sum(u.values ** 2, axis=0))
    else:
        raise ConfigError(f"which must be normal or full, got {which!r}")
    return float(np.max(vals[strip]))


def weak_wall_modulus(u: Field, domain: ChannelDomain, ell: float, h: float,
                      max_probes: int = 64) -> float:
    """(1/ell) sup over probed |r| < ell of the band integral of |n.u(x+r)|."""
    if not 0 < ell < h < domain.h_omega:
        raise ScaleError(f"need 0 < ell < h < h_omega, got ell={ell}, h={h}")
    g = u.grid
    band = domain.strip_region(h, "near") & ~domain.strip_region(h - ell, "near")
    kernel = MollifierKernel(g, ell)
    offs = kernel.offsets
    if len(offs) > max_probes:
        offs = offs[:: len(offs) // max_probes + 1]
    n = domain.normal_field()
    best = 0.0
    for r in offs:
        su = shift(u, r)
        sn_vals = shift(Field(g, n, np.ones(g.shape(), bool)), r).values
        vals = np.abs(np.einsum("iyx,iyx->yx", sn_vals, su.values))
        mask = band & su.valid
        if mask.any():
            best = max(best, integrate(g, np.where(mask, vals, 0.0)))
    return best / ell


@dataclass
class BudgetReport:
    """Time series of the localized resolved energy balance."""

    scales: BudgetScales
    times: np.ndarray
    resolved_KE: np.ndarray
    Pi_rate: np.ndarray
    B_rate: np.ndarray
    D_rate: np.ndarray
    Pi_cum: np.ndarray
    B_cum: np.ndarray
    D_cum: np.ndarray
    residual: np.ndarray
    div_current: np.ndarray
    wall_modulus_normal: np.ndarray
    wall_modulus_full: np.ndarray

    def term_l1_norms(self) -> dict:
        return {name: time_norm(self.times, series, 1.0)
                for name, series in (("Pi", self.Pi_rate), ("B", self.B_rate),
                                     ("D", self.D_rate))}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t[s],ell[L],h[L],nu[L^2/s],resolved_KE[L^4/s^2],"
                  "Pi_int[L^4/s^3],B_int[L^4/s^3],D_int[L^4/s^3],"
                  "residual[L^4/s^2],wall_modulus_normal[L/s],wall_modulus_full[L/s]\n")
        s = self.scales
        for k in range(len(self.times)):
            buf.write(f"{self.times[k]:.12g},{s.ell:.12g},{s.h:.12g},{s.nu:.12g},"
                      f"{self.resolved_KE[k]:.12g},{self.Pi_rate[k]:.12g},"
                      f"{self.B_rate[k]:.12g},{self.D_rate[k]:.12g},"
                      f"{self.residual[k]:.12g},{self.wall_modulus_normal[k]:.12g},"
                      f"{self.wall_modulus_full[k]:.12g}\n")
        return buf.getvalue()


def balance_residual(snapshots, domain: ChannelDomain,
                     scales: BudgetScales) -> BudgetReport:
    """Assemble dKE = int Pi + int B - int D + residual over a uniform-dt
    snapshot series."""
    from scipy.integrate import cumulative_trapezoid

    if len(snapshots) < 2:
        raise ConfigError("balance needs at least two snapshots")
    times = np.array([s.t for s in snapshots])
    dts = np.diff(times)
    if np.max(np.abs(dts - dts[0])) > 1e-9 * max(dts[0], 1e-300):
        raise ConfigError("snapshot series must have uniform time spacing")

    ke, pi_r, b_r, d_r, divj, wmn, wmf = [], [], [], [], [], [], []
    for snap in snapshots:
        terms = BudgetTerms(snap.u, snap.p, domain, scales)
        ke.append(terms.resolved_energy())
        pi_r.append(integrate(terms.grid, terms.bulk_flux().values))
        b_r.append(integrate(terms.grid, terms.boundary_production().values))
        if scales.mode == "ns":
            d_r.append(integrate(terms.grid, terms.resolved_dissipation().values))
        else:
            d_r.append(0.0)
        divj.append(terms.current_divergence_integral())
        wmn.append(wall_modulus(snap.u, domain, scales.h, "normal"))
        wmf.append(wall_modulus(snap.u, domain, scales.h, "full"))

    ke = np.array(ke)
    pi_c = cumulative_trapezoid(pi_r, times, initial=0.0)
    b_c = cumulative_trapezoid(b_r, times, initial=0.0)
    d_c = cumulative_trapezoid(d_r, times, initial=0.0)
    residual = (ke - ke[0]) - pi_c - b_c + d_c
    return BudgetReport(scales=scales, times=times, resolved_KE=ke,
                        Pi_rate=np.array(pi_r), B_rate=np.array(b_r),
                        D_rate=np.array(d_r), Pi_cum=pi_c, B_cum=b_c, D_cum=d_c,
                        residual=residual, div_current=np.array(divj),
                        wall_modulus_normal=np.array(wmn),
                        wall_modulus_full=np.array(wmf))
