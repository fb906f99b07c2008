"""Interior mollification, commutator (filter-stress) fields, mollified
gradients via increment sums, and smooth boundary cutoff profiles.

The mollifier is a compactly supported bump sampled on grid-snapped
offsets r_k = (dj*dx, di*dy) with |r_k| < ell and weights renormalized to
sum to one, so constants are filtered exactly. The mollified field lives
on the interior region {dist >= ell}; everything outside is marked
invalid.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from ._backend import grad_increment, shift_sum, tau_increment
from .errors import ConfigError, ResolutionError, ScaleError
from .fields import Field
from .geometry import ChannelDomain
from .grid import Grid2


def bump(rho):
    """exp(-1 / (1 - rho^2)) inside |rho| < 1, zero outside."""
    rho = np.asarray(rho, dtype=np.float64)
    out = np.zeros_like(rho)
    inside = np.abs(rho) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - rho[inside] ** 2))
    return out


def check_scales(ell: float, h: float, h_omega: float) -> None:
    """Admissibility gate for the coarse-graining scales."""
    if not 0.0 < ell < h / 4.0:
        raise ScaleError(f"need 0 < ell < h/4, got ell={ell}, h={h}")
    if h > h_omega:
        raise ScaleError(f"cutoff scale h={h} exceeds the domain half-width {h_omega}")


@dataclass(frozen=True)
class MollifierKernel:
    """Discrete mollifier of radius ell on a given grid.

    Holds the snapped stencil offsets, the normalized weights, and the
    increment weights for the mollified gradient (the discrete gradient of
    the weight lattice, so constants and affine fields are exact and
    summation by parts holds).
    """

    grid: Grid2
    ell: float
    di: np.ndarray = dfield(init=False, repr=False)
    dj: np.ndarray = dfield(init=False, repr=False)
    w: np.ndarray = dfield(init=False, repr=False)
    gdi: np.ndarray = dfield(init=False, repr=False)
    gdj: np.ndarray = dfield(init=False, repr=False)
    vx: np.ndarray = dfield(init=False, repr=False)
    vy: np.ndarray = dfield(init=False, repr=False)
    ilo: int = dfield(init=False)
    ihi: int = dfield(init=False)
    gilo: int = dfield(init=False)
    gihi: int = dfield(init=False)

    def __post_init__(self):
        g, ell = self.grid, self.ell
        spacing = max(g.dx, g.dy)
        if ell < 2.0 * spacing:
            raise ResolutionError(
                f"mollification radius ell={ell} needs at least two cells; "
                f"grid spacing is {spacing:.4g}")
        ni = int(np.ceil(ell / g.dy))
        nj = int(np.ceil(ell / g.dx))
        if 2 * (nj + 1) + 1 > g.nx:
            raise ResolutionError(f"ell={ell} stencil wraps around the periodic direction")
        di, dj = np.meshgrid(np.arange(-ni, ni + 1), np.arange(-nj, nj + 1), indexing="ij")
        rx = dj.ravel() * g.dx
        ry = di.ravel() * g.dy
        rho = np.hypot(rx, ry) / ell
        raw = bump(rho)
        keep = raw > 0.0
        di, dj = di.ravel()[keep], dj.ravel()[keep]
        w = raw[keep] / raw[keep].sum()

        # Gradient weights: centered discrete gradient of the weight lattice,
        # v = -grad_h w on an offset set extended by one cell each way. This
        # keeps summation by parts exact, so Sum v_k f(.+r_k) is exactly the
        # centered difference of the mollified field: zero mean (constants),
        # unit first moments (affine fields), and the discrete energy
        # identities close at the quadrature order.
        lattice = np.zeros((2 * ni + 3, 2 * nj + 3))
        lattice[di + ni + 1, dj + nj + 1] = w
        gvy = (np.roll(lattice, 1, axis=0) - np.roll(lattice, -1, axis=0)) / (2.0 * g.dy)
        gvx = (np.roll(lattice, 1, axis=1) - np.roll(lattice, -1, axis=1)) / (2.0 * g.dx)
        gkeep = (gvy != 0.0) | (gvx != 0.0)
        gi, gj = np.nonzero(gkeep)
        gdi = gi - (ni + 1)
        gdj = gj - (nj + 1)
        vx = gvx[gi, gj]
        vy = gvy[gi, gj]
        if not (abs(float(np.sum(vx * gdj)) * g.dx - 1.0) < 1e-12
                and abs(float(np.sum(vy * gdi)) * g.dy - 1.0) < 1e-12):
            raise ResolutionError(f"degenerate gradient stencil at ell={ell}")

        y = g.y
        interior = (y >= ell - 1e-12 * g.Ly) & (y <= g.Ly - ell + 1e-12 * g.Ly)
        if not interior.any():
            raise ScaleError(f"ell={ell} leaves no interior rows")
        rows = np.nonzero(interior)[0]
        ilo, ihi = int(rows[0]), int(rows[-1])
        reach = int(np.max(np.abs(gdi)))
        gilo = max(ilo, reach)
        gihi = min(ihi, g.ny - 1 - reach)
        if gilo > gihi:
            raise ScaleError(f"ell={ell} leaves no interior rows for the gradient")
        for name, val in (("di", di.astype(np.intp)), ("dj", dj.astype(np.intp)),
                          ("w", w),
                          ("gdi", gdi.astype(np.intp)), ("gdj", gdj.astype(np.intp)),
                          ("vx", vx), ("vy", vy),
                          ("ilo", ilo), ("ihi", ihi),
                          ("gilo", gilo), ("gihi", gihi)):
            object.__setattr__(self, name, val)

    @property
    def offsets(self) -> np.ndarray:
        """Physical stencil offsets, shape (K, 2) as (r_x, r_y)."""
        return np.stack([self.dj * self.grid.dx, self.di * self.grid.dy], axis=1)

    def second_moment(self) -> float:
        """sum_k w_k |r_k|^2, the variance scale of the discrete kernel."""
        r = self.offsets
        return float(np.sum(self.w * np.sum(r * r, axis=1)))

    def interior_mask(self, gradient: bool = False) -> np.ndarray:
        mask = np.zeros(self.grid.shape(), dtype=bool)
        if gradient:
            mask[self.gilo:self.gihi + 1] = True
        else:
            mask[self.ilo:self.ihi + 1] = True
        return mask


def _planes(f: Field) -> np.ndarray:
    return np.ascontiguousarray(f.values.reshape((-1,) + f.grid.shape()))


def _out_valid(kernel: MollifierKernel, f: Field, gradient: bool = False) -> np.ndarray:
    ok = kernel.interior_mask(gradient)
    if not f.valid.all():
        shrunk = f.valid.copy()
        stencil = zip(kernel.gdi, kernel.gdj) if gradient \
            else zip(kernel.di, kernel.dj)
        for di, dj in stencil:
            sh = np.roll(f.valid, -dj, axis=1)
            moved = np.zeros_like(sh)
            ny = sh.shape[0]
            if di >= 0:
                moved[: ny - di] = sh[di:]
            else:
                moved[-di:] = sh[: ny + di]
            shrunk &= moved
        ok &= shrunk
    return ok


def mollify(f: Field, kernel: MollifierKernel) -> Field:
    """Coarse-grained field on the interior region {dist >= ell}."""
    planes = shift_sum(_planes(f), kernel.di, kernel.dj, kernel.w, kernel.ilo, kernel.ihi)
    ok = _out_valid(kernel, f)
    vals = np.where(ok, planes.reshape(f.values.shape), 0.0)
    return Field(f.grid, vals, ok)


def mollified_gradient(f: Field, kernel: MollifierKernel) -> Field:
    """Gradient of the mollified field computed from increments alone.

    Returns shape (2,) + comps + grid; index [a] holds d_a of the filtered
    components. Exact for affine fields by construction of the weights.
    """
    planes = grad_increment(_planes(f), kernel.gdi, kernel.gdj,
                            kernel.vx, kernel.vy, kernel.gilo, kernel.gihi)
    ok = _out_valid(kernel, f, gradient=True)
    vals = np.where(ok, planes.reshape((2,) + f.values.shape), 0.0)
    return Field(f.grid, vals, ok)


def cet_commutator(f: Field, g: Field, kernel: MollifierKernel,
                   form: str = "increment") -> Field:
    """Filter stress tau(f, g) = bar(f g) - bar f bar g.

    ``form`` selects the algebra: "increment" accumulates weighted
    increment products (one pass, numerically robust near cancellation)
    and "direct" filters the product and subtracts the product of
    filters. The two agree to rounding because the weights sum to one.
    """
    if form == "direct":
        fp, gp = _planes(f), _planes(g)
        prod = fp[:, None] * gp[None, :]
        mf, mg = fp.shape[0], gp.shape[0]
        bar_prod = shift_sum(prod.reshape((-1,) + f.grid.shape()),
                             kernel.di, kernel.dj, kernel.w, kernel.ilo, kernel.ihi)
        bar_f = shift_sum(fp, kernel.di, kernel.dj, kernel.w, kernel.ilo, kernel.ihi)
        bar_g = shift_sum(gp, kernel.di, kernel.dj, kernel.w, kernel.ilo, kernel.ihi)
        planes = bar_prod.reshape(mf, mg, *f.grid.shape()) - bar_f[:, None] * bar_g[None, :]
    elif form == "increment":
        planes = tau_increment(_planes(f), _planes(g), kernel.di, kernel.dj,
                               kernel.w, kernel.ilo, kernel.ihi)
    else:
        raise ConfigError(f"unknown commutator form {form!r}")
    ok = _out_valid(kernel, f) & _out_valid(kernel, g)
    shape = f.comps + g.comps + f.grid.shape()
    vals = np.where(ok, planes.reshape(shape), 0.0)
    return Field(f.grid, vals, ok)


# -- smooth cutoff profiles -------------------------------------------------


def _partition_bump(t):
    """exp(-1/t) for t > 0, 0 otherwise (the partition-of-unity factor)."""
    out = np.zeros_like(t)
    pos = t > 0.0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth monotone step: exactly 0 for y <= lo, exactly 1 for y >= hi.

    The C-infinity partition-of-unity ratio F(t) / (F(t) + F(1-t)) with
    F(t) = exp(-1/t) and t = (y - lo)/(hi - lo). The derivative is
    supported strictly inside (lo, hi), spread across the whole window,
    and attains its maximum 2 / (hi - lo) at the midpoint.
    """

    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError(f"cutoff window needs hi > lo, got [{self.lo}, {self.hi}]")

    def value(self, y):
        y = np.asarray(y, dtype=np.float64)
        t = np.clip((y - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        a = _partition_bump(t)
        b = _partition_bump(1.0 - t)
        return a / (a + b + 1e-300)

    def derivative(self, y):
        """d(value)/dy, in closed form."""
        y = np.asarray(y, dtype=np.float64)
        width = self.hi - self.lo
        t = (y - self.lo) / width
        out = np.zeros_like(t)
        ins = (t > 0.0) & (t < 1.0)
        ti = t[ins]
        a = np.exp(-1.0 / ti)
        b = np.exp(-1.0 / (1.0 - ti))
        ap = a / ti ** 2
        bp = b / (1.0 - ti) ** 2
        out[ins] = (ap * b + a * bp) / (a + b) ** 2 / width
        return out

    def derivative_bound(self) -> float:
        return 2.0 / (self.hi - self.lo)


def cutoff_field(domain: ChannelDomain, ell: float, h: float):
    """Boundary cutoff theta = eta(dist) with transition in (h - ell, h).

    Returns (theta, dtheta) as Fields: the scalar cutoff and its spatial
    gradient -eta'(dist) n_hat, both valid everywhere.
    """
    check_scales(ell, h, domain.h_omega)
    if h - ell <= 0.0:
        raise ScaleError(f"cutoff window (h - ell, h) = ({h - ell}, {h}) hits the wall")
    profile = CutoffProfile(h - ell, h)
    d = domain.distance_field()
    theta = profile.value(d)
    eta_p = profile.derivative(d)
    n_hat = domain.normal_field()
    grad = -eta_p[None, :, :] * n_hat
    ok = np.ones(domain.grid.shape(), dtype=bool)
    return (Field(domain.grid, theta, ok),
            Field(domain.grid, grad, ok.copy()))
