"""End-to-end acceptance suite.

Each test checks one headline property of the laboratory against a closed
form or an exactly known invariant, states its tolerance in the assertion,
and prints a single PASS/FAIL line for the run log.
"""

import numpy as np
import pytest

from oblab import besov as B
from oblab import budget as Bu
from oblab import fields as F
from oblab import limits as L
from oblab import solver as S
from oblab.geometry import ChannelDomain
from oblab.grid import Grid2
from oblab.mollify import MollifierKernel, cet_commutator


def report(name, ok, detail):
    print(f"\n[{name}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{name}: {detail}"


def _random_smooth(grid, rng):
    """Smooth random velocity field from a handful of low Fourier modes."""
    X, Y = np.meshgrid(grid.x, grid.y)
    vals = np.zeros((2,) + grid.shape())
    for c in range(2):
        for _ in range(5):
            kx = rng.integers(1, 4)
            ky = rng.integers(1, 4)
            ph1, ph2 = rng.uniform(0, 2 * np.pi, 2)
            vals[c] += rng.standard_normal() * \
                np.sin(2 * np.pi * kx * X / grid.Lx + ph1) * \
                np.sin(np.pi * ky * Y / grid.Ly + ph2)
    return F.vector_field(grid, vals[0], vals[1])


@pytest.fixture(scope="module")
def commutator_cases():
    grid = Grid2(1.0, 2.0, 64, 129)
    rng = np.random.default_rng(2024)
    fields = [_random_smooth(grid, rng) for _ in range(10)]
    kernels = [MollifierKernel(grid, ell) for ell in (0.08, 0.12, 0.2)]
    return fields, kernels


def test_c01_commutator_identity(commutator_cases):
    """Increment and direct evaluations of the subgrid stress agree."""
    fields, kernels = commutator_cases
    worst = 0.0
    for u in fields:
        for kernel in kernels:
            t1 = cet_commutator(u, u, kernel, "increment")
            t2 = cet_commutator(u, u, kernel, "direct")
            worst = max(worst, float(np.max(np.abs(t1.values - t2.values))))
    report("C01 commutator identity", worst <= 1e-12,
           f"max pointwise gap {worst:.3e} (tolerance 1e-12, "
           "10 random smooth fields x 3 scales)")


def test_c02_commutator_psd(commutator_cases):
    """tau(u, u) is positive semidefinite at every point."""
    fields, kernels = commutator_cases
    worst = 0.0
    for u in fields:
        for kernel in kernels:
            tau = cet_commutator(u, u, kernel)
            t11, t12, t22 = tau.values[0, 0], tau.values[0, 1], tau.values[1, 1]
            disc = np.sqrt(((t11 - t22) / 2) ** 2 + t12 ** 2)
            min_eig = float(np.min(((t11 + t22) / 2 - disc)[tau.valid]))
            worst = min(worst, min_eig)
    report("C02 commutator PSD", worst >= -1e-12,
           f"min eigenvalue {worst:.3e} (tolerance -1e-12)")


def test_c03_smooth_flux_decay():
    """||Pi||_L1 decays like ell^2 on a smooth field (fixed h)."""
    grid = Grid2(1.0, 4.0, 64, 257)
    dom = ChannelDomain(grid)
    X, Y = np.meshgrid(grid.x, grid.y)
    u = F.vector_field(
        grid,
        np.sin(2 * np.pi * X / grid.Lx) * np.sin(np.pi * Y / grid.Ly) ** 2,
        np.cos(2 * np.pi * X / grid.Lx + 0.7) * np.sin(2 * np.pi * Y / grid.Ly))
    ells = [0.04, 0.08, 0.16, 0.32]
    norms = [F.integrate(grid, np.abs(
        Bu.bulk_flux(u, dom, Bu.BudgetScales(ell=ell, h=1.8)).values))
        for ell in ells]
    slope = float(np.polyfit(np.log(ells), np.log(norms), 1)[0])
    report("C03 smooth flux decay", 1.8 <= slope <= 2.2,
           f"log-log slope {slope:.3f} over 4 dyadic ell (window [1.8, 2.2])")


def test_c04_term_supports_exact():
    """Pi, D vanish inside the cutoff; B lives only in the cutoff band."""
    grid = Grid2(1.0, 2.0, 32, 129)
    dom = ChannelDomain(grid)
    rng = np.random.default_rng(5)
    u = F.vector_field(grid, rng.standard_normal(grid.shape()),
                       rng.standard_normal(grid.shape()))
    p = F.scalar_field(grid, rng.standard_normal(grid.shape()))
    scales = Bu.BudgetScales(ell=0.1, h=0.45, nu=1e-3, mode="ns")
    terms = Bu.BudgetTerms(u, p, dom, scales)
    d = dom.distance_field()
    inner = d <= scales.h - scales.ell
    band = ~inner & (d < scales.h)
    worst = max(float(np.max(np.abs(terms.bulk_flux().values[inner]))),
                float(np.max(np.abs(terms.resolved_dissipation().values[inner]))),
                float(np.max(np.abs(terms.boundary_production().values[~band]))))
    report("C04 term supports", worst == 0.0,
           f"max value outside support {worst} (required exactly 0.0)")


def test_c05_resolved_balance_closes_and_refines():
    """Resolved energy balance residual is small and shrinks under refinement."""
    nu = 1e-3
    residuals, ke0 = [], []
    for (nx, ny, dt) in ((64, 65, 1e-3), (128, 129, 5e-4)):
        grid = Grid2(1.0, 2.0, nx, ny)
        snaps, _ = S.run(S.SolverConfig(grid, nu=nu, dt=dt, T=0.5,
                                        snapshot_every=50))
        rep = Bu.balance_residual(snaps, ChannelDomain(grid),
                                  Bu.BudgetScales(ell=0.1, h=0.45, nu=nu, mode="ns"))
        residuals.append(float(np.max(np.abs(rep.residual))))
        ke0.append(rep.resolved_KE[0])
    rel = residuals[0] / ke0[0]
    ratio = residuals[0] / residuals[1]
    report("C05 resolved energy balance", rel <= 1e-3 and ratio >= 3.0,
           f"|residual|/KE0 = {rel:.3e} (<= 1e-3) at 64x65, "
           f"refinement shrink x{ratio:.1f} (>= 3)")


def test_c06_solver_oracles():
    """Closed-form solver checks plus the discrete energy inequality."""
    g1 = Grid2(1.0, 2.0, 64, 65)
    nu1, T1 = 1e-2, 4.05
    snaps1, led1 = S.run(S.SolverConfig(g1, nu=nu1, dt=2e-3, T=T1))
    exact1 = S.decaying_shear_exact(g1, nu1, 1, T1)
    diff = snaps1[-1].u.values[0] - exact1
    w = g1.quad_weights
    shear_err = float(np.sqrt(np.sum(w * diff ** 2) / np.sum(w * exact1 ** 2)))

    g2 = Grid2(1.0, 2.0, 16, 17)
    nu2, G = 0.05, 0.1
    snaps2, led2 = S.run(S.SolverConfig(g2, nu=nu2, dt=0.015, T=129.0,
                                        scenario="poiseuille", forcing=G))
    exact2 = S.poiseuille_exact(g2, nu2, G)
    pois_err = float(np.max(np.abs(snaps2[-1].u.values[0] - exact2)) / np.max(exact2))

    ok = shear_err <= 1e-3 and pois_err <= 1e-6 \
        and led1.inequality_ok and led2.inequality_ok
    report("C06 solver oracles", ok,
           f"decaying-shear L2 error {shear_err:.2e} (<= 1e-3), "
           f"Poiseuille steady error {pois_err:.2e} (<= 1e-6), "
           f"energy inequality ok on every run: {led1.inequality_ok and led2.inequality_ok}")


def test_c07_structure_function_oracle():
    """S_2 of (sin x, 0) equals 1 - cos r at every probed separation."""
    grid = Grid2(2 * np.pi, 2.0, 256, 33)
    u = F.vector_field(grid, np.tile(np.sin(grid.x), (grid.ny, 1)),
                       np.zeros(grid.shape()))
    region = np.zeros(grid.shape(), dtype=bool)
    region[8:-8] = True
    offsets = [(f"+x{k}", (k * grid.dx, 0.0)) for k in (2, 4, 8, 16, 32)]
    tab = B.structure_function(u, p=2, offsets=offsets, region=region)
    expect = 1.0 - np.cos(tab.magnitudes)
    worst = float(np.max(np.abs(tab.values - expect)))
    report("C07 structure function oracle", worst <= 1e-6,
           f"max |S2 - (1 - cos r)| = {worst:.2e} (tolerance 1e-6)")


def test_c08_besov_exponent_recovery():
    """The seminorm fit recovers the synthesis exponent sigma0 = 1/3."""
    grid = Grid2(1.0, 1.0, 256, 257)
    f = B.synthesize_scaling_field(grid, sigma0=1.0 / 3.0, seed=3)
    region = np.zeros(grid.shape(), dtype=bool)
    region[32:-32] = True
    offs = B.dyadic_offsets(grid, n_octaves=5, r_min_cells=4)
    est = B.besov_seminorm(f, p=2, sigma=1.0 / 3.0, region=region, offsets=offs)
    err = abs(est.fitted_sigma - 1.0 / 3.0)
    report("C08 Besov exponent recovery", err <= 0.05,
           f"|fitted sigma - 1/3| = {err:.3f} (tolerance 0.05)")


def test_c09_beta_formula():
    """Boundary-layer exponent values and monotonicity."""
    vals_ok = (L.beta(1.0 / 3.0) == pytest.approx(0.75)
               and L.beta(0.5) == 1.0 and L.beta(0.75) == 1.0 and L.beta(1.0) == 1.0)
    sigmas = np.linspace(1.0 / 3.0, 1.0, 100)
    betas = np.array([L.beta(s) for s in sigmas])
    mono = bool(np.all(np.diff(betas) >= -1e-15))
    report("C09 beta formula", vals_ok and mono,
           f"beta(1/3) = {L.beta(1.0/3.0)}, beta(1/2) = beta(3/4) = beta(1) = 1, "
           f"monotone over 100-point grid: {mono}")


def test_c10_tube_integral():
    """Coarea tube integral: linear profile exact, quadratic refinement."""
    h = 0.37
    dom = ChannelDomain(Grid2(1.0, 2.0, 16, 65))
    got = dom.tube_integral(lambda y: y, h)
    lin_err = abs(got - dom.Lx * h ** 2) / (dom.Lx * h ** 2)
    errs = []
    for ny in (65, 129, 257):
        d = ChannelDomain(Grid2(1.0, 2.0, 16, ny))
        errs.append(abs(d.tube_integral(lambda y: y ** 2, h)
                        - 2.0 * d.Lx * h ** 3 / 3.0))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    report("C10 tube integral", lin_err <= 1e-10 and np.min(slopes) >= 1.9,
           f"linear-profile relative error {lin_err:.2e} (<= 1e-10), "
           f"refinement slope {np.min(slopes):.2f} (>= 1.9)")


def test_c11_relative_energy_suite():
    """Weak-strong comparison: closed form, envelope, and nu-scaling."""
    grid = Grid2(1.0, 2.0, 16, 129)
    ref = S.euler_reference(grid, lambda y: np.sin(2 * np.pi * y / grid.Ly))
    lam = (2.0 * np.pi / grid.Ly) ** 2
    ke_v = 0.5 * grid.Lx * grid.Ly / 2.0
    sups, rel_errs, bounds_ok = [], [], []
    nus = [4e-3, 2e-3, 1e-3]
    for nu in nus:
        snaps, _ = S.run(S.SolverConfig(grid, nu=nu, dt=5e-3, T=1.0,
                                        mode_n=2, snapshot_every=20))
        rep = L.relative_energy(snaps, ref, h=0.3)
        expect = (1.0 - np.exp(-nu * lam * rep.times)) ** 2 * ke_v
        rel_errs.append(float(np.max(np.abs(rep.measured - expect))
                              / max(np.max(expect), 1e-300)))
        bounds_ok.append(rep.bound_ok)
        sups.append(float(np.max(rep.measured)))
    slope = float(np.polyfit(np.log(nus), np.log(sups), 1)[0])
    ok = max(rel_errs) <= 0.01 and all(bounds_ok) and 1.7 <= slope <= 2.2
    report("C11 relative energy suite", ok,
           f"closed-form mismatch {max(rel_errs):.3e} (<= 1e-2), "
           f"envelope holds at every t: {all(bounds_ok)}, "
           f"nu-scaling slope {slope:.2f} (window [1.7, 2.2])")


def test_c12_kato_ladder():
    """Layer dissipation: monotone, totals, and the closed-form strip value."""
    grid = Grid2(1.0, 2.0, 16, 65)
    dom = ChannelDomain(grid)
    nu = 4e-3
    snaps, _ = S.run(S.SolverConfig(grid, nu=nu, dt=5e-3, T=1.0,
                                    mode_n=2, snapshot_every=10))
    ladder = L.kato_dissipation(snaps, dom, [0.1, 0.3, 0.6, dom.h_omega])
    mono = bool(np.all(np.diff(ladder) >= 0.0))
    total_gap = abs(ladder[-1] - L.total_dissipation(snaps, dom)) \
        / L.total_dissipation(snaps, dom)
    a = 8.5 * grid.dy  # cell-centered edge: mask quadrature is O(dy^2)
    lam = (2.0 * np.pi / grid.Ly) ** 2
    T = snaps[-1].t
    strip_cos2 = 2.0 * grid.Lx * (a / 2.0 + (grid.Ly / (8.0 * np.pi))
                                  * np.sin(4.0 * np.pi * a / grid.Ly))
    expect = strip_cos2 * (1.0 - np.exp(-2.0 * nu * lam * T)) / 2.0
    strip_err = abs(float(L.kato_dissipation(snaps, dom, [a])[0]) - expect) / expect
    ok = mono and total_gap <= 1e-12 and strip_err <= 0.01
    report("C12 Kato ladder", ok,
           f"monotone: {mono}, total at a = Ly/2 matches to {total_gap:.1e} "
           f"(<= 1e-12), strip closed form to {strip_err:.3%} (<= 1%)")


def test_c13_sweep_end_to_end():
    """Three-viscosity sweep: all hypothesis rows pass and no anomaly."""
    records, verdicts = L.sweep([0.1, 0.0707, 0.05], 1.0 / 3.0)
    rows_ok = all(verdicts[row]["verdict"].startswith("pass")
                  for row in L.HYPOTHESIS_ROWS)
    slope = verdicts["total_dissipation_slope"]["slope"]
    ok = rows_ok and 0.8 <= slope <= 1.2 and all(r.resolved for r in records)
    detail = ", ".join(f"{row}={verdicts[row]['verdict']}"
                       for row in L.HYPOTHESIS_ROWS)
    report("C13 sweep end-to-end", ok,
           f"{detail}; dissipation slope {slope:.3f} (window [0.8, 1.2])")
