import numpy as np
import pytest

from oblab import limits as L
from oblab import solver as S
from oblab.errors import ConfigError
from oblab.fields import vector_field
from oblab.geometry import ChannelDomain
from oblab.grid import Grid2


def test_beta_values_and_domain():
    assert L.beta(1.0 / 3.0) == pytest.approx(0.75)
    assert L.beta(0.5) == 1.0
    assert L.beta(0.8) == 1.0
    assert L.beta(1.0) == 1.0
    # nondecreasing over the admissible range
    sig = np.linspace(1.0 / 3.0, 1.0, 40)
    b = [L.beta(s) for s in sig]
    assert np.all(np.diff(b) >= -1e-15)
    for bad in (0.2, 1.2, -1.0):
        with pytest.raises(ConfigError):
            L.beta(bad)


def test_sweep_scales_relation():
    ell, h = L.sweep_scales(1e-2, 1.0 / 3.0)
    assert h == pytest.approx(0.75 * 1e-2 ** 0.75)
    assert ell == pytest.approx(h / 6.0)


@pytest.fixture(scope="module")
def shear_run():
    g = Grid2(1.0, 2.0, 16, 65)
    nu = 4e-3
    cfg = S.SolverConfig(g, nu=nu, dt=5e-3, T=1.0, mode_n=2, snapshot_every=10)
    snaps, _ = S.run(cfg)
    return g, ChannelDomain(g), nu, snaps


def test_kato_dissipation_monotone_and_total(shear_run):
    g, dom, nu, snaps = shear_run
    a_values = [0.1, 0.3, 0.6, dom.h_omega]
    kato = L.kato_dissipation(snaps, dom, a_values)
    assert np.all(np.diff(kato) >= 0.0)
    assert kato[-1] == pytest.approx(L.total_dissipation(snaps, dom), rel=1e-12)
    with pytest.raises(ConfigError):
        L.kato_dissipation(snaps, dom, [2.0 * dom.h_omega])


def test_kato_closed_form_shear(shear_run):
    # u1 = sin(2 pi y / Ly) e^{-nu lam t}: nu int_0^T int_{d<a} |du1/dy|^2
    # = strip_cos2 * (1 - e^{-2 nu lam T}) / 2 with
    # strip_cos2 = 2 Lx (a/2 + (Ly / 8 pi) sin(4 pi a / Ly)).
    g, dom, nu, snaps = shear_run
    lam = (2.0 * np.pi / g.Ly) ** 2
    T = snaps[-1].t
    a = 0.25
    strip_cos2 = 2.0 * g.Lx * (a / 2.0 + (g.Ly / (8.0 * np.pi))
                               * np.sin(4.0 * np.pi * a / g.Ly))
    expect = strip_cos2 * (1.0 - np.exp(-2.0 * nu * lam * T)) / 2.0
    got = L.kato_dissipation(snaps, dom, [a])[0]
    # the strip edge is resolved to one cell, so the mask quadrature is O(dy)
    assert got == pytest.approx(expect, rel=0.05)


def test_poincare_strip_ratio_linear_profile():
    g = Grid2(1.0, 2.0, 16, 257)
    dom = ChannelDomain(g)
    d = dom.distance_field()
    u = vector_field(g, d, np.zeros(g.shape()))  # |u| = d, |grad u| = 1
    a = 0.25
    val, degenerate = L.poincare_strip_ratio(u, dom, a)
    assert not degenerate
    # int d^2 over the strip = 2 Lx a^3/3; denominator a^2 * 2 Lx a
    assert val == pytest.approx(1.0 / np.sqrt(3.0), rel=0.02)
    zero = vector_field(g, np.zeros(g.shape()), np.zeros(g.shape()))
    _, flag = L.poincare_strip_ratio(zero, dom, a)
    assert flag


def test_localized_euler_decomposition_refines():
    errs = []
    for ny in (65, 129):
        g = Grid2(1.0, 2.0, 8, ny)
        ref = S.euler_reference(g, lambda y: np.sin(2 * np.pi * y / g.Ly))
        errs.append(L.localized_decomposition_error(ref, 0.6))
    assert errs[1] < errs[0] / 2.0
    assert errs[1] < 0.1


def test_localized_euler_support():
    g = Grid2(1.0, 2.0, 8, 129)
    ref = S.euler_reference(g, lambda y: np.sin(2 * np.pi * y / g.Ly))
    v_h, theta = L.localized_euler(ref, 0.6)
    d = ChannelDomain(g).distance_field()
    # the gradient stencil reaches one cell into the transition window
    assert np.all(v_h.values[:, d <= 0.3 - g.dy] == 0.0)
    assert np.max(np.abs(v_h.values[:, d <= 0.3])) < 1e-6
    core = d >= 0.6 + g.dy  # away from the gradient stencil of the seam
    # centered differencing of the discrete stream function is O(dy^2)
    assert np.max(np.abs(v_h.values[0][core] - ref.v.values[0][core])) < 1e-3
    assert np.all(theta.values[d >= 0.6] == 1.0)


def test_relative_energy_matches_closed_form():
    g = Grid2(1.0, 2.0, 16, 65)
    nu = 2e-3
    k = 1
    cfg = S.SolverConfig(g, nu=nu, dt=5e-3, T=1.0, mode_n=2 * k, snapshot_every=10)
    snaps, _ = S.run(cfg)
    ref = S.euler_reference(g, lambda y: np.sin(2 * np.pi * k * y / g.Ly))
    rep = L.relative_energy(snaps, ref, h=0.3)
    lam = (2.0 * np.pi * k / g.Ly) ** 2
    ke_v = 0.5 * g.Lx * g.Ly / 2.0
    expect = (1.0 - np.exp(-nu * lam * rep.times)) ** 2 * ke_v
    assert np.max(np.abs(rep.measured - expect)) < 5e-3 * ke_v
    assert rep.bound_ok
    assert rep.measured[0] == pytest.approx(0.0, abs=1e-12)
    # E1 is the exact identity measured - measured_vs_vh
    assert rep.E1 == pytest.approx(rep.measured - rep.measured_vs_vh, abs=1e-12)
    lines = rep.to_csv().strip().splitlines()
    assert lines[0].startswith("t[s],measured")
    assert len(lines) == 1 + len(rep.times)


def test_relative_energy_rejects_mismatched_data():
    g = Grid2(1.0, 2.0, 16, 65)
    cfg = S.SolverConfig(g, nu=2e-3, dt=5e-3, T=0.05, mode_n=1)
    snaps, _ = S.run(cfg)
    ref = S.euler_reference(g, lambda y: np.sin(4 * np.pi * y / g.Ly))
    with pytest.raises(ConfigError):
        L.relative_energy(snaps, ref, h=0.3)


def test_sweep_verdicts_and_csv():
    records, verdicts = L.sweep([0.1, 0.05], 1.0 / 3.0, T=0.05)
    assert all(r.resolved for r in records)
    for row in L.HYPOTHESIS_ROWS:
        assert verdicts[row]["verdict"].startswith("pass")
    slope = verdicts["total_dissipation_slope"]["slope"]
    assert 0.5 < slope < 1.5
    csv = L.sweep_to_csv(records)
    lines = csv.strip().splitlines()
    assert lines[0].startswith("nu,sigma,beta,ell,h,resolved")
    assert len(lines) == 3
    with pytest.raises(ConfigError):
        L.sweep([0.05, 0.1], 1.0 / 3.0)


def test_sweep_unresolvable_marks_record():
    records, _ = L.sweep([1e-4], 1.0 / 3.0, max_ny=33, T=0.05)
    assert not records[0].resolved
    assert np.isnan(records[0].besov_interior)
