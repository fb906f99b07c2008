import numpy as np
import pytest

from oblab import solver as S
from oblab.errors import ConfigError, NumericError
from oblab.fields import write_snapshot
from oblab.grid import Grid2


def test_config_validation():
    g = Grid2(1.0, 2.0, 16, 17)
    with pytest.raises(ConfigError):
        S.SolverConfig(g, nu=-1.0, dt=1e-3, T=0.1)
    with pytest.raises(ConfigError):
        S.SolverConfig(g, nu=0.01, dt=1e-3, T=0.1, scenario="vortex_street")
    with pytest.raises(ConfigError):
        S.SolverConfig(g, nu=0.01, dt=1e-3, T=0.1, scenario="custom_snapshot")
    with pytest.raises(ConfigError):
        S.run(S.SolverConfig(g, nu=0.01, dt=3e-3, T=0.01))  # T not multiple of dt


def test_decaying_shear_matches_closed_form():
    g = Grid2(1.0, 2.0, 16, 65)
    nu, n, T = 1e-2, 1, 1.0
    snaps, ledger = S.run(S.SolverConfig(g, nu=nu, dt=2e-3, T=T, mode_n=n))
    exact = S.decaying_shear_exact(g, nu, n, T)
    err = np.max(np.abs(snaps[-1].u.values[0] - exact))
    assert err < 1e-4
    assert ledger.inequality_ok


def test_poiseuille_reaches_parabola():
    g = Grid2(1.0, 2.0, 16, 17)
    nu, G = 0.05, 0.1
    snaps, ledger = S.run(S.SolverConfig(g, nu=nu, dt=0.015, T=129.0,
                                         scenario="poiseuille", forcing=G))
    exact = S.poiseuille_exact(g, nu, G)
    rel = np.max(np.abs(snaps[-1].u.values[0] - exact)) / np.max(exact)
    assert rel < 1e-5
    assert ledger.inequality_ok


def test_divergence_and_no_slip_invariants():
    g = Grid2(1.0, 2.0, 32, 33)
    cfg = S.SolverConfig(g, nu=5e-3, dt=2e-3, T=0.1, scenario="dipole_wall")
    snaps, _ = S.run(cfg)
    u = snaps[-1].u.values
    div = S._divergence_interior(u[0], u[1], g)
    assert np.max(np.abs(div)) < S.DIV_TOLERANCE
    assert np.max(np.abs(u[:, 0])) == 0.0
    assert np.max(np.abs(u[:, -1])) == 0.0


def test_cfl_guard_trips():
    g = Grid2(1.0, 2.0, 32, 33)
    cfg = S.SolverConfig(g, nu=0.05, dt=0.05, T=0.1)
    with pytest.raises(NumericError):
        S.run(cfg)


def test_energy_inequality_slack_refines_with_dt():
    g = Grid2(1.0, 2.0, 16, 33)
    slacks = []
    for dt in (4e-3, 2e-3):
        _, ledger = S.run(S.SolverConfig(g, nu=1e-2, dt=dt, T=0.4))
        slacks.append(abs(ledger.inequality_slack))
    # the budget closes at the scheme's order: halving dt shrinks the drift
    assert slacks[1] < slacks[0] / 1.8


def test_dipole_energy_monotone_without_forcing():
    g = Grid2(1.0, 2.0, 32, 33)
    _, ledger = S.run(S.SolverConfig(g, nu=5e-3, dt=2e-3, T=0.2,
                                     scenario="dipole_wall", snapshot_every=10))
    ke = ledger.kinetic_energy
    assert np.all(np.diff(ke) <= 1e-12 * ke[0])


def test_custom_snapshot_roundtrip(tmp_path):
    g = Grid2(1.0, 2.0, 16, 33)
    snaps, _ = S.run(S.SolverConfig(g, nu=1e-2, dt=2e-3, T=0.05))
    path = tmp_path / "state.obl"
    write_snapshot(str(path), snaps[-1])
    cfg = S.SolverConfig(g, nu=1e-2, dt=2e-3, T=0.05,
                         scenario="custom_snapshot", snapshot_path=str(path))
    snaps2, _ = S.run(cfg)
    assert snaps2[0].u.values == pytest.approx(snaps[-1].u.values, abs=1e-12)
    # wrong grid is rejected
    bad = Grid2(1.0, 2.0, 16, 65)
    with pytest.raises(ConfigError):
        S.run(S.SolverConfig(bad, nu=1e-2, dt=2e-3, T=0.05,
                             scenario="custom_snapshot", snapshot_path=str(path)))


def test_ledger_csv_header():
    g = Grid2(1.0, 2.0, 16, 17)
    _, ledger = S.run(S.SolverConfig(g, nu=1e-2, dt=2e-3, T=0.02))
    lines = ledger.to_csv().strip().splitlines()
    assert lines[0].startswith("t[s],kinetic_energy")
    assert len(lines) == 1 + len(ledger.times)


def test_euler_reference_zero_mean_enforced():
    g = Grid2(1.0, 2.0, 16, 65)
    with pytest.raises(ConfigError):
        S.euler_reference(g, lambda y: np.ones_like(y))
    ref = S.euler_reference(g, lambda y: np.sin(2 * np.pi * y / g.Ly))
    assert abs(ref.psi.values[0, 0]) < 1e-12
    assert abs(ref.psi.values[-1, 0]) < 1e-10
    assert ref.grad_v_max == pytest.approx(2 * np.pi / g.Ly, rel=1e-2)


def test_gradient_sq_integral_shear_oracle():
    g = Grid2(1.0, 2.0, 16, 129)
    u = np.zeros((2,) + g.shape())
    u[0] = np.sin(np.pi * g.y / g.Ly)[:, None]
    # int |du1/dy|^2 = (pi/Ly)^2 * Lx * Ly / 2
    exact = (np.pi / g.Ly) ** 2 * g.Lx * g.Ly / 2.0
    assert S.gradient_sq_integral(u, g) == pytest.approx(exact, rel=1e-3)
