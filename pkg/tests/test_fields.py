import numpy as np
import pytest

from oblab import fields as F
from oblab.errors import ConfigError
from oblab.grid import Grid2


def test_shift_cocycle(grid, rng):
    f = F.scalar_field(grid, rng.standard_normal(grid.shape()))
    r1 = (3 * grid.dx, 2 * grid.dy)
    r2 = (-grid.dx, 5 * grid.dy)
    a = F.shift(F.shift(f, r1), r2)
    b = F.shift(f, (r1[0] + r2[0], r1[1] + r2[1]))
    both = a.valid & b.valid
    assert np.array_equal(a.values[both], b.values[both])


def test_increment_of_linear_field(grid):
    f = F.from_function(grid, lambda x, y: 2.0 * y)
    inc = F.increment(f, (0.0, 4 * grid.dy))
    assert np.allclose(inc.values[inc.valid], 8.0 * grid.dy)


def test_shift_marks_outside_invalid(grid):
    f = F.scalar_field(grid, np.ones(grid.shape()))
    sh = F.shift(f, (0.0, 10 * grid.dy))
    assert not sh.valid[-1].any()
    assert sh.valid[0].all()


def test_gradient_convention(grid):
    u = F.from_function(grid, lambda x, y: y, lambda x, y: 0.0 * x)
    g = F.gradient(u)
    # g[a, j] = d_a u_j: only d_y u_1 is nonzero
    assert np.allclose(g.values[1, 0][g.valid], 1.0)
    for a, j in ((0, 0), (0, 1), (1, 1)):
        assert np.allclose(g.values[a, j][g.valid], 0.0)


def test_laplacian_is_divergence_of_gradient(grid, rng):
    f = F.scalar_field(grid, rng.standard_normal(grid.shape()))
    lap = F.laplacian(f)
    comp = F.divergence(F.gradient(f))
    assert np.array_equal(lap.values, comp.values)


def test_region_norms(grid):
    f = F.scalar_field(grid, np.full(grid.shape(), -3.0))
    assert F.region_norm(f, None, np.inf) == 3.0
    area = grid.Lx * grid.Ly
    assert F.region_norm(f, None, 2.0) == pytest.approx(3.0 * np.sqrt(area))
    with pytest.raises(ConfigError):
        F.region_norm(f, np.zeros(grid.shape(), bool), 2.0)


def test_time_norm():
    times = np.linspace(0.0, 2.0, 101)
    series = np.ones_like(times)
    assert F.time_norm(times, series, 3.0) == pytest.approx(2.0 ** (1 / 3))
    assert F.time_norm(times, -2.0 * series, np.inf) == 2.0


def test_no_slip_check(grid):
    u = F.vector_field(grid, np.zeros(grid.shape()), np.zeros(grid.shape()))
    assert F.check_no_slip(u) == 0.0
    u.values[0, 0, 3] = 1e-6
    with pytest.raises(ConfigError):
        F.check_no_slip(u)


def test_snapshot_roundtrip(tmp_path, grid, rng):
    u = F.vector_field(grid, rng.standard_normal(grid.shape()),
                       np.zeros(grid.shape()))
    u.values[:, 0] = 0.0
    u.values[:, -1] = 0.0
    p = F.scalar_field(grid, rng.standard_normal(grid.shape()))
    snap = F.Snapshot(t=1.25, u=u, p=p, nu=3e-4)
    path = tmp_path / "snap.obl"
    F.write_snapshot(path, snap)
    back = F.read_snapshot(path)
    assert back.t == snap.t and back.nu == snap.nu
    assert back.grid == grid
    assert np.array_equal(back.u.values, snap.u.values)
    assert np.array_equal(back.p.values, snap.p.values)


def test_snapshot_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.obl"
    path.write_bytes(b"NOPE" + b"\0" * 64)
    with pytest.raises(ConfigError):
        F.read_snapshot(path)


def test_nonfinite_rejected(grid):
    vals = np.zeros(grid.shape())
    vals[3, 3] = np.nan
    with pytest.raises(ConfigError):
        F.scalar_field(grid, vals)
