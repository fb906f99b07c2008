"""Pure-numpy implementations of the hot offset-sum kernels.

All three primitives walk a stencil of grid-snapped offsets (di, dj) with
per-offset weights, accumulating shifted copies of the input arrays.
Rows shifted past a wall contribute nothing; the caller restricts output
validity to rows [ilo, ihi] where every stencil point stays in range, so
here we only need periodic wrap in x (np.roll) and a clipped copy in y.

The compiled extension in _kernels.pyx implements the same signatures.
"""

import numpy as np


def _shifted(a, di, dj):
    """a(. + (di, dj)) with x wrap and zero fill outside in y.

    a has shape (..., ny, nx); the shift acts on the trailing two axes.
    """
    ny = a.shape[-2]
    out = np.zeros_like(a)
    rolled = np.roll(a, -dj, axis=-1)
    if di >= 0:
        out[..., : ny - di, :] = rolled[..., di:, :]
    else:
        out[..., -di:, :] = rolled[..., : ny + di, :]
    return out


def shift_sum(values, di, dj, w, ilo, ihi):
    """sum_k w[k] * values(. + r_k) for a stack of (ny, nx) planes.

    values: (m, ny, nx); di, dj: (K,) int; w: (K,) weights.
    Returns (m, ny, nx) with rows outside [ilo, ihi] zeroed.
    """
    values = np.asarray(values, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros_like(values)
    for k in range(len(di)):
        out += w[k] * _shifted(values, int(di[k]), int(dj[k]))
    out[:, :ilo] = 0.0
    if ihi + 1 < out.shape[1]:
        out[:, ihi + 1:] = 0.0
    return out


def tau_increment(f, g, di, dj, w, ilo, ihi):
    """Commutator tau(f, g) in increment form.

    f: (mf, ny, nx), g: (mg, ny, nx); returns (mf, mg, ny, nx) equal to
    sum_k w_k df_k dg_k - (sum_k w_k df_k)(sum_k w_k dg_k), where
    df_k = f(. + r_k) - f.
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    mf, ny, nx = f.shape
    mg = g.shape[0]
    cross = np.zeros((mf, mg, ny, nx))
    mean_f = np.zeros_like(f)
    mean_g = np.zeros_like(g)
    for k in range(len(di)):
        dik, djk = int(di[k]), int(dj[k])
        df = _shifted(f, dik, djk) - f
        dg = _shifted(g, dik, djk) - g
        cross += w[k] * df[:, None] * dg[None, :]
        mean_f += w[k] * df
        mean_g += w[k] * dg
    out = cross - mean_f[:, None] * mean_g[None, :]
    out[..., :ilo, :] = 0.0
    if ihi + 1 < ny:
        out[..., ihi + 1:, :] = 0.0
    return out


def grad_increment(f, di, dj, vx, vy, ilo, ihi):
    """Mollified gradient via increments: out[a] = sum_k V_a[k] df_k.

    f: (m, ny, nx); vx, vy: (K,) gradient weights (already scaled by 1/ell
    and moment-corrected by the caller). Returns (2, m, ny, nx).
    """
    f = np.asarray(f, dtype=np.float64)
    m, ny, nx = f.shape
    out = np.zeros((2, m, ny, nx))
    for k in range(len(di)):
        dik, djk = int(di[k]), int(dj[k])
        df = _shifted(f, dik, djk) - f
        out[0] += vx[k] * df
        out[1] += vy[k] * df
    out[..., :ilo, :] = 0.0
    if ihi + 1 < ny:
        out[..., ihi + 1:, :] = 0.0
    return out
