"""Pure numpy implementations of the simulator's hot loops.

Arrays are float64 with shape (ncomp, nx, ny, nz).  Boundary nodes carry
homogeneous Dirichlet data and are always written as zero.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

# Symmetric 2-tensor storage order.
SYM_INDEX = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))
# Antisymmetric field-strength storage order (upper triangle).
ANTI_INDEX = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def leapfrog_step(u_prev, u_cur, f, out, cx, cy, cz, dt2):
    """out = 2 u_cur - u_prev + dt2 * f + (dt^2/h^2)-weighted 7-point Laplacian of u_cur.

    ``out`` may alias ``u_prev``.
    """
    c = u_cur[:, 1:-1, 1:-1, 1:-1]
    lap = cx * (u_cur[:, 2:, 1:-1, 1:-1] + u_cur[:, :-2, 1:-1, 1:-1])
    lap += cy * (u_cur[:, 1:-1, 2:, 1:-1] + u_cur[:, 1:-1, :-2, 1:-1])
    lap += cz * (u_cur[:, 1:-1, 1:-1, 2:] + u_cur[:, 1:-1, 1:-1, :-2])
    lap -= (2.0 * (cx + cy + cz)) * c
    lap += 2.0 * c
    lap -= u_prev[:, 1:-1, 1:-1, 1:-1]
    if f is not None:
        lap += dt2 * f[:, 1:-1, 1:-1, 1:-1]
    out[:, 1:-1, 1:-1, 1:-1] = lap
    _zero_boundary(out)
    return out


def _zero_boundary(a):
    a[:, 0] = 0.0
    a[:, -1] = 0.0
    a[:, :, 0] = 0.0
    a[:, :, -1] = 0.0
    a[:, :, :, 0] = 0.0
    a[:, :, :, -1] = 0.0


def field_strength(phi_prev, phi_next, phi_cur, inv2dt, inv2h):
    """F_ab = d_a phi_b - d_b phi_a by centred differences, shape (6, nx, ny, nz)."""
    shape = phi_cur.shape[1:]
    d = np.zeros((4, 4) + shape)  # d[a, b] = d_a phi_b
    d[0] = (phi_next - phi_prev) * inv2dt
    for ax in range(3):
        sl_p = [slice(None)] * 4
        sl_m = [slice(None)] * 4
        sl_c = [slice(None)] * 4
        sl_p[ax + 1] = slice(2, None)
        sl_m[ax + 1] = slice(None, -2)
        sl_c[ax + 1] = slice(1, -1)
        tgt = d[ax + 1]
        tgt[tuple(sl_c)] = (phi_cur[tuple(sl_p)] - phi_cur[tuple(sl_m)]) * inv2h[ax]
    F = np.empty((6,) + shape)
    for n, (a, b) in enumerate(ANTI_INDEX):
        np.subtract(d[a, b], d[b, a], out=F[n])
    F[:, 0] = 0.0
    F[:, -1] = 0.0
    F[:, :, 0] = 0.0
    F[:, :, -1] = 0.0
    F[:, :, :, 0] = 0.0
    F[:, :, :, -1] = 0.0
    return F


def stress_from_field_strength(F, out=None):
    """H_ab = -2 (sum_c h^cc F_ac F_bc - 1/4 h_ab Tr), Tr = sum h^ll h^mm F_lm F_lm."""
    shape = F.shape[1:]
    full = {}
    for n, (a, b) in enumerate(ANTI_INDEX):
        full[a, b] = F[n]
        full[b, a] = -F[n]
    sgn = (-1.0, 1.0, 1.0, 1.0)
    # Tr: pairs with one time index get h^00 = -1; count both orderings.
    tr = np.zeros(shape)
    for n, (a, b) in enumerate(ANTI_INDEX):
        w = -2.0 if a == 0 else 2.0
        tr += w * F[n] * F[n]
    if out is None:
        out = np.empty((10,) + shape)
    for n, (a, b) in enumerate(SYM_INDEX):
        acc = np.zeros(shape)
        for c in range(4):
            if c == a or c == b:
                continue
            acc += sgn[c] * full[a, c] * full[b, c]
        if a == b:
            acc -= 0.25 * sgn[a] * tr
        np.multiply(acc, -2.0, out=out[n])
    return out


def em_stress(phi_prev, phi_cur, phi_next, inv2dt, inv2h, out=None):
    F = field_strength(phi_prev, phi_next, phi_cur, inv2dt, inv2h)
    return stress_from_field_strength(F, out)
