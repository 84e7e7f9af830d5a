"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable.  Both backends expose the
same two entry points:

``design_matrix(knots, k, x, deriv, side_left)``
    Values (or ``deriv``-th derivatives) of every order-``k`` B-spline on
    ``knots`` at the points ``x``; shape ``(len(x), len(knots) - k)``.
    This implementation accepts any nondecreasing knot vector.  The
    compiled twin runs a banded recursion that is only valid when the
    ends are clamped (first and last knots repeated ``k`` times) and
    supports ``deriv`` up to 2; callers route through
    ``bsplines.design_matrix``, which checks for that.

``rk4_drive(diag, coupling, e0, omega, dt, n_steps, stride, hbar)``
    Fixed-step RK4 propagation of the driven level system
    ``i hbar dU/dt = H(t) U`` with ``H = diag(diag) - E(t) * C`` where the
    coupling matrix ``C`` links level 0 to every other level
    (``C[0, i] = C[i, 0] = coupling[i-1]``) and ``E(t) = e0 sin(omega t)``.
    Returns the trajectory sampled every ``stride`` steps, initial state
    included; shape ``(n_steps // stride + 1, len(diag))``.
"""

from __future__ import annotations

import numpy as np


def _order1(knots: np.ndarray, x: np.ndarray, side_left: bool) -> np.ndarray:
    t0 = knots[:-1][None, :]
    t1 = knots[1:][None, :]
    xc = x[:, None]
    if side_left:
        B = ((t0 < xc) & (xc <= t1)).astype(float)
        # points exactly at the left end belong to the first nonzero span
        at_start = x == knots[0]
        if at_start.any():
            nonzero = np.nonzero(knots[1:] > knots[:-1])[0]
            B[at_start] = 0.0
            B[at_start, nonzero[0]] = 1.0
    else:
        B = ((t0 <= xc) & (xc < t1)).astype(float)
        # points exactly at the right end belong to the last nonzero span
        at_end = x == knots[-1]
        if at_end.any():
            nonzero = np.nonzero(knots[1:] > knots[:-1])[0]
            B[at_end] = 0.0
            B[at_end, nonzero[-1]] = 1.0
    return B


def _values(knots: np.ndarray, k: int, x: np.ndarray, side_left: bool) -> np.ndarray:
    B = _order1(knots, x, side_left)
    for d in range(2, k + 1):
        n_d = len(knots) - d
        den1 = knots[d - 1 : d - 1 + n_d] - knots[:n_d]
        den2 = knots[d : d + n_d] - knots[1 : 1 + n_d]
        w1 = np.where(den1 > 0.0, 1.0 / np.where(den1 > 0.0, den1, 1.0), 0.0)
        w2 = np.where(den2 > 0.0, 1.0 / np.where(den2 > 0.0, den2, 1.0), 0.0)
        B = (x[:, None] - knots[:n_d][None]) * w1[None] * B[:, :n_d] + (
            knots[d : d + n_d][None] - x[:, None]
        ) * w2[None] * B[:, 1 : 1 + n_d]
    return B


def design_matrix(knots, k, x, deriv=0, side_left=False):
    knots = np.ascontiguousarray(knots, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = int(k)
    if deriv >= k:
        return np.zeros((len(x), len(knots) - k))
    if deriv == 0:
        return _values(knots, k, x, side_left)
    lower = design_matrix(knots, k - 1, x, deriv - 1, side_left)
    n = len(knots) - k
    den1 = knots[k - 1 : k - 1 + n] - knots[:n]
    den2 = knots[k : k + n] - knots[1 : 1 + n]
    f1 = np.where(den1 > 0.0, (k - 1) / np.where(den1 > 0.0, den1, 1.0), 0.0)
    f2 = np.where(den2 > 0.0, (k - 1) / np.where(den2 > 0.0, den2, 1.0), 0.0)
    return lower[:, :n] * f1[None] - lower[:, 1 : 1 + n] * f2[None]


def rk4_drive(diag, coupling, e0, omega, dt, n_steps, stride, hbar):
    diag = np.asarray(diag, dtype=float)
    c = np.asarray(coupling, dtype=float)
    d = len(diag)
    n_steps = int(n_steps)
    stride = int(stride)
    U = np.zeros(d, dtype=complex)
    U[0] = 1.0
    out = np.empty((n_steps // stride + 1, d), dtype=complex)
    out[0] = U
    coef = -1j / hbar

    def rhs(t, u):
        field = e0 * np.sin(omega * t)
        du = diag * u
        du[0] -= field * (c @ u[1:])
        du[1:] -= field * c * u[0]
        return coef * du

    row = 1
    half = 0.5 * dt
    sixth = dt / 6.0
    for n in range(n_steps):
        t = n * dt
        k1 = rhs(t, U)
        k2 = rhs(t + half, U + half * k1)
        k3 = rhs(t + half, U + half * k2)
        k4 = rhs(t + dt, U + dt * k3)
        U = U + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if (n + 1) % stride == 0:
            out[row] = U
            row += 1
    return out
