"""One-particle radial eigenproblem for the layered spherical dot.

Electron and hole channels are solved per angular momentum l in the
reduced-function picture: the unknown is u(r) = r R(r) on [0, R] with
u(0) = u(R) = 0, expanded in the normalized B-spline basis.  The weak
form keeps the position-dependent mass inside the derivative term, so
interface matching is handled variationally rather than imposed.

The dielectric mismatch enters as a self-energy: the carrier polarizes
the two interfaces and feels its own image charges.  The multipole
series for that potential is evaluated in a ratio form that never forms
large powers of absolute radii.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh, eigh_tridiagonal
from scipy.optimize import brentq
from scipy.special import spherical_jn, spherical_yn

from qdexciton.bsplines import RadialBasis, make_basis
from qdexciton.constants import COULOMB, HBAR2_OVER_2M0
from qdexciton.errors import (
    InconsistentGeometry,
    RootNotBracketed,
    SeriesNotConverged,
    SolverFailure,
    StateOutOfRange,
)
from qdexciton.materials import Device, Numerics


@dataclass(frozen=True)
class ChannelSpec:
    """Which one-particle problem to solve.

    particle : "e" or "h"
    l : orbital angular momentum, >= 0
    include_selfpol : add the image-charge self-energy inside the well
    selfpol_lmax : multipole cutoff of that series
    compat_printed_eqs : use the dimensionally odd exponent variant of
        the self-energy series (kept for cross-checking only)
    """

    particle: str
    l: int = 0
    include_selfpol: bool = True
    selfpol_lmax: int = 80
    compat_printed_eqs: bool = False

    def __post_init__(self):
        if self.particle not in ("e", "h"):
            raise ValueError(f"particle must be 'e' or 'h', got {self.particle!r}")
        if self.l < 0:
            raise ValueError(f"l must be >= 0, got {self.l}")
        if self.selfpol_lmax < 0:
            raise ValueError(f"selfpol_lmax must be >= 0, got {self.selfpol_lmax}")


def _image_coefficients(device: Device, lam: np.ndarray):
    """Reduced image-charge coefficients c_p, c_q and the product p*q.

    The raw coefficients p_l, q_l carry factors a^(2l+1) and b^-(2l+1)
    that overflow for large l; everything here keeps only the ratios
    p_l [r or a power laws] applied later, via
    p_l = c_p * a^(2l+1) and q_l = c_q * b^-(2l+1).
    """
    e1 = device.well.eps
    e2 = device.barrier.eps
    lam = np.asarray(lam, dtype=float)
    c_q = (e1 - e2) * (lam + 1.0) / (e1 * lam + e2 * (lam + 1.0))
    c_p = (e1 - e2) * lam / (e2 * lam + e1 * (lam + 1.0))
    if device.a > 0.0:
        pq = c_p * c_q * (device.a / device.b) ** (2.0 * lam + 1.0)
    else:
        pq = np.zeros_like(lam)
    return c_p, c_q, pq


def selfpol_potential(
    device: Device,
    r,
    lmax: int = 80,
    *,
    check: bool = True,
    compat_printed_eqs: bool = False,
):
    """Image-charge self-energy (eV) of a carrier at radius r in the well.

    Sum over multipoles 0..lmax of the homogeneous solutions matched at
    both interfaces.  The series converges only for a < r < b; matrix
    assembly therefore applies it at well-interior quadrature nodes and
    passes ``check=False`` there, because nodes close to an interface
    converge slowly in l (the truncation regularizes the interface
    image divergence).

    With ``check=True`` a SeriesNotConverged is raised when the last
    retained term still exceeds 1e-10 of the accumulated value.
    """
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    lam = np.arange(int(lmax) + 1, dtype=float)[:, None]
    c_p, c_q, pq = _image_coefficients(device, lam)
    t_outer = c_q * (r[None, :] / device.b) ** (2.0 * lam) / device.b
    if device.a > 0.0:
        ratio = (device.a / r[None, :]) ** (2.0 * lam + 1.0)
        if compat_printed_eqs:
            t_inner = c_p * ratio
        else:
            t_inner = c_p * ratio / r[None, :]
        t_cross = pq / r[None, :]
    else:
        t_inner = np.zeros_like(t_outer)
        t_cross = np.zeros_like(t_outer)
    terms = (t_outer + t_inner + t_cross) / (1.0 - pq)
    pref = 0.5 * COULOMB / device.well.eps
    v = pref * terms.sum(axis=0)
    if check:
        tail = pref * np.abs(terms[-1])
        rel = tail / np.maximum(np.abs(v), 1e-300)
        if np.any(rel > 1e-10):
            worst = float(r[int(np.argmax(rel))])
            raise SeriesNotConverged(
                f"self-energy series not converged at r={worst:.6g} nm "
                f"with lmax={lmax}"
            )
    return float(v[0]) if scalar else v


def assemble(
    basis: RadialBasis, device: Device, channel: ChannelSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Hamiltonian and overlap matrices over the retained reduced basis.

    H_ij = hbar^2/2 int u_i' u_j' / m dr
         + hbar^2/2 l(l+1) int u_i u_j / (m r^2) dr
         + int (V + V_s) u_i u_j dr
    S_ij = int u_i u_j dr
    """
    bp = basis.kv.breakpoints
    ok = (
        np.isclose(bp[0], 0.0)
        and np.isclose(bp[-1], device.R)
        and np.isclose(bp, device.b).any()
        and (device.a == 0.0 or np.isclose(bp, device.a).any())
    )
    if not ok:
        raise InconsistentGeometry(
            "basis knots do not place breakpoints at this device's interfaces"
        )
    x, w = basis.grid.x, basis.grid.w
    mass = device.mass_at(x, channel.particle)
    V = device.potential_at(x, channel.particle)
    if channel.include_selfpol:
        mask = device.well_mask(x)
        vs = np.zeros_like(x)
        vs[mask] = selfpol_potential(
            device,
            x[mask],
            channel.selfpol_lmax,
            check=False,
            compat_printed_eqs=channel.compat_printed_eqs,
        )
        V = V + vs
    B, dB = basis.B, basis.dB
    H = HBAR2_OVER_2M0 * (dB * (w / mass)[:, None]).T @ dB
    if channel.l > 0:
        cf = channel.l * (channel.l + 1.0)
        H = H + HBAR2_OVER_2M0 * cf * (B * (w / (mass * x**2))[:, None]).T @ B
    H = H + (B * (w * V)[:, None]).T @ B
    S = (B * w[:, None]).T @ B
    return 0.5 * (H + H.T), 0.5 * (S + S.T)


@dataclass(frozen=True)
class RadialSolution:
    """Eigenpairs of one (particle, l) channel.

    ``coefficients[n]`` expands state n over the retained basis
    functions; vectors are S-orthonormal with a deterministic sign
    (positive net area, see ``solve``).
    """

    energies: np.ndarray
    coefficients: np.ndarray
    overlap: np.ndarray = field(repr=False)
    channel: ChannelSpec | None = None
    basis: RadialBasis | None = None
    device: Device | None = None

    @property
    def n_states(self) -> int:
        return len(self.energies)

    @property
    def bound(self) -> np.ndarray:
        """Mask of states lying below the barrier offset."""
        if self.device is None or self.channel is None:
            raise SolverFailure("solution carries no device; bound flags undefined")
        return self.energies < self.device.offset(self.channel.particle)

    def _require_state(self, state: int) -> None:
        if not 0 <= state < self.n_states:
            raise StateOutOfRange(
                f"state {state} outside [0, {self.n_states - 1}]"
            )

    def u(self, state: int, r, deriv: int = 0, side: str = "right") -> np.ndarray:
        """Reduced radial function u(r) = r R(r) of one state."""
        self._require_state(state)
        if self.basis is None:
            raise SolverFailure("solution carries no basis; cannot evaluate")
        return self.basis.u_values(r, deriv=deriv, side=side) @ self.coefficients[state]

    def radial_function(self, state: int, r) -> np.ndarray:
        """R(r) = u(r)/r."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return self.u(state, r) / r


def solve(
    H: np.ndarray,
    S: np.ndarray,
    n_states: int | None = None,
    *,
    channel: ChannelSpec | None = None,
    basis: RadialBasis | None = None,
    device: Device | None = None,
) -> RadialSolution:
    """Lowest generalized eigenpairs of (H, S), ascending, S-orthonormal."""
    H = np.asarray(H, dtype=float)
    S = np.asarray(S, dtype=float)
    try:
        w, v = eigh(H, S)
    except (LinAlgError, ValueError) as exc:
        raise SolverFailure(f"generalized eigensolve failed: {exc}") from exc
    if not np.isfinite(w).all():
        raise SolverFailure("eigensolve produced non-finite eigenvalues")
    if n_states is not None:
        w = w[: int(n_states)]
        v = v[:, : int(n_states)]
    # Deterministic sign: positive net area where that is well defined
    # (every nodeless ground state comes out positive everywhere); for
    # near-zero-area states fall back to the first significant
    # coefficient, whose scale the evanescent tails cannot reach.
    area = basis.grid.w @ basis.B if basis is not None else None
    for j in range(v.shape[1]):
        col = v[:, j]
        scale = np.abs(col).max()
        s = float(area @ col) if area is not None else 0.0
        if area is not None and abs(s) > 1e-8 * scale * np.abs(area).max():
            flip = s < 0.0
        else:
            first = int(np.argmax(np.abs(col) > 1e-12 * scale))
            flip = col[first] < 0.0
        if flip:
            v[:, j] = -col
    return RadialSolution(
        energies=w,
        coefficients=np.ascontiguousarray(v.T),
        overlap=S,
        channel=channel,
        basis=basis,
        device=device,
    )


def solve_channel(
    device: Device,
    numerics: Numerics,
    channel: ChannelSpec,
    n_states: int | None = None,
    basis: RadialBasis | None = None,
) -> RadialSolution:
    """Convenience wrapper: build basis, assemble, and solve one channel."""
    if basis is None:
        basis = make_basis(device, numerics)
    H, S = assemble(basis, device, channel)
    return solve(H, S, n_states, channel=channel, basis=basis, device=device)


@dataclass(frozen=True)
class MatchingResidual:
    """One-sided jumps of u and of (1/m) u' at both interfaces."""

    psi_a: float
    psi_b: float
    flux_a: float
    flux_b: float


def matching_residual(solution: RadialSolution, state: int) -> MatchingResidual:
    """Interface-matching diagnostic for one computed state.

    The weak form never imposes continuity of the mass-scaled derivative
    explicitly; this evaluates how well the computed state satisfies it,
    by one-sided limits at r = a and r = b.  Purely diagnostic.
    """
    solution._require_state(state)
    dev = solution.device
    ch = solution.channel
    if dev is None or ch is None:
        raise SolverFailure("solution carries no device; residual undefined")
    m_w, m_b = dev.mass(ch.particle)
    pts = np.array([dev.a, dev.b])
    u_r = solution.u(state, pts, side="right")
    u_l = solution.u(state, pts, side="left")
    du_r = solution.u(state, pts, deriv=1, side="right")
    du_l = solution.u(state, pts, deriv=1, side="left")
    # material just inside each interface is the well's, outside the barrier's
    flux_a = du_r[0] / m_w - du_l[0] / m_b
    flux_b = du_r[1] / m_b - du_l[1] / m_w
    return MatchingResidual(
        psi_a=abs(u_r[0] - u_l[0]),
        psi_b=abs(u_r[1] - u_l[1]),
        flux_a=abs(flux_a),
        flux_b=abs(flux_b),
    )


def infinite_well_reference(device: Device, m_well: float, l: int, n: int) -> float:
    """Level n (1-based) of the hard-wall shell a < r < b, constant mass.

    l = 0 is closed form; l > 0 finds the n-th zero of the spherical
    Bessel cross product j_l(ka) y_l(kb) - j_l(kb) y_l(ka), or of
    j_l(kb) alone when the core is absent.
    """
    if n < 1:
        raise ValueError(f"level index must be >= 1, got {n}")
    a, b = device.a, device.b
    width = b - a
    if l == 0 and a > 0.0:
        k = n * np.pi / width
        return HBAR2_OVER_2M0 * k**2 / m_well

    if a > 0.0:
        def f(k):
            return spherical_jn(l, k * a) * spherical_yn(l, k * b) - spherical_jn(
                l, k * b
            ) * spherical_yn(l, k * a)
    else:
        def f(k):
            return spherical_jn(l, k * b)

    k_lo = 1e-9 / width
    k_hi = (n + l + 2) * np.pi / width
    grid = np.linspace(k_lo, k_hi, 200 * (n + l + 2))
    vals = f(grid)
    sign_flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(sign_flips) < n:
        raise RootNotBracketed(
            f"found only {len(sign_flips)} roots below k={k_hi:.4g} for l={l}"
        )
    j = sign_flips[n - 1]
    k = brentq(f, grid[j], grid[j + 1], xtol=1e-14, rtol=1e-15)
    return HBAR2_OVER_2M0 * k**2 / m_well


def fd_reference(
    device: Device,
    channel: ChannelSpec,
    n_cells: int = 20000,
    n_states: int = 6,
) -> np.ndarray:
    """Independent check solver: second-order flux-form finite differences.

    Uniform grid over [0, R] with Dirichlet ends; 1/m is sampled at cell
    midpoints so the mass jump enters through one-sided fluxes, and node
    values of the step potential exactly on an interface take the mean of
    the two sides.  Uses a tridiagonal eigensolver; completely disjoint
    from the B-spline path.
    """
    h = device.R / n_cells
    nodes = h * np.arange(1, n_cells)
    mids = h * (np.arange(n_cells) + 0.5)
    kappa = 1.0 / device.mass_at(mids, channel.particle)

    V = device.potential_at(nodes, channel.particle)
    on_iface = np.isclose(nodes, device.a) | np.isclose(nodes, device.b)
    V[on_iface] = 0.5 * device.offset(channel.particle)
    if channel.l > 0:
        cf = channel.l * (channel.l + 1.0)
        inv_m = 1.0 / device.mass_at(nodes, channel.particle)
        inv_m[on_iface] = 0.5 * (
            1.0 / device.mass(channel.particle)[0]
            + 1.0 / device.mass(channel.particle)[1]
        )
        V = V + HBAR2_OVER_2M0 * cf * inv_m / nodes**2
    if channel.include_selfpol:
        mask = device.well_mask(nodes)
        vs = np.zeros_like(nodes)
        vs[mask] = selfpol_potential(
            device,
            nodes[mask],
            channel.selfpol_lmax,
            check=False,
            compat_printed_eqs=channel.compat_printed_eqs,
        )
        V = V + vs

    c = HBAR2_OVER_2M0 / h**2
    diag = c * (kappa[:-1] + kappa[1:]) + V
    off = -c * kappa[1:-1]
    w = eigh_tridiagonal(
        diag, off, select="i", select_range=(0, n_states - 1), eigvals_only=True
    )
    return w
