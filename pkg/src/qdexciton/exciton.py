"""Electron-hole configuration interaction in the layered dielectric dot.

The two-particle basis couples one electron and one hole state of equal
angular momentum l to total L = 0; radial factors come from the solved
one-particle channels.  The interaction is the electrostatic Green
function of the three-layer dielectric, expanded in multipoles:

    kernel_lam(r1, r2) = 4 pi e^2 / (eps1 (2 lam + 1)(1 - p q))
                         * [r_<^lam + p r_<^-(lam+1)]
                         * [r_>^-(lam+1) + q r_>^lam]

with image coefficients p, q of the core and clad interfaces.  Powers of
absolute radii in p and q are huge for large lam, so evaluation uses the
ratio form p r_<^-(lam+1) = c_p (a/r_<)^(2 lam + 1) r_<^lam throughout.

Matrix elements integrate this kernel over the full box using its
well-region functional form; carriers leak only weakly out of the well,
and the monopole term (the only one reaching s states) has no core
image, so the extension is benign.  The kink along r1 = r2 is handled by
splitting every same-cell quadrature block into two triangles, on which
the kernel factorizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.linalg import LinAlgError, eigh

from qdexciton.bsplines import RadialBasis
from qdexciton.constants import COULOMB
from qdexciton.errors import (
    BasisMismatch,
    OutsideWell,
    SolverFailure,
    StateOutOfRange,
)
from qdexciton.materials import Device, Numerics
from qdexciton.radial import ChannelSpec, RadialSolution, solve_channel
from qdexciton import bsplines


def wigner3j_zero(l1: int, l2: int, l3: int) -> float:
    """Wigner 3j symbol with all magnetic numbers zero (closed form)."""
    J = l1 + l2 + l3
    if J % 2 == 1:
        return 0.0
    if abs(l1 - l2) > l3 or l3 > l1 + l2:
        return 0.0
    g = J // 2
    num = (
        factorial(J - 2 * l1) * factorial(J - 2 * l2) * factorial(J - 2 * l3)
    )
    val = np.sqrt(num / factorial(J + 1)) * (
        factorial(g)
        / (factorial(g - l1) * factorial(g - l2) * factorial(g - l3))
    )
    return float((-1) ** g * val)


def angular_coefficient(l_bra: int, l_ket: int, lam: int) -> float:
    """<(l' l') L=0 | P_lam(cos gamma) | (l l) L=0>.

    gamma is the angle between the two particles' directions.  Zero
    unless |l' - l| <= lam <= l' + l with even sum.  The multipole
    completeness factor (2 lam + 1)/(4 pi) is NOT included here; the
    interaction assembly carries it explicitly.
    """
    if l_bra < 0 or l_ket < 0 or lam < 0:
        raise ValueError("angular momenta must be >= 0")
    tj = wigner3j_zero(l_bra, lam, l_ket)
    if tj == 0.0:
        return 0.0
    sign = -1.0 if lam % 2 else 1.0
    return sign * np.sqrt((2 * l_bra + 1) * (2 * l_ket + 1)) * tj * tj


@dataclass(frozen=True)
class MultipoleKernel:
    """One multipole order of the layered-dielectric interaction."""

    device: Device
    l: int
    polarization: bool = True
    compat_printed_eqs: bool = False
    c_p: float = field(init=False)
    c_q: float = field(init=False)
    pq: float = field(init=False)

    def __post_init__(self):
        dev, lam = self.device, float(self.l)
        e1, e2 = dev.well.eps, dev.barrier.eps
        if self.polarization:
            c_q = (e1 - e2) * (lam + 1.0) / (e1 * lam + e2 * (lam + 1.0))
            c_p = (e1 - e2) * lam / (e2 * lam + e1 * (lam + 1.0))
        else:
            c_q = 0.0
            c_p = 0.0
        pq = c_p * c_q * (dev.a / dev.b) ** (2.0 * lam + 1.0)
        object.__setattr__(self, "c_p", c_p)
        object.__setattr__(self, "c_q", c_q)
        object.__setattr__(self, "pq", pq)

    @property
    def p(self) -> float:
        """Raw inner image coefficient p_l = c_p a^(2l+1)."""
        return self.c_p * self.device.a ** (2 * self.l + 1)

    @property
    def q(self) -> float:
        """Raw outer image coefficient q_l = c_q b^-(2l+1)."""
        return self.c_q * self.device.b ** -(2 * self.l + 1)

    @property
    def prefactor(self) -> float:
        return 4.0 * np.pi * COULOMB / (
            self.device.well.eps * (2 * self.l + 1) * (1.0 - self.pq)
        )

    def inner_factor(self, r: np.ndarray) -> np.ndarray:
        """alpha(r) = r^l + p r^-(l+1), in ratio form.

        Outside [a, b] the bare power keeps its true argument while the
        image enhancement saturates at its interface value; the image
        series only solves the field equations inside the well, and its
        core-side growth (a/r)^(2l+1) would otherwise amplify the
        evanescent-tail noise of the orbitals by tens of orders.
        """
        r = np.asarray(r, dtype=float)
        lam = self.l
        base = r**lam
        if self.c_p == 0.0 or self.device.a == 0.0:
            return base
        rc = np.clip(r, self.device.a, self.device.b)
        if self.compat_printed_eqs:
            # r^l + p r^(l+1): dimensionally odd printed variant
            return base * (1.0 + self.p * rc)
        return base * (1.0 + self.c_p * (self.device.a / rc) ** (2 * lam + 1))

    def outer_factor(self, r: np.ndarray) -> np.ndarray:
        """beta(r) = r^-(l+1) + q r^l, in ratio form.

        Enhancement saturated outside [a, b] as in ``inner_factor``.
        """
        r = np.asarray(r, dtype=float)
        lam = self.l
        base = r ** -(lam + 1)
        if self.c_q == 0.0:
            return base
        rc = np.clip(r, self.device.a, self.device.b)
        return base * (1.0 + self.c_q * (rc / self.device.b) ** (2 * lam + 1))


def kernel_radial(device: Device, l: int, r1, r2, *,
                  polarization: bool = True,
                  compat_printed_eqs: bool = False):
    """Radial multipole factor of the interaction (eV), both radii in the well."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if (
        (r1 < device.a).any()
        or (r1 > device.b).any()
        or (r2 < device.a).any()
        or (r2 > device.b).any()
    ):
        raise OutsideWell(
            f"kernel defined for radii in [{device.a}, {device.b}] nm"
        )
    ker = MultipoleKernel(device, int(l), polarization, compat_printed_eqs)
    lo = np.minimum(r1, r2)
    hi = np.maximum(r1, r2)
    out = ker.prefactor * ker.inner_factor(lo) * ker.outer_factor(hi)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ExcitonBasis:
    """Coupled L=0 product basis: channels l = 0..l_max, n_max^2 pairs each."""

    l_max: int
    n_max: int

    @property
    def size(self) -> int:
        return (self.l_max + 1) * self.n_max**2

    def index(self, l: int, n_e: int, n_h: int) -> int:
        return (l * self.n_max + n_e) * self.n_max + n_h

    @property
    def labels(self) -> np.ndarray:
        """(size, 3) array of (l, n_e, n_h) per basis vector."""
        out = np.empty((self.size, 3), dtype=int)
        i = 0
        for l in range(self.l_max + 1):
            for ne in range(self.n_max):
                for nh in range(self.n_max):
                    out[i] = (l, ne, nh)
                    i += 1
        return out

    @property
    def states(self) -> list[tuple[int, int, int]]:
        """Basis vectors as (n_e, n_h, l) tuples, in storage order."""
        return [(ne, nh, l) for l, ne, nh in self.labels]


@dataclass
class _CellTriangles:
    """Per-cell geometry for the triangular split of diagonal blocks.

    For a cell with Gauss nodes y_m: Z[n, s] are inner nodes filling
    [cell_lo, y_n], V[n, s] their weights, and L[m, n, s] the Lagrange
    cardinal polynomials of the cell nodes evaluated there.
    """

    slices: list
    Z: list
    V: list
    L: list


def _cell_triangles(grid) -> _CellTriangles:
    q = grid.n_per_cell
    xi, vi = np.polynomial.legendre.leggauss(q)
    slices, Zs, Vs, Ls = [], [], [], []
    xc = grid.by_cell(grid.x)
    for c in range(grid.n_cells):
        lo = grid.edges[c]
        y = xc[c]
        sl = slice(c * q, (c + 1) * q)
        half = 0.5 * (y - lo)
        Z = lo + half[:, None] * (xi[None, :] + 1.0)
        V = half[:, None] * vi[None, :]
        # barycentric cardinal functions of the cell nodes at the Z points
        bw = 1.0 / np.array(
            [np.prod(y[m] - np.delete(y, m)) for m in range(q)]
        )
        diff = Z[None, :, :] - y[:, None, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = bw[:, None, None] / diff
            L = terms / terms.sum(axis=0, keepdims=True)
        exact = np.isclose(diff, 0.0)
        if exact.any():
            L = np.where(exact, 1.0, np.where(exact.any(axis=0)[None], 0.0, L))
        slices.append(sl)
        Zs.append(Z)
        Vs.append(V)
        Ls.append(L)
    return _CellTriangles(slices, Zs, Vs, Ls)


def _coulomb_weight_matrix(
    basis: RadialBasis,
    kernel: MultipoleKernel,
    tri: _CellTriangles,
) -> np.ndarray:
    """W[i, j] ~ integral weights so that F @ W @ G.T gives
    int int f(r1) kernel(r1, r2) g(r2) dr1 dr2 for f, g sampled at nodes.

    Off-diagonal cell blocks use the plain product rule; same-cell blocks
    are recomputed on the two triangles r1 < r2 and r1 > r2 where the
    kernel factorizes, restoring full quadrature order across the kink.
    """
    x, w = basis.grid.x, basis.grid.w
    alpha = kernel.inner_factor(x)
    beta = kernel.outer_factor(x)
    lower = x[:, None] <= x[None, :]
    K = np.where(lower, alpha[:, None] * beta[None, :], alpha[None, :] * beta[:, None])
    W = (w[:, None] * w[None, :]) * K
    for sl, Z, V, L in zip(tri.slices, tri.Z, tri.V, tri.L):
        wy = w[sl]
        aZ = kernel.inner_factor(Z)
        bY = beta[sl]
        # T[m, n] = wy_n beta(y_n) * sum_s V[n,s] alpha(Z[n,s]) L[m,n,s]
        T = np.einsum("ns,mns->mn", V * aZ, L) * (wy * bY)[None, :]
        W[sl, sl] = T + T.T
    return kernel.prefactor * W


def _check_solutions(sols: dict, l_max: int, n_max: int, basis: RadialBasis):
    for l in range(l_max + 1):
        if l not in sols:
            raise BasisMismatch(f"missing one-particle channel l={l}")
        s = sols[l]
        if s.basis is not basis:
            if s.basis is None or not np.array_equal(
                s.basis.kv.knots, basis.kv.knots
            ):
                raise BasisMismatch("one-particle channels use different bases")
        if s.n_states < n_max:
            raise BasisMismatch(
                f"channel l={l} holds {s.n_states} states, need {n_max}"
            )


def ci_assemble(
    e_sols: dict[int, RadialSolution],
    h_sols: dict[int, RadialSolution],
    device: Device,
    basis_ex: ExcitonBasis,
    *,
    polarization: bool = True,
    interaction_scale: float = 1.0,
    kernel_lmax: int | None = None,
    compat_printed_eqs: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """CI Hamiltonian and its interaction part over ``basis_ex``.

    Returns (H, V) with H = diag(one-particle sums) + V.  V carries the
    negative electron-hole charge product, so its diagonal is negative
    for an attractive geometry.  ``kernel_lmax`` caps the multipole sum;
    the default 2 l_max already exhausts the triangle rule, so raising
    it cannot change V.
    """
    l_max, n_max = basis_ex.l_max, basis_ex.n_max
    rb = e_sols[0].basis if 0 in e_sols else None
    if rb is None:
        raise BasisMismatch("electron channel l=0 required")
    _check_solutions(e_sols, l_max, n_max, rb)
    _check_solutions(h_sols, l_max, n_max, rb)

    nodes = rb.grid.x
    Ue = {l: e_sols[l].coefficients[:n_max] @ rb.B.T for l in range(l_max + 1)}
    Uh = {l: h_sols[l].coefficients[:n_max] @ rb.B.T for l in range(l_max + 1)}

    size = basis_ex.size
    V = np.zeros((size, size))
    if interaction_scale != 0.0:
        tri = _cell_triangles(rb.grid)
        lam_max = 2 * l_max if kernel_lmax is None else int(kernel_lmax)
        for lam in range(lam_max + 1):
            A = np.zeros((l_max + 1, l_max + 1))
            for lb in range(l_max + 1):
                for lk in range(l_max + 1):
                    A[lb, lk] = angular_coefficient(lb, lk, lam)
            if not A.any():
                continue
            ker = MultipoleKernel(device, lam, polarization, compat_printed_eqs)
            W = _coulomb_weight_matrix(rb, ker, tri)
            for lb in range(l_max + 1):
                for lk in range(lb, l_max + 1):
                    if A[lb, lk] == 0.0:
                        continue
                    Fe = (Ue[lb][:, None, :] * Ue[lk][None, :, :]).reshape(
                        n_max * n_max, -1
                    )
                    Fh = (Uh[lb][:, None, :] * Uh[lk][None, :, :]).reshape(
                        n_max * n_max, -1
                    )
                    D = (Fe @ W @ Fh.T).reshape(n_max, n_max, n_max, n_max)
                    coef = (
                        -interaction_scale
                        * (2 * lam + 1)
                        / (4.0 * np.pi)
                        * A[lb, lk]
                    )
                    # rows (ne', nh') of block lb; columns (ne, nh) of block lk
                    blk = coef * D.transpose(0, 2, 1, 3).reshape(
                        n_max * n_max, n_max * n_max
                    )
                    r0 = lb * n_max * n_max
                    c0 = lk * n_max * n_max
                    V[r0 : r0 + n_max**2, c0 : c0 + n_max**2] += blk
                    if lb != lk:
                        V[c0 : c0 + n_max**2, r0 : r0 + n_max**2] += blk.T
    V = 0.5 * (V + V.T)

    diag = np.empty(size)
    for l in range(l_max + 1):
        ee = e_sols[l].energies[:n_max]
        eh = h_sols[l].energies[:n_max]
        block = (ee[:, None] + eh[None, :]).ravel()
        diag[l * n_max**2 : (l + 1) * n_max**2] = block
    H = V + np.diag(diag)
    return H, V


@dataclass(frozen=True)
class ExcitonSolution:
    """CI eigenpairs plus everything needed to post-process them."""

    energies: np.ndarray
    coefficients: np.ndarray
    basis: ExcitonBasis
    interaction: np.ndarray = field(repr=False)
    e_sols: dict = field(repr=False)
    h_sols: dict = field(repr=False)
    device: Device = None

    @property
    def n_states(self) -> int:
        return len(self.energies)

    def _require_state(self, state: int) -> None:
        if not 0 <= state < self.n_states:
            raise StateOutOfRange(
                f"state {state} outside [0, {self.n_states - 1}]"
            )


def solve_exciton(
    device: Device,
    numerics: Numerics | None = None,
    *,
    n_max: int | None = None,
    l_max: int | None = None,
    include_selfpol: bool = True,
    polarization: bool = True,
    selfpol_lmax: int | None = None,
    interaction_scale: float = 1.0,
    compat_printed_eqs: bool = False,
    basis: RadialBasis | None = None,
) -> ExcitonSolution:
    """Solve all one-particle channels, assemble the CI, diagonalize."""
    num = numerics or Numerics()
    n_max = num.n_max if n_max is None else int(n_max)
    l_max = num.l_max if l_max is None else int(l_max)
    selfpol_lmax = num.selfpol_lmax if selfpol_lmax is None else int(selfpol_lmax)
    if basis is None:
        basis = bsplines.make_basis(device, num)
    e_sols, h_sols = {}, {}
    for l in range(l_max + 1):
        for particle, out in (("e", e_sols), ("h", h_sols)):
            ch = ChannelSpec(
                particle,
                l,
                include_selfpol=include_selfpol,
                selfpol_lmax=selfpol_lmax,
                compat_printed_eqs=compat_printed_eqs,
            )
            out[l] = solve_channel(device, num, ch, n_states=n_max, basis=basis)
    bx = ExcitonBasis(l_max, n_max)
    H, V = ci_assemble(
        e_sols,
        h_sols,
        device,
        bx,
        polarization=polarization,
        interaction_scale=interaction_scale,
        compat_printed_eqs=compat_printed_eqs,
    )
    try:
        w, v = eigh(H)
    except (LinAlgError, ValueError) as exc:
        raise SolverFailure(f"CI diagonalization failed: {exc}") from exc
    for j in range(v.shape[1]):
        col = v[:, j]
        big = np.abs(col) > 1e-12 * np.abs(col).max()
        if col[int(np.argmax(big))] < 0.0:
            v[:, j] = -col
    return ExcitonSolution(
        energies=w,
        coefficients=np.ascontiguousarray(v.T),
        basis=bx,
        interaction=V,
        e_sols=e_sols,
        h_sols=h_sols,
        device=device,
    )


def binding_energy(sol: ExcitonSolution, state: int = 0) -> float:
    """Minus the interaction expectation value in one CI eigenstate (eV)."""
    sol._require_state(state)
    c = sol.coefficients[state]
    return float(-(c @ sol.interaction @ c))


def perturbative_binding(
    e_sol: RadialSolution,
    h_sol: RadialSolution,
    device: Device,
    *,
    polarization: bool = True,
    compat_printed_eqs: bool = False,
) -> float:
    """First-order binding from the two ground orbitals alone (eV).

    Identical to the 1x1-basis CI by construction: the same assembly
    runs on a single-configuration basis.
    """
    bx = ExcitonBasis(l_max=0, n_max=1)
    _, V = ci_assemble(
        {0: e_sol},
        {0: h_sol},
        device,
        bx,
        polarization=polarization,
        compat_printed_eqs=compat_printed_eqs,
    )
    return float(-V[0, 0])
