"""Radial B-spline basis on [0, R] with repeated knots at the interfaces.

The reduced radial functions u(r) = r R(r) are expanded in order-k
B-splines built from a knot vector that clamps both ends (multiplicity k)
and repeats each heterointerface knot m times, which lowers the continuity
there to C^(k-1-m) so the basis can bend where the mass and potential jump.
The first and last splines are dropped to enforce u(0) = u(R) = 0.

Normalization follows the radial convention: the orbital is
phi_n(r) = C_n B_{n+1}(r) / r with C_n = (integral of B^2 dr)^(-1/2),
so the reduced function u_n(r) = C_n B_{n+1}(r) has unit L2 norm in dr.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qdexciton import _kernels
from qdexciton._kernels import _pykernels
from qdexciton.errors import (
    DegenerateSpline,
    IndexOutOfRange,
    InvalidOrder,
    MultiplicityOutOfRange,
    PointOutsideDomain,
    TooFewIntervals,
)
from qdexciton.materials import Device, Numerics


@dataclass(frozen=True)
class KnotVector:
    """A clamped knot sequence plus the spline order it serves."""

    knots: np.ndarray
    order: int

    def __post_init__(self):
        object.__setattr__(self, "knots", np.ascontiguousarray(self.knots, dtype=float))

    @property
    def n_splines(self) -> int:
        return len(self.knots) - self.order

    @property
    def breakpoints(self) -> np.ndarray:
        """Distinct knot values, i.e. the cell edges."""
        return np.unique(self.knots)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])


def _apportion(lengths: np.ndarray, total: int) -> list[int]:
    """Split ``total`` simple breakpoints over regions by length.

    Largest-remainder rounding; every region keeps at least one point.
    Deterministic: ties go to the earlier region.
    """
    quota = total * lengths / lengths.sum()
    counts = np.floor(quota).astype(int)
    remainder = quota - counts
    order = sorted(range(len(lengths)), key=lambda j: (-remainder[j], j))
    for j in order:
        if counts.sum() >= total:
            break
        counts[j] += 1
    while counts.sum() < total:
        counts[int(np.argmin(counts))] += 1
    while (counts < 1).any():
        counts[int(np.argmax(counts))] -= 1
        counts[int(np.argmin(counts))] += 1
    return [int(c) for c in counts]


def build_knots(
    device: Device,
    order: int,
    n_intervals: int,
    interface_multiplicity: int | None = None,
) -> KnotVector:
    """Knot vector for the three-region geometry of ``device``.

    ``n_intervals`` cells cover [0, R].  The interfaces a and b are always
    cell edges, entered with multiplicity ``interface_multiplicity``.
    The default is k - 1, which reduces the basis to plain continuity
    there: the effective-mass matching conditions make the derivative of
    the reduced function jump where the mass jumps, and a smoother basis
    cannot represent that kink (its eigenvalues then converge only at
    low order in 1/n_intervals).  Lower multiplicities remain available
    for experiments with smoother bases.
    The remaining ``n_intervals - 3`` simple breakpoints go to the three
    regions in proportion to their lengths, at least one each, spaced
    uniformly within each region.  When a = 0 the core region is absent
    and no knot is placed at the origin beyond the clamped end.
    """
    k = int(order)
    if k < 4:
        raise InvalidOrder(f"spline order must be >= 4, got {k}")
    m = k - 1 if interface_multiplicity is None else int(interface_multiplicity)
    if not 1 <= m <= k - 1:
        raise MultiplicityOutOfRange(
            f"interface multiplicity must lie in [1, {k - 1}], got {m}"
        )
    n_i = int(n_intervals)
    if n_i < 7:
        raise TooFewIntervals(
            f"need >= 7 intervals to give every region interior structure, got {n_i}"
        )
    if device.a > 0.0:
        edges = np.array([0.0, device.a, device.b, device.R])
        interfaces = (device.a, device.b)
        n_simple = n_i - 3
    else:
        edges = np.array([0.0, device.b, device.R])
        interfaces = (device.b,)
        n_simple = n_i - 2
    counts = _apportion(np.diff(edges), n_simple)
    parts = [np.full(k, 0.0)]
    for (lo, hi), c in zip(zip(edges[:-1], edges[1:]), counts):
        parts.append(np.linspace(lo, hi, c + 2)[1:-1])
        if hi in interfaces:
            parts.append(np.full(m, hi))
    parts.append(np.full(k, device.R))
    return KnotVector(np.concatenate(parts), k)


def uniform_knots(length: float, n_intervals: int, order: int) -> KnotVector:
    """Clamped knots with equal cells on [0, length]; no interface knots."""
    k = int(order)
    if k < 2:
        raise InvalidOrder(f"spline order must be >= 2, got {k}")
    n_i = int(n_intervals)
    if n_i < 1:
        raise TooFewIntervals(f"need at least one interval, got {n_i}")
    interior = np.linspace(0.0, length, n_i + 1)[1:-1]
    knots = np.concatenate([np.zeros(k), interior, np.full(k, float(length))])
    return KnotVector(knots, k)


def _check_domain(kv: KnotVector, x: np.ndarray) -> None:
    lo, hi = kv.domain
    if (x < lo).any() or (x > hi).any():
        bad = x[(x < lo) | (x > hi)][0]
        raise PointOutsideDomain(f"point {bad!r} outside [{lo}, {hi}]")


def _is_clamped(kv: KnotVector) -> bool:
    t, k = kv.knots, kv.order
    return len(t) >= 2 * k and t[k - 1] == t[0] and t[-k] == t[-1]


def design_matrix(
    kv: KnotVector, x, deriv: int = 0, side: str = "right"
) -> np.ndarray:
    """Values of every spline at the points ``x``, shape (len(x), n_splines).

    ``side`` picks the one-sided limit taken at points that sit exactly on
    a repeated knot ("right" is the usual convention; "left" gives the
    limit from below, which differs when continuity is reduced there).

    The compiled evaluator runs the banded de Boor recursion, which is
    only valid on clamped knot vectors (ends repeated ``order`` times,
    the only kind this package builds).  Unclamped vectors take the
    generic full-recursion path instead.
    """
    if side not in ("right", "left"):
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(kv, x)
    impl = _kernels.design_matrix if _is_clamped(kv) else _pykernels.design_matrix
    return impl(
        kv.knots, kv.order, x, deriv=int(deriv), side_left=(side == "left")
    )


def eval_basis(kv: KnotVector, i: int, x, deriv: int = 0, side: str = "right"):
    """Value (or derivative) of the single spline ``i`` at ``x``."""
    if not 0 <= i < kv.n_splines:
        raise IndexOutOfRange(
            f"spline index {i} outside [0, {kv.n_splines - 1}]"
        )
    scalar = np.ndim(x) == 0
    out = design_matrix(kv, x, deriv=deriv, side=side)[:, i]
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class GaussGrid:
    """Composite Gauss-Legendre rule, one panel per knot cell."""

    x: np.ndarray
    w: np.ndarray
    edges: np.ndarray
    n_per_cell: int

    @property
    def n_cells(self) -> int:
        return len(self.edges) - 1

    def by_cell(self, values: np.ndarray) -> np.ndarray:
        """Reshape a flat array over nodes to (n_cells, n_per_cell, ...)."""
        return values.reshape(self.n_cells, self.n_per_cell, *values.shape[1:])


def gauss_rule(kv: KnotVector, n_points: int) -> GaussGrid:
    """Panelwise Gauss rule exact for polynomials of degree 2*n_points - 1."""
    edges = kv.breakpoints
    xg, wg = np.polynomial.legendre.leggauss(int(n_points))
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return GaussGrid(x, w, edges, int(n_points))


def normalize(kv: KnotVector, grid: GaussGrid | None = None) -> np.ndarray:
    """C_i = (integral of B_i^2 dr)^(-1/2) for every spline on ``kv``.

    The default rule is exact: squared order-k splines are piecewise
    polynomials of degree 2k - 2, integrated exactly by k-point Gauss.
    """
    if grid is None:
        grid = gauss_rule(kv, kv.order)
    vals = design_matrix(kv, grid.x)
    norm2 = grid.w @ vals**2
    if (norm2 <= 0.0).any() or not np.isfinite(norm2).all():
        bad = int(np.argmin(norm2))
        raise DegenerateSpline(f"spline {bad} has vanishing norm on the grid")
    return 1.0 / np.sqrt(norm2)


@dataclass(frozen=True)
class RadialBasis:
    """Normalized reduced-function basis with cached quadrature tables.

    ``B`` and ``dB`` hold u_n and u_n' at the Gauss nodes, columns ordered
    by the retained spline indices ``idx`` (ends dropped).
    """

    kv: KnotVector
    grid: GaussGrid
    idx: np.ndarray
    C: np.ndarray
    B: np.ndarray = field(repr=False)
    dB: np.ndarray = field(repr=False)

    @property
    def n_funcs(self) -> int:
        return len(self.idx)

    @property
    def norm_constants(self) -> np.ndarray:
        return self.C

    def u_values(self, x, deriv: int = 0, side: str = "right") -> np.ndarray:
        """Reduced functions u_n (or derivatives) at arbitrary points."""
        full = design_matrix(self.kv, x, deriv=deriv, side=side)
        return full[:, self.idx] * self.C[None, :]

    def expand(self, coeff: np.ndarray, x, deriv: int = 0) -> np.ndarray:
        """u(x) = sum_n coeff_n u_n(x)."""
        return self.u_values(x, deriv=deriv) @ np.asarray(coeff)


def basis_from_knots(kv: KnotVector, quad_points: int | None = None) -> RadialBasis:
    """Retained, normalized basis over an existing knot vector."""
    q = kv.order + 6 if quad_points is None else int(quad_points)
    grid = gauss_rule(kv, q)
    idx = np.arange(1, kv.n_splines - 1)
    full = design_matrix(kv, grid.x, deriv=0)
    dfull = design_matrix(kv, grid.x, deriv=1)
    C = normalize(kv, grid)[idx]
    return RadialBasis(kv, grid, idx, C, full[:, idx] * C, dfull[:, idx] * C)


def make_basis(device: Device, numerics: Numerics) -> RadialBasis:
    """Build the basis a device solver works with, per ``numerics``."""
    kv = build_knots(
        device,
        numerics.spline_order,
        numerics.n_intervals,
        numerics.interface_multiplicity,
    )
    return basis_from_knots(kv, numerics.quad_points)
