import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh
from scipy.special import eval_legendre

from qdexciton.constants import COULOMB, HBAR2_OVER_2M0
from qdexciton.errors import BasisMismatch, OutsideWell, StateOutOfRange
from qdexciton.exciton import (
    ExcitonBasis,
    MultipoleKernel,
    angular_coefficient,
    binding_energy,
    ci_assemble,
    kernel_radial,
    perturbative_binding,
    solve_exciton,
    wigner3j_zero,
)
from qdexciton.materials import Device, Material, Numerics, cds_hgs_device
from qdexciton.radial import ChannelSpec, solve_channel


def _eps_matched_device():
    well = Material(name="wellX", m_e=0.05, m_h=0.3, eps=7.0)
    barrier = Material(name="barrX", m_e=0.15, m_h=0.5, eps=7.0)
    return Device(well=well, barrier=barrier, a=10.0, b=20.0, R=40.0, v0_e=1.0, v0_h=0.8)


# --- angular algebra -------------------------------------------------------


def test_wigner_squares_against_legendre_quadrature():
    """(3j with zero projections)^2 equals half the triple Legendre product
    integral; Gauss quadrature of that integral is an independent oracle."""
    x, w = np.polynomial.legendre.leggauss(64)
    for l1 in range(5):
        for l2 in range(5):
            for l3 in range(5):
                direct = 0.5 * w @ (
                    eval_legendre(l1, x) * eval_legendre(l2, x) * eval_legendre(l3, x)
                )
                tj = wigner3j_zero(l1, l2, l3)
                assert tj**2 == pytest.approx(direct, abs=1e-12)


def test_wigner_selection_rules():
    assert wigner3j_zero(1, 1, 1) == 0.0  # odd total angular momentum
    assert wigner3j_zero(0, 2, 1) == 0.0  # triangle violation
    assert wigner3j_zero(0, 0, 0) == 1.0


def test_angular_coefficient_values():
    assert angular_coefficient(0, 0, 0) == pytest.approx(1.0, abs=1e-14)
    assert angular_coefficient(1, 1, 2) == pytest.approx(0.4, abs=1e-14)
    assert angular_coefficient(0, 1, 1) == pytest.approx(-1.0 / np.sqrt(3.0), abs=1e-14)
    assert angular_coefficient(1, 1, 1) == 0.0
    assert angular_coefficient(0, 2, 1) == 0.0
    # symmetric in the two orbital indices
    assert angular_coefficient(1, 3, 2) == pytest.approx(angular_coefficient(3, 1, 2))
    with pytest.raises(ValueError):
        angular_coefficient(-1, 0, 0)


# --- multipole kernel ------------------------------------------------------


def test_kernel_closure_reproduces_direct_coulomb():
    """With matched dielectrics the multipole sum must rebuild the bare
    1/|r1 - r2| for any angle; pairs keep the radius ratio away from 1 so
    lmax = 40 truncation stays below the tolerance."""
    dev = _eps_matched_device()
    rng = np.random.default_rng(20240817)
    for polarization in (True, False):
        for _ in range(8):
            r_small = rng.uniform(dev.a * 1.001, dev.b * 0.63)
            r_big = rng.uniform(r_small / 0.65, dev.b * 0.999)
            cosg = rng.uniform(-1.0, 1.0)
            ks = np.array(
                [
                    kernel_radial(dev, lam, r_small, r_big, polarization=polarization)
                    for lam in range(41)
                ]
            )
            series = sum(
                (2 * lam + 1) / (4.0 * np.pi) * ks[lam] * eval_legendre(lam, cosg)
                for lam in range(41)
            )
            dist = np.sqrt(r_small**2 + r_big**2 - 2.0 * r_small * r_big * cosg)
            direct = COULOMB / dev.well.eps / dist
            assert series == pytest.approx(direct, rel=1e-6)


def test_kernel_domain_and_symmetry():
    dev = cds_hgs_device()
    with pytest.raises(OutsideWell):
        kernel_radial(dev, 0, dev.a * 0.5, dev.b * 0.9)
    with pytest.raises(OutsideWell):
        kernel_radial(dev, 0, dev.a * 1.1, dev.b * 1.1)
    r1, r2 = dev.a * 1.2, dev.b * 0.9
    assert kernel_radial(dev, 1, r1, r2) == pytest.approx(
        kernel_radial(dev, 1, r2, r1), rel=1e-14
    )
    assert kernel_radial(dev, 0, r1, r2) > 0.0


def test_kernel_monopole_has_no_core_image():
    k0 = MultipoleKernel(cds_hgs_device(), 0)
    assert k0.c_p == 0.0
    assert k0.p == 0.0


def test_kernel_factors_saturate_outside_well():
    """Evanescent-tail evaluation points use the interface-saturated
    enhancement, so nothing blows up at small radii or at the clad edge."""
    dev = cds_hgs_device()
    k = MultipoleKernel(dev, 3)
    r = np.array([1e-3, dev.a * 0.2, dev.a])
    inner = k.inner_factor(r)
    assert np.isfinite(inner).all()
    # continuity across the interface where clipping starts
    lo = k.inner_factor(np.array([dev.a * (1 - 1e-12)]))[0]
    hi = k.inner_factor(np.array([dev.a * (1 + 1e-12)]))[0]
    assert lo == pytest.approx(hi, rel=1e-9)
    outer = k.outer_factor(np.array([dev.b, dev.b * 1.5, dev.R]))
    assert np.isfinite(outer).all()
    hi_b = k.outer_factor(np.array([dev.b * (1 + 1e-12)]))[0]
    lo_b = k.outer_factor(np.array([dev.b * (1 - 1e-12)]))[0]
    assert lo_b == pytest.approx(hi_b, rel=1e-9)


def test_kernel_compat_variant():
    dev = cds_hgs_device()
    r1, r2 = dev.a * 1.3, dev.b * 0.8
    v = kernel_radial(dev, 2, r1, r2)
    v_compat = kernel_radial(dev, 2, r1, r2, compat_printed_eqs=True)
    assert abs(v - v_compat) / abs(v) > 1e-12
    # without a core there is no image factor for the flag to alter
    dev0 = cds_hgs_device().with_core_radius(0.0)
    r1, r2 = dev0.b * 0.3, dev0.b * 0.8
    assert kernel_radial(dev0, 2, r1, r2) == pytest.approx(
        kernel_radial(dev0, 2, r1, r2, compat_printed_eqs=True), rel=1e-14
    )


# --- CI against an independent grid solver ---------------------------------


def _fd1d(device, particle, n):
    h = device.R / n
    nodes = h * np.arange(1, n)
    mids = h * (np.arange(n) + 0.5)
    kappa = 1.0 / device.mass_at(mids, particle)
    V = device.potential_at(nodes, particle)
    on_iface = np.isclose(nodes, device.a) | np.isclose(nodes, device.b)
    V[on_iface] = 0.5 * device.offset(particle)
    c = HBAR2_OVER_2M0 / h**2
    diag = c * (kappa[:-1] + kappa[1:]) + V
    off = -c * kappa[1:-1]
    w = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)
    return float(w[0]), nodes, kappa, V, h


def _fd2d(device, n, kernel):
    E_e, nodes, kap_e, V_e, h = _fd1d(device, "e", n)
    E_h, _, kap_h, V_h, _ = _fd1d(device, "h", n)
    c = HBAR2_OVER_2M0 / h**2

    def h1(kappa, V):
        diag = c * (kappa[:-1] + kappa[1:]) + V
        off = -c * kappa[1:-1]
        return sp.diags([off, diag, off], [-1, 0, 1], format="csr")

    re = nodes[:, None] + 0.0 * nodes[None, :]
    rh = nodes[None, :] + 0.0 * nodes[:, None]
    lo = np.minimum(re, rh)
    hi = np.maximum(re, rh)
    W = (
        -(1.0 / (4.0 * np.pi))
        * kernel.prefactor
        * kernel.inner_factor(lo)
        * kernel.outer_factor(hi)
    )
    m = len(nodes)
    H2 = (
        sp.kron(h1(kap_e, V_e), sp.identity(m))
        + sp.kron(sp.identity(m), h1(kap_h, V_h))
        + sp.diags(W.ravel())
    )
    w = eigsh(H2.tocsc(), k=1, sigma=0.03, which="LM", return_eigenvectors=False)
    return float(w[0]), E_e, E_h


def _richardson(f_n, f_2n, p):
    return f_2n + (f_2n - f_n) / (2.0**p - 1.0)


def test_ci_against_composite_grid_oracle():
    """s-sector CI versus a flux-form finite-difference solve of the full
    two-coordinate problem, both parts Richardson-extrapolated: the
    one-body energies through (200, 400, 800) at orders 2 then 3, the
    interaction part through (200, 400) at order 2."""
    dev = cds_hgs_device()
    kern = MultipoleKernel(dev, 0, polarization=True)

    one = {n: (_fd1d(dev, "e", n)[0], _fd1d(dev, "h", n)[0]) for n in (200, 400, 800)}
    stars = []
    for i in (0, 1):
        r1a = _richardson(one[200][i], one[400][i], 2)
        r1b = _richardson(one[400][i], one[800][i], 2)
        stars.append(_richardson(r1a, r1b, 3))

    e_int = {}
    for n in (200, 400):
        e2, ee, eh = _fd2d(dev, n, kern)
        e_int[n] = e2 - ee - eh
    e_int_star = _richardson(e_int[200], e_int[400], 2)
    e_oracle = stars[0] + stars[1] + e_int_star

    sol = solve_exciton(
        dev, Numerics(), n_max=4, l_max=0, include_selfpol=False, polarization=True
    )
    e_ci = float(sol.energies[0])
    assert abs(e_ci / e_oracle - 1.0) < 1e-3
    assert abs(binding_energy(sol, 0) / (-e_int_star) - 1.0) < 2e-3


# --- CI structure -----------------------------------------------------------


def test_zero_interaction_limit():
    dev = cds_hgs_device()
    num = Numerics(n_intervals=96)
    sol = solve_exciton(
        dev, num, n_max=2, l_max=1, include_selfpol=False, interaction_scale=0.0
    )
    e_e = solve_channel(dev, num, ChannelSpec("e", 0, include_selfpol=False), 2)
    e_h = solve_channel(dev, num, ChannelSpec("h", 0, include_selfpol=False), 2)
    assert sol.energies[0] == pytest.approx(
        e_e.energies[0] + e_h.energies[0], rel=1e-12
    )
    assert binding_energy(sol, 0) == pytest.approx(0.0, abs=1e-15)
    # eigenvectors collapse to single configurations
    assert np.abs(sol.coefficients[0]).max() == pytest.approx(1.0, abs=1e-10)


def test_perturbative_equals_one_by_one_ci():
    dev = cds_hgs_device()
    num = Numerics(n_intervals=96)
    sol1 = solve_exciton(dev, num, n_max=1, l_max=0, include_selfpol=False)
    e_sol = solve_channel(dev, num, ChannelSpec("e", 0, include_selfpol=False), 1)
    h_sol = solve_channel(dev, num, ChannelSpec("h", 0, include_selfpol=False), 1)
    pt = perturbative_binding(e_sol, h_sol, dev)
    assert binding_energy(sol1, 0) == pytest.approx(pt, rel=1e-12)
    assert pt > 0.0


def test_variational_orderings(demo_device, ci_half):
    """More basis lowers the energy and raises (or keeps) the attraction."""
    num = Numerics()
    sol_l0 = solve_exciton(demo_device, num, l_max=0)
    pt = perturbative_binding(
        ci_half.e_sols[0], ci_half.h_sols[0], demo_device, polarization=True
    )
    assert ci_half.energies[0] < sol_l0.energies[0]
    assert binding_energy(ci_half, 0) >= binding_energy(sol_l0, 0) >= pt

    e_by_nmax = [
        solve_exciton(demo_device, num, n_max=k, l_max=1).energies[0] for k in (2, 4, 8)
    ]
    assert e_by_nmax[0] > e_by_nmax[1] > e_by_nmax[2] - 1e-15


def test_kernel_lmax_beyond_triangle_changes_nothing():
    dev = cds_hgs_device()
    num = Numerics(n_intervals=64)
    basis_ex = ExcitonBasis(l_max=1, n_max=2)
    e_sols, h_sols = {}, {}
    for l in (0, 1):
        e_sols[l] = solve_channel(dev, num, ChannelSpec("e", l, include_selfpol=False), 2)
        h_sols[l] = solve_channel(dev, num, ChannelSpec("h", l, include_selfpol=False), 2)
    H1, V1 = ci_assemble(e_sols, h_sols, dev, basis_ex, kernel_lmax=2)
    H2, V2 = ci_assemble(e_sols, h_sols, dev, basis_ex, kernel_lmax=8)
    assert np.abs(H1 - H2).max() < 1e-15
    assert np.abs(V1 - V2).max() < 1e-15


def test_polarization_strengthens_binding(demo_device, ci_half):
    bare = solve_exciton(demo_device, Numerics(), polarization=False)
    for s in range(3):
        assert binding_energy(ci_half, s) > binding_energy(bare, s)
    assert ci_half.energies[0] < bare.energies[0]


def test_interaction_matrix_structure(ci_half):
    V = ci_half.interaction
    assert np.abs(V - V.T).max() < 1e-12
    # ground state gains energy from every attractive channel
    assert binding_energy(ci_half, 0) > 0.0
    # eigenvectors orthonormal
    G = ci_half.coefficients @ ci_half.coefficients.T
    assert np.abs(G - np.eye(len(G))).max() < 1e-8
    assert np.all(np.diff(ci_half.energies) > -1e-12)


def test_reference_point_regression(ci_half):
    """Pinned solver output for the default structure, to catch silent
    numerical drift; values from this code base at the settings of
    Numerics()."""
    assert ci_half.energies[0] == pytest.approx(0.0422803444, rel=1e-6)
    assert binding_energy(ci_half, 0) == pytest.approx(0.0144003138, rel=1e-5)


def test_exciton_basis_indexing():
    bx = ExcitonBasis(l_max=2, n_max=3)
    assert bx.size == 3 * 9
    for i, (l, ne, nh) in enumerate(bx.labels):
        assert bx.index(l, ne, nh) == i
    states = bx.states
    assert len(states) == bx.size


def test_ci_assemble_mismatch_errors():
    dev = cds_hgs_device()
    num = Numerics(n_intervals=64)
    bx = ExcitonBasis(l_max=1, n_max=2)
    e0 = solve_channel(dev, num, ChannelSpec("e", 0, include_selfpol=False), 2)
    h0 = solve_channel(dev, num, ChannelSpec("h", 0, include_selfpol=False), 2)
    with pytest.raises(BasisMismatch):
        ci_assemble({0: e0}, {0: h0}, dev, bx)  # l = 1 missing
    e1 = solve_channel(dev, num, ChannelSpec("e", 1, include_selfpol=False), 2)
    h1 = solve_channel(dev, num, ChannelSpec("h", 1, include_selfpol=False), 1)
    with pytest.raises(BasisMismatch):
        ci_assemble({0: e0, 1: e1}, {0: h0, 1: h1}, dev, bx)  # too few h states
    other = solve_channel(
        dev, Numerics(n_intervals=96), ChannelSpec("h", 1, include_selfpol=False), 2
    )
    with pytest.raises(BasisMismatch):
        ci_assemble({0: e0, 1: e1}, {0: h0, 1: other}, dev, bx)  # foreign knots


def test_binding_energy_state_range(ci_half):
    with pytest.raises(StateOutOfRange):
        binding_energy(ci_half, ci_half.n_states)
