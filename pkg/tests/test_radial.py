import numpy as np
import pytest

from qdexciton.bsplines import basis_from_knots, make_basis, uniform_knots
from qdexciton.constants import HBAR2_OVER_2M0
from qdexciton.errors import (
    InconsistentGeometry,
    SeriesNotConverged,
    SolverFailure,
    StateOutOfRange,
)
from qdexciton.materials import Device, Material, Numerics, cds_hgs_device
from qdexciton.radial import (
    ChannelSpec,
    assemble,
    fd_reference,
    infinite_well_reference,
    matching_residual,
    selfpol_potential,
    solve,
    solve_channel,
)


def _eps_matched_device():
    """Equal dielectric constants on both sides: every image term vanishes."""
    well = Material(name="wellX", m_e=0.05, m_h=0.3, eps=7.0)
    barrier = Material(name="barrX", m_e=0.15, m_h=0.5, eps=7.0)
    return Device(well=well, barrier=barrier, a=10.0, b=20.0, R=40.0, v0_e=1.0, v0_h=0.8)


# --- analytic oracle ----------------------------------------------------


def test_dirichlet_box_levels_analytic():
    """Hard-wall box, constant mass: the Galerkin system must hit
    hbar^2 pi^2 n^2 / (2 m w^2) essentially to roundoff."""
    m, w = 0.14, 9.0
    kv = uniform_knots(w, 60, 5)
    basis = basis_from_knots(kv)
    wts = basis.grid.w
    H = HBAR2_OVER_2M0 / m * (basis.dB * wts[:, None]).T @ basis.dB
    S = (basis.B * wts[:, None]).T @ basis.B
    sol = solve(H, S, 5, basis=basis)
    n = np.arange(1, 6)
    exact = HBAR2_OVER_2M0 * (n * np.pi / w) ** 2 / m
    assert np.abs(sol.energies / exact - 1.0).max() < 1e-8


def test_infinite_well_reference_l0_closed_form():
    dev = cds_hgs_device()
    width = dev.b - dev.a
    for n in (1, 2, 5):
        e = infinite_well_reference(dev, 0.036, 0, n)
        assert e == pytest.approx(
            HBAR2_OVER_2M0 * (n * np.pi / width) ** 2 / 0.036, rel=1e-12
        )


def test_infinite_well_reference_root_residual():
    from scipy.special import spherical_jn, spherical_yn

    dev = cds_hgs_device()
    m = 0.036
    e = infinite_well_reference(dev, m, 2, 3)
    k = np.sqrt(e * m / HBAR2_OVER_2M0)
    f = spherical_jn(2, k * dev.a) * spherical_yn(2, k * dev.b) - spherical_jn(
        2, k * dev.b
    ) * spherical_yn(2, k * dev.a)
    assert abs(f) < 1e-10
    # levels increase with n and with l
    assert infinite_well_reference(dev, m, 2, 4) > e
    assert infinite_well_reference(dev, m, 3, 3) > e


def test_infinite_well_reference_core_absent():
    dev = cds_hgs_device().with_core_radius(0.0)
    # j_0 zeros sit at n pi / b
    for n in (1, 3):
        e = infinite_well_reference(dev, 0.2, 0, n)
        assert e == pytest.approx(
            HBAR2_OVER_2M0 * (n * np.pi / dev.b) ** 2 / 0.2, rel=1e-10
        )
    with pytest.raises(ValueError):
        infinite_well_reference(dev, 0.2, 0, 0)


# --- cross-method agreement ----------------------------------------------


def test_finite_well_against_fd():
    dev = cds_hgs_device()
    num = Numerics()
    for particle, l in (("e", 0), ("h", 0), ("e", 2)):
        spec = ChannelSpec(particle, l, include_selfpol=False)
        sol = solve_channel(dev, num, spec, n_states=1)
        ref = fd_reference(dev, spec, n_cells=20000, n_states=1)
        assert abs(sol.energies[0] / ref[0] - 1.0) < 1e-4


def test_finite_well_against_fd_with_selfpol():
    dev = cds_hgs_device()
    spec = ChannelSpec("e", 0, include_selfpol=True)
    sol = solve_channel(dev, Numerics(), spec, n_states=1)
    ref = fd_reference(dev, spec, n_cells=20000, n_states=1)
    assert abs(sol.energies[0] / ref[0] - 1.0) < 1e-4


def test_levels_converged_in_intervals():
    dev = cds_hgs_device()
    spec = ChannelSpec("e", 0, include_selfpol=False)
    e_160 = solve_channel(dev, Numerics(n_intervals=160), spec, n_states=3).energies
    e_320 = solve_channel(dev, Numerics(n_intervals=320), spec, n_states=3).energies
    assert np.abs(e_160 / e_320 - 1.0).max() < 1e-6


# --- physical behavior ----------------------------------------------------


def test_level_ordering_and_bounds():
    dev = cds_hgs_device()
    num = Numerics(n_intervals=96)
    ground = {}
    for l in range(3):
        sol = solve_channel(dev, num, ChannelSpec("e", l, include_selfpol=False), 4)
        assert np.all(np.diff(sol.energies) > 0)
        assert sol.bound[0]
        ground[l] = sol.energies[0]
        # finite well must lie below the hard-wall reference
        assert ground[l] < infinite_well_reference(dev, dev.well.m_e, l, 1)
    assert ground[0] < ground[1] < ground[2]


def test_confinement_grows_with_core():
    num = Numerics(n_intervals=96)
    spec = ChannelSpec("e", 0, include_selfpol=False)
    e_narrow = solve_channel(cds_hgs_device(0.6), num, spec, 1).energies[0]
    e_wide = solve_channel(cds_hgs_device(0.3), num, spec, 1).energies[0]
    assert e_narrow > e_wide


def test_ground_state_lives_in_the_well():
    dev = cds_hgs_device()
    sol = solve_channel(dev, Numerics(), ChannelSpec("e", 0), 1)
    x, w = sol.basis.grid.x, sol.basis.grid.w
    u2 = sol.u(0, x) ** 2
    inside = w[dev.well_mask(x)] @ u2[dev.well_mask(x)]
    total = w @ u2
    assert inside / total > 0.9
    # norm itself is 1 (S-orthonormal expansion)
    assert total == pytest.approx(1.0, rel=1e-10)


def test_sign_convention_positive_ground():
    dev = cds_hgs_device()
    mid = 0.5 * (dev.a + dev.b)
    for particle in ("e", "h"):
        sol = solve_channel(dev, Numerics(n_intervals=96), ChannelSpec(particle, 0), 2)
        assert sol.u(0, [mid])[0] > 0.0
        assert sol.u(1, [mid]).shape == (1,)


def test_radial_function_relation():
    dev = cds_hgs_device()
    sol = solve_channel(dev, Numerics(n_intervals=64), ChannelSpec("e", 0), 1)
    r = np.array([17.0, 22.0, 29.0])
    assert np.allclose(sol.radial_function(0, r) * r, sol.u(0, r), atol=1e-14)


# --- self-polarization ----------------------------------------------------


def test_selfpol_series_cutoff_converged():
    dev = cds_hgs_device()
    mid = 0.5 * (dev.a + dev.b)
    v80 = selfpol_potential(dev, mid, 80)
    v160 = selfpol_potential(dev, mid, 160)
    assert abs(v80 / v160 - 1.0) < 1e-8
    assert v80 > 0.0  # repulsive for a well more polarizable than its cladding


def test_selfpol_series_guard_near_interface():
    dev = cds_hgs_device()
    with pytest.raises(SeriesNotConverged):
        selfpol_potential(dev, dev.a * 1.005, 80)
    # the assembly path evaluates the same point unguarded
    v = selfpol_potential(dev, dev.a * 1.005, 80, check=False)
    assert np.isfinite(v)


def test_selfpol_vanishes_for_matched_dielectrics():
    dev = _eps_matched_device()
    r = np.linspace(dev.a * 1.05, dev.b * 0.95, 7)
    assert np.abs(selfpol_potential(dev, r, 60)).max() < 1e-14


def test_selfpol_compat_variant_differs():
    dev = cds_hgs_device()
    mid = 0.5 * (dev.a + dev.b)
    v = selfpol_potential(dev, mid, 80)
    v_compat = selfpol_potential(dev, mid, 80, compat_printed_eqs=True)
    assert abs(v - v_compat) > 1e-6


def test_selfpol_core_absent():
    dev = cds_hgs_device().with_core_radius(0.0)
    mid = 0.6 * dev.b
    v = selfpol_potential(dev, mid, 80)
    assert np.isfinite(v) and v != 0.0
    # compat flag only alters core-image terms, absent here
    assert v == pytest.approx(selfpol_potential(dev, mid, 80, compat_printed_eqs=True))
    sol = solve_channel(dev, Numerics(n_intervals=96), ChannelSpec("e", 0), 1)
    assert sol.bound[0]


def test_selfpol_raises_levels_here():
    dev = cds_hgs_device()
    num = Numerics(n_intervals=96)
    e_off = solve_channel(dev, num, ChannelSpec("e", 0, include_selfpol=False), 1)
    e_on = solve_channel(dev, num, ChannelSpec("e", 0, include_selfpol=True), 1)
    assert e_on.energies[0] > e_off.energies[0]


# --- diagnostics and errors ------------------------------------------------


def test_matching_residual_decreases_with_resolution():
    dev = cds_hgs_device()
    spec = ChannelSpec("e", 0, include_selfpol=False)
    r_coarse = matching_residual(solve_channel(dev, Numerics(n_intervals=40), spec, 1), 0)
    r_fine = matching_residual(solve_channel(dev, Numerics(n_intervals=160), spec, 1), 0)
    # value continuity is built into the basis
    assert r_coarse.psi_a < 1e-10 and r_coarse.psi_b < 1e-10
    # the flux condition is only satisfied in the limit
    assert r_fine.flux_a < r_coarse.flux_a
    assert r_fine.flux_b < r_coarse.flux_b


def test_state_out_of_range():
    dev = cds_hgs_device()
    sol = solve_channel(dev, Numerics(n_intervals=64), ChannelSpec("e", 0), 2)
    with pytest.raises(StateOutOfRange):
        matching_residual(sol, 5)
    with pytest.raises(StateOutOfRange):
        sol.u(-1, [20.0])


def test_solver_failure_on_bad_matrix():
    H = np.full((4, 4), np.nan)
    S = np.eye(4)
    with pytest.raises(SolverFailure):
        solve(H, S)


def test_assemble_rejects_foreign_basis():
    dev = cds_hgs_device()
    other = cds_hgs_device(a_over_b=0.3)
    basis = make_basis(other, Numerics(n_intervals=64))
    with pytest.raises(InconsistentGeometry):
        assemble(basis, dev, ChannelSpec("e", 0))


def test_channel_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec("x", 0)
    with pytest.raises(ValueError):
        ChannelSpec("e", -1)
    with pytest.raises(ValueError):
        ChannelSpec("e", 0, selfpol_lmax=-2)
