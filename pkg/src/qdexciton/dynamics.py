"""Driven vacuum-exciton dynamics: Rabi switching and leakage.

The state space is the no-exciton vacuum plus the lowest bound CI
eigenstates.  A classical field E(t) = E0 sin(wt) couples the vacuum to
each exciton state i through an effective dipole M_i; excitons do not
couple to each other because the interband dipole only creates or
destroys pairs:

    i hbar dU_0/dt = -E(t) sum_i M_i U_i
    i hbar dU_i/dt = (E_i + E_g1) U_i - E(t) M_i U_0

Integration is fixed-step RK4 (no rotating-wave approximation), for
bitwise-reproducible scans.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qdexciton._kernels import rk4_drive
from qdexciton.constants import HBAR
from qdexciton.errors import BasisMismatch, NormDrift, TooShort
from qdexciton.exciton import ExcitonSolution
from qdexciton.radial import RadialSolution


@dataclass(frozen=True)
class DipoleTable:
    """Effective vacuum -> exciton-state couplings, in units of e*nm."""

    mu_bulk: float
    m: np.ndarray

    def __len__(self) -> int:
        return len(self.m)


def pair_dipole(
    e_sol: RadialSolution,
    h_sol: RadialSolution,
    n_e: int,
    n_h: int,
    mu_bulk: float = 1.0,
) -> float:
    """Dipole between one electron and one hole orbital.

    The angular integral leaves a radial overlap when both orbitals
    share l and vanishes otherwise.
    """
    e_sol._require_state(n_e)
    h_sol._require_state(n_h)
    le = e_sol.channel.l if e_sol.channel is not None else 0
    lh = h_sol.channel.l if h_sol.channel is not None else 0
    if le != lh:
        return 0.0
    if e_sol.basis is not h_sol.basis and not np.array_equal(
        e_sol.basis.kv.knots, h_sol.basis.kv.knots
    ):
        raise BasisMismatch("orbital overlap needs a shared radial basis")
    ov = e_sol.coefficients[n_e] @ h_sol.overlap @ h_sol.coefficients[n_h]
    return float(mu_bulk * ov)


def dipole_couplings(
    e_sols: dict[int, RadialSolution],
    h_sols: dict[int, RadialSolution],
    sol: ExcitonSolution,
    mu_bulk: float = 1.0,
) -> DipoleTable:
    """Project the dipole-created pair onto every CI eigenstate.

    The locally created pair carries weight (-1)^l sqrt(2l+1) times the
    radial overlap in each coupled channel; M_i contracts that vector
    with the CI coefficients.
    """
    bx = sol.basis
    n_max = bx.n_max
    g = np.empty(bx.size)
    for l in range(bx.l_max + 1):
        if l not in e_sols or l not in h_sols:
            raise BasisMismatch(f"missing one-particle channel l={l}")
        es, hs = e_sols[l], h_sols[l]
        if es.basis is not hs.basis and not np.array_equal(
            es.basis.kv.knots, hs.basis.kv.knots
        ):
            raise BasisMismatch("channels solved on different bases")
        O = es.coefficients[:n_max] @ es.overlap @ hs.coefficients[:n_max].T
        sign = -1.0 if l % 2 else 1.0
        g[l * n_max**2 : (l + 1) * n_max**2] = (
            sign * np.sqrt(2 * l + 1) * O.ravel()
        )
    m = sol.coefficients @ g
    return DipoleTable(mu_bulk=float(mu_bulk), m=mu_bulk * m)


def resonance_frequency(sol: ExcitonSolution, e_g1: float) -> float:
    """w_res = (ground exciton energy + gap) / hbar, in rad/fs."""
    return (float(sol.energies[0]) + float(e_g1)) / HBAR


@dataclass(frozen=True)
class DriveRun:
    """Parameters of one driven run.

    dt defaults to T/400 and must resolve the drive (dt <= T/200).
    ``e_g1`` places the exciton levels above the vacuum; the published
    equations carry it implicitly inside the transition energies.
    """

    e0: float
    omega: float
    n_periods: int = 50
    dt: float | None = None
    n_states: int = 30
    e_g1: float = 0.0
    t_transient: float = 0.0

    def __post_init__(self):
        if self.e0 < 0.0:
            raise ValueError("field amplitude must be >= 0")
        if self.omega <= 0.0:
            raise ValueError("drive frequency must be positive")
        if self.n_periods < 1:
            raise ValueError("need at least one drive period")
        if self.n_states < 1:
            raise ValueError("need at least one retained state")
        if self.dt is None:
            object.__setattr__(self, "dt", self.period / 400.0)
        if self.dt > self.period / 200.0:
            raise ValueError(
                f"dt = {self.dt} does not resolve the drive; "
                f"need dt <= T/200 = {self.period / 200.0:.6g} fs"
            )

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega


@dataclass(frozen=True)
class TimeSeries:
    """Complex amplitudes on the time grid; row 0 of U is t = 0."""

    t: np.ndarray
    U: np.ndarray = field(repr=False)

    @property
    def norm(self) -> np.ndarray:
        return (np.abs(self.U) ** 2).sum(axis=1)

    @property
    def prob(self) -> np.ndarray:
        return np.abs(self.U) ** 2


def evolve(
    sol: ExcitonSolution,
    dipoles: DipoleTable,
    run: DriveRun,
) -> TimeSeries:
    """Integrate the driven amplitudes from the vacuum initial state."""
    if len(dipoles) != sol.n_states:
        raise BasisMismatch(
            f"dipole table covers {len(dipoles)} states, "
            f"solution has {sol.n_states}"
        )
    d = min(run.n_states, sol.n_states)
    diag = np.concatenate(([0.0], sol.energies[:d] + run.e_g1))
    coupling = np.asarray(dipoles.m[:d], dtype=float)
    steps_per_period = int(round(run.period / run.dt))
    n_steps = run.n_periods * steps_per_period
    U = rk4_drive(
        diag, coupling, run.e0, run.omega, run.dt, n_steps, 1, HBAR
    )
    t = run.dt * np.arange(n_steps + 1)
    series = TimeSeries(t=t, U=U)
    drift = np.abs(series.norm - 1.0).max()
    if drift > 1e-6:
        raise NormDrift(
            f"norm drifted by {drift:.3e}; decrease dt (currently {run.dt})"
        )
    return series


@dataclass(frozen=True)
class LeakageResult:
    """Period-averaged leakage plus a finite-window convergence delta."""

    value: float
    delta: float

    def __float__(self) -> float:
        return self.value


def leakage(series: TimeSeries, run: DriveRun) -> LeakageResult:
    """L = time average of 1 - |U_0|^2 - |U_1|^2 over n full periods.

    Averages over [t', t' + n T] with the trapezoidal rule and reports
    |L(n) - L(n/2)| as a convergence estimate for the finite window.
    """
    if series.U.shape[1] < 2:
        raise TooShort("need the vacuum and at least one exciton state")
    T = run.period
    t0 = run.t_transient
    t1 = t0 + run.n_periods * T
    if series.t[-1] < t1 - 1e-9 * T:
        raise TooShort(
            f"series ends at {series.t[-1]:.3f} fs, "
            f"window needs {t1:.3f} fs"
        )
    p = series.prob
    out = 1.0 - p[:, 0] - p[:, 1]

    def window_mean(ta: float, tb: float) -> float:
        i0 = int(np.searchsorted(series.t, ta - 1e-12))
        i1 = int(np.searchsorted(series.t, tb + 1e-12)) - 1
        seg_t = series.t[i0 : i1 + 1]
        seg = out[i0 : i1 + 1]
        return float(np.trapezoid(seg, seg_t) / (seg_t[-1] - seg_t[0]))

    full = window_mean(t0, t1)
    half = window_mean(t0, t0 + 0.5 * run.n_periods * T)
    return LeakageResult(value=full, delta=abs(full - half))


def leakage_scan(
    sol: ExcitonSolution,
    dipoles: DipoleTable,
    e0_grid,
    omega_grid,
    n_periods: int = 50,
    *,
    n_states: int = 30,
    e_g1: float = 0.0,
    steps_per_period: int = 400,
) -> list[dict]:
    """Leakage over the Cartesian (E0, omega) grid, in grid order."""
    e0_grid = np.atleast_1d(np.asarray(e0_grid, dtype=float))
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if e0_grid.size == 0 or omega_grid.size == 0:
        raise ValueError("scan grids must be nonempty")
    rows = []
    for e0 in e0_grid:
        for omega in omega_grid:
            run = DriveRun(
                e0=float(e0),
                omega=float(omega),
                n_periods=n_periods,
                dt=2.0 * np.pi / omega / steps_per_period,
                n_states=n_states,
                e_g1=e_g1,
            )
            series = evolve(sol, dipoles, run)
            lk = leakage(series, run)
            rows.append(
                {
                    "E0_V_per_nm": float(e0),
                    "omega_rad_per_fs": float(omega),
                    "leakage": lk.value,
                    "convergence_delta": lk.delta,
                }
            )
    return rows
