"""Command-line front end: run the solvers and emit CSV tables.

Four subcommands cover the library surface:

``solve-one``
    one-particle levels over an a/b grid, finite well against the
    hard-wall reference, self-polarization on and off.
``exciton``
    CI and first-order exciton energies, bindings, and entanglement
    entropies, with polarization and self-polarization toggled.
``dynamics``
    driven occupation trajectories at one or more field amplitudes.
``leakage-scan``
    time-averaged leakage over a Cartesian (E0, omega) grid.

Output is plain CSV (comma separated, '.' decimal, one header row)
preceded by '#'-prefixed manifest lines that record the command and
every resolved numeric parameter.  Bodies are deterministic: the same
manifest produces byte-identical rows.  Column names carry units
wherever the quantity has one (``_eV``, ``_fs``, ``_V_per_nm``, ...);
flags, counts, and ratios are dimensionless.

Exit codes: 0 success, 1 configuration problems, 2 solver failures.
"""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import dataclass

import numpy as np

from ._kernels import BACKEND
from .dynamics import (
    DriveRun,
    dipole_couplings,
    evolve,
    leakage_scan,
    resonance_frequency,
)
from .entanglement import state_entropy
from .errors import (
    GeometryInvalid,
    InvalidOrder,
    MalformedGrid,
    MissingField,
    MultiplicityOutOfRange,
    QdExcitonError,
    TooFewIntervals,
    TypeIIUnsupported,
    UnknownMaterial,
)
from .exciton import binding_energy, perturbative_binding, solve_exciton
from .materials import Config, cds_hgs_device, load_config
from .radial import ChannelSpec, infinite_well_reference, solve_channel
from . import bsplines

# Errors that mean "fix your input" rather than "the computation broke".
_CONFIG_ERRORS = (
    MissingField,
    GeometryInvalid,
    TypeIIUnsupported,
    UnknownMaterial,
    InvalidOrder,
    MultiplicityOutOfRange,
    TooFewIntervals,
    MalformedGrid,
    OSError,
    ValueError,
)


def parse_grid(text: str) -> np.ndarray:
    """Parse 'x', 'lo:hi', or 'lo:hi:n' into a 1-d float grid.

    A degenerate range (lo == hi) collapses to a single point whatever
    the count says.
    """
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts[:2]]
        n = int(parts[2]) if len(parts) == 3 else None
    except (ValueError, IndexError):
        raise MalformedGrid(
            f"cannot parse grid {text!r}; expected 'x' or 'lo:hi:n'"
        ) from None
    if len(parts) == 1:
        return np.array([vals[0]])
    if len(parts) > 3:
        raise MalformedGrid(f"too many ':' in grid {text!r}")
    lo, hi = vals
    if lo == hi:
        return np.array([lo])
    if n is None:
        raise MalformedGrid(
            f"grid {text!r} has distinct endpoints but no point count"
        )
    if n < 2:
        raise MalformedGrid(f"grid {text!r} needs n >= 2 for lo != hi")
    return np.linspace(lo, hi, n)


def _ab_values(args, default: str = "0.1:0.9:9") -> np.ndarray:
    grid = parse_grid(args.ab_grid if args.ab_grid else default)
    if np.any(grid <= 0.0) or np.any(grid >= 1.0):
        raise GeometryInvalid(
            f"a/b grid must lie strictly inside (0, 1), got {grid}"
        )
    return grid


@dataclass(frozen=True)
class RunManifest:
    """Everything that determines an output table, for the file header."""

    command: str
    config_path: str
    params: tuple[tuple[str, str], ...]
    out: str
    seed: str = "none"

    def header_lines(self) -> list[str]:
        lines = [
            f"# command = {self.command}",
            f"# config = {self.config_path}",
        ]
        lines += [f"# {key} = {value}" for key, value in self.params]
        lines.append(f"# out = {self.out}")
        lines.append(f"# seed = {self.seed}")
        lines.append(f"# backend = {BACKEND}")
        return lines


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit(manifest: RunManifest, columns: list[str], rows, out: str | None) -> None:
    buf = io.StringIO()
    for line in manifest.header_lines():
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(buf.getvalue())


def _numeric_params(cfg: Config) -> list[tuple[str, str]]:
    num = cfg.numerics
    return [
        ("b_nm", _fmt(float(cfg.device.b))),
        ("R_nm", _fmt(float(cfg.device.R))),
        ("spline_order", str(num.spline_order)),
        ("n_intervals", str(num.n_intervals)),
        ("n_max", str(num.n_max)),
        ("l_max", str(num.l_max)),
        ("selfpol_lmax", str(num.selfpol_lmax)),
    ]


def _sp_variants(args) -> tuple[bool, ...]:
    return (False,) if args.no_selfpol else (True, False)


def _pol_variants(args) -> tuple[bool, ...]:
    return (False,) if args.no_polarization else (True, False)


# --- subcommands -------------------------------------------------------


def cmd_solve_one(args, cfg: Config) -> int:
    ab = _ab_values(args)
    num = cfg.numerics
    n_levels = args.states if args.states else 6
    sp_variants = _sp_variants(args)

    params = _numeric_params(cfg) + [
        ("ab_grid", ",".join(_fmt(float(x)) for x in ab)),
        ("levels", str(n_levels)),
        ("selfpol", "+".join("on" if s else "off" for s in sp_variants)),
        ("compat_printed_eqs", str(bool(args.compat_printed_eqs)).lower()),
    ]
    manifest = RunManifest(
        command="solve-one",
        config_path=args.config or "(builtin CdS/HgS demo)",
        params=tuple(params),
        out=args.out or "(stdout)",
    )

    rows = []
    for ab_val in ab:
        dev = cfg.device.with_core_radius(float(ab_val) * cfg.device.b)
        basis = bsplines.make_basis(dev, num)
        for particle in ("e", "h"):
            m_well = dev.mass(particle)[0]
            for l in range(num.l_max + 1):
                for sp in sp_variants:
                    spec = ChannelSpec(
                        particle,
                        l,
                        include_selfpol=sp,
                        selfpol_lmax=num.selfpol_lmax,
                        compat_printed_eqs=args.compat_printed_eqs,
                    )
                    sol = solve_channel(dev, num, spec, n_states=n_levels, basis=basis)
                    for n in range(len(sol.energies)):
                        rows.append(
                            (
                                float(ab_val),
                                particle,
                                l,
                                n + 1,
                                float(sol.energies[n]),
                                int(sp),
                                "finite_well",
                            )
                        )
                for n in range(1, n_levels + 1):
                    e_ref = infinite_well_reference(dev, m_well, l, n)
                    rows.append(
                        (float(ab_val), particle, l, n, e_ref, 0, "infinite_well")
                    )

    _emit(
        manifest,
        ["a_over_b", "particle", "l", "n", "energy_eV", "selfpol_flag", "method"],
        rows,
        args.out,
    )
    return 0


def cmd_exciton(args, cfg: Config) -> int:
    ab = _ab_values(args)
    num = cfg.numerics
    n_report = args.states if args.states else 4
    sp_variants = _sp_variants(args)
    pol_variants = _pol_variants(args)

    params = _numeric_params(cfg) + [
        ("ab_grid", ",".join(_fmt(float(x)) for x in ab)),
        ("states", str(n_report)),
        ("selfpol", "+".join("on" if s else "off" for s in sp_variants)),
        ("polarization", "+".join("on" if p else "off" for p in pol_variants)),
        ("compat_printed_eqs", str(bool(args.compat_printed_eqs)).lower()),
    ]
    manifest = RunManifest(
        command="exciton",
        config_path=args.config or "(builtin CdS/HgS demo)",
        params=tuple(params),
        out=args.out or "(stdout)",
    )

    rows = []
    for ab_val in ab:
        dev = cfg.device.with_core_radius(float(ab_val) * cfg.device.b)
        for sp in sp_variants:
            for pol in pol_variants:
                sol = solve_exciton(
                    dev,
                    num,
                    include_selfpol=sp,
                    polarization=pol,
                    compat_printed_eqs=args.compat_printed_eqs,
                )
                for s in range(min(n_report, sol.n_states)):
                    rows.append(
                        (
                            float(ab_val),
                            s,
                            float(sol.energies[s]),
                            binding_energy(sol, s),
                            state_entropy(sol, s),
                            int(sp),
                            int(pol),
                            "CI",
                        )
                    )
                e_sol = sol.e_sols[0]
                h_sol = sol.h_sols[0]
                eb_pt = perturbative_binding(
                    e_sol,
                    h_sol,
                    dev,
                    polarization=pol,
                    compat_printed_eqs=args.compat_printed_eqs,
                )
                e_pt = float(e_sol.energies[0] + h_sol.energies[0]) - eb_pt
                # a single product configuration is rank one: entropy 0
                rows.append((float(ab_val), 0, e_pt, eb_pt, 0.0, int(sp), int(pol), "PT"))

    _emit(
        manifest,
        [
            "a_over_b",
            "state_index",
            "energy_eV",
            "binding_eV",
            "entropy_nats",
            "selfpol_flag",
            "polarization_flag",
            "method",
        ],
        rows,
        args.out,
    )
    return 0


def _driven_solution(args, cfg: Config):
    """Shared setup for dynamics and leakage-scan: CI solve + couplings."""
    drive = cfg.drive
    if drive.e_g1 is None:
        raise MissingField(
            "driven dynamics needs the energy gap: set [drive] e_g1_eV in the config"
        )
    if args.ab_grid:
        ab = _ab_values(args)
        if len(ab) != 1:
            raise MalformedGrid(
                "dynamics runs one geometry; give --ab-grid a single value"
            )
        dev = cfg.device.with_core_radius(float(ab[0]) * cfg.device.b)
    else:
        dev = cfg.device
    sol = solve_exciton(
        dev,
        cfg.numerics,
        include_selfpol=not args.no_selfpol,
        polarization=not args.no_polarization,
        compat_printed_eqs=args.compat_printed_eqs,
    )
    dipoles = dipole_couplings(sol.e_sols, sol.h_sols, sol, mu_bulk=drive.mu_bulk)
    return dev, sol, dipoles


def _drive_params(cfg: Config, e0_list, omega_text: str, n_periods: int, n_states: int):
    drive = cfg.drive
    return [
        ("e_g1_eV", _fmt(float(drive.e_g1))),
        ("mu_bulk_e_nm", _fmt(float(drive.mu_bulk))),
        ("E0_V_per_nm", ",".join(_fmt(float(x)) for x in e0_list)),
        ("omega_rel", omega_text),
        ("n_periods", str(n_periods)),
        ("steps_per_period", str(drive.steps_per_period)),
        ("n_states", str(n_states)),
    ]


def cmd_dynamics(args, cfg: Config) -> int:
    drive = cfg.drive
    dev, sol, dipoles = _driven_solution(args, cfg)
    e0_list = args.E0 if args.E0 else list(drive.e0)
    omega_rel = parse_grid(args.omega_rel) if args.omega_rel else np.array([drive.omega_rel])
    if len(omega_rel) != 1:
        raise MalformedGrid("dynamics takes a single --omega-rel, not a grid")
    n_periods = args.periods if args.periods else drive.n_periods
    n_states = args.states if args.states else drive.n_states
    omega = float(omega_rel[0]) * resonance_frequency(sol, drive.e_g1)

    params = _numeric_params(cfg) + [
        ("a_over_b", _fmt(float(dev.a / dev.b))),
    ] + _drive_params(cfg, e0_list, _fmt(float(omega_rel[0])), n_periods, n_states) + [
        ("omega_rad_per_fs", _fmt(omega)),
        ("selfpol", "off" if args.no_selfpol else "on"),
        ("polarization", "off" if args.no_polarization else "on"),
        ("compat_printed_eqs", str(bool(args.compat_printed_eqs)).lower()),
    ]
    manifest = RunManifest(
        command="dynamics",
        config_path=args.config or "(builtin CdS/HgS demo)",
        params=tuple(params),
        out=args.out or "(stdout)",
    )

    rows = []
    for e0 in e0_list:
        run = DriveRun(
            e0=float(e0),
            omega=omega,
            n_periods=n_periods,
            dt=None if drive.steps_per_period == 400 else
            2.0 * np.pi / omega / drive.steps_per_period,
            n_states=n_states,
            e_g1=drive.e_g1,
        )
        series = evolve(sol, dipoles, run)
        # ~8 samples per drive period keeps trajectories plottable
        # without multi-megabyte tables; the last step always appears.
        steps_per_period = int(round(run.period / run.dt))
        stride = max(1, steps_per_period // 8)
        idx = list(range(0, len(series.t), stride))
        if idx[-1] != len(series.t) - 1:
            idx.append(len(series.t) - 1)
        prob = series.prob
        for ti in idx:
            for state in range(series.U.shape[1]):
                u = series.U[ti, state]
                rows.append(
                    (
                        float(e0),
                        float(series.t[ti]),
                        state,
                        float(u.real),
                        float(u.imag),
                        float(prob[ti, state]),
                    )
                )

    _emit(
        manifest,
        ["E0_V_per_nm", "t_fs", "state_index", "reU", "imU", "prob"],
        rows,
        args.out,
    )
    return 0


def cmd_leakage_scan(args, cfg: Config) -> int:
    drive = cfg.drive
    dev, sol, dipoles = _driven_solution(args, cfg)
    e0_list = args.E0 if args.E0 else list(drive.e0)
    omega_text = args.omega_rel if args.omega_rel else "0.8:1.2:21"
    omega_rel = parse_grid(omega_text)
    n_periods = args.periods if args.periods else drive.n_periods
    n_states = args.states if args.states else drive.n_states
    w_res = resonance_frequency(sol, drive.e_g1)
    omega_grid = omega_rel * w_res

    params = _numeric_params(cfg) + [
        ("a_over_b", _fmt(float(dev.a / dev.b))),
    ] + _drive_params(cfg, e0_list, omega_text, n_periods, n_states) + [
        ("omega_res_rad_per_fs", _fmt(w_res)),
        ("selfpol", "off" if args.no_selfpol else "on"),
        ("polarization", "off" if args.no_polarization else "on"),
        ("compat_printed_eqs", str(bool(args.compat_printed_eqs)).lower()),
    ]
    manifest = RunManifest(
        command="leakage-scan",
        config_path=args.config or "(builtin CdS/HgS demo)",
        params=tuple(params),
        out=args.out or "(stdout)",
    )

    table = leakage_scan(
        sol,
        dipoles,
        e0_list,
        omega_grid,
        n_periods,
        n_states=n_states,
        e_g1=drive.e_g1,
        steps_per_period=drive.steps_per_period,
    )
    rows = [
        (
            row["E0_V_per_nm"],
            row["omega_rad_per_fs"],
            row["leakage"],
            row["convergence_delta"],
        )
        for row in table
    ]

    _emit(
        manifest,
        ["E0_V_per_nm", "omega_rad_per_fs", "leakage", "convergence_delta"],
        rows,
        args.out,
    )
    return 0


# --- plumbing ----------------------------------------------------------


def _load_config(args) -> Config:
    if args.config:
        return load_config(args.config)
    return Config(device=cds_hgs_device())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdexciton",
        description="Excitons in layered spherical quantum dots: "
        "levels, bindings, entropies, driven dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (built-in demo if absent)")
    common.add_argument("--out", help="output CSV path (stdout if absent)")
    common.add_argument(
        "--ab-grid",
        help="core radius ratio grid, 'x' or 'lo:hi:n' (default 0.1:0.9:9)",
    )
    common.add_argument(
        "--states",
        type=int,
        help="levels per channel / CI states to report / retained drive states",
    )
    common.add_argument(
        "--no-selfpol",
        action="store_true",
        help="drop the image-charge self-energy",
    )
    common.add_argument(
        "--no-polarization",
        action="store_true",
        help="use the bare-Coulomb interaction kernel",
    )
    common.add_argument(
        "--compat-printed-eqs",
        action="store_true",
        help="dimensionally odd exponent variant of the kernels, for cross-checks",
    )

    p = sub.add_parser(
        "solve-one", parents=[common], help="one-particle levels over an a/b grid"
    )
    p.set_defaults(func=cmd_solve_one)

    p = sub.add_parser(
        "exciton",
        parents=[common],
        help="exciton energies, bindings, entropies (CI and first order)",
    )
    p.set_defaults(func=cmd_exciton)

    drive = argparse.ArgumentParser(add_help=False)
    drive.add_argument(
        "--E0",
        type=float,
        action="append",
        help="drive amplitude in V/nm (repeatable; config default otherwise)",
    )
    drive.add_argument(
        "--omega-rel",
        help="drive frequency over resonance: single value, or lo:hi:n for scans",
    )
    drive.add_argument("--periods", type=int, help="drive periods to integrate")

    p = sub.add_parser(
        "dynamics",
        parents=[common, drive],
        help="driven occupation trajectories",
    )
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser(
        "leakage-scan",
        parents=[common, drive],
        help="time-averaged leakage over an (E0, omega) grid",
    )
    p.set_defaults(func=cmd_leakage_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(args, cfg)
    except _CONFIG_ERRORS as exc:
        print(f"qdexciton: error: {exc}", file=sys.stderr)
        return 1
    except QdExcitonError as exc:
        print(f"qdexciton: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
