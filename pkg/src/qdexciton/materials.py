"""Material parameters, device geometry, and config-file parsing.

A device is a spherical core / well / clad heterostructure: the core
(0 < r < a) and clad (b < r < R) are the same barrier material, the layer
(a < r < b) is the well material.  Band offsets confine both carriers to
the well (Type-I); anything else is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import GeometryInvalid, MissingField, TypeIIUnsupported, UnknownMaterial

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib


@dataclass(frozen=True)
class Material:
    """Bulk parameters: band masses in units of m0, relative dielectric constant.

    ``e_gap`` is optional; it is only needed to place exciton levels on an
    absolute energy scale for driven dynamics, and must then be supplied by
    the user (it is never part of the built-in sets).
    """

    name: str
    m_e: float
    m_h: float
    eps: float
    e_gap: float | None = None


_BUILTINS = {
    "HgS": Material(name="HgS", m_e=0.036, m_h=0.040, eps=11.36),
    "CdS": Material(name="CdS", m_e=0.2, m_h=0.7, eps=5.5),
}


def builtin_material(name: str) -> Material:
    """Return a built-in material parameter set by name."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise UnknownMaterial(
            f"no built-in parameters for {name!r}; known: {sorted(_BUILTINS)}"
        ) from None


@dataclass(frozen=True)
class Device:
    """Immutable core/well/clad geometry with its two materials.

    ``v0_e`` and ``v0_h`` are the (positive) barrier heights seen by the
    electron and the hole, measured from the respective well band edge.
    """

    well: Material
    barrier: Material
    a: float
    b: float
    R: float
    v0_e: float
    v0_h: float

    def __post_init__(self):
        # a = 0 is the core-absent limit and stays legal; everything else
        # must be strictly ordered.
        if not (0.0 <= self.a < self.b < self.R):
            raise GeometryInvalid(
                f"need 0 <= a < b < R, got a={self.a}, b={self.b}, R={self.R}"
            )
        if self.v0_e <= 0.0 or self.v0_h <= 0.0:
            raise TypeIIUnsupported(
                f"offsets must confine both carriers to the well layer "
                f"(v0_e={self.v0_e}, v0_h={self.v0_h})"
            )

    # -- per-particle profiles ------------------------------------------

    def mass(self, particle: str) -> tuple[float, float]:
        """(well, barrier) mass pair for 'e' or 'h'."""
        if particle == "e":
            return self.well.m_e, self.barrier.m_e
        if particle == "h":
            return self.well.m_h, self.barrier.m_h
        raise ValueError(f"particle must be 'e' or 'h', got {particle!r}")

    def offset(self, particle: str) -> float:
        if particle == "e":
            return self.v0_e
        if particle == "h":
            return self.v0_h
        raise ValueError(f"particle must be 'e' or 'h', got {particle!r}")

    def well_mask(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return (r > self.a) & (r < self.b)

    def mass_at(self, r: np.ndarray, particle: str) -> np.ndarray:
        m_w, m_b = self.mass(particle)
        return np.where(self.well_mask(r), m_w, m_b)

    def potential_at(self, r: np.ndarray, particle: str) -> np.ndarray:
        v0 = self.offset(particle)
        return np.where(self.well_mask(r), 0.0, v0)

    def with_core_radius(self, a: float) -> "Device":
        """Same device at a different core radius (re-validated)."""
        return replace(self, a=a)


@dataclass(frozen=True)
class Numerics:
    """Discretization settings shared by the solvers."""

    spline_order: int = 5
    n_intervals: int = 160
    interface_multiplicity: int | None = None  # default: order - 1
    quad_points: int | None = None  # default: order + 6
    selfpol_lmax: int = 80
    n_max: int = 8
    l_max: int = 3


@dataclass(frozen=True)
class DriveSettings:
    """Defaults for the driven-dynamics runs; e_g1 must come from the user."""

    e_g1: float | None = None
    mu_bulk: float = 1.0
    e0: tuple[float, ...] = (1e-3, 1e-2, 5e-2)
    omega_rel: float = 1.0
    n_periods: int = 50
    steps_per_period: int = 400
    n_states: int = 30


@dataclass(frozen=True)
class Config:
    device: Device
    numerics: Numerics = field(default_factory=Numerics)
    drive: DriveSettings = field(default_factory=DriveSettings)


def _material_from_mapping(section: Mapping, label: str) -> Material:
    if "name" in section:
        base = builtin_material(str(section["name"]))
    else:
        base = None
    kwargs = {}
    for key in ("m_e", "m_h", "eps"):
        if key in section:
            kwargs[key] = float(section[key])
        elif base is None:
            raise MissingField(f"[material.{label}] needs '{key}' (or a built-in 'name')")
    if "e_gap_eV" in section:
        kwargs["e_gap"] = float(section["e_gap_eV"])
    if base is not None:
        return replace(base, **kwargs) if kwargs else base
    return Material(name=str(section.get("label", label)), **kwargs)


def device_from_mapping(doc: Mapping) -> Device:
    """Build a Device from a parsed config mapping.

    The [device] section gives radii in nm (either ``a_nm`` or ``a_over_b``)
    and either explicit offsets ``v0_e_eV`` / ``v0_h_eV`` or per-material
    band edges ``cb_edge_eV`` / ``vb_edge_eV`` from which the offsets are
    derived.
    """
    try:
        dev = doc["device"]
        mats = doc["material"]
        well = _material_from_mapping(mats["well"], "well")
        barrier = _material_from_mapping(mats["barrier"], "barrier")
    except KeyError as exc:
        raise MissingField(f"missing config section: {exc}") from None

    if "b_nm" not in dev:
        raise MissingField("[device] needs 'b_nm'")
    b = float(dev["b_nm"])
    if "a_nm" in dev:
        a = float(dev["a_nm"])
    elif "a_over_b" in dev:
        a = float(dev["a_over_b"]) * b
    else:
        raise MissingField("[device] needs 'a_nm' or 'a_over_b'")
    if "R_nm" in dev:
        R = float(dev["R_nm"])
    else:
        R = 2.0 * b

    if "v0_e_eV" in dev and "v0_h_eV" in dev:
        v0_e = float(dev["v0_e_eV"])
        v0_h = float(dev["v0_h_eV"])
    else:
        mw = doc["material"]["well"]
        mb = doc["material"]["barrier"]
        try:
            v0_e = float(mb["cb_edge_eV"]) - float(mw["cb_edge_eV"])
            v0_h = float(mw["vb_edge_eV"]) - float(mb["vb_edge_eV"])
        except KeyError:
            raise MissingField(
                "[device] needs 'v0_e_eV'/'v0_h_eV', or both materials need "
                "'cb_edge_eV' and 'vb_edge_eV'"
            ) from None

    return Device(well=well, barrier=barrier, a=a, b=b, R=R, v0_e=v0_e, v0_h=v0_h)


def _numerics_from_mapping(doc: Mapping) -> Numerics:
    sec = doc.get("numerics", {})
    kwargs = {}
    for key in (
        "spline_order",
        "n_intervals",
        "interface_multiplicity",
        "quad_points",
        "selfpol_lmax",
        "n_max",
        "l_max",
    ):
        if key in sec:
            kwargs[key] = int(sec[key])
    return Numerics(**kwargs)


def _drive_from_mapping(doc: Mapping) -> DriveSettings:
    sec = doc.get("drive", {})
    kwargs = {}
    if "e_g1_eV" in sec:
        kwargs["e_g1"] = float(sec["e_g1_eV"])
    if "mu_bulk" in sec:
        kwargs["mu_bulk"] = float(sec["mu_bulk"])
    if "e0" in sec:
        kwargs["e0"] = tuple(float(x) for x in sec["e0"])
    for key in ("n_periods", "steps_per_period", "n_states"):
        if key in sec:
            kwargs[key] = int(sec[key])
    if "omega_rel" in sec:
        kwargs["omega_rel"] = float(sec["omega_rel"])
    return DriveSettings(**kwargs)


def load_config(path: str) -> Config:
    """Parse a TOML config file into device + numerics + drive settings."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return Config(
        device=device_from_mapping(doc),
        numerics=_numerics_from_mapping(doc),
        drive=_drive_from_mapping(doc),
    )


def serialize_device(device: Device) -> dict:
    """Mapping that round-trips through device_from_mapping."""
    def mat(m: Material) -> dict:
        out = {"label": m.name, "m_e": m.m_e, "m_h": m.m_h, "eps": m.eps}
        if m.e_gap is not None:
            out["e_gap_eV"] = m.e_gap
        return out

    return {
        "device": {
            "a_nm": device.a,
            "b_nm": device.b,
            "R_nm": device.R,
            "v0_e_eV": device.v0_e,
            "v0_h_eV": device.v0_h,
        },
        "material": {"well": mat(device.well), "barrier": mat(device.barrier)},
    }


def cds_hgs_device(a_over_b: float = 0.5, b: float = 31.71) -> Device:
    """The CdS/HgS/CdS reference structure used throughout the tests."""
    return Device(
        well=builtin_material("HgS"),
        barrier=builtin_material("CdS"),
        a=a_over_b * b,
        b=b,
        R=2.0 * b,
        v0_e=1.35,
        v0_h=0.9,
    )
