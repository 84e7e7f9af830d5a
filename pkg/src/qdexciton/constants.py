"""Physical constants in the eV / nm / fs unit system.

Energies are in eV, lengths in nm, times in fs.  Charge enters only through
the Coulomb coupling constant, so dielectric constants are plain relative
numbers and masses are in units of the free-electron mass.
"""

#: hbar^2 / (2 m0), eV nm^2
HBAR2_OVER_2M0 = 0.0380998

#: hbar, eV fs
HBAR = 0.658212

#: e^2 / (4 pi eps0), eV nm  (divide by the relative dielectric constant)
COULOMB = 1.439964
