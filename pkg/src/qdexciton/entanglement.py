"""Schmidt spectra and von Neumann entropy of exciton eigenstates.

A CI eigenvector lives in the coupled L=0 basis.  Unfolding the angular
coupling gives the plain product-state coefficient matrix C over
uncoupled electron and hole orbitals (l, m, n); since the one-particle
orbitals are orthonormal, the squared singular values of C are the
Schmidt weights of the state and the reduced-density spectrum follows
without any further integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qdexciton.errors import NotNormalized
from qdexciton.exciton import ExcitonSolution, binding_energy, solve_exciton
from qdexciton.materials import Device, Numerics


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Descending Schmidt weights and their entropy in nats."""

    lambdas: np.ndarray
    entropy: float


def _uncoupled_dim(l_max: int, n_max: int) -> int:
    return (l_max + 1) ** 2 * n_max


def coefficient_matrix(sol: ExcitonSolution, state: int = 0) -> np.ndarray:
    """Product-basis coefficient matrix C of one CI eigenstate.

    Rows run over electron orbitals (l, m, n_e), columns over hole
    orbitals (l, m, n_h), both ordered l-major then m then n.  The
    coupled vector spreads over m with Clebsch-Gordan weights
    (-1)^(l-m)/sqrt(2l+1), pairing electron m with hole -m, so the
    Frobenius norm stays 1.
    """
    sol._require_state(state)
    bx = sol.basis
    l_max, n_max = bx.l_max, bx.n_max
    dim = _uncoupled_dim(l_max, n_max)
    C = np.zeros((dim, dim))
    c = sol.coefficients[state]
    for l in range(l_max + 1):
        w = 1.0 / np.sqrt(2 * l + 1)
        block = c[
            l * n_max * n_max : (l + 1) * n_max * n_max
        ].reshape(n_max, n_max)
        for m in range(-l, l + 1):
            sign = -1.0 if (l - m) % 2 else 1.0
            row0 = (l * l + (m + l)) * n_max
            col0 = (l * l + (-m + l)) * n_max
            C[row0 : row0 + n_max, col0 : col0 + n_max] = sign * w * block
    return C


def entropy(C: np.ndarray) -> SchmidtSpectrum:
    """Schmidt weights (squared singular values) and S = -sum l ln l."""
    C = np.asarray(C, dtype=float)
    norm = np.linalg.norm(C)
    if abs(norm - 1.0) > 1e-8:
        raise NotNormalized(f"|C|_F = {norm!r}, expected 1")
    s = np.linalg.svd(C, compute_uv=False)
    lam = s * s
    lam = np.where(lam > 0.0, lam, 0.0)
    pos = lam[lam > 0.0]
    S = float(-(pos * np.log(pos)).sum())
    return SchmidtSpectrum(lambdas=lam, entropy=S)


def state_entropy(sol: ExcitonSolution, state: int = 0) -> float:
    """Entropy of one CI eigenstate (nats)."""
    return entropy(coefficient_matrix(sol, state)).entropy


def entropy_scan(
    device: Device,
    a_over_b: np.ndarray,
    states: int = 3,
    numerics: Numerics | None = None,
    **solve_opts,
) -> list[dict]:
    """Energies, bindings, entropies over an a/b grid.

    Returns one row dict per (grid point, state); the CLI turns the rows
    into CSV.  Extra keyword arguments go to ``solve_exciton``.
    """
    grid = np.atleast_1d(np.asarray(a_over_b, dtype=float))
    if ((grid <= 0.0) | (grid >= 1.0)).any():
        raise ValueError("a/b grid must lie strictly inside (0, 1)")
    rows = []
    for ab in grid:
        dev = device.with_core_radius(ab * device.b)
        sol = solve_exciton(dev, numerics, **solve_opts)
        for i in range(min(states, sol.n_states)):
            rows.append(
                {
                    "a_over_b": float(ab),
                    "state_index": i,
                    "energy_eV": float(sol.energies[i]),
                    "binding_eV": binding_energy(sol, i),
                    "entropy_nats": state_entropy(sol, i),
                }
            )
    return rows
