"""Exact classical reference: monodromy eigenphases and truncated extended spectra."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .evolution import trotter_monodromy
from .model import FourierHamiltonian, build_extended_hamiltonian

DEFAULT_FINE_STEPS = 100_000
DEGENERACY_TOL = 1e-9


class DegenerateSpectrumWarning(RuntimeWarning):
    pass


def fold_to_bz(eps: float, omega: float) -> float:
    """Map ``eps`` into the half-open zone [-omega/2, omega/2)."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    half = omega / 2
    if -half <= eps < half:
        return float(eps)
    r = eps - omega * math.floor((eps + half) / omega)
    # floor can land one period off when eps + half rounds onto a multiple
    while r >= half:
        r -= omega
    while r < -half:
        r += omega
    return float(r)


def circular_distance(a: float, b: float, omega: float) -> float:
    """Distance between two quasi-energies on the circle of circumference omega."""
    return abs(fold_to_bz(a - b, omega))


@dataclass(frozen=True)
class QuasiEnergySpectrum:
    energies: np.ndarray
    modes: np.ndarray  # columns are t=0 Floquet modes
    omega: float
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.energies)

    def mode(self, alpha: int) -> np.ndarray:
        return self.modes[:, alpha]


def exact_quasienergies(
    h: FourierHamiltonian, fine_steps: int = DEFAULT_FINE_STEPS
) -> QuasiEnergySpectrum:
    """Quasi-energies from the eigenphases of a finely sliced U_T.

    An eigenvalue exp(i theta) of U_T corresponds to eps = fold(-theta / T).
    The complex Schur form is used so that modes come out orthonormal.
    """
    if fine_steps < 10_000:
        raise ValueError(f"fine_steps must be >= 1e4 for reference use, got {fine_steps}")
    u = trotter_monodromy(h, fine_steps).u_t.entries
    tri, z = scipy.linalg.schur(u, output="complex")
    theta = np.angle(np.diag(tri))
    eps = np.array([fold_to_bz(-th / h.period, h.omega) for th in theta])
    order = np.argsort(eps, kind="stable")
    eps, z = eps[order], z[:, order]

    phases = np.exp(1j * theta[order])
    gaps = np.abs(phases[:, None] - phases[None, :]) + np.eye(len(phases))
    degenerate = bool(np.any(gaps < DEGENERACY_TOL))
    if degenerate:
        warnings.warn(
            "degenerate U_T eigenphases; modes are an arbitrary basis of the degenerate subspace",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
    return QuasiEnergySpectrum(eps, z, h.omega, degenerate)


def truncated_exact_spectrum(
    h: FourierHamiltonian, j_max: int
) -> list[tuple[float, np.ndarray]]:
    heff = build_extended_hamiltonian(h, j_max)
    w, v = np.linalg.eigh(heff.matrix.entries)
    return [(float(w[i]), v[:, i]) for i in range(len(w))]


def central_pair(h: FourierHamiltonian, j_max: int) -> np.ndarray:
    """The two truncated eigenvalues nearest zero, folded and sorted."""
    w = np.array([e for e, _ in truncated_exact_spectrum(h, j_max)])
    pick = w[np.argsort(np.abs(w), kind="stable")[: h.dim_r]]
    return np.sort([fold_to_bz(x, h.omega) for x in pick])


def mode_fidelity(candidate: np.ndarray, modes: np.ndarray | QuasiEnergySpectrum) -> tuple[int, float]:
    """Best-matching column of ``modes`` and its squared overlap with ``candidate``."""
    if isinstance(modes, QuasiEnergySpectrum):
        modes = modes.modes
    candidate = np.asarray(candidate, dtype=complex)
    nrm = np.linalg.norm(candidate)
    if nrm == 0:
        raise ValueError("candidate has zero norm")
    if candidate.shape[0] != modes.shape[0]:
        raise ValueError(f"candidate dim {candidate.shape[0]} != mode dim {modes.shape[0]}")
    fid = np.abs(modes.conj().T @ (candidate / nrm)) ** 2
    best = int(np.argmax(fid))
    return best, float(min(fid[best], 1.0))
