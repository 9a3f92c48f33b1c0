"""Time-periodic Hamiltonians as finite Fourier series and their extended-space form.

``H(t) = sum_j exp(-i j omega t) H_j``.  The truncated extended (Sambe)
matrix uses the basis ``|j>_T (x) |s>_R`` with the harmonic index as the
slow factor: flat row ``(j + j_max) * dim_r + s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qsim import HERMITIAN_TOL, SIGMA_X, SIGMA_Z, DenseOperator


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class FourierHamiltonian:
    components: dict[int, np.ndarray]
    omega: float
    dim_r: int = field(default=0)

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ModelError(f"omega must be positive, got {self.omega}")
        comps = {int(j): np.array(h, dtype=complex) for j, h in self.components.items()}
        dims = {h.shape for h in comps.values()}
        dim_r = self.dim_r or (next(iter(dims))[0] if dims else 0)
        if dim_r < 1 or dims - {(dim_r, dim_r)}:
            raise ModelError(f"components must all be {dim_r}x{dim_r}, got {sorted(dims)}")
        for j, h in comps.items():
            partner = comps.get(-j, np.zeros_like(h))
            if np.max(np.abs(partner - h.conj().T)) > HERMITIAN_TOL:
                raise ModelError(f"H_{{-{j}}} is not the adjoint of H_{{{j}}}")
            h.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "dim_r", dim_r)

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    def component(self, j: int) -> np.ndarray:
        h = self.components.get(j)
        return np.zeros((self.dim_r, self.dim_r), dtype=complex) if h is None else h


@dataclass(frozen=True)
class ExtendedHamiltonian:
    matrix: DenseOperator
    j_max: int
    omega: float
    dim_r: int

    @property
    def dim_t(self) -> int:
        return 2 * self.j_max + 1

    def block(self, j: int, k: int) -> np.ndarray:
        d = self.dim_r
        r, c = (j + self.j_max) * d, (k + self.j_max) * d
        return self.matrix.entries[r : r + d, c : c + d]


def driven_spin_half(delta: float, amplitude: float, omega: float) -> FourierHamiltonian:
    """-delta/2 sigma_z + amplitude/2 cos(omega t) sigma_x."""
    if not omega > 0:
        raise ModelError(f"omega must be positive, got {omega}")
    drive = (amplitude / 4) * SIGMA_X
    return FourierHamiltonian({0: -(delta / 2) * SIGMA_Z, 1: drive, -1: drive.copy()}, omega)


def evaluate_at_time(h: FourierHamiltonian, t: float) -> DenseOperator:
    m = sum(np.exp(-1j * j * h.omega * t) * hj for j, hj in h.components.items())
    m = np.asarray(m, dtype=complex)
    # symmetrize away rounding so the hermitian tag always holds
    return DenseOperator((m + m.conj().T) / 2, "hermitian")


def evaluate_many(h: FourierHamiltonian, times: np.ndarray) -> np.ndarray:
    """Stack of H(t) for an array of times, shape (len(times), dim_r, dim_r)."""
    times = np.asarray(times, dtype=float)
    out = np.zeros((times.size, h.dim_r, h.dim_r), dtype=complex)
    for j, hj in h.components.items():
        out += np.exp(-1j * j * h.omega * times)[:, None, None] * hj
    return (out + np.conj(np.swapaxes(out, 1, 2))) / 2


def build_extended_hamiltonian(h: FourierHamiltonian, j_max: int) -> ExtendedHamiltonian:
    """Truncated matrix with blocks ``H_{j-k} - j omega delta_jk`` for |j|,|k| <= j_max."""
    if j_max < 0:
        raise ModelError(f"j_max must be >= 0, got {j_max}")
    d = h.dim_r
    n = 2 * j_max + 1
    m = np.zeros((n * d, n * d), dtype=complex)
    harmonics = range(-j_max, j_max + 1)
    for j in harmonics:
        r = (j + j_max) * d
        for k in harmonics:
            c = (k + j_max) * d
            m[r : r + d, c : c + d] = h.component(j - k)
        m[r : r + d, r : r + d] -= j * h.omega * np.eye(d)
    return ExtendedHamiltonian(DenseOperator(m, "hermitian"), j_max, h.omega, d)
