"""Dense statevector simulation over mixed-dimension registers.

Subsystem 0 is the slowest index of the flat amplitude vector, i.e. the
leftmost factor of every tensor product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10

Tag = Literal["hermitian", "unitary", "general"]


class SimulationError(ValueError):
    """Raised on shape, dimension or operator-tag violations."""


@dataclass(frozen=True)
class RegisterShape:
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise SimulationError("register needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise SimulationError(f"subsystem dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def flat_index(self, digits: Sequence[int]) -> int:
        """Mixed-radix index with ``dims[0]`` the slowest digit."""
        return int(np.ravel_multi_index(tuple(digits), self.dims))


@dataclass(frozen=True)
class DenseOperator:
    """Square complex matrix with a checked tag."""

    entries: np.ndarray
    tag: Tag = "general"

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SimulationError(f"operator must be square, got shape {m.shape}")
        if self.tag == "hermitian":
            resid = np.max(np.abs(m - m.conj().T), initial=0.0)
            if resid > HERMITIAN_TOL:
                raise SimulationError(f"operator tagged hermitian has residual {resid:.3e}")
        elif self.tag == "unitary":
            resid = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0)
            if resid > UNITARY_TOL:
                raise SimulationError(f"operator tagged unitary has residual {resid:.3e}")
        elif self.tag != "general":
            raise SimulationError(f"unknown tag {self.tag!r}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached eigendecomposition; only defined for hermitian operators."""
        if self.tag != "hermitian":
            raise SimulationError("eigendecomposition requires a hermitian operator")
        return np.linalg.eigh(self.entries)

    def __matmul__(self, other: DenseOperator) -> DenseOperator:
        return DenseOperator(self.entries @ other.entries, "general")

    def dagger(self) -> DenseOperator:
        return DenseOperator(self.entries.conj().T, self.tag)


@dataclass(frozen=True)
class StateVector:
    shape: RegisterShape
    amps: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != self.shape.total:
            raise SimulationError(
                f"amplitude length {amps.size} does not match register dimension {self.shape.total}"
            )
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def overlap(self, other: StateVector) -> complex:
        """<self|other>"""
        return complex(np.vdot(self.amps, other.amps))


def _as_matrix(op: DenseOperator | np.ndarray) -> np.ndarray:
    return op.entries if isinstance(op, DenseOperator) else np.asarray(op, dtype=complex)


def new_zero_state(shape: RegisterShape | Sequence[int]) -> StateVector:
    if not isinstance(shape, RegisterShape):
        shape = RegisterShape(tuple(shape))
    amps = np.zeros(shape.total, dtype=complex)
    amps[0] = 1.0
    return StateVector(shape, amps)


def apply_operator(
    state: StateVector, op: DenseOperator | np.ndarray, targets: Sequence[int]
) -> StateVector:
    """Apply ``op`` to the listed subsystems, identity elsewhere.

    The operator's own tensor order follows ``targets``: ``targets[0]`` is its
    slowest factor.
    """
    dims = state.shape.dims
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise SimulationError(f"repeated target in {targets}")
    if any(t < 0 or t >= len(dims) for t in targets):
        raise SimulationError(f"target out of range in {targets} for {len(dims)} subsystems")
    m = _as_matrix(op)
    sub = [dims[t] for t in targets]
    if m.shape != (int(np.prod(sub)),) * 2:
        raise SimulationError(f"operator of shape {m.shape} does not act on dims {sub}")
    return StateVector(state.shape, apply_to_amplitudes(state.amps, m, targets, dims))


def apply_to_amplitudes(
    amps: np.ndarray, m: np.ndarray, targets: Sequence[int], dims: Sequence[int]
) -> np.ndarray:
    """Unchecked kernel behind :func:`apply_operator`.

    ``amps`` may carry one trailing batch axis, e.g. the columns of a matrix.
    """
    dims = tuple(dims)
    targets = list(targets)
    if targets == list(range(len(dims))):
        return m @ amps
    batch = amps.shape[1:]
    k = len(targets)
    psi = amps.reshape(dims + batch)
    # bring targets to the front, contract, then restore the axis order
    psi = np.moveaxis(psi, targets, list(range(k)))
    front = psi.shape[:k]
    psi = (m @ psi.reshape(m.shape[1], -1)).reshape(front + psi.shape[k:])
    psi = np.moveaxis(psi, list(range(k)), targets)
    return psi.reshape(amps.shape)


def expectation(state: StateVector, obs: DenseOperator) -> float:
    if obs.tag != "hermitian":
        raise SimulationError("expectation requires a hermitian observable")
    if obs.dim != state.shape.total:
        raise SimulationError(f"observable dim {obs.dim} != register dim {state.shape.total}")
    val = np.vdot(state.amps, obs.entries @ state.amps)
    if abs(val.imag) > 1e-10:
        raise SimulationError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def projector_probability(state: StateVector, flat_index: int) -> float:
    if not 0 <= flat_index < state.shape.total:
        raise SimulationError(f"basis index {flat_index} out of range")
    return float(min(1.0, abs(state.amps[flat_index]) ** 2))


def sample_bernoulli(p: float, shots: int, rng: np.random.Generator) -> tuple[float, float]:
    """Frequency estimate of a two-outcome measurement and its standard error."""
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    p = min(max(p, 0.0), 1.0)
    # explicit uniforms keep nearby probabilities coupled under a shared stream
    p_hat = np.count_nonzero(rng.random(shots) < p) / shots
    return p_hat, float(np.sqrt(p_hat * (1.0 - p_hat) / shots))


def sample_projector(
    state: StateVector, flat_index: int, shots: int, rng: np.random.Generator
) -> tuple[float, float]:
    return sample_bernoulli(projector_probability(state, flat_index), shots, rng)


def sample_spectrum(
    amps: np.ndarray, obs: DenseOperator, shots: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Spectral sampling of ``obs`` on raw amplitudes; shots=0 gives the exact value."""
    if shots == 0:
        val = np.vdot(amps, obs.entries @ amps)
        return float(val.real), 0.0
    if shots < 0:
        raise SimulationError("shots must be >= 0")
    evals, evecs = obs.eigh
    probs = np.abs(evecs.conj().T @ amps) ** 2
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    outcome = np.minimum(np.searchsorted(cdf, rng.random(shots), side="right"), len(evals) - 1)
    counts = np.bincount(outcome, minlength=len(evals))
    mean = float(counts @ evals) / shots
    var = float(counts @ (evals - mean) ** 2) / shots
    return mean, float(np.sqrt(var / shots))


def sample_observable(
    state: StateVector, obs: DenseOperator, shots: int, rng: np.random.Generator | None = None
) -> tuple[float, float]:
    """Shot-noise estimate of <obs> by sampling its eigenbasis.

    ``shots == 0`` selects exact-expectation mode and returns
    ``(expectation(state, obs), 0.0)``.
    """
    if obs.tag != "hermitian":
        raise SimulationError("sampling requires a hermitian observable")
    if shots == 0:
        return expectation(state, obs), 0.0
    if obs.dim != state.shape.total:
        raise SimulationError(f"observable dim {obs.dim} != register dim {state.shape.total}")
    if rng is None:
        raise SimulationError("sampled mode needs an rng")
    return sample_spectrum(state.amps, obs, shots, rng)


def expm_hermitian(gen: DenseOperator, scale: float) -> np.ndarray:
    """exp(i * scale * gen) as a raw array, reusing the cached eigenbasis."""
    w, v = gen.eigh
    return (v * np.exp(1j * scale * w)) @ v.conj().T


def matrix_exponential(gen: DenseOperator, scale: float) -> DenseOperator:
    """Return exp(i * scale * gen) for a hermitian generator."""
    if gen.tag != "hermitian":
        raise SimulationError("matrix_exponential requires a hermitian generator")
    return DenseOperator(expm_hermitian(gen, scale), "unitary")


# Common single-qubit matrices
I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
