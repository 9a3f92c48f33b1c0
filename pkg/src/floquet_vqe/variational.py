"""Parameterized circuits, numeric gradients and conjugate-gradient maximization.

Both Floquet solvers share this machinery. Losses are plain callables of the
parameter vector; a loss that also subclasses :class:`SlottedLoss` exposes
each place the parameters enter the circuit, which is what the two-term
parameter-shift rule needs.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal, Protocol, Sequence

import numpy as np

from .qsim import (
    DenseOperator,
    RegisterShape,
    SimulationError,
    StateVector,
    apply_to_amplitudes,
    expm_hermitian,
    sample_bernoulli,
)

logger = logging.getLogger(__name__)

GradientScheme = Literal["central-difference", "parameter-shift"]
SHIFT = np.pi / 2


class Gate(Protocol):
    targets: tuple[int, ...]
    params: tuple[int, ...]
    shift_eligible: bool

    def matrix(self, values: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class Rotation:
    """exp(sign * i * theta * K) for a fixed hermitian generator K."""

    generator: DenseOperator
    targets: tuple[int, ...]
    param: int
    sign: int = 1

    def __post_init__(self) -> None:
        if self.generator.tag != "hermitian":
            raise SimulationError("rotation generator must be hermitian")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def params(self) -> tuple[int, ...]:
        return (self.param,)

    @property
    def shift_eligible(self) -> bool:
        w = self.generator.eigh[0]
        return bool(np.all(np.isclose(np.abs(w), 0.5, atol=1e-12)))

    def matrix(self, values: np.ndarray) -> np.ndarray:
        return expm_hermitian(self.generator, self.sign * values[0])


@dataclass(frozen=True)
class FixedGate:
    unitary: DenseOperator
    targets: tuple[int, ...]
    params: tuple[int, ...] = ()
    shift_eligible: bool = True

    def matrix(self, values: np.ndarray) -> np.ndarray:
        return self.unitary.entries


@dataclass(frozen=True)
class ParameterizedCircuit:
    """Gates in application order: ``gates[0]`` acts first."""

    shape: RegisterShape
    gates: tuple[Gate, ...]
    n_params: int

    def __post_init__(self) -> None:
        used = {p for g in self.gates for p in g.params}
        if used and (min(used) < 0 or max(used) >= self.n_params):
            raise ValueError(f"gate parameter indices {sorted(used)} exceed n_params={self.n_params}")

    @property
    def shift_eligible(self) -> bool:
        return all(g.shift_eligible for g in self.gates)

    def _check(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {theta.size}")
        return theta

    def _run(self, theta: np.ndarray, amps: np.ndarray) -> np.ndarray:
        dims = self.shape.dims
        for g in self.gates:
            amps = apply_to_amplitudes(amps, g.matrix(theta[list(g.params)]), g.targets, dims)
        return amps

    def bind(self, theta: Sequence[float]) -> DenseOperator:
        theta = self._check(theta)
        return DenseOperator(self._run(theta, np.eye(self.shape.total, dtype=complex)), "unitary")

    def prepare_amps(self, theta: Sequence[float]) -> np.ndarray:
        """U(theta)|0> as a raw amplitude array."""
        theta = self._check(theta)
        amps = np.zeros(self.shape.total, dtype=complex)
        amps[0] = 1.0
        return self._run(theta, amps)

    def prepare(self, theta: Sequence[float]) -> StateVector:
        return StateVector(self.shape, self.prepare_amps(theta))


@dataclass
class DeflationSet:
    """Previously found solutions, penalized with weight ``lam``."""

    lam: float
    states: list[np.ndarray] = field(default_factory=list)
    thetas: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"deflation weight must be positive, got {self.lam}")

    def __len__(self) -> int:
        return len(self.states)

    def add(self, circuit: ParameterizedCircuit, theta: Sequence[float]) -> None:
        theta = np.array(theta, dtype=float)
        self.thetas.append(theta)
        self.states.append(circuit.prepare_amps(theta))

    def overlaps(self, amps: np.ndarray) -> np.ndarray:
        """|<psi_beta|psi>|^2 for each stored solution."""
        if not self.states:
            return np.zeros(0)
        prev = np.array(self.states)
        if prev.shape[1] != amps.shape[0]:
            raise SimulationError("deflated solutions live on a different register")
        return np.minimum(np.abs(prev.conj() @ amps) ** 2, 1.0)


def check_penalty_strength(lam: float, loss_width: float, what: str = "loss") -> bool:
    """Warn when lam is below the spread of the loss it has to dominate."""
    if lam < loss_width:
        warnings.warn(
            f"deflation weight {lam:g} is below the {what} spectral width {loss_width:.4g}; "
            "higher branches may not be reachable",
            RuntimeWarning,
            stacklevel=2,
        )
        return False
    return True


def penalty_from_overlaps(
    overlaps: np.ndarray, lam: float, shots: int, rng: np.random.Generator | None
) -> float:
    if shots == 0:
        return float(lam * overlaps.sum())
    return float(lam * sum(sample_bernoulli(p, shots, rng)[0] for p in overlaps))


def deflation_penalty(
    circuit: ParameterizedCircuit,
    theta: Sequence[float],
    deflation: DeflationSet,
    shots: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """lam * sum_beta |<0|U_beta^dag U_theta|0>|^2, sampled when shots > 0."""
    if not len(deflation):
        return 0.0
    return penalty_from_overlaps(deflation.overlaps(circuit.prepare_amps(theta)), deflation.lam, shots, rng)


class SlottedLoss:
    """A loss in which the parameter vector enters through ``n_slots`` separate sub-circuits.

    Subclasses implement :meth:`evaluate_slots`; calling the loss feeds the same
    vector to every slot. Parameter-shift gradients shift one slot at a time.
    """

    n_slots: int = 1
    shift_eligible: bool = False

    def evaluate_slots(self, slots: Sequence[np.ndarray]) -> float:
        raise NotImplementedError

    def __call__(self, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        return self.evaluate_slots([theta] * self.n_slots)


@dataclass
class OptimizerConfig:
    max_iters: int = 200
    grad_norm_tol: float = 1e-5
    fd_step: float = 1e-3
    # finite-difference step used when the loss is shot-sampled
    fd_step_sampled: float = 0.1
    restarts: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("max_iters", "grad_norm_tol", "fd_step", "fd_step_sampled", "restarts"):
            if not getattr(self, name) > 0:
                raise ValueError(f"OptimizerConfig.{name} must be positive")
        if self.seed < 0:
            raise ValueError("OptimizerConfig.seed must be non-negative")


def gradient(
    loss: Callable[[np.ndarray], float],
    theta: Sequence[float],
    scheme: GradientScheme = "central-difference",
    config: OptimizerConfig | None = None,
    step: float | None = None,
) -> np.ndarray:
    """Gradient of ``loss`` at ``theta``.

    ``central-difference`` uses (L(x + h e_i) - L(x - h e_i)) / 2h with
    h = ``step`` or ``config.fd_step``. ``parameter-shift`` requires a
    :class:`SlottedLoss` whose circuits only contain gates with generator
    eigenvalues +-1/2, and sums the pi/2 two-term rule over slots.
    """
    theta = np.asarray(theta, dtype=float)
    config = config or OptimizerConfig()
    grad = np.zeros_like(theta)
    if scheme == "central-difference":
        h = config.fd_step if step is None else step
        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = h
            grad[i] = (loss(theta + e) - loss(theta - e)) / (2 * h)
        return grad
    if scheme != "parameter-shift":
        raise ValueError(f"unknown gradient scheme {scheme!r}")
    if not hasattr(loss, "evaluate_slots") or not getattr(loss, "shift_eligible", False):
        raise ValueError("parameter-shift needs a slotted loss built from +-1/2-eigenvalue generators")
    for s in range(loss.n_slots):
        for i in range(theta.size):
            plus = [theta] * loss.n_slots
            minus = list(plus)
            e = np.zeros_like(theta)
            e[i] = SHIFT
            plus[s], minus[s] = theta + e, theta - e
            grad[i] += (loss.evaluate_slots(plus) - loss.evaluate_slots(minus)) / 2
    return grad


@dataclass
class RestartRecord:
    initial_loss: float
    final_loss: float
    iterations: int
    grad_norm: float
    converged: bool


@dataclass
class OptimizeDiagnostics:
    restarts: list[RestartRecord]
    best_restart: int
    evaluations: int
    scheme: str
    sampled: bool

    @property
    def converged(self) -> bool:
        return self.restarts[self.best_restart].converged


class _Evaluator:
    """Counts loss evaluations and optionally replays a random stream per batch.

    With ``crn_rng`` set, every evaluation inside one batch (a gradient or a
    line search) starts from the same generator state, so the points being
    compared see common random numbers. Each evaluation still has the exact
    shot-noise marginal.
    """

    def __init__(self, loss: Callable[[np.ndarray], float], crn_rng: np.random.Generator | None = None) -> None:
        self.loss = loss
        self.calls = 0
        self.crn_rng = crn_rng
        self._state = None
        self.n_slots = getattr(loss, "n_slots", 1)
        self.shift_eligible = getattr(loss, "shift_eligible", False)

    def new_batch(self) -> None:
        if self.crn_rng is not None:
            self.crn_rng.random()
            self._state = self.crn_rng.bit_generator.state

    def _replay(self) -> None:
        self.calls += 1
        if self._state is not None:
            self.crn_rng.bit_generator.state = self._state

    def __call__(self, theta: np.ndarray) -> float:
        self._replay()
        return float(self.loss(theta))

    def evaluate_slots(self, slots: Sequence[np.ndarray]) -> float:
        self._replay()
        return float(self.loss.evaluate_slots(slots))


ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
ARMIJO_MAX_HALVINGS = 40
SAMPLED_STEPS = (1.0, 0.5, 0.25, 0.125)
SAMPLED_MAX_STALLS = 6
SAMPLED_MIN_BASE = 1e-7
# sampled runs are polished from the best start with these fractions of fd_step_sampled
SAMPLED_POLISH = (0.25, 0.0625)


def _armijo(loss, theta, f, slope, d, alpha0):
    alpha = alpha0
    for _ in range(ARMIJO_MAX_HALVINGS):
        f_new = loss(theta + alpha * d)
        if f_new >= f + ARMIJO_C * alpha * slope:
            return alpha, f_new
        alpha *= ARMIJO_SHRINK
    return 0.0, f


def _schedule(loss, theta, f, d, alpha0):
    trials = [(loss(theta + s * alpha0 * d), s * alpha0) for s in SAMPLED_STEPS]
    f_best, alpha = max(trials)
    return (alpha, f_best) if f_best > f else (0.0, f)


def _cg_ascent(loss, grad_fn, theta, config: OptimizerConfig, sampled: bool) -> tuple[np.ndarray, float, RestartRecord]:
    """Polak-Ribiere (PR+) nonlinear conjugate gradient, maximizing.

    In sampled mode the trial schedule is scaled by an adaptive base step that
    drops one schedule octave after a failed search and doubles after a
    success, so steps can shrink below the schedule's smallest entry.
    """
    loss.new_batch()
    f = loss(theta)
    f0 = f
    g = grad_fn(theta)
    d = g.copy()
    base = 1.0
    stalls = 0
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm < config.grad_norm_tol:
            converged = True
            break
        slope = float(g @ d)
        if slope <= 0:
            d, slope = g.copy(), gnorm**2
        cap = min(1.0, np.pi / float(np.max(np.abs(d))))
        if sampled:
            loss.new_batch()
            f = loss(theta)
            alpha, f_new = _schedule(loss, theta, f, d, base * cap)
        else:
            alpha, f_new = _armijo(loss, theta, f, slope, d, cap)
        if alpha == 0.0 and not sampled and not np.array_equal(d, g):
            # conjugate direction failed: fall back to steepest ascent once
            d = g.copy()
            alpha, f_new = _armijo(loss, theta, f, gnorm**2, d, min(1.0, np.pi / float(np.max(np.abs(d)))))
        if alpha == 0.0:
            if not sampled:
                break
            stalls += 1
            base *= SAMPLED_STEPS[-1]
            d = g.copy()
            if stalls >= SAMPLED_MAX_STALLS or base < SAMPLED_MIN_BASE:
                break
            continue
        stalls = 0
        if sampled:
            base = min(1.0, 2 * alpha / cap)
        theta = theta + alpha * d
        f = f_new
        loss.new_batch()
        g_new = grad_fn(theta)
        beta = max(0.0, float(g_new @ (g_new - g)) / max(gnorm**2, 1e-300))
        d = g_new + beta * d
        g = g_new
    gnorm = float(np.linalg.norm(g))
    converged = converged or gnorm < config.grad_norm_tol
    return theta, f, RestartRecord(f0, f, it, gnorm, converged)


def maximize(
    loss: Callable[[np.ndarray], float],
    n_params: int,
    config: OptimizerConfig | None = None,
    rng: np.random.Generator | None = None,
    *,
    scheme: GradientScheme = "central-difference",
    sampled: bool = False,
    crn_rng: np.random.Generator | None = None,
    initial_points: Sequence[Sequence[float]] | None = None,
) -> tuple[np.ndarray, float, OptimizeDiagnostics]:
    """Multi-start nonlinear CG ascent of ``loss`` on the parameter torus.

    Starts are drawn uniformly from [0, 2 pi)^n_params (``config.restarts`` of
    them, after any explicit ``initial_points``). Exact losses use an Armijo
    backtracking line search; ``sampled=True`` switches to a fixed trial-step
    schedule and the larger finite-difference step. ``crn_rng`` names the
    generator a sampled loss draws from, enabling common random numbers. The
    best final iterate over all starts is returned.
    """
    config = config or OptimizerConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    ev = _Evaluator(loss, crn_rng if sampled else None)
    h = config.fd_step_sampled if sampled else config.fd_step

    def grad_fn(x: np.ndarray, step: float = h) -> np.ndarray:
        return gradient(ev, x, scheme, config, step=step)

    starts = [np.asarray(p, dtype=float) for p in (initial_points or [])]
    starts += [rng.uniform(0, 2 * np.pi, n_params) for _ in range(config.restarts)]

    best_theta, best_f, records, best_idx = None, -np.inf, [], 0
    for k, x0 in enumerate(starts):
        theta, f, rec = _cg_ascent(ev, grad_fn, x0, config, sampled)
        records.append(rec)
        logger.debug("restart %d: %.6g -> %.6g in %d iterations", k, rec.initial_loss, f, rec.iterations)
        if f > best_f:
            best_theta, best_f, best_idx = theta, f, k
    if sampled and scheme == "central-difference":
        # shot noise shrinks near an eigenstate, so a smaller stencil pays off there
        for frac in SAMPLED_POLISH:
            theta, f, rec = _cg_ascent(
                ev, lambda x, s=h * frac: grad_fn(x, s), best_theta, config, sampled
            )
            rec = RestartRecord(records[best_idx].initial_loss, f, records[best_idx].iterations + rec.iterations,
                                rec.grad_norm, rec.converged)
            ev.new_batch()
            if ev(theta) >= ev(best_theta):
                best_theta, best_f, records[best_idx] = theta, f, rec
    diag = OptimizeDiagnostics(records, best_idx, ev.calls, scheme, sampled)
    return best_theta, best_f, diag
