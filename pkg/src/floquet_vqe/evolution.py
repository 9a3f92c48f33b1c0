"""One-period propagator by midpoint time slicing, and its controlled powers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FourierHamiltonian, evaluate_many
from .qsim import DenseOperator


@dataclass(frozen=True)
class MonodromyOperator:
    u_t: DenseOperator
    steps: int
    period: float

    @property
    def dim(self) -> int:
        return self.u_t.dim


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """Return mats[-1] @ ... @ mats[0] by pairwise batched reduction."""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            tail = mats[-1:]
            mats = mats[:-1]
        else:
            tail = None
        mats = mats[1::2] @ mats[0::2]
        if tail is not None:
            mats = np.concatenate([mats, tail])
    return mats[0]


def trotter_monodromy(h: FourierHamiltonian, steps: int) -> MonodromyOperator:
    """U_T as the time-ordered product of exact per-slice exponentials.

    Each slice of width dt = T/steps uses H evaluated at its midpoint, giving
    a second-order scheme. No global phase is removed.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    period = h.period
    dt = period / steps
    mids = (np.arange(steps) + 0.5) * dt
    w, v = np.linalg.eigh(evaluate_many(h, mids))
    slices = (v * np.exp(-1j * dt * w)[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))
    return MonodromyOperator(DenseOperator(_ordered_product(slices), "unitary"), steps, period)


def unitary_power(u: np.ndarray, p: int) -> np.ndarray:
    """u ** (2 ** p) by repeated squaring."""
    out = np.array(u, dtype=complex)
    for _ in range(p):
        out = out @ out
    return out


def controlled_power(m: MonodromyOperator, p: int) -> DenseOperator:
    """|0><0| (x) 1 + |1><1| (x) U_T^(2^p) on dims [2, dim_r], ancilla first."""
    if p < 0:
        raise ValueError(f"power exponent must be >= 0, got {p}")
    d = m.dim
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, :d] = np.eye(d)
    out[d:, d:] = unitary_power(m.u_t.entries, p)
    return DenseOperator(out, "unitary")
