import numpy as np
import pytest

from floquet_vqe.evolution import MonodromyOperator, trotter_monodromy
from floquet_vqe.fz1 import (
    FZ1Config,
    circular_mean_and_std,
    iqpe,
    loss_fz1,
    quasienergy_from_phase,
    solve_band_fz1,
    u3_ansatz,
    u3_matrix,
)
from floquet_vqe.oracle import exact_quasienergies
from floquet_vqe.qsim import HADAMARD, SIGMA_X, DenseOperator
from floquet_vqe.variational import DeflationSet, OptimizerConfig

from conftest import OMEGA, benchmark

T = 2 * np.pi / OMEGA


def synthetic(phi: float) -> MonodromyOperator:
    u = np.diag([np.exp(2j * np.pi * phi), 1.0])
    return MonodromyOperator(DenseOperator(u, "unitary"), 1, T)


@pytest.mark.parametrize(
    "angles, expected", [((0, 0, 0), np.eye(2)), ((np.pi, 0, np.pi), SIGMA_X), ((np.pi / 2, 0, np.pi), HADAMARD)]
)
def test_u3_matrix(angles, expected):
    np.testing.assert_allclose(u3_matrix(*angles), expected, atol=1e-15)


def test_loss_at_eigenstate_is_one():
    m = trotter_monodromy(benchmark(0.0), 100)
    assert loss_fz1([0, 0, 0], m) == pytest.approx(1.0, abs=1e-14)


def test_loss_at_plus_state():
    m = trotter_monodromy(benchmark(0.0), 100)
    assert loss_fz1([np.pi / 2, 0, np.pi], m) == pytest.approx(np.cos(T / 2) ** 2, abs=1e-12)
    assert np.cos(T / 2) ** 2 == pytest.approx(0.0955, abs=1e-4)


def test_loss_at_deflated_point():
    m = trotter_monodromy(benchmark(1.0), 100)
    defl = DeflationSet(5.0)
    x = [0.4, 1.1, -0.3]
    defl.add(u3_ansatz(), x)
    assert loss_fz1(x, m, defl) <= -4 + 1e-12


def test_sampled_loss_is_reproducible():
    m = trotter_monodromy(benchmark(1.0), 100)
    x = [0.4, 1.1, -0.3]
    a = loss_fz1(x, m, shots=1000, rng=np.random.default_rng(2))
    b = loss_fz1(x, m, shots=1000, rng=np.random.default_rng(2))
    assert a == b and abs(a - loss_fz1(x, m)) < 0.07


def test_iqpe_undriven_ground():
    m = trotter_monodromy(benchmark(0.0), 100)
    phi, record = iqpe(np.array([1, 0]), m, 5, 100, np.random.default_rng(0))
    assert abs(phi - 0.2) <= 1 / 32
    assert [r.k for r in record] == [5, 4, 3, 2, 1]


def test_iqpe_representable_phase_is_exact():
    hits = [iqpe(np.array([1, 0]), synthetic(0.15625), 5, 100, np.random.default_rng(s))[0] for s in range(10)]
    assert hits == [0.15625] * 10


def test_iqpe_zero_phase():
    for n in (1, 3, 6):
        assert iqpe(np.array([0, 1]), synthetic(0.15625), n, 10, np.random.default_rng(n))[0] == 0.0


def test_iqpe_tie_goes_to_zero():
    # phi = 1/4 on one bit gives p_one = 1/2 exactly, so many ties
    phi, record = iqpe(np.array([1, 0]), synthetic(0.25), 1, 2, np.random.default_rng(0))
    for r in record:
        if r.tie:
            assert r.bit == 0


def test_iqpe_validation():
    with pytest.raises(ValueError):
        iqpe(np.array([1, 0]), synthetic(0.1), 0, 10, np.random.default_rng(0))
    with pytest.raises(ValueError):
        iqpe(np.array([1, 0, 0]), synthetic(0.1), 3, 10, np.random.default_rng(0))


@pytest.mark.parametrize("phi, expected", [(0.2, -0.5), (0.8, 0.5), (0.0, 0.0)])
def test_quasienergy_from_phase(phi, expected):
    assert quasienergy_from_phase(phi, T, OMEGA) == pytest.approx(expected, abs=1e-12)


def test_quasienergy_from_phase_range():
    with pytest.raises(ValueError):
        quasienergy_from_phase(1.0, T, OMEGA)


def test_circular_statistics():
    mean, std = circular_mean_and_std(np.array([0.1, 0.1, 0.1]))
    assert mean == pytest.approx(0.1) and std == 0.0
    mean, _ = circular_mean_and_std(np.array([np.pi - 0.1, -np.pi + 0.1]))
    assert abs(abs(mean) - np.pi) < 1e-12
    _, std = circular_mean_and_std(np.random.default_rng(0).vonmises(0.0, 50.0, 20_000))
    assert std == pytest.approx(1 / np.sqrt(50), rel=0.05)


def test_solve_undriven():
    sols = solve_band_fz1(benchmark(0.0), FZ1Config(), np.random.default_rng(0))
    assert len(sols) == 2
    for s, target in zip(sols, (-0.5, 0.5)):
        assert abs(s.epsilon - target) <= OMEGA / 32 + 3 * s.epsilon_sigma
        assert s.converged


def test_solve_driven_matches_oracle():
    h = benchmark(1.0)
    oracle = exact_quasienergies(h)
    sols = solve_band_fz1(h, FZ1Config(), np.random.default_rng(1), oracle=oracle)
    for s in sols:
        assert abs(s.epsilon - s.epsilon_exact) <= OMEGA / 32 + 3 * s.epsilon_sigma
        assert s.epsilon_exact == oracle.energies[s.branch]
    assert abs(np.vdot(sols[0].state, sols[1].state)) ** 2 <= 0.05
    assert {s.branch for s in sols} == {0, 1}


def test_solve_exact_mode_uses_central_difference():
    sols = solve_band_fz1(benchmark(0.5), FZ1Config(shots=0), np.random.default_rng(2))
    assert all(s.diagnostics.scheme == "central-difference" for s in sols)
    assert all(s.fidelity_vs_oracle >= 0.999 for s in sols)


def test_solver_rejects_too_many_modes():
    with pytest.raises(ValueError):
        solve_band_fz1(benchmark(1.0), FZ1Config(), n_solutions=3)


def test_unconverged_is_flagged():
    # one iteration from one start cannot reach a return probability of 0.9
    cfg = FZ1Config(shots=0, optimizer=OptimizerConfig(restarts=1, max_iters=1), unconverged_threshold=0.999999)
    sols = solve_band_fz1(benchmark(2.0), cfg, np.random.default_rng(3), n_solutions=1)
    assert not sols[0].converged
