import numpy as np
import pytest

from floquet_vqe.evolution import trotter_monodromy
from floquet_vqe.fz1 import FZ1Loss, u3_ansatz
from floquet_vqe.fz2 import build_vha
from floquet_vqe.qsim import SIGMA_X, SIGMA_Y, DenseOperator, RegisterShape
from floquet_vqe.variational import (
    DeflationSet,
    OptimizerConfig,
    ParameterizedCircuit,
    Rotation,
    check_penalty_strength,
    deflation_penalty,
    gradient,
    maximize,
)

from conftest import benchmark


def cos0(theta):
    return float(np.cos(theta[0]))


def test_bind_u3():
    c = u3_ansatz()
    np.testing.assert_allclose(c.bind([0, 0, 0]).entries, np.eye(2), atol=0)
    np.testing.assert_allclose(c.bind([np.pi, 0, np.pi]).entries, SIGMA_X, atol=1e-15)


def test_bind_vha_identity():
    np.testing.assert_allclose(build_vha(1).bind(np.zeros(7)).entries, np.eye(6), atol=1e-15)


def test_bind_checks_length():
    with pytest.raises(ValueError):
        u3_ansatz().bind([0.0, 1.0])


def test_gate_parameter_indices_checked():
    g = Rotation(DenseOperator(SIGMA_Y / 2, "hermitian"), (0,), 3)
    with pytest.raises(ValueError):
        ParameterizedCircuit(RegisterShape((2,)), (g,), 2)


def test_rotation_shift_eligibility():
    half = Rotation(DenseOperator(SIGMA_Y / 2, "hermitian"), (0,), 0)
    full = Rotation(DenseOperator(SIGMA_Y, "hermitian"), (0,), 0)
    assert half.shift_eligible and not full.shift_eligible


def test_central_difference_examples():
    assert abs(gradient(cos0, [0.0])[0]) <= 1e-6
    h = OptimizerConfig().fd_step
    assert gradient(cos0, [np.pi / 2])[0] == pytest.approx(-1.0, abs=h**2)


def test_parameter_shift_matches_central_difference(rng):
    m = trotter_monodromy(benchmark(1.0), 100)
    defl = DeflationSet(5.0)
    defl.add(u3_ansatz(), rng.uniform(0, 2 * np.pi, 3))
    loss = FZ1Loss(u3_ansatz(), m, defl)
    for _ in range(5):
        x = rng.uniform(0, 2 * np.pi, 3)
        ps = gradient(loss, x, "parameter-shift")
        cd = gradient(loss, x, "central-difference")
        assert np.max(np.abs(ps - cd)) <= 1e-4


def test_parameter_shift_needs_slotted_loss():
    with pytest.raises(ValueError):
        gradient(cos0, [0.3], "parameter-shift")
    with pytest.raises(ValueError):
        gradient(cos0, [0.3], "forward")


def test_maximize_quadratic_bowl(rng):
    def bowl(x):
        return -float(np.sum((x - 1.0) ** 2))

    theta, f, diag = maximize(bowl, 4, OptimizerConfig(restarts=2), rng)
    np.testing.assert_allclose(theta, np.ones(4), atol=1e-4)
    assert diag.converged and f > -1e-8


def test_maximize_fz1_reaches_one():
    loss = FZ1Loss(u3_ansatz(), trotter_monodromy(benchmark(0.0), 100))
    _, f, _ = maximize(loss, 3, OptimizerConfig(restarts=2), np.random.default_rng(0))
    assert f >= 1 - 1e-6


def test_more_restarts_never_hurt():
    loss = FZ1Loss(u3_ansatz(), trotter_monodromy(benchmark(1.0), 100))
    cfg8, cfg1 = OptimizerConfig(restarts=8, max_iters=3), OptimizerConfig(restarts=1, max_iters=3)
    # the single start is the first of the eight
    f8 = maximize(loss, 3, cfg8, np.random.default_rng(5))[1]
    f1 = maximize(loss, 3, cfg1, np.random.default_rng(5))[1]
    assert f8 >= f1


def test_maximize_sampled_mode_is_reproducible():
    m = trotter_monodromy(benchmark(1.0), 100)
    results = []
    for _ in range(2):
        loss_rng = np.random.default_rng(9)
        loss = FZ1Loss(u3_ansatz(), m, shots=1000, rng=loss_rng)
        results.append(maximize(loss, 3, OptimizerConfig(restarts=2), np.random.default_rng(4),
                                scheme="parameter-shift", sampled=True, crn_rng=loss_rng)[0])
    np.testing.assert_array_equal(*results)


def test_deflation_penalty_examples(rng):
    c = u3_ansatz()
    empty = DeflationSet(5.0)
    assert deflation_penalty(c, [0.1, 0.2, 0.3], empty) == 0.0
    defl = DeflationSet(5.0)
    defl.add(c, [0.0, 0.0, 0.0])
    assert deflation_penalty(c, [0.0, 0.0, 0.0], defl) == pytest.approx(5.0)
    flipped = [np.pi, 0.0, 0.0]  # |1>, orthogonal to |0>
    assert deflation_penalty(c, flipped, defl) == pytest.approx(0.0, abs=1e-30)
    assert deflation_penalty(c, flipped, defl, shots=1000, rng=rng) == 0.0
    with pytest.raises(ValueError):
        DeflationSet(0.0)


def test_penalty_strength_warning():
    with pytest.warns(RuntimeWarning):
        assert not check_penalty_strength(5.0, 8.75, "H_eff^2")
    assert check_penalty_strength(5.0, 1.0)


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(seed=-1)
