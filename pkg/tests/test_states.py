import numpy as np
import pytest

from tsa_storage.states import (LinearStateSystem, decay_powers, inter_sequence,
                                inter_transition, superpose)


def test_inter_transition_examples():
    assert inter_transition(1.0, 24) == 1.0
    direct = 1.0
    for _ in range(24):
        direct *= 0.999
    assert inter_transition(0.999, 24) == pytest.approx(direct, rel=1e-14)
    # printed reference value, good to its last digit
    assert inter_transition(0.999, 24) == pytest.approx(0.976275, abs=2e-6)
    np.testing.assert_array_equal(inter_transition(np.eye(3), 7), np.eye(3))


def test_inter_transition_order_and_errors():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(4, 2, 2))
    np.testing.assert_allclose(inter_transition(A), A[3] @ A[2] @ A[1] @ A[0])
    with pytest.raises(ValueError):
        inter_transition(rng.normal(size=(3, 2, 3)))
    with pytest.raises(ValueError):
        inter_transition(0.5)
    with pytest.raises(ValueError):
        inter_transition(A, 5)


def test_decay_powers():
    P = decay_powers(0.9, 3)
    np.testing.assert_allclose(P[:, 0, 0], [1, 0.9, 0.81, 0.729])


def test_state_system_validation():
    with pytest.raises(ValueError):
        LinearStateSystem(np.eye(2), np.zeros((3, 2)), x_lb=1.0, x_ub=0.0)
    with pytest.raises(ValueError):
        LinearStateSystem(np.full((3, 1, 1), np.inf), np.zeros(3))
    with pytest.raises(ValueError):
        LinearStateSystem(np.eye(2), np.zeros((3, 3)))


def test_series_expansion_equals_propagation():
    rng = np.random.default_rng(1)
    sys_ = LinearStateSystem(rng.uniform(0.5, 1.0, (6, 2, 2)) / 2, rng.normal(size=(6, 2)))
    np.testing.assert_allclose(sys_.intra_end_state(), sys_.intra_states()[-1], atol=1e-12)


@pytest.mark.parametrize("dim", [1, 3])
def test_superposition_matches_direct_simulation(dim):
    rng = np.random.default_rng(dim)
    n_g, n_k, n_i = 5, 3, 9
    typical = [LinearStateSystem(rng.uniform(-0.6, 0.6, (n_g, dim, dim)) + np.eye(dim) * 0.3,
                                 rng.normal(size=(n_g, dim))) for _ in range(n_k)]
    assignment = rng.integers(0, n_k, n_i)
    x0 = rng.normal(size=dim)
    inter = inter_sequence(typical, assignment, x0)
    states = superpose(typical, assignment, inter)
    x = x0.copy()
    for i, k in enumerate(assignment):
        direct = typical[k].propagate(x)
        np.testing.assert_allclose(states[i], direct, atol=1e-10)
        x = direct[-1]
        np.testing.assert_allclose(inter[i + 1], x, atol=1e-10)


def test_lossless_inter_is_running_sum():
    typical = [LinearStateSystem(1.0, np.array([1.0, -0.5])),
               LinearStateSystem(1.0, np.array([-1.0, 0.0]))]
    inter = inter_sequence(typical, [0, 0, 1, 0], np.zeros(1))
    np.testing.assert_allclose(inter[:, 0], [0, 0.5, 1.0, 0.0, 0.5])
