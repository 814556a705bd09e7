import numpy as np
import pytest

from svtune import ParameterVector, ParametricStateSpace
from svtune.pk_baseline import PKConfig, p_phase, pk_baseline_step, pk_stabilize


def tunable_shift(k0=0.5, a0=2.0):
    """A(K) = (a0 - K) I_2: spectral abscissa a0 - K."""
    params = ParameterVector([k0], [0.0], [10.0], [1.0])

    def eval_fn(K):
        return (a0 - K[0]) * np.eye(2), np.ones((2, 1))

    def jac_fn(K):
        return -np.eye(2)[None, :, :], np.zeros((1, 2, 1))

    return ParametricStateSpace(
        n_x=2, n_w=1, n_y=1, eval_fn=eval_fn, C=np.array([[1.0, 0.0]]),
        params=params, jac_fn=jac_fn,
    )


class TestPPhase:
    def test_stable_identity(self):
        state = p_phase(-np.eye(3), bisections=14)
        assert state.beta == pytest.approx(1.0, abs=1e-3)
        assert np.allclose(state.P, np.eye(3), atol=1e-5)
        # certificate holds: A^T P + P A + 2 beta P <= 0
        m = (-np.eye(3)).T @ state.P + state.P @ (-np.eye(3)) + 2 * state.beta * state.P
        assert np.max(np.linalg.eigvalsh(m)) <= 1e-8

    def test_unstable_identity_certifies_instability(self):
        state = p_phase(np.eye(2), bisections=14)
        assert state.beta < 0
        assert state.beta == pytest.approx(-1.0, abs=1e-3)

    def test_p_at_least_identity(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((4, 4)) - 3 * np.eye(4)
        state = p_phase(A)
        assert np.min(np.linalg.eigvalsh(state.P)) >= 1.0 - 1e-9


class TestPhases:
    def test_step_api_alternation(self):
        sys_ = tunable_shift()
        K = np.array([0.5])
        K, state = pk_baseline_step(sys_, K, "P")
        assert state.beta == pytest.approx(-(2.0 - 0.5), abs=0.05)
        K2, state2 = pk_baseline_step(sys_, K, "K", state=state)
        # moving K up shifts the abscissa down; the K-phase must exploit it
        assert K2[0] > K[0]

    def test_k_phase_requires_state(self):
        sys_ = tunable_shift()
        with pytest.raises(ValueError):
            pk_baseline_step(sys_, [0.5], "K")

    def test_unknown_phase(self):
        sys_ = tunable_shift()
        with pytest.raises(ValueError):
            pk_baseline_step(sys_, [0.5], "Q")


class TestPKStabilize:
    def test_stabilizes_linear_dependency(self):
        sys_ = tunable_shift(k0=0.5, a0=2.0)
        result = pk_stabilize(sys_, [0.5], PKConfig(outer_cap=25))
        assert result.status == "stabilized"
        assert sys_.at(result.K_final).poles().max_real < 0
        assert result.outer_iterations >= 1

    def test_already_stable(self):
        sys_ = tunable_shift(k0=5.0, a0=2.0)
        result = pk_stabilize(sys_, [5.0], PKConfig())
        assert result.status == "stabilized"
        assert result.outer_iterations == 0
