import numpy as np
import pytest

from svtune import (
    Alg1Config,
    ParameterVector,
    ParametricStateSpace,
    SetupError,
    VerticalLine,
    compute_poles,
    detect_crossing,
    minimize_gamma,
    select_delta,
    stabilize,
)
from svtune.curves import ParametricCurve
from svtune.sample_systems import scalar_gain_lag, scalar_lag, shifted_pole
from svtune.systems import PoleSet
from svtune.tuner import initial_trust_radii, select_delta_detailed


class TestMinimizeGamma:
    def test_analytic_scalar_case(self):
        # Gamma(K) = 1/K on the imaginary axis, box [1, 2]
        sys_ = scalar_lag()
        K, rep = minimize_gamma(sys_, [1.0], VerticalLine(0.0), Alg1Config())
        assert abs(K[0] - 2.0) < 1e-3
        assert abs(rep.gamma_final - 0.5) < 1e-3
        assert rep.status == "converged"
        rep.check_monotone()

    def test_zero_sensitivity_converges_immediately(self):
        params = ParameterVector([1.0], [0.5, ], [2.0], [0.5])

        def eval_fn(K):
            return np.array([[-1.0]]), np.array([[1.0]])

        def jac_fn(K):
            return np.zeros((1, 1, 1)), np.zeros((1, 1, 1))

        sys_ = ParametricStateSpace(
            n_x=1, n_w=1, n_y=1, eval_fn=eval_fn, C=np.array([[1.0]]),
            params=params, jac_fn=jac_fn,
        )
        K, rep = minimize_gamma(sys_, [1.0], VerticalLine(0.0), Alg1Config(k_max=10))
        assert rep.status == "converged"
        assert len(rep.inner) <= 3
        assert np.allclose(K, [1.0])

    def test_rejection_shrinks_trust_by_alpha(self):
        sys_ = scalar_gain_lag()
        cfg = Alg1Config(alpha=0.5, initial_trust=np.array([1.0]), k_max=8)
        K, rep = minimize_gamma(sys_, [0.0], VerticalLine(0.0), cfg)
        first = rep.inner[0]
        assert not first.accepted
        assert first.trust_radii[0] == pytest.approx(0.5, abs=0.0)
        assert first.K_after[0] == 0.0
        # every rejection multiplies by exactly alpha
        prev = 1.0
        for rec in rep.inner:
            if not rec.accepted:
                assert rec.trust_radii[0] == pytest.approx(prev * 0.5, rel=0, abs=0.0)
            prev = rec.trust_radii[0]
        # and the loop still finds the true minimizer 1 - K + 4K^2 at K=1/8
        assert abs(K[0] - 0.125) < 1e-3
        assert abs(rep.gamma_final - 0.9375) < 1e-3

    def test_accepted_gammas_strictly_decreasing(self):
        sys_ = scalar_lag()
        _, rep = minimize_gamma(sys_, [1.0], VerticalLine(0.0), Alg1Config())
        g = rep.accepted_gammas()
        assert len(g) >= 1
        assert np.all(np.diff(g) < 0)

    def test_curve_through_pole_rejected(self):
        sys_ = scalar_lag()
        with pytest.raises(SetupError):
            minimize_gamma(sys_, [1.0], VerticalLine(-1.0), Alg1Config())

    def test_stall_when_linearization_keeps_lying(self):
        # jac reports a huge descent direction, the true response only grows
        params = ParameterVector([0.0], [-1.0], [1.0], [1.0])

        def eval_fn(K):
            return np.array([[-1.0]]), np.array([[1.0 + K[0] ** 2]])

        def jac_fn(K):
            return np.zeros((1, 1, 1)), np.array([[[-1e6]]])

        sys_ = ParametricStateSpace(
            n_x=1, n_w=1, n_y=1, eval_fn=eval_fn, C=np.array([[1.0]]),
            params=params, jac_fn=jac_fn,
        )
        cfg = Alg1Config(
            k_max=80, alpha=0.5, rel_tol=1e-14, initial_trust=np.array([1.0])
        )
        K, rep = minimize_gamma(sys_, [0.0], VerticalLine(0.0), cfg)
        assert rep.status == "stalled"
        assert np.allclose(K, [0.0])
        assert not rep.accepted()

    def test_replay_reproduces_recorded_gammas(self):
        sys_ = scalar_lag()
        _, rep = minimize_gamma(sys_, [1.0], VerticalLine(0.0), Alg1Config())
        replayed = rep.replay_gammas(sys_)
        recorded = rep.accepted_gammas()
        assert np.allclose(replayed, recorded, atol=1e-8)


class TestDetectCrossing:
    def test_sign_flip(self):
        crossed, _ = detect_crossing(
            PoleSet((0.5 + 0j,), (1,)), PoleSet((0.9 + 0j,), (1,)), VerticalLine(0.7)
        )
        assert crossed

    def test_no_flip(self):
        crossed, _ = detect_crossing(
            PoleSet((0.5 + 0j,), (1,)), PoleSet((0.6 + 0j,), (1,)), VerticalLine(0.7)
        )
        assert not crossed

    def test_cardinality_mismatch(self):
        from svtune.errors import SvtuneError

        with pytest.raises(SvtuneError):
            detect_crossing(
                PoleSet((0.5 + 0j,), (1,)),
                PoleSet((0.5 + 0j, 1.0 + 0j), (1, 1)),
                VerticalLine(0.0),
            )

    def test_conjugate_pair_tracking_over_drift(self):
        # two conjugate pairs drifting 1e-3 per step for 100 steps: greedy
        # matching must pair each pole with its own successor
        curve = VerticalLine(0.0)
        p1, p2 = -1.0 + 2j, -0.5 + 5j
        for step in range(100):
            q1 = p1 + 1e-3 * (0.7 + 0.4j)
            q2 = p2 + 1e-3 * (-0.3 + 0.9j)
            before = PoleSet(
                (p1, np.conj(p1), p2, np.conj(p2)), (1, 1, 1, 1)
            )
            after = PoleSet((q1, np.conj(q1), q2, np.conj(q2)), (1, 1, 1, 1))
            crossed, pairs = detect_crossing(before, after, curve)
            assert not crossed
            for b, a in pairs:
                expected = {
                    complex(p1): q1, complex(np.conj(p1)): np.conj(q1),
                    complex(p2): q2, complex(np.conj(p2)): np.conj(q2),
                }[complex(b)]
                assert abs(a - expected) < 1e-12
            p1, p2 = q1, q2

    def test_generic_curve_has_no_side(self):
        arc = ParametricCurve(fn=lambda t: np.exp(1j * t), t_min=0, t_max=np.pi)
        with pytest.raises(NotImplementedError):
            detect_crossing(
                PoleSet((0.5 + 0j,), (1,)), PoleSet((0.9 + 0j,), (1,)), arc
            )


class TestSelectDelta:
    def test_midpoint_formula(self):
        sys_ = shifted_pole(1.0)  # single pole at +1
        sel = select_delta_detailed(sys_, [], 1.0 + 0j)
        assert not sel.fallback
        # single pole: the largest candidate (re + rho) qualifies
        assert sel.delta_max == pytest.approx(2.0)
        assert sel.delta == pytest.approx(0.5 * (sel.delta_max + 1.0))

    def test_delta_exceeds_pole_real_part(self):
        sys_ = shifted_pole(0.3)
        d = select_delta(sys_, [], 0.3 + 0j)
        assert d > 0.3

    def test_fallback_when_decoy_pole_dominates(self):
        # A stable decoy pole with a huge residue dominates the curve at
        # every candidate, so no candidate attains its max near the
        # rightmost pole pair and the epsilon fallback engages.
        A = np.array([
            [0.1, 8.0, 0.0],
            [-8.0, 0.1, 0.0],
            [0.0, 0.0, -0.3],
        ])
        B = np.array([[1.0], [0.0], [1.0]])
        C = np.array([[1.0, 0.0, 1e4]])
        sys_ = ParametricStateSpace(
            n_x=3, n_w=1, n_y=1, eval_fn=lambda K: (A, B), C=C
        )
        sel = select_delta_detailed(sys_, [], complex(0.1, 8.0), fallback_eps=0.05)
        assert sel.fallback
        assert sel.delta == pytest.approx(0.15)
        assert sel.delta > 0.1


class TestStabilize:
    def test_already_stable_returns_immediately(self):
        sys_ = scalar_lag()  # pole at -K, stable for K in [1,2]
        K, rep = stabilize(sys_, [1.5])
        assert rep.status == "stabilized"
        assert len(rep.outer) == 0
        assert np.allclose(K, [1.5])

    def test_scalar_unstable_system(self):
        # pole at 2 - K: unstable at K=0.5, box reaches K=5
        params = ParameterVector([0.5], [0.1], [5.0], [1.0])

        def eval_fn(K):
            return np.array([[2.0 - K[0]]]), np.array([[1.0]])

        def jac_fn(K):
            return np.array([[[-1.0]]]), np.array([[[0.0]]])

        sys_ = ParametricStateSpace(
            n_x=1, n_w=1, n_y=1, eval_fn=eval_fn, C=np.array([[1.0]]),
            params=params, jac_fn=jac_fn,
        )
        K, rep = stabilize(sys_, [0.5])
        assert rep.status == "stabilized"
        assert sys_.at(K).poles().max_real < 0
        rep.check_monotone()
        # snapshots + stored sample sets reproduce the recorded objectives
        assert np.allclose(
            rep.replay_gammas(sys_), rep.accepted_gammas(), atol=1e-8
        )

    def test_pole_shift_property(self):
        # An accepted step halving Gamma must push the tracked pole away
        # from the curve (distance strictly increases).
        sys_ = scalar_lag()
        curve = VerticalLine(0.0)
        K0 = np.array([1.0])
        d_before = curve.distance(compute_poles(sys_, K0).max_real_pole())
        K, rep = minimize_gamma(sys_, K0, curve, Alg1Config(k_max=20))
        g = rep.accepted_gammas()
        assert g[-1] <= 0.5 * rep.inner[0].gamma_before * (1 + 1e-6)  # halved
        d_after = curve.distance(compute_poles(sys_, K).max_real_pole())
        assert d_after > d_before


class TestInitialTrust:
    def test_finite_box(self):
        pv = ParameterVector([1.0], [0.0], [10.0], [1.0])
        assert initial_trust_radii(pv)[0] == pytest.approx(1.0)

    def test_infinite_box_falls_back_to_magnitude(self):
        pv = ParameterVector([3.0], [-np.inf], [np.inf], [1.0])
        assert initial_trust_radii(pv)[0] == pytest.approx(31.0)
