import numpy as np
import pytest

from svtune import (
    GammaSampleError,
    NumericalError,
    ParametricCurve,
    ParametricStateSpace,
    Sample,
    SampleSet,
    VerticalLine,
    build_sample_set,
    curve_distance,
    default_anchor_band,
    gamma_of,
    sigma_max,
)
from svtune.sample_systems import biproper_mimo, shifted_pole
from svtune.spectral import FALLBACK_GRID, POLE_ANCHORED, build_from_samples
from svtune.systems import PoleSet, compute_poles


class TestCurves:
    def test_vertical_distance(self):
        assert curve_distance(1 + 1j, VerticalLine(0.0)) == 1.0

    def test_point_on_curve(self):
        assert curve_distance(0.7 + 3j, VerticalLine(0.7)) == 0.0

    def test_vertical_projection(self):
        c = VerticalLine(0.7)
        assert c.project(0.5 + 2j) == 2.0
        assert c.point(2.0) == 0.7 + 2j

    def test_circle_arc_against_analytic_projection(self):
        # Unit circle arc; closest point to r*exp(j phi) is exp(j phi).
        arc = ParametricCurve(
            fn=lambda t: np.exp(1j * t), t_min=0.0, t_max=np.pi / 2, n_grid=10001
        )
        h = (np.pi / 2) / 10000
        for r, phi in [(2.0, 0.3), (0.5, 1.2), (3.0, 0.9)]:
            s = r * np.exp(1j * phi)
            assert abs(arc.project(s) - phi) < 2 * h
            assert abs(arc.distance(s) - abs(r - 1.0)) < 1e-6


class TestSigmaMax:
    def test_scalar(self):
        assert sigma_max([[2.0]]) == 2.0

    def test_diagonal(self):
        assert sigma_max(np.diag([1.0, 3.0])) == 3.0

    def test_reference_mimo_dc(self):
        G0 = np.array([[0.0, -1.0], [10.0, -4.0]])
        expected = np.sqrt((117.0 + np.sqrt(13289.0)) / 2.0)
        assert abs(sigma_max(G0) - expected) < 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(NumericalError):
            sigma_max([[np.inf]])

    def test_submultiplicative(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            G = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            H = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            assert sigma_max(G @ H) <= sigma_max(G) * sigma_max(H) + 1e-12


class TestSampleSet:
    def test_single_pole_projection_included(self):
        poles = PoleSet((0.5 + 2j,), (1,))
        ss = build_sample_set(poles, VerticalLine(0.7), band=1.0)
        anchored = [s for s in ss if s.tag == POLE_ANCHORED]
        assert any(abs(s.t - 2.0) < 1e-12 for s in anchored)
        # symmetric offsets around the projection at 0.1/0.3/1.0 x distance
        d = 0.2
        for off in (0.1 * d, 0.3 * d, 1.0 * d):
            assert any(abs(s.t - (2.0 + off)) < 1e-9 for s in anchored)
            assert any(abs(s.t - (2.0 - off)) < 1e-9 for s in anchored)

    def test_conjugate_pair_symmetric(self):
        poles = PoleSet((0.5 + 2j, 0.5 - 2j), (1, 1))
        ss = build_sample_set(poles, VerticalLine(0.7), band=1.0)
        ts = ss.ts
        for t in ts:
            assert np.min(np.abs(ts + t)) < 1e-9  # -t also present

    def test_no_pole_in_band_gives_fallback_only(self):
        poles = PoleSet((-10.0 + 0j,), (1,))
        ss = build_sample_set(poles, VerticalLine(0.0), band=1.0)
        assert all(s.tag == FALLBACK_GRID for s in ss)
        assert len(ss) > 0

    def test_deduplication(self):
        ss = build_from_samples(
            [Sample(t=1.0), Sample(t=1.0), Sample(t=1.0 + 1e-15), Sample(t=2.0)]
        )
        assert len(ss) == 2

    def test_nonempty_required(self):
        with pytest.raises(ValueError):
            SampleSet(samples=())


class TestGamma:
    def test_simple_pole_peak(self):
        sys_ = shifted_pole(-0.2, delta=0.7)  # pole at 0.5
        poles = compute_poles(sys_, [])
        curve = VerticalLine(0.7)
        ss = build_sample_set(poles, curve, band=default_anchor_band(poles, curve))
        gv = gamma_of(sys_, [], curve, ss)
        assert abs(gv.value - 5.0) < 1e-9
        assert abs(gv.argmax_t) < 1e-9

    def test_constant_transfer(self):
        c = -2.5
        sys_ = ParametricStateSpace(
            n_x=1, n_w=1, n_y=1,
            eval_fn=lambda K: (np.array([[-1.0]]), np.array([[1.0]])),
            C=np.array([[0.0]]), D=np.array([[c]]),
        )
        ss = build_from_samples([Sample(t=t) for t in (-3.0, 0.0, 1.0, 8.0)])
        gv = gamma_of(sys_, [], VerticalLine(0.0), ss)
        assert abs(gv.value - abs(c)) < 1e-12

    def test_reference_mimo_peak_location(self):
        sys_ = biproper_mimo()
        poles = compute_poles(sys_, [])
        curve = VerticalLine(0.7)
        ss = build_sample_set(poles, curve, band=default_anchor_band(poles, curve))
        gv = gamma_of(sys_, [], curve, ss)
        assert abs(abs(gv.argmax_t) - np.sqrt(3.0) / 2.0) < 0.1
        # much larger than the typical level along the curve
        frozen = sys_.at([])
        med = np.median(
            [sigma_max(frozen.response(curve.point(t))) for t in np.linspace(-10, 10, 801)]
        )
        assert gv.value > 10.0 * med

    def test_pole_collision_reported(self):
        sys_ = shifted_pole(0.0, delta=0.5)  # pole exactly at 0.5
        ss = build_from_samples([Sample(t=0.0)])
        with pytest.raises(GammaSampleError) as exc:
            gamma_of(sys_, [], VerticalLine(0.5), ss)
        assert abs(exc.value.nearest_pole - 0.5) < 1e-9

    def test_monotone_refinement(self):
        sys_ = biproper_mimo()
        curve = VerticalLine(0.7)
        small = build_from_samples([Sample(t=t) for t in (0.1, 0.5)])
        big = small.merged_with(
            build_from_samples([Sample(t=t) for t in (0.8, 0.866, 2.0)])
        )
        g_small = gamma_of(sys_, [], curve, small).value
        g_big = gamma_of(sys_, [], curve, big).value
        assert g_big >= g_small

    def test_growth_as_pole_approaches_curve(self):
        # Gamma ~ 1/d for a simple pole at distance d; argmax converges to
        # the pole's projection.
        curve = VerticalLine(0.0)
        values = {}
        for d in (1e-1, 1e-2, 1e-3):
            sys_ = shifted_pole(d, delta=0.0)
            poles = compute_poles(sys_, [])
            ss = build_sample_set(poles, curve, band=default_anchor_band(poles, curve))
            gv = gamma_of(sys_, [], curve, ss)
            values[d] = gv
        assert values[1e-2].value >= 5.0 * values[1e-1].value
        assert values[1e-3].value >= 5.0 * values[1e-2].value
        assert abs(values[1e-3].argmax_t) <= abs(values[1e-1].argmax_t) + 1e-9
        assert abs(values[1e-3].argmax_t) < 1e-3
