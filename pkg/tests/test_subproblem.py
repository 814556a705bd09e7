import numpy as np
import pytest

from svtune import (
    ConvexSubproblem,
    LinearizedResponse,
    ParameterVector,
    embed_min_eig,
    schur_embed,
    sigma_max,
    solve_subproblem,
)


def affine_lin(base_G, sens, anchor):
    anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
    return LinearizedResponse(
        base_K=anchor,
        s=0j,
        base_G=np.atleast_2d(np.asarray(base_G, dtype=complex)),
        sensitivities=np.asarray(sens, dtype=complex),
    )


class TestSchurEmbed:
    def test_scalar_positive(self):
        M = schur_embed([[2.0]], 3.0)
        assert np.allclose(M, [[3.0, 2.0], [2.0, 3.0]])
        assert np.allclose(np.linalg.eigvalsh(M), [1.0, 5.0])

    def test_scalar_indefinite(self):
        M = schur_embed([[2.0]], 1.0)
        assert np.allclose(np.linalg.eigvalsh(M), [-1.0, 3.0])

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValueError):
            schur_embed([[1.0]], 0.0)

    def test_agreement_with_svd_on_random_matrices(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            G = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
            gamma = sigma_max(G) * rng.uniform(0.5, 1.5)
            if gamma <= 0:
                continue
            positive = embed_min_eig(G, gamma) > 0
            assert positive == (sigma_max(G) < gamma)


class TestSolveSubproblem:
    def test_constant_case_returns_anchor(self):
        pv = ParameterVector([0.3], [-1.0], [1.0], [10.0])
        lins = (
            affine_lin([[2.0]], [[[0.0]]], [0.3]),
            affine_lin([[1.5]], [[[0.0]]], [0.3]),
        )
        sol = solve_subproblem(ConvexSubproblem(lins, pv, np.array([0.3])))
        assert sol.status == "optimal"
        assert sol.gamma == 2.0
        assert np.allclose(sol.K_new, [0.3])

    def test_boundary_minimizer(self):
        pv = ParameterVector([0.0], [-0.5], [0.5], [10.0])
        lin = affine_lin([[1.0]], [[[1.0]]], [0.0])
        sol = solve_subproblem(ConvexSubproblem((lin,), pv, np.array([0.0])))
        assert abs(sol.K_new[0] + 0.5) < 1e-5
        assert abs(sol.gamma - 0.5) < 1e-5

    def test_symmetric_two_samples(self):
        pv = ParameterVector([0.0], [-1.0], [1.0], [10.0])
        lins = (
            affine_lin([[1.0]], [[[1.0]]], [0.0]),
            affine_lin([[1.0]], [[[-1.0]]], [0.0]),
        )
        sol = solve_subproblem(ConvexSubproblem(lins, pv, np.array([0.0])))
        assert abs(sol.K_new[0]) < 1e-5
        assert abs(sol.gamma - 1.0) < 1e-5

    def test_certificate_margins_nonnegative(self):
        pv = ParameterVector([0.0], [-0.5], [0.5], [10.0])
        lin = affine_lin([[1.0]], [[[1.0]]], [0.0])
        sol = solve_subproblem(ConvexSubproblem((lin,), pv, np.array([0.0])), tol=1e-6)
        assert np.all(sol.certificate > -1e-9)
        # gamma is >= the achieved sampled norm at K_new
        assert sol.gamma >= sigma_max(lin.predict(sol.K_new)) - 1e-6

    def test_trust_region_respected(self):
        pv = ParameterVector([0.0], [-5.0], [5.0], [0.1])
        lin = affine_lin([[1.0]], [[[1.0]]], [0.0])
        sol = solve_subproblem(ConvexSubproblem((lin,), pv, np.array([0.0])))
        assert abs(sol.K_new[0] + 0.1) < 1e-6
        assert abs(sol.gamma - 0.9) < 1e-5

    def test_anchor_mismatch_rejected(self):
        pv = ParameterVector([0.0], [-1.0], [1.0], [1.0])
        lin = affine_lin([[1.0]], [[[1.0]]], [0.2])
        with pytest.raises(ValueError):
            ConvexSubproblem((lin,), pv, np.array([0.0]))

    def test_monotone_in_trust_radius(self):
        rng = np.random.default_rng(9)
        anchor = np.zeros(2)
        lins = tuple(
            affine_lin(
                rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)),
                0.4 * (rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))),
                anchor,
            )
            for _ in range(3)
        )
        gammas = []
        for radius in (1.0, 0.5, 0.25):
            pv = ParameterVector(anchor, [-2.0, -2.0], [2.0, 2.0], [radius, radius])
            sol = solve_subproblem(ConvexSubproblem(lins, pv, anchor))
            gammas.append(sol.gamma)
        assert gammas[0] <= gammas[1] + 1e-6
        assert gammas[1] <= gammas[2] + 1e-6


def brute_force_gamma(lins, lo, hi, step=1e-3):
    """Grid minimization of the sampled max spectral norm (oracle)."""
    axes = [np.arange(l, h + step / 2, step) for l, h in zip(lo, hi)]
    if len(axes) == 1:
        best = np.inf
        for k in axes[0]:
            val = max(sigma_max(lin.predict([k])) for lin in lins)
            best = min(best, val)
        return best
    # vectorized 2-d scan via the closed form for 2x2 spectral norms
    k1, k2 = np.meshgrid(axes[0], axes[1], indexing="ij")
    vals = None
    for lin in lins:
        G = (
            lin.base_G[None, None]
            + k1[..., None, None] * lin.sensitivities[0]
            + k2[..., None, None] * lin.sensitivities[1]
        )
        fro2 = np.sum(np.abs(G) ** 2, axis=(-2, -1))
        det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
        disc = np.sqrt(np.maximum(fro2 ** 2 - 4.0 * np.abs(det) ** 2, 0.0))
        smax = np.sqrt((fro2 + disc) / 2.0)
        vals = smax if vals is None else np.maximum(vals, smax)
    return float(np.min(vals))


class TestOracleOptimality:
    @pytest.mark.parametrize("seed", range(4))
    def test_one_parameter_against_grid(self, seed):
        rng = np.random.default_rng(seed)
        anchor = np.zeros(1)
        lins = tuple(
            affine_lin(
                rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)),
                0.7 * (rng.standard_normal((1, 2, 2)) + 1j * rng.standard_normal((1, 2, 2))),
                anchor,
            )
            for _ in range(rng.integers(1, 4))
        )
        pv = ParameterVector(anchor, [-1.0], [1.0], [2.0])
        sol = solve_subproblem(ConvexSubproblem(lins, pv, anchor))
        ref = brute_force_gamma(lins, [-1.0], [1.0])
        assert abs(sol.gamma - ref) < 2e-3

    @pytest.mark.parametrize("seed", range(2))
    def test_two_parameters_against_grid(self, seed):
        rng = np.random.default_rng(100 + seed)
        anchor = np.zeros(2)
        lins = tuple(
            affine_lin(
                rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)),
                0.5 * (rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))),
                anchor,
            )
            for _ in range(2)
        )
        pv = ParameterVector(anchor, [-0.5, -0.5], [0.5, 0.5], [2.0, 2.0])
        sol = solve_subproblem(ConvexSubproblem(lins, pv, anchor))
        ref = brute_force_gamma(lins, [-0.5, -0.5], [0.5, 0.5])
        assert abs(sol.gamma - ref) < 2e-3
