"""The convex inner problem of one tuning iteration.

Given affine-in-K models G_L of the frequency response at every sample,
solve

    min_{gamma, K}  gamma
    s.t.  [[gamma I, G_L(K, s_k)], [G_L(K, s_k)^*, gamma I]] >= 0   for all k
          lower <= K <= upper,   |K - anchor| <= trust_radius.

Positive definiteness of the block is equivalent to
sigma_max(G_L) < gamma, so this minimizes the sampled spectral-norm
maximum.  Parameters are normalized to the trust box before solving.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
import numpy as np
import cvxpy as cp

from .systems import ParameterVector

DEFAULT_GAMMA_TOL = 1e-6

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_INFEASIBLE_NUMERICS = "infeasible-numerics"


def schur_embed(G, gamma) -> np.ndarray:
    """Hermitian block [[gamma I, G], [G*, gamma I]].

    Positive definite iff sigma_max(G) < gamma (for gamma > 0).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    n, m = G.shape
    top = np.hstack([gamma * np.eye(n), G])
    bot = np.hstack([G.conj().T, gamma * np.eye(m)])
    return np.vstack([top, bot])


def embed_min_eig(G, gamma) -> float:
    """Smallest eigenvalue of the Schur block: the constraint margin."""
    return float(np.linalg.eigvalsh(schur_embed(G, gamma))[0])


@dataclass(frozen=True)
class ConvexSubproblem:
    """Sampled spectral-norm minimization data around one anchor point."""

    linearized: tuple
    bounds: ParameterVector
    anchor_K: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linearized", tuple(self.linearized))
        object.__setattr__(
            self, "anchor_K", np.atleast_1d(np.asarray(self.anchor_K, dtype=float))
        )
        if not self.linearized:
            raise ValueError("subproblem needs at least one linearized sample")
        for lin in self.linearized:
            if not np.allclose(lin.base_K, self.anchor_K, rtol=0, atol=1e-12):
                raise ValueError("all linearized responses must share the anchor point")
        lo, hi = self.effective_box()
        if np.any(lo > hi):
            raise ValueError("trust region and box do not intersect")

    def effective_box(self) -> tuple:
        """Box intersected with the trust region around the anchor."""
        b = self.bounds
        lo = np.maximum(b.lower, self.anchor_K - b.trust_radius)
        hi = np.minimum(b.upper, self.anchor_K + b.trust_radius)
        return lo, hi


@dataclass(frozen=True)
class SubproblemSolution:
    K_new: np.ndarray
    gamma: float
    status: str
    certificate: np.ndarray  # per-sample min-eig of the LMI block at (K_new, gamma)
    solver: str = ""
    diagnostics: str = ""


def _solve_with(problem, solver):
    with warnings.catch_warnings():
        # inaccurate-solution warnings are surfaced through the status field
        warnings.simplefilter("ignore", UserWarning)
        if solver == "CLARABEL":
            problem.solve(solver=cp.CLARABEL)
        elif solver == "SCS":
            problem.solve(solver=cp.SCS, eps=1e-8, max_iters=20000)
        else:
            problem.solve(solver=solver)


def solve_subproblem(
    p: ConvexSubproblem,
    tol: float = DEFAULT_GAMMA_TOL,
    solver: str = "CLARABEL",
) -> SubproblemSolution:
    """Solve the sampled LMI program to absolute tolerance ``tol`` on gamma.

    The problem is always feasible (gamma is free); numerical failures are
    reported through the ``status`` field rather than raised.
    """
    n_k = p.anchor_K.size
    lo, hi = p.effective_box()
    radius = np.asarray(p.bounds.trust_radius, dtype=float)

    # Normalized step u: K = anchor + radius * u.
    u_lo = (lo - p.anchor_K) / radius
    u_hi = (hi - p.anchor_K) / radius

    # Parameters the responses do not depend on are pinned to the anchor so
    # the solver cannot wander along indifferent directions.
    sens_scale = np.zeros(n_k)
    for lin in p.linearized:
        sens_scale = np.maximum(
            sens_scale, np.abs(lin.sensitivities).reshape(n_k, -1).max(axis=1) * radius
        )
    free = sens_scale > 0.0

    base_norms = [float(np.linalg.svd(lin.base_G, compute_uv=False)[0]) for lin in p.linearized]
    if not np.any(free):
        gamma = max(base_norms)
        cert = np.array(
            [embed_min_eig(lin.base_G, gamma + tol) for lin in p.linearized]
        )
        return SubproblemSolution(
            K_new=p.anchor_K.copy(),
            gamma=gamma,
            status=STATUS_OPTIMAL,
            certificate=cert,
            solver="closed-form",
        )

    # Normalize gains to ~1 so the conic solver sees a well-scaled problem.
    scale = max(max(base_norms), 1e-12)

    u = cp.Variable(n_k)
    g = cp.Variable()
    cons = [u >= u_lo, u <= u_hi]
    if np.any(~free):
        cons.append(u[~free] == 0.0)
    for lin in p.linearized:
        n_y, n_w = lin.base_G.shape
        # (n_k, n_y*n_w) stack in normalized step coordinates
        Dmat = (lin.sensitivities * radius[:, None, None]).reshape(n_k, -1) / scale
        gvec = lin.base_G.reshape(-1) / scale + Dmat.T @ u
        Gk = cp.reshape(gvec, (n_y, n_w), order="C")
        M = cp.bmat([[g * np.eye(n_y), Gk], [Gk.H, g * np.eye(n_w)]])
        cons.append(M >> 0)
    problem = cp.Problem(cp.Minimize(g), cons)

    status = STATUS_INFEASIBLE_NUMERICS
    used = ""
    diag = ""
    for candidate in (solver, "SCS"):
        try:
            _solve_with(problem, candidate)
        except Exception as exc:  # cvxpy raises a zoo of solver-side errors
            diag = f"{candidate}: {exc}"
            continue
        if problem.status in (cp.OPTIMAL,):
            status = STATUS_OPTIMAL
            used = candidate
            break
        if problem.status in (cp.OPTIMAL_INACCURATE,):
            status = STATUS_MAX_ITERATIONS
            used = candidate
            break
        diag = f"{candidate}: status {problem.status}"
        if candidate == "SCS":
            break

    if u.value is None or g.value is None:
        return SubproblemSolution(
            K_new=p.anchor_K.copy(),
            gamma=float(max(base_norms)),
            status=STATUS_INFEASIBLE_NUMERICS,
            certificate=np.full(len(p.linearized), np.nan),
            solver=used,
            diagnostics=diag or "solver returned no iterate",
        )

    u_val = np.clip(np.asarray(u.value, dtype=float), u_lo, u_hi)
    u_val[~free] = 0.0
    K_new = p.anchor_K + radius * u_val
    # Report the achieved sampled maximum, not the solver's epigraph value,
    # so gamma >= sigma_max(G_L) holds exactly up to the tolerance.
    achieved = max(
        float(np.linalg.svd(lin.predict(K_new), compute_uv=False)[0])
        for lin in p.linearized
    )
    gamma = max(float(g.value) * scale, achieved)
    cert = np.array([embed_min_eig(lin.predict(K_new), gamma + tol) for lin in p.linearized])
    return SubproblemSolution(
        K_new=K_new,
        gamma=gamma,
        status=status,
        certificate=cert,
        solver=used,
        diagnostics=diag,
    )
