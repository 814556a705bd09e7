"""Lyapunov-based coordinate-descent baseline (PK iteration).

Alternates two phases on the decay-rate program

    maximize beta  s.t.  A(K)^T P + P A(K) + 2 beta P <= 0,  P >= I:

* P-phase (K fixed): bisection on beta over feasibility LMIs in P.  A
  conditioning cap ``P <= rho I`` keeps the certificate numerically
  usable by the next phase; the supremum over unbounded P would be
  -max Re(eig(A)) with an arbitrarily ill-conditioned P.
* K-phase (P fixed): A(K) is linearized in K and (K, beta) solved as a
  linear matrix inequality over the box intersected with a trust region.

This is the comparison baseline: it carries an n_x-sized Lyapunov matrix
through every step, against which the sampled singular-value method's
small frequency-domain blocks are measured.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import cvxpy as cp

from .errors import NumericalError
from .systems import ParametricStateSpace
from .tuner import initial_trust_radii

PK_STATUS_STABILIZED = "stabilized"
PK_STATUS_OUTER_CAP = "outer-cap"
PK_STATUS_STALLED = "stalled"


@dataclass(frozen=True)
class PKState:
    """Lyapunov candidate and certified decay margin at the current K."""

    P: np.ndarray
    beta: float


@dataclass
class PKIterationRecord:
    mu: int
    beta: float
    max_re_before: float
    max_re_after: float
    accepted: bool
    wall_ms: float


@dataclass
class PKRunResult:
    status: str
    K_final: np.ndarray
    iterations: list = field(default_factory=list)

    @property
    def outer_iterations(self) -> int:
        return len(self.iterations)


@dataclass(frozen=True)
class PKConfig:
    outer_cap: int = 50
    alpha: float = 0.5
    initial_trust: Optional[np.ndarray] = None
    solver: str = "CLARABEL"
    cond_cap: float = 1e3  # rho: upper bound on cond(P)
    bisections: int = 8


def _solve_quiet(problem, solver):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        problem.solve(solver=solver)


def _p_feasible(a_hat, beta_hat, rho, solver):
    """Trace-minimal P with I <= P <= rho I certifying ``beta_hat``."""
    n = a_hat.shape[0]
    P = cp.Variable((n, n), symmetric=True)
    M = a_hat.T @ P + P @ a_hat + 2.0 * beta_hat * P
    prob = cp.Problem(
        cp.Minimize(cp.trace(P)),
        [P >> np.eye(n), P << rho * np.eye(n), M << -1e-9 * np.eye(n)],
    )
    try:
        _solve_quiet(prob, solver)
    except Exception:
        return None
    if prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and P.value is not None:
        return 0.5 * (P.value + P.value.T)
    return None


def p_phase(A, cond_cap=1e3, bisections=8, solver="CLARABEL") -> PKState:
    """Largest certifiable decay margin at fixed A (bounded conditioning).

    Bisects beta over Lyapunov feasibility programs; returns the best
    feasible (P, beta) pair.  For well-scaled A the result approaches the
    supremum -max Re(eig(A)).
    """
    A = np.asarray(A, dtype=float)
    alpha = float(np.max(np.linalg.eigvals(A).real))
    s_a = max(1.0, float(np.linalg.norm(A, 2)))
    a_hat = A / s_a

    hi = -alpha / s_a  # scaled supremum, not attainable strictly
    span = abs(hi) + 1.0
    lo = hi - span
    P = _p_feasible(a_hat, lo, cond_cap, solver)
    widen = 0
    while P is None and widen < 4:
        span *= 2.0
        lo = hi - span
        P = _p_feasible(a_hat, lo, cond_cap, solver)
        widen += 1
    if P is None:
        raise NumericalError("P-phase feasibility failed even for small beta")
    best_p, best_b = P, lo
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        Pm = _p_feasible(a_hat, mid, cond_cap, solver)
        if Pm is not None:
            best_p, best_b = Pm, mid
            lo = mid
        else:
            hi = mid
    return PKState(P=best_p, beta=best_b * s_a)


def k_phase(
    sys: ParametricStateSpace,
    K,
    state: PKState,
    trust,
    solver="CLARABEL",
) -> tuple:
    """Maximize the decay margin over K with P fixed (linearized A).

    Returns ``(K_new, beta_predicted, status)``.
    """
    K = np.asarray(K, dtype=float)
    frozen = sys.at(K, check_bounds=False)
    dA, _ = sys.jacobians(K)
    P = state.P
    n_k = K.size
    trust = np.asarray(trust, dtype=float)
    lo = np.maximum(sys.params.lower, K - trust)
    hi = np.minimum(sys.params.upper, K + trust)

    # One common scale keeps the LMI entries O(1) for the solver.
    s = max(1.0, float(np.linalg.norm(frozen.A.T @ P + P @ frozen.A, 2)))
    P_s = P / s

    u = cp.Variable(n_k)
    beta = cp.Variable()
    A_lin = cp.Constant(frozen.A) + sum(
        u[l] * cp.Constant(trust[l] * dA[l]) for l in range(n_k)
    )
    M = A_lin.T @ P_s + P_s @ A_lin + 2.0 * beta * cp.Constant(P_s)
    cons = [
        0.5 * (M + M.T) << 0,
        u >= (lo - K) / trust,
        u <= (hi - K) / trust,
    ]
    prob = cp.Problem(cp.Maximize(beta), cons)
    for solver_name in (solver, "SCS"):
        try:
            _solve_quiet(prob, solver_name)
        except Exception as exc:
            note = f"solver failure: {exc}"
            continue
        if prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and u.value is not None:
            u_val = np.clip(u.value, (lo - K) / trust, (hi - K) / trust)
            return K + trust * u_val, float(beta.value), "ok"
        note = f"status {prob.status}"
    return K, state.beta, note


def pk_baseline_step(
    sys: ParametricStateSpace,
    K,
    phase: str,
    state: Optional[PKState] = None,
    trust=None,
    cfg: PKConfig = PKConfig(),
) -> tuple:
    """One coordinate-descent phase; returns updated ``(K, PKState)``."""
    K = np.asarray(K, dtype=float)
    if phase == "P":
        A = sys.at(K, check_bounds=False).A
        return K, p_phase(A, cfg.cond_cap, cfg.bisections, cfg.solver)
    if phase == "K":
        if state is None:
            raise ValueError("K-phase needs the Lyapunov state from a P-phase")
        if trust is None:
            trust = initial_trust_radii(sys.params, K)
        K_new, beta, _ = k_phase(sys, K, state, trust, cfg.solver)
        return K_new, PKState(P=state.P, beta=beta)
    raise ValueError(f"unknown phase {phase!r} (expected 'P' or 'K')")


def pk_stabilize(sys: ParametricStateSpace, K0, cfg: PKConfig = PKConfig()) -> PKRunResult:
    """Drive max Re(eig(A(K))) below zero by alternating P/K phases.

    A K-step is accepted when the true spectral abscissa improved;
    otherwise the trust region shrinks and P is re-solved at the old K.
    """
    K = np.asarray(K0, dtype=float)
    trust = (
        np.asarray(cfg.initial_trust, dtype=float).copy()
        if cfg.initial_trust is not None
        else initial_trust_radii(sys.params, K)
    )
    result = PKRunResult(status=PK_STATUS_OUTER_CAP, K_final=K.copy())
    for mu in range(1, cfg.outer_cap + 1):
        t0 = time.perf_counter()
        re_before = sys.at(K, check_bounds=False).poles().max_real
        if re_before < 0:
            result.status = PK_STATUS_STABILIZED
            break
        state = p_phase(
            sys.at(K, check_bounds=False).A, cfg.cond_cap, cfg.bisections, cfg.solver
        )
        K_cand, beta_pred, note = k_phase(sys, K, state, trust, cfg.solver)
        re_after = sys.at(K_cand, check_bounds=False).poles().max_real
        accepted = re_after < re_before
        if accepted:
            K = K_cand
        else:
            trust = trust * cfg.alpha
        result.iterations.append(
            PKIterationRecord(
                mu=mu,
                beta=state.beta,
                max_re_before=re_before,
                max_re_after=re_after if accepted else re_before,
                accepted=accepted,
                wall_ms=1e3 * (time.perf_counter() - t0),
            )
        )
        if np.linalg.norm(trust) < 1e-12:
            result.status = PK_STATUS_STALLED
            break
    else:
        result.status = PK_STATUS_OUTER_CAP
    if sys.at(K, check_bounds=False).poles().max_real < 0:
        result.status = PK_STATUS_STABILIZED
    result.K_final = K.copy()
    return result
