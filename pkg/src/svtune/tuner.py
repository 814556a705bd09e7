"""Outer tuning loops.

``minimize_gamma`` runs the sequential convex loop: linearize the response
over the sample set, solve the LMI subproblem inside a trust region, accept
the step only if the true sampled objective decreased and no pole crossed
the curve, and shrink the trust radii on rejection.

``stabilize`` wraps it: pick a vertical line to the right of the rightmost
pole, minimize along it to push the pole left, and repeat until every pole
has negative real part.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .curves import Curve, VerticalLine
from .errors import GammaSampleError, SetupError, SvtuneError
from .spectral import (
    Sample,
    SampleSet,
    build_sample_set,
    default_anchor_band,
    gamma_of,
    _gamma_frozen,
)
from .subproblem import (
    STATUS_INFEASIBLE_NUMERICS,
    ConvexSubproblem,
    solve_subproblem,
)
from .systems import (
    ParameterVector,
    ParametricStateSpace,
    PoleSet,
    StepPolicy,
    linearize_responses,
)

CURVE_GUARD = 1e-9
TRUST_UNDERFLOW = 1e-12

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_STALLED = "stalled"
STATUS_STABILIZED = "stabilized"
STATUS_OUTER_CAP = "outer-cap"
STATUS_NO_PROGRESS = "no-progress"


@dataclass(frozen=True)
class Alg1Config:
    """Inner-loop configuration.

    ``alpha`` is the trust shrink factor on rejection; convergence is
    declared after three consecutive accepted steps whose relative
    improvement falls below ``rel_tol``, or when the linearized model
    predicts no further improvement.
    """

    k_max: int = 25
    alpha: float = 0.5
    rel_tol: float = 1e-3
    initial_trust: Optional[np.ndarray] = None
    per_pole: int = 7
    anchor_band: Optional[float] = None
    solver: str = "CLARABEL"
    subproblem_tol: float = 1e-6
    step_policy: StepPolicy = StepPolicy()

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must be in (0, 1)")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


@dataclass(frozen=True)
class StabilizeConfig:
    inner: Alg1Config = Alg1Config()
    outer_cap: int = 50
    delta_candidates: int = 16
    delta_fallback_eps: float = 0.05
    max_retries: int = 3  # extra inner runs with a closer curve when stuck
    retry_shrink: float = 0.25  # gap multiplier per retry
    # Progress below this fraction of the remaining instability triggers a
    # retry with a closer curve (a far curve tends to shrink residues
    # instead of moving the offending pole).
    min_progress: float = 0.05


@dataclass
class InnerRecord:
    mu: int
    k: int
    delta: float
    gamma_before: float
    gamma_after: float
    accepted: bool
    crossing: bool
    trust_radii: np.ndarray
    omega_ts: np.ndarray
    K_after: np.ndarray
    max_re_pole: float
    wall_ms: float
    note: str = ""
    run: int = 0  # one minimize_gamma invocation; Gamma values are only
    # comparable within a run (each run has its own curve)


@dataclass
class OuterRecord:
    mu: int
    delta: float
    max_re_before: float
    max_re_after: float
    inner_iterations: int
    wall_ms: float
    improved: bool = True
    note: str = ""


@dataclass
class TuningReport:
    """Everything needed to audit or replay a tuning run."""

    inner: list = field(default_factory=list)
    outer: list = field(default_factory=list)
    status: str = ""
    K_initial: Optional[np.ndarray] = None
    K_final: Optional[np.ndarray] = None
    gamma_final: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def accepted(self) -> list:
        return [r for r in self.inner if r.accepted]

    def accepted_gammas(self) -> np.ndarray:
        return np.array([r.gamma_after for r in self.accepted()])

    def check_monotone(self) -> None:
        """Assert the recorded invariants of a well-formed report."""
        by_run = {}
        for r in self.accepted():
            by_run.setdefault((r.mu, r.run), []).append(r.gamma_after)
        for key, gs in by_run.items():
            if np.any(np.diff(np.array(gs)) >= 0):
                raise SvtuneError(
                    f"accepted Gamma values not strictly decreasing in run {key}"
                )
        improved = [r for r in self.outer if r.improved]
        re = np.array([r.max_re_before for r in improved] + (
            [improved[-1].max_re_after] if improved else []))
        if re.size and np.any(np.diff(re) >= 0):
            raise SvtuneError("outer max-Re records are not strictly decreasing")

    def replay_gammas(self, sys: ParametricStateSpace) -> np.ndarray:
        """Re-evaluate Gamma at each accepted snapshot from stored samples."""
        out = []
        for rec in self.accepted():
            curve = VerticalLine(rec.delta)
            samples = SampleSet(
                samples=tuple(Sample(t=float(t)) for t in rec.omega_ts)
            )
            gv = gamma_of(sys, rec.K_after, curve, samples)
            out.append(gv.value)
        return np.array(out)


def initial_trust_radii(params: ParameterVector, K0=None) -> np.ndarray:
    """0.1 * (upper - lower) per component; infinite widths fall back to a
    radius proportional to the current parameter magnitude."""
    K0 = params.values if K0 is None else np.asarray(K0, dtype=float)
    width = params.upper - params.lower
    radii = 0.1 * width
    bad = ~np.isfinite(radii)
    radii[bad] = 10.0 * np.abs(K0[bad]) + 1.0
    radii[radii <= 0] = 1.0
    return radii


def detect_crossing(
    poles_before: PoleSet, poles_after: PoleSet, curve: Curve
) -> tuple:
    """Greedy nearest matching of two pole sets and a side-change test.

    Returns ``(crossed, pairs)`` where pairs is the matched
    ``(before, after)`` list.  A pair crosses when the signed side of the
    curve differs (vertical lines: sign of Re(s) - delta).
    """
    a = poles_before.expanded()
    b = poles_after.expanded()
    if a.size != b.size:
        raise SvtuneError(
            f"pole sets have different cardinality ({a.size} vs {b.size})"
        )
    dist = np.abs(a[:, None] - b[None, :])
    order = np.dstack(np.unravel_index(np.argsort(dist, axis=None), dist.shape))[0]
    used_a = np.zeros(a.size, dtype=bool)
    used_b = np.zeros(b.size, dtype=bool)
    pairs = []
    for i, j in order:
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = True
        used_b[j] = True
        pairs.append((complex(a[i]), complex(b[j])))
        if len(pairs) == a.size:
            break
    crossed = False
    for p, q in pairs:
        if curve.side(p) * curve.side(q) < 0:
            crossed = True
            break
    return crossed, pairs


def _band_for(poles: PoleSet, curve: Curve, cfg: Alg1Config) -> float:
    if cfg.anchor_band is not None:
        return cfg.anchor_band
    band = default_anchor_band(poles, curve)
    # Cap the anchored-pole count: beyond the nearest handful the blocks
    # only grow the LMI without moving the sampled maximum.
    dists = np.sort([curve.distance(p) for p in poles.poles])
    if dists.size > 10:
        band = min(band, float(dists[9]) * (1 + 1e-9))
    return band


def minimize_gamma(
    sys: ParametricStateSpace,
    K0,
    curve: Curve,
    cfg: Alg1Config = Alg1Config(),
    mu: int = 0,
) -> tuple:
    """Trust-region minimization of Gamma(K) along ``curve``.

    Returns ``(K_final, TuningReport)``.  A candidate step is accepted only
    if the true sampled Gamma strictly decreased (also relative to the best
    accepted value so far, since the sample set tracks the moving poles)
    and no pole crossed the curve; otherwise the trust radii shrink by
    ``alpha`` and the iterate stays.
    """
    if sys.params is None:
        raise SetupError("system carries no parameter metadata")
    K = np.atleast_1d(np.asarray(K0, dtype=float))
    sys.params.check_inside(K)

    frozen = sys.at(K)
    poles = frozen.poles()
    d_curve = min(curve.distance(p) for p in poles.poles)
    if d_curve < CURVE_GUARD:
        raise SetupError(
            f"optimization curve passes through a pole (distance {d_curve:.2e})"
        )

    trust = (
        np.asarray(cfg.initial_trust, dtype=float).copy()
        if cfg.initial_trust is not None
        else initial_trust_radii(sys.params, K)
    )
    delta = curve.delta if isinstance(curve, VerticalLine) else float("nan")
    report = TuningReport(K_initial=K.copy(), status=STATUS_MAX_ITERATIONS)

    gamma_best = None
    small_steps = 0
    for k in range(1, cfg.k_max + 1):
        t_start = time.perf_counter()
        band = _band_for(poles, curve, cfg)
        omega = build_sample_set(poles, curve, band, per_pole=cfg.per_pole)
        gv_ref = _gamma_frozen(frozen, curve, omega)
        gamma_ref = gv_ref.value
        if gamma_best is None:
            gamma_best = gamma_ref

        lin = linearize_responses(
            sys, K, [curve.point(t) for t in _fold_ts(omega, curve, frozen)],
            cfg.step_policy,
        )
        bounds = ParameterVector(
            values=K,
            lower=sys.params.lower,
            upper=sys.params.upper,
            trust_radius=trust,
            names=sys.params.names,
        )
        sol = solve_subproblem(
            ConvexSubproblem(linearized=tuple(lin), bounds=bounds, anchor_K=K),
            tol=cfg.subproblem_tol,
            solver=cfg.solver,
        )

        if sol.status == STATUS_INFEASIBLE_NUMERICS:
            trust = trust * cfg.alpha
            report.inner.append(
                InnerRecord(
                    mu=mu, k=k, delta=delta,
                    gamma_before=gamma_ref, gamma_after=gamma_ref,
                    accepted=False, crossing=False,
                    trust_radii=trust.copy(), omega_ts=omega.ts,
                    K_after=K.copy(), max_re_pole=poles.max_real,
                    wall_ms=1e3 * (time.perf_counter() - t_start),
                    note=f"subproblem failed: {sol.diagnostics}",
                )
            )
            if np.linalg.norm(trust) < TRUST_UNDERFLOW:
                report.status = STATUS_STALLED
                break
            continue

        predicted = sol.gamma
        if predicted >= gamma_ref * (1.0 - cfg.rel_tol):
            # The linearized model cannot improve: stationary point of the
            # sampled objective within tolerance.
            report.status = STATUS_CONVERGED
            break

        K_cand = sol.K_new
        frozen_cand = sys.at(K_cand)
        poles_cand = frozen_cand.poles()
        crossed, _ = detect_crossing(poles, poles_cand, curve)
        try:
            gv_new = _gamma_frozen(frozen_cand, curve, omega)
            gamma_new = gv_new.value
        except GammaSampleError:
            gamma_new = np.inf  # pole landed on a sample: treat as blow-up

        accept = (
            not crossed
            and gamma_new < gamma_ref
            and gamma_new < gamma_best
        )
        note = ""
        if accept:
            rel_impr = (gamma_best - gamma_new) / max(gamma_best, 1e-300)
            K = K_cand
            frozen = frozen_cand
            poles = poles_cand
            gamma_best = gamma_new
            small_steps = small_steps + 1 if rel_impr < cfg.rel_tol else 0
        else:
            trust = trust * cfg.alpha
            note = "crossing" if crossed else "no improvement"

        report.inner.append(
            InnerRecord(
                mu=mu, k=k, delta=delta,
                gamma_before=gamma_ref,
                gamma_after=gamma_best if accept else gamma_ref,
                accepted=accept, crossing=crossed,
                trust_radii=trust.copy(), omega_ts=omega.ts,
                K_after=K.copy(), max_re_pole=poles.max_real,
                wall_ms=1e3 * (time.perf_counter() - t_start),
                note=note,
            )
        )

        if accept and small_steps >= 3:
            report.status = STATUS_CONVERGED
            break
        if not accept and np.linalg.norm(trust) < TRUST_UNDERFLOW:
            report.status = STATUS_STALLED
            break

    report.K_final = K.copy()
    report.gamma_final = gamma_best
    return K, report


def _fold_ts(omega: SampleSet, curve: Curve, frozen) -> list:
    """Unique sample parameters, folded to t >= 0 when symmetry applies."""
    if curve.conjugate_symmetric and frozen.is_real():
        seen = {}
        for s in omega:
            seen.setdefault(round(abs(s.t), 12), abs(s.t))
        return sorted(seen.values())
    return sorted({round(s.t, 12): s.t for s in omega}.values())


@dataclass(frozen=True)
class DeltaSelection:
    delta: float
    delta_max: Optional[float]
    fallback: bool
    candidates_tested: int


def select_delta_detailed(
    sys: ParametricStateSpace,
    K,
    s_pmax,
    n_candidates: int = 16,
    fallback_eps: float = 0.05,
    per_pole: int = 7,
) -> DeltaSelection:
    """Line search for the curve position of one stabilization iteration.

    Finds the largest candidate delta > Re(s_pmax) for which Gamma along
    the vertical line at delta is still attained next to ``s_pmax``, then
    returns the midpoint between that candidate and Re(s_pmax).
    """
    frozen = sys.at(K)
    poles = frozen.poles()
    re_max = float(np.real(s_pmax))
    rho = max(1.0, poles.spread())
    gaps = rho * np.geomspace(1e-3, 1.0, n_candidates)

    delta_max = None
    tested = 0
    for gap in gaps[::-1]:  # largest first
        delta = re_max + gap
        curve = VerticalLine(delta)
        tested += 1
        d = curve.distance(s_pmax)
        # Anchor every pole, not just the near-curve ones: the candidate
        # qualifies only if the target pole's peak dominates the whole
        # curve, which is what makes minimizing Gamma push that pole.
        band = max(curve.distance(p) for p in poles.poles) + 1.0
        omega = build_sample_set(poles, curve, band, per_pole=per_pole)
        try:
            gv = _gamma_frozen(frozen, curve, omega)
        except GammaSampleError:
            continue
        if gv.attained_near is None:
            continue
        near = gv.attained_near
        anchored_here = (
            abs(near - s_pmax) < 1e-9 * (1 + abs(s_pmax))
            or abs(near - np.conj(s_pmax)) < 1e-9 * (1 + abs(s_pmax))
        )
        argmax_close = (
            min(
                abs(gv.argmax_t - np.imag(s_pmax)),
                abs(gv.argmax_t + np.imag(s_pmax)),
            )
            <= 2.0 * d
        )
        if anchored_here and argmax_close:
            delta_max = delta
            break

    if delta_max is None:
        return DeltaSelection(
            delta=re_max + fallback_eps,
            delta_max=None,
            fallback=True,
            candidates_tested=tested,
        )
    return DeltaSelection(
        delta=0.5 * (delta_max + re_max),
        delta_max=delta_max,
        fallback=False,
        candidates_tested=tested,
    )


def select_delta(sys: ParametricStateSpace, K, s_pmax, **kwargs) -> float:
    """Curve position for the next stabilization iteration (> Re(s_pmax))."""
    return select_delta_detailed(sys, K, s_pmax, **kwargs).delta


def stabilize(
    sys: ParametricStateSpace,
    K0,
    cfg: StabilizeConfig = StabilizeConfig(),
) -> tuple:
    """Shift all poles into the open left half-plane (Algorithm: repeat
    select-curve / minimize-Gamma until max Re(pole) < 0).

    Returns ``(K_final, TuningReport)``; ``report.status`` is
    ``"stabilized"`` on success.
    """
    K = np.atleast_1d(np.asarray(K0, dtype=float))
    report = TuningReport(K_initial=K.copy(), status=STATUS_STABILIZED)

    mu = 0
    while True:
        poles = sys.at(K).poles()
        re_max = poles.max_real
        if re_max <= 0.0:
            report.status = STATUS_STABILIZED
            break
        mu += 1
        if mu > cfg.outer_cap:
            report.status = STATUS_OUTER_CAP
            break

        t_start = time.perf_counter()
        s_pmax = poles.max_real_pole()
        sel = select_delta_detailed(
            sys, K, s_pmax,
            n_candidates=cfg.delta_candidates,
            fallback_eps=cfg.delta_fallback_eps,
            per_pole=cfg.inner.per_pole,
        )
        delta = sel.delta

        # A step counts as real progress when it removes at least
        # ``min_progress`` of the remaining instability; marginal progress
        # means the curve was too far out, so retry closer.
        target = re_max - cfg.min_progress * max(re_max, 0.01)
        best_K = None
        best_re = re_max
        best_delta = delta
        attempt = 0
        note = "fallback-delta" if sel.fallback else ""
        while attempt <= cfg.max_retries:
            try:
                K_new, inner_rep = minimize_gamma(
                    sys, K, VerticalLine(delta), cfg.inner, mu=mu
                )
            except SetupError:
                delta = re_max + cfg.retry_shrink * (delta - re_max) + 1e-6
                attempt += 1
                continue
            for rec in inner_rep.inner:
                rec.run = attempt
            report.inner.extend(inner_rep.inner)
            re_after = sys.at(K_new).poles().max_real
            if re_after < best_re:
                best_K, best_re, best_delta = K_new, re_after, delta
            if re_after <= target:
                break
            attempt += 1
            note = "retry-closer-curve"
            delta = re_max + cfg.retry_shrink * (delta - re_max)

        improved = best_K is not None
        if improved:
            K = best_K
        report.outer.append(
            OuterRecord(
                mu=mu,
                delta=best_delta,
                max_re_before=re_max,
                max_re_after=best_re,
                inner_iterations=len(
                    [r for r in report.inner if r.mu == mu]
                ),
                wall_ms=1e3 * (time.perf_counter() - t_start),
                improved=improved,
                note=note,
            )
        )
        if not improved:
            report.status = STATUS_NO_PROGRESS
            break

    report.K_final = K.copy()
    return K, report
