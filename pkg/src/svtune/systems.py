"""Parametric linear systems: evaluation, frequency response, poles.

A system is given by matrices ``A(K)``, ``B(K)`` with an arbitrary (possibly
nonlinear) dependency on a parameter vector ``K``, a constant output matrix
``C`` and an optional constant feedthrough ``D``.  The transfer matrix is

    G(K, s) = C (sI - A(K))^{-1} B(K) + D.

Evaluation closures are supplied by the caller (the grid builder composes
them from block diagrams); this module owns the generic numerics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import (
    BoundsViolationError,
    EvaluationError,
    NearSingularError,
    NumericalError,
)

# Relative guard distance below which a frequency point counts as sitting on
# an eigenvalue of A.
NEAR_SINGULAR_GUARD = 1e-10

# Absolute clustering tolerance used to assign eigenvalue multiplicities.
MULTIPLICITY_TOL = 1e-7

_BOUNDS_SLACK = 1e-12


def _as_float_vector(x, name):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class ParameterVector:
    """Tunable parameters with box bounds and per-component trust radii.

    ``lower``/``upper`` entries may be ``-inf``/``+inf``.  All four vectors
    share the same length; ``names`` is optional metadata used in reports.
    """

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    trust_radius: np.ndarray
    names: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _as_float_vector(self.values, "values"))
        object.__setattr__(self, "lower", _as_float_vector(self.lower, "lower"))
        object.__setattr__(self, "upper", _as_float_vector(self.upper, "upper"))
        object.__setattr__(
            self, "trust_radius", _as_float_vector(self.trust_radius, "trust_radius")
        )
        n = self.values.size
        for nm in ("lower", "upper", "trust_radius"):
            if getattr(self, nm).size != n:
                raise ValueError(f"{nm} has length {getattr(self, nm).size}, expected {n}")
        if self.names is not None:
            names = tuple(self.names)
            if len(names) != n:
                raise ValueError("names length mismatch")
            object.__setattr__(self, "names", names)
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if not np.all(self.trust_radius > 0):
            raise ValueError("trust_radius must be positive componentwise")
        self.check_inside(self.values)

    @property
    def size(self) -> int:
        return self.values.size

    def check_inside(self, k) -> None:
        """Raise :class:`BoundsViolationError` if ``k`` leaves the box."""
        k = _as_float_vector(k, "K")
        if k.size != self.size:
            raise BoundsViolationError(
                f"parameter vector has length {k.size}, expected {self.size}"
            )
        slack = _BOUNDS_SLACK * (1.0 + np.abs(self.values))
        low_bad = k < self.lower - slack
        high_bad = k > self.upper + slack
        if np.any(low_bad) or np.any(high_bad):
            idx = int(np.argmax(low_bad | high_bad))
            name = self.names[idx] if self.names else f"K[{idx}]"
            raise BoundsViolationError(
                f"{name}={k[idx]} outside box [{self.lower[idx]}, {self.upper[idx]}]"
            )

    def with_values(self, values) -> "ParameterVector":
        return ParameterVector(values, self.lower, self.upper, self.trust_radius, self.names)

    def with_trust(self, trust_radius) -> "ParameterVector":
        return ParameterVector(self.values, self.lower, self.upper, trust_radius, self.names)

    def clip(self, k) -> np.ndarray:
        """Project ``k`` onto the box."""
        return np.clip(_as_float_vector(k, "K"), self.lower, self.upper)


@dataclass(frozen=True)
class TransferSample:
    """Value of the transfer matrix at one complex point."""

    s: complex
    G: np.ndarray


@dataclass(frozen=True)
class PoleSet:
    """Eigenvalues of A with algebraic multiplicities.

    Representatives are sorted by descending real part (ties by descending
    imaginary part); multiplicities come from clustering within
    :data:`MULTIPLICITY_TOL`.
    """

    poles: tuple
    multiplicities: tuple

    @property
    def n_states(self) -> int:
        return int(sum(self.multiplicities))

    @property
    def n_distinct(self) -> int:
        return len(self.poles)

    def expanded(self) -> np.ndarray:
        """All eigenvalues repeated by multiplicity."""
        return np.array(
            [p for p, m in zip(self.poles, self.multiplicities) for _ in range(m)]
        )

    def values(self) -> np.ndarray:
        return np.array(self.poles)

    def max_real_pole(self) -> complex:
        return self.poles[0]

    @property
    def max_real(self) -> float:
        return float(np.real(self.poles[0]))

    def spread(self) -> float:
        """Diameter of the pole set in the complex plane."""
        v = self.values()
        if v.size == 1:
            return 0.0
        return float(np.max(np.abs(v[:, None] - v[None, :])))


@dataclass(frozen=True)
class PoleLocalModel:
    """Local magnitude model sigma_max(G(s)) ~= a / |s - s_p|**n_p."""

    s_p: complex
    n_p: int
    a: float

    def __post_init__(self):
        if self.n_p < 1:
            raise ValueError("multiplicity must be >= 1")
        if self.a < 0:
            raise ValueError("amplitude must be nonnegative")

    def predict(self, s) -> float:
        return self.a / abs(s - self.s_p) ** self.n_p


class FrozenStateSpace:
    """System matrices materialized at a fixed parameter vector.

    Caches the eigenvalues of A so repeated frequency evaluations share the
    conditioning guard.  Immutable once constructed.
    """

    def __init__(self, A, B, C, D=None):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.C = np.asarray(C, dtype=float)
        n_x = self.A.shape[0]
        if self.A.shape != (n_x, n_x):
            raise EvaluationError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n_x:
            raise EvaluationError("B row count does not match A")
        if self.C.shape[1] != n_x:
            raise EvaluationError("C column count does not match A")
        if D is None:
            D = np.zeros((self.C.shape[0], self.B.shape[1]))
        self.D = np.asarray(D, dtype=float)
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise EvaluationError("D shape does not match C, B")
        self._eigvals = None

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_w(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def eigenvalues(self) -> np.ndarray:
        if self._eigvals is None:
            try:
                self._eigvals = np.linalg.eigvals(self.A)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(
                    f"eigensolver failed on {self.n_x}x{self.n_x} A matrix: {exc}"
                ) from exc
        return self._eigvals

    def guard_distance(self, s) -> float:
        """Distance from ``s`` to the nearest eigenvalue of A."""
        return float(np.min(np.abs(self.eigenvalues() - s)))

    def check_guard(self, s) -> None:
        eig = self.eigenvalues()
        d = np.abs(eig - s)
        i = int(np.argmin(d))
        if d[i] < NEAR_SINGULAR_GUARD * (1.0 + abs(s)):
            raise NearSingularError(s, eig[i])

    def response(self, s) -> np.ndarray:
        """G(s) = C (sI - A)^{-1} B + D via a linear solve."""
        self.check_guard(s)
        n = self.n_x
        M = s * np.eye(n) - self.A
        try:
            X = np.linalg.solve(M, self.B.astype(complex))
        except np.linalg.LinAlgError as exc:
            raise NearSingularError(s, None, f"resolvent solve failed at s={s}") from exc
        return self.C @ X + self.D

    def poles(self) -> PoleSet:
        return cluster_poles(self.eigenvalues())

    def is_real(self) -> bool:
        return True  # A, B, C, D are coerced to real on construction


@dataclass(frozen=True)
class ParametricStateSpace:
    """State-space family A(K), B(K) with constant C (and optional D).

    ``eval_fn`` maps a parameter vector to ``(A, B)``; ``jac_fn`` optionally
    maps it to stacked parameter sensitivities ``(dA, dB)`` with shapes
    ``(n_k, n_x, n_x)`` and ``(n_k, n_x, n_w)``.  Evaluation must be
    deterministic; instances are immutable and safe to share across threads.
    """

    n_x: int
    n_w: int
    n_y: int
    eval_fn: Callable[[np.ndarray], tuple]
    C: np.ndarray
    D: Optional[np.ndarray] = None
    params: Optional[ParameterVector] = None
    jac_fn: Optional[Callable[[np.ndarray], tuple]] = None

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.shape != (self.n_y, self.n_x):
            raise EvaluationError(f"C has shape {C.shape}, expected {(self.n_y, self.n_x)}")
        object.__setattr__(self, "C", C)
        if self.D is not None:
            D = np.asarray(self.D, dtype=float)
            if D.shape != (self.n_y, self.n_w):
                raise EvaluationError(f"D has shape {D.shape}, expected {(self.n_y, self.n_w)}")
            object.__setattr__(self, "D", D)

    @property
    def n_k(self) -> int:
        if self.params is None:
            raise ValueError("system has no parameter metadata")
        return self.params.size

    def at(self, K, check_bounds=True) -> FrozenStateSpace:
        """Evaluate A(K), B(K) and freeze the realization."""
        K = np.atleast_1d(np.asarray(K, dtype=float))
        if check_bounds and self.params is not None:
            self.params.check_inside(K)
        A, B = self.eval_fn(K)
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        if A.shape != (self.n_x, self.n_x) or B.shape != (self.n_x, self.n_w):
            raise EvaluationError(
                f"eval returned shapes A{A.shape}, B{B.shape}; expected "
                f"({self.n_x},{self.n_x}) and ({self.n_x},{self.n_w})"
            )
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise EvaluationError("eval returned non-finite entries")
        return FrozenStateSpace(A, B, self.C, self.D)

    def jacobians(self, K) -> tuple:
        if self.jac_fn is None:
            raise ValueError("system does not provide analytic parameter Jacobians")
        dA, dB = self.jac_fn(np.asarray(K, dtype=float))
        return np.asarray(dA, dtype=float), np.asarray(dB, dtype=float)


@dataclass(frozen=True)
class LinearizedResponse:
    """First-order model of G(K, s) around ``base_K`` at the point ``s``.

    ``sensitivities[l]`` is dG/dK_l, so

        G_L(K, s) = base_G + sum_l (K_l - base_K_l) * sensitivities[l].
    """

    base_K: np.ndarray
    s: complex
    base_G: np.ndarray
    sensitivities: np.ndarray
    method: str = "analytic"

    def predict(self, K) -> np.ndarray:
        dK = np.asarray(K, dtype=float) - self.base_K
        return self.base_G + np.tensordot(dK, self.sensitivities, axes=1)


@dataclass(frozen=True)
class StepPolicy:
    """How parameter sensitivities are computed.

    ``method``: "auto" uses the analytic route when the system provides
    coefficient Jacobians and central differences otherwise.  ``step`` fixes
    an absolute finite-difference step; when None the default is
    ``max(min_step, rel_step * |K_l|)`` per component.
    """

    method: str = "auto"
    step: Optional[float] = None
    rel_step: float = 1e-6
    min_step: float = 1e-6

    def steps(self, K) -> np.ndarray:
        if self.step is not None:
            return np.full(np.shape(K), float(self.step))
        return np.maximum(self.min_step, self.rel_step * np.abs(K))


def eval_state_space(sys: ParametricStateSpace, K) -> tuple:
    """Evaluate (A, B) at K, enforcing box bounds and finiteness."""
    frozen = sys.at(K)
    return frozen.A, frozen.B


def frequency_response(sys: ParametricStateSpace, K, s) -> TransferSample:
    """Exact transfer matrix at one complex point (linear solve, no inverse)."""
    frozen = sys.at(K)
    return TransferSample(s=complex(s), G=frozen.response(s))


def compute_poles(sys: ParametricStateSpace, K) -> PoleSet:
    """Eigenvalues of A(K) with multiplicities, sorted by descending Re."""
    return sys.at(K).poles()


def cluster_poles(eigvals, tol=MULTIPLICITY_TOL) -> PoleSet:
    """Group eigenvalues within ``tol`` into poles with multiplicities."""
    eigvals = np.asarray(eigvals, dtype=complex)
    order = np.lexsort((-eigvals.imag, -eigvals.real))
    remaining = list(eigvals[order])
    reps = []
    mults = []
    while remaining:
        seed = remaining.pop(0)
        cluster = [seed]
        keep = []
        for e in remaining:
            if abs(e - np.mean(cluster)) <= tol:
                cluster.append(e)
            else:
                keep.append(e)
        remaining = keep
        reps.append(complex(np.mean(cluster)))
        mults.append(len(cluster))
    order = np.lexsort((-np.imag(reps), -np.real(reps)))
    reps = [reps[i] for i in order]
    mults = [mults[i] for i in order]
    return PoleSet(poles=tuple(reps), multiplicities=tuple(mults))


def _resolvent_sensitivities(frozen: FrozenStateSpace, s, dA, dB) -> np.ndarray:
    """dG_l = C (sI-A)^{-1} (dA_l X + dB_l) with X = (sI-A)^{-1} B."""
    n = frozen.n_x
    M = s * np.eye(n) - frozen.A
    lu, piv = scipy.linalg.lu_factor(M)
    X = scipy.linalg.lu_solve((lu, piv), frozen.B.astype(complex))
    # C (sI-A)^{-1} = ((sI-A)^T)^{-1} C^T)^T  (plain transpose, complex M)
    Y = scipy.linalg.lu_solve((lu, piv), frozen.C.T.astype(complex), trans=1).T
    inner = dA @ X + dB  # (n_k, n_x, n_w)
    return np.einsum("ij,ljk->lik", Y, inner)


def linearize_response(
    sys: ParametricStateSpace,
    K0,
    s,
    step_policy: StepPolicy = StepPolicy(),
) -> LinearizedResponse:
    """Affine-in-K model of the frequency response at one point.

    Uses the resolvent identity when the system exposes coefficient
    Jacobians, central finite differences otherwise; the chosen route is
    recorded in the result.
    """
    K0 = np.atleast_1d(np.asarray(K0, dtype=float))
    frozen = sys.at(K0)
    frozen.check_guard(s)
    base_G = frozen.response(s)

    method = step_policy.method
    if method == "auto":
        method = "analytic" if sys.jac_fn is not None else "central_fd"
    if method == "analytic":
        dA, dB = sys.jacobians(K0)
        sens = _resolvent_sensitivities(frozen, s, dA, dB)
        return LinearizedResponse(K0, complex(s), base_G, sens, method="analytic")
    if method != "central_fd":
        raise ValueError(f"unknown sensitivity method {method!r}")

    steps = step_policy.steps(K0)
    sens = np.zeros((K0.size, sys.n_y, sys.n_w), dtype=complex)
    for l in range(K0.size):
        h = steps[l]
        kp = K0.copy()
        kp[l] += h
        km = K0.copy()
        km[l] -= h
        # The box is an optimization constraint, not an evaluation domain:
        # probing +-h at the boundary is legitimate.
        gp = sys.at(kp, check_bounds=False).response(s)
        gm = sys.at(km, check_bounds=False).response(s)
        sens[l] = (gp - gm) / (2.0 * h)
    return LinearizedResponse(K0, complex(s), base_G, sens, method="central_fd")


def linearize_responses(
    sys: ParametricStateSpace,
    K0,
    points,
    step_policy: StepPolicy = StepPolicy(),
) -> list:
    """Linearize at one anchor for many frequency points at once.

    Shares the parameter Jacobians (analytic route) or the perturbed
    evaluations (finite-difference route) across all points; equivalent to
    calling :func:`linearize_response` per point.
    """
    K0 = np.atleast_1d(np.asarray(K0, dtype=float))
    frozen = sys.at(K0)
    method = step_policy.method
    if method == "auto":
        method = "analytic" if sys.jac_fn is not None else "central_fd"

    if method == "analytic":
        dA, dB = sys.jacobians(K0)
        out = []
        for s in points:
            frozen.check_guard(s)
            base_G = frozen.response(s)
            sens = _resolvent_sensitivities(frozen, s, dA, dB)
            out.append(LinearizedResponse(K0, complex(s), base_G, sens, method="analytic"))
        return out
    if method != "central_fd":
        raise ValueError(f"unknown sensitivity method {method!r}")

    steps = step_policy.steps(K0)
    base = []
    for s in points:
        frozen.check_guard(s)
        base.append(frozen.response(s))
    sens = np.zeros((len(points), K0.size, sys.n_y, sys.n_w), dtype=complex)
    for l in range(K0.size):
        h = steps[l]
        kp = K0.copy()
        kp[l] += h
        km = K0.copy()
        km[l] -= h
        fp = sys.at(kp, check_bounds=False)
        fm = sys.at(km, check_bounds=False)
        for i, s in enumerate(points):
            sens[i, l] = (fp.response(s) - fm.response(s)) / (2.0 * h)
    return [
        LinearizedResponse(K0, complex(s), base[i], sens[i], method="central_fd")
        for i, s in enumerate(points)
    ]


def fit_pole_local_model(
    sys: ParametricStateSpace,
    K,
    s_p,
    r_inner=1e-4,
    r_outer=1e-2,
    n_samples=12,
    direction=None,
) -> tuple:
    """Fit sigma_max(G(s)) ~= a/|s-s_p|**n_p on a ray approaching ``s_p``.

    Returns ``(PoleLocalModel, fitted_slope)`` where the slope is the raw
    log-log fit (close to ``-n_p`` near a pole of multiplicity ``n_p``).
    """
    frozen = sys.at(K)
    if direction is None:
        direction = np.exp(1j * 0.37)
    radii = np.logspace(np.log10(r_inner), np.log10(r_outer), n_samples)
    sig = []
    for r in radii:
        G = frozen.response(s_p + r * direction)
        sig.append(np.linalg.svd(G, compute_uv=False)[0])
    slope, intercept = np.polyfit(np.log(radii), np.log(sig), 1)
    n_p = max(1, int(round(-slope)))
    a = float(np.exp(intercept))
    return PoleLocalModel(s_p=complex(s_p), n_p=n_p, a=a), float(slope)


def from_matrices(A, B, C, D=None, params: Optional[ParameterVector] = None) -> ParametricStateSpace:
    """A parameter-independent system (zero sensitivities everywhere)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    n_x = A.shape[0]
    n_w = B.shape[1]
    n_k = params.size if params is not None else 0

    def eval_fn(_K):
        return A, B

    def jac_fn(_K):
        return (
            np.zeros((n_k, n_x, n_x)),
            np.zeros((n_k, n_x, n_w)),
        )

    return ParametricStateSpace(
        n_x=n_x,
        n_w=n_w,
        n_y=C.shape[0],
        eval_fn=eval_fn,
        C=C,
        D=D,
        params=params,
        jac_fn=jac_fn if params is not None else None,
    )
