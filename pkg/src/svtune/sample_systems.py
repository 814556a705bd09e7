"""Small closed-form systems used by demos and tests.

Each constructor returns a :class:`ParametricStateSpace` (some with real
tunable parameters, some constant) whose poles and gains are known exactly,
so expected values in tests can be computed independently.
"""

from __future__ import annotations

import numpy as np

from .systems import ParameterVector, ParametricStateSpace


def _companion(den):
    """Controllable-canonical A, B for a monic denominator polynomial.

    ``den`` lists the coefficients [a_0, ..., a_{n-1}] of
    s^n + a_{n-1} s^{n-1} + ... + a_0.
    """
    n = len(den)
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -np.asarray(den, dtype=float)
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    return A, B


def biproper_mimo() -> ParametricStateSpace:
    """An 8-state 2x2 transfer matrix with one biproper entry.

    Entrywise:

        [ s/((s+1)(s+2))            (s-3)/(s^2+3s+3)      ]
        [ (s^2+4s+10)/(s^2-s+1)     (s+4)/((s+1)(2s-1))   ]

    Distinct poles: -1 (multiplicity 2 in a minimal realization), -2, 0.5,
    -1.5 +- j*sqrt(3)/2, 0.5 +- j*sqrt(3)/2.  Entry (2,1) has a direct
    feedthrough of 1.
    """
    blocks = [
        # (den, num_low_to_high, out_row, in_col, feedthrough)
        ([2.0, 3.0], [0.0, 1.0], 0, 0, 0.0),  # s/(s^2+3s+2)
        ([3.0, 3.0], [-3.0, 1.0], 0, 1, 0.0),  # (s-3)/(s^2+3s+3)
        ([1.0, -1.0], [9.0, 5.0], 1, 0, 1.0),  # 1 + (5s+9)/(s^2-s+1)
        ([-0.5, 0.5], [2.0, 0.5], 1, 1, 0.0),  # 0.5(s+4)/(s^2+0.5s-0.5)
    ]
    n_x = 2 * len(blocks)
    A = np.zeros((n_x, n_x))
    B = np.zeros((n_x, 2))
    C = np.zeros((2, n_x))
    D = np.zeros((2, 2))
    for i, (den, num, row, col, feed) in enumerate(blocks):
        Ab, Bb = _companion(den)
        sl = slice(2 * i, 2 * i + 2)
        A[sl, sl] = Ab
        B[sl, [col]] = Bb
        C[row, sl] = num
        D[row, col] = feed

    def eval_fn(_K):
        return A, B

    return ParametricStateSpace(n_x=n_x, n_w=2, n_y=2, eval_fn=eval_fn, C=C, D=D)


def biproper_mimo_poles() -> list:
    """Exact distinct poles of :func:`biproper_mimo`."""
    r3 = np.sqrt(3.0) / 2.0
    return [
        -1.0,
        -2.0,
        0.5,
        complex(-1.5, r3),
        complex(-1.5, -r3),
        complex(0.5, r3),
        complex(0.5, -r3),
    ]


def scalar_lag(lower=1.0, upper=2.0, k0=1.0, trust=0.5) -> ParametricStateSpace:
    """G(K, s) = 1/(s + K): a single tunable real pole at -K."""
    params = ParameterVector(
        values=[k0], lower=[lower], upper=[upper], trust_radius=[trust], names=("k",)
    )

    def eval_fn(K):
        return np.array([[-K[0]]]), np.array([[1.0]])

    def jac_fn(_K):
        return np.array([[[-1.0]]]), np.array([[[0.0]]])

    return ParametricStateSpace(
        n_x=1, n_w=1, n_y=1, eval_fn=eval_fn, C=np.array([[1.0]]),
        params=params, jac_fn=jac_fn,
    )


def scalar_gain_lag(k0=0.0, lower=-2.0, upper=2.0, trust=1.0) -> ParametricStateSpace:
    """G(K, s) = (1 - K + 4K^2)/(s + 1).

    At K = 0 the linearized gain decreases with K while the true gain grows,
    so a full trust-region step is guaranteed to be rejected.
    """
    params = ParameterVector(
        values=[k0], lower=[lower], upper=[upper], trust_radius=[trust], names=("k",)
    )

    def gain(k):
        return 1.0 - k + 4.0 * k * k

    def eval_fn(K):
        return np.array([[-1.0]]), np.array([[gain(K[0])]])

    def jac_fn(K):
        return np.array([[[0.0]]]), np.array([[[-1.0 + 8.0 * K[0]]]])

    return ParametricStateSpace(
        n_x=1, n_w=1, n_y=1, eval_fn=eval_fn, C=np.array([[1.0]]),
        params=params, jac_fn=jac_fn,
    )


def cubic_coupling(seed=0, n_x=4) -> ParametricStateSpace:
    """Random stable base with A(K) = A0 + K1^3 * A1 and B(K) = B0 + K2 * B1.

    Exercises nonlinear parameter entry with exact analytic Jacobians
    (chain rule on the cubic), for cross-checking finite differences.
    """
    rng = np.random.default_rng(seed)
    A0 = rng.standard_normal((n_x, n_x))
    A0 = A0 - (np.max(np.linalg.eigvals(A0).real) + 1.0) * np.eye(n_x)
    A1 = 0.3 * rng.standard_normal((n_x, n_x))
    B0 = rng.standard_normal((n_x, 2))
    B1 = 0.5 * rng.standard_normal((n_x, 2))
    C = rng.standard_normal((2, n_x))
    params = ParameterVector(
        values=[0.4, -0.2], lower=[-2.0, -2.0], upper=[2.0, 2.0],
        trust_radius=[0.5, 0.5], names=("k_cubic", "k_input"),
    )

    def eval_fn(K):
        return A0 + (K[0] ** 3) * A1, B0 + K[1] * B1

    def jac_fn(K):
        dA = np.stack([3.0 * K[0] ** 2 * A1, np.zeros_like(A1)])
        dB = np.stack([np.zeros_like(B1), B1])
        return dA, dB

    return ParametricStateSpace(
        n_x=n_x, n_w=2, n_y=2, eval_fn=eval_fn, C=C, params=params, jac_fn=jac_fn
    )


def double_pole(p=-1.0) -> ParametricStateSpace:
    """G(s) = 1/(s - p)^2: one pole of multiplicity two."""
    A = np.array([[p, 1.0], [0.0, p]])
    B = np.array([[0.0], [1.0]])
    C = np.array([[1.0, 0.0]])

    def eval_fn(_K):
        return A, B

    return ParametricStateSpace(n_x=2, n_w=1, n_y=1, eval_fn=eval_fn, C=C)


def shifted_pole(d, delta=0.0) -> ParametricStateSpace:
    """G(s) = 1/(s - (delta + d)): a simple pole at distance d from the
    vertical line at ``delta``."""
    A = np.array([[delta + d]])
    B = np.array([[1.0]])
    C = np.array([[1.0]])

    def eval_fn(_K):
        return A, B

    return ParametricStateSpace(n_x=1, n_w=1, n_y=1, eval_fn=eval_fn, C=C)
