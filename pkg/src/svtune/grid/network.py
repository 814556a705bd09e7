"""Bus admittance network and the power flow injection equations.

All quantities are per-unit on a common system base; angles in radians.
The injections at bus i are

    P_i = sum_j V_i V_j (G_ij cos(th_i - th_j) + B_ij sin(th_i - th_j))
    Q_i = sum_j V_i V_j (G_ij sin(th_i - th_j) - B_ij cos(th_i - th_j)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError

SLACK = "slack"
DYNAMIC = "dynamic"
STATIC = "static"
PASSIVE = "passive"

BUS_KINDS = (SLACK, DYNAMIC, STATIC, PASSIVE)


@dataclass(frozen=True)
class GridNetwork:
    """Conductance/susceptance matrices plus the per-bus attachment kind."""

    gc: np.ndarray
    bs: np.ndarray
    bus_kinds: tuple

    def __post_init__(self):
        gc = np.asarray(self.gc, dtype=float)
        bs = np.asarray(self.bs, dtype=float)
        n = gc.shape[0]
        if gc.shape != (n, n) or bs.shape != (n, n):
            raise ShapeError("admittance matrices must be square and equal-sized")
        if not np.allclose(gc, gc.T, atol=1e-12) or not np.allclose(bs, bs.T, atol=1e-12):
            raise ShapeError("admittance matrices must be symmetric")
        if len(self.bus_kinds) != n:
            raise ShapeError("bus_kinds length does not match matrix size")
        for k in self.bus_kinds:
            if k not in BUS_KINDS:
                raise ShapeError(f"unknown bus kind {k!r}")
        object.__setattr__(self, "gc", gc)
        object.__setattr__(self, "bs", bs)
        object.__setattr__(self, "bus_kinds", tuple(self.bus_kinds))

    @property
    def n_bus(self) -> int:
        return self.gc.shape[0]

    @property
    def slack_bus(self) -> int:
        return self.bus_kinds.index(SLACK)


def _check_vectors(net: GridNetwork, v, theta):
    v = np.asarray(v, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if v.shape != (net.n_bus,) or theta.shape != (net.n_bus,):
        raise ShapeError(
            f"voltage vectors must have length {net.n_bus}, "
            f"got {v.shape} and {theta.shape}"
        )
    if np.any(v <= 0):
        raise ShapeError("voltage magnitudes must be positive")
    return v, theta


def compute_injections(net: GridNetwork, v, theta) -> tuple:
    """Active and reactive power injected into every bus."""
    v, theta = _check_vectors(net, v, theta)
    dth = theta[:, None] - theta[None, :]
    m1 = net.gc * np.cos(dth) + net.bs * np.sin(dth)
    m2 = net.gc * np.sin(dth) - net.bs * np.cos(dth)
    p = v * (m1 @ v)
    q = v * (m2 @ v)
    return p, q


def injection_jacobians(net: GridNetwork, v, theta) -> tuple:
    """Partials (dP/dth, dP/dV, dQ/dth, dQ/dV) of the injections.

    Full n_bus x n_bus matrices; callers slice away slack columns.
    """
    v, theta = _check_vectors(net, v, theta)
    dth = theta[:, None] - theta[None, :]
    cs = np.cos(dth)
    sn = np.sin(dth)
    g = net.gc
    b = net.bs

    vv = v[:, None] * v[None, :]
    # Off-diagonal terms
    dp_dth = vv * (g * sn - b * cs)
    dq_dth = vv * (-g * cs - b * sn)
    dp_dv = v[:, None] * (g * cs + b * sn)
    dq_dv = v[:, None] * (g * sn - b * cs)

    p, q = compute_injections(net, v, theta)
    n = net.n_bus
    idx = np.arange(n)
    # Diagonals from the standard identities
    dp_dth[idx, idx] = -q - (v ** 2) * np.diag(b)
    dq_dth[idx, idx] = p - (v ** 2) * np.diag(g)
    dp_dv[idx, idx] = p / v + v * np.diag(g)
    dq_dv[idx, idx] = q / v - v * np.diag(b)
    return dp_dth, dp_dv, dq_dth, dq_dv


def build_admittance(n_bus, lines, shunt_g, shunt_b) -> tuple:
    """Assemble G_c, B_s from pi-model lines and per-bus shunts."""
    y = np.zeros((n_bus, n_bus), dtype=complex)
    for ln in lines:
        ys = 1.0 / complex(ln.r, ln.x)
        i, j = ln.from_bus, ln.to_bus
        y[i, i] += ys + 0.5j * ln.b
        y[j, j] += ys + 0.5j * ln.b
        y[i, j] -= ys
        y[j, i] -= ys
    y += np.diag(np.asarray(shunt_g, dtype=float) + 1j * np.asarray(shunt_b, dtype=float))
    return y.real.copy(), y.imag.copy()


def declared_row_shunts(n_bus, lines, shunt_g, shunt_b) -> np.ndarray:
    """Expected row sums of G_c + jB_s (series terms cancel, shunts remain)."""
    tot = np.asarray(shunt_g, dtype=float) + 1j * np.asarray(shunt_b, dtype=float)
    tot = tot.astype(complex).copy()
    for ln in lines:
        tot[ln.from_bus] += 0.5j * ln.b
        tot[ln.to_bus] += 0.5j * ln.b
    return tot
