"""Newton power flow with a flat start and full steps.

Bus treatment: the slack bus fixes voltage and angle, dynamic prosumer
buses hold P and V (PV), static and passive buses hold P and Q (PQ).
Convergence is declared on the infinity norm of the mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PowerFlowError
from .machines import init_machine
from .network import DYNAMIC, SLACK, compute_injections, injection_jacobians

PF_TOL = 1e-8
PF_MAX_ITER = 50


@dataclass(frozen=True)
class SteadyState:
    """Converged operating point plus internal controller equilibria."""

    v: np.ndarray
    theta: np.ndarray
    machine_eq: tuple
    residual: float
    iterations: int


def _injection_spec(model) -> tuple:
    n = model.network.n_bus
    p_spec = np.zeros(n)
    q_spec = np.zeros(n)
    for sp in model.static_prosumers:
        p_spec[sp.bus] += sp.p
        q_spec[sp.bus] += sp.q
    for dp in model.dynamic_prosumers:
        p_spec[dp.bus] += dp.p_dispatch
    return p_spec, q_spec


def solve_power_flow(model, tol=PF_TOL, max_iter=PF_MAX_ITER) -> SteadyState:
    """Solve the network balance and initialize every machine.

    Raises :class:`PowerFlowError` when Newton does not reach ``tol``
    within ``max_iter`` iterations.
    """
    net = model.network
    n = net.n_bus
    kinds = net.bus_kinds
    slack = net.slack_bus
    pv = [i for i, k in enumerate(kinds) if k == DYNAMIC]
    pq = [i for i, k in enumerate(kinds) if k not in (SLACK, DYNAMIC)]
    nonslack = [i for i in range(n) if i != slack]

    p_spec, q_spec = _injection_spec(model)

    v = np.ones(n)
    theta = np.zeros(n)
    for b in range(n):
        if kinds[b] == SLACK:
            v[b] = model.buses[b].v_setpoint
    for dp in model.dynamic_prosumers:
        v[dp.bus] = dp.v_setpoint

    def mismatch():
        p, q = compute_injections(net, v, theta)
        return np.concatenate([p_spec[nonslack] - p[nonslack], q_spec[pq] - q[pq]])

    f = mismatch()
    res = float(np.max(np.abs(f))) if f.size else 0.0
    it = 0
    while res >= tol:
        if it >= max_iter:
            raise PowerFlowError(res, it)
        dp_dth, dp_dv, dq_dth, dq_dv = injection_jacobians(net, v, theta)
        j11 = dp_dth[np.ix_(nonslack, nonslack)]
        j12 = dp_dv[np.ix_(nonslack, pq)]
        j21 = dq_dth[np.ix_(pq, nonslack)]
        j22 = dq_dv[np.ix_(pq, pq)]
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError as exc:
            raise PowerFlowError(res, it, f"singular power-flow Jacobian: {exc}") from exc
        theta[nonslack] += dx[: len(nonslack)]
        v[pq] += dx[len(nonslack):]
        if np.any(v <= 0):
            raise PowerFlowError(res, it + 1, "voltage collapse during Newton iteration")
        f = mismatch()
        res = float(np.max(np.abs(f)))
        it += 1

    p, q = compute_injections(net, v, theta)
    machine_eq = []
    for dp in model.dynamic_prosumers:
        b = dp.bus
        q_static = sum(sp.q for sp in model.static_prosumers if sp.bus == b)
        machine_eq.append(
            init_machine(dp, v[b], theta[b], dp.p_dispatch, q[b] - q_static)
        )
    return SteadyState(
        v=v, theta=theta, machine_eq=tuple(machine_eq), residual=res, iterations=it
    )
