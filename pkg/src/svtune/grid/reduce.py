"""Linearize the grid DAE and eliminate the algebraic network variables.

The coupled model is

    dx/dt = f(x, z, w, K),      0 = h(x, z, w)

with x the machine/controller states, z the non-slack bus angles and
voltage magnitudes, and w the flagged static-prosumer injection
deviations.  Eliminating the linearized algebraic equations yields

    A(K) = f_x(K) - f_z(K) hz^{-1} h_x,      B(K) = -f_z(K) hz^{-1} h_w.

Only controller rows of f_x and f_z depend on K; the network Jacobians do
not, so ``hz^{-1} h_x`` and ``hz^{-1} h_w`` are factored once and the
parameter dependency survives the reduction symbolically: every evaluation
of A(K), B(K) re-assembles the controller rows at the requested K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import EliminationError
from ..systems import ParameterVector, ParametricStateSpace
from .machines import machine_local_lin
from .network import SLACK, injection_jacobians
from .powerflow import SteadyState, solve_power_flow


@dataclass(frozen=True)
class _Layout:
    state_offsets: tuple
    n_x: int
    nonslack: tuple
    z_index: dict  # bus -> (theta position, V position) within z
    n_z: int


def _layout(model) -> _Layout:
    offsets = []
    pos = 0
    for dp in model.dynamic_prosumers:
        offsets.append(pos)
        pos += dp.n_states
    nonslack = tuple(
        b for b in range(model.network.n_bus) if model.network.bus_kinds[b] != SLACK
    )
    nb = len(nonslack)
    z_index = {b: (i, nb + i) for i, b in enumerate(nonslack)}
    return _Layout(
        state_offsets=tuple(offsets),
        n_x=pos,
        nonslack=nonslack,
        z_index=z_index,
        n_z=2 * nb,
    )


def _network_hz(model, steady: SteadyState, lay: _Layout) -> np.ndarray:
    """-d(network injections)/dz for the balance rows (P then Q)."""
    dp_dth, dp_dv, dq_dth, dq_dv = injection_jacobians(
        model.network, steady.v, steady.theta
    )
    ns = list(lay.nonslack)
    hz = np.zeros((lay.n_z, lay.n_z))
    nb = len(ns)
    hz[:nb, :nb] = -dp_dth[np.ix_(ns, ns)]
    hz[:nb, nb:] = -dp_dv[np.ix_(ns, ns)]
    hz[nb:, :nb] = -dq_dth[np.ix_(ns, ns)]
    hz[nb:, nb:] = -dq_dv[np.ix_(ns, ns)]
    return hz


@dataclass
class _Assembler:
    """Caches everything K-independent; assembles f_x(K), f_z(K) on demand."""

    model: object
    steady: SteadyState
    lay: _Layout
    m_x: np.ndarray  # hz^{-1} h_x
    m_w: np.ndarray  # hz^{-1} h_w
    slot_keys: list  # (prosumer index, slot key) in global K order

    def machine_blocks(self, K):
        blocks = []
        pos = 0
        for ip, dp in enumerate(self.model.dynamic_prosumers):
            kv = K[pos: pos + dp.n_params]
            pos += dp.n_params
            blocks.append(machine_local_lin(dp, self.steady.machine_eq[ip], kv))
        return blocks

    def f_matrices(self, K):
        lay = self.lay
        f_x = np.zeros((lay.n_x, lay.n_x))
        f_z = np.zeros((lay.n_x, lay.n_z))
        for ip, (dp, loc) in enumerate(
            zip(self.model.dynamic_prosumers, self.machine_blocks(K))
        ):
            o = lay.state_offsets[ip]
            ns = dp.n_states
            f_x[o: o + ns, o: o + ns] = loc.f_x
            jt, jv = lay.z_index[dp.bus]
            f_z[o: o + ns, jt] = loc.f_z[:, 0]
            f_z[o: o + ns, jv] = loc.f_z[:, 1]
        return f_x, f_z

    def eval(self, K):
        f_x, f_z = self.f_matrices(K)
        return f_x - f_z @ self.m_x, -f_z @ self.m_w

    def jac(self, K):
        lay = self.lay
        n_k = len(self.slot_keys)
        dA = np.zeros((n_k, lay.n_x, lay.n_x))
        dB = np.zeros((n_k, lay.n_x, self.m_w.shape[1]))
        blocks = self.machine_blocks(K)
        for l, (ip, key) in enumerate(self.slot_keys):
            dp = self.model.dynamic_prosumers[ip]
            loc = blocks[ip]
            dfx_loc, dfz_loc = loc.d_params[key]
            o = self.lay.state_offsets[ip]
            ns = dp.n_states
            dfx = np.zeros((lay.n_x, lay.n_x))
            dfx[o: o + ns, o: o + ns] = dfx_loc
            dfz = np.zeros((lay.n_x, lay.n_z))
            jt, jv = lay.z_index[dp.bus]
            dfz[o: o + ns, jt] = dfz_loc[:, 0]
            dfz[o: o + ns, jv] = dfz_loc[:, 1]
            dA[l] = dfx - dfz @ self.m_x
            dB[l] = -dfz @ self.m_w
        return dA, dB


def _algebraic_blocks(model, steady: SteadyState, lay: _Layout):
    """h_z (with machine interface terms), h_x and h_w at the steady state."""
    hz = _network_hz(model, steady, lay)
    h_x = np.zeros((lay.n_z, lay.n_x))
    nominal_K = []
    for dp in model.dynamic_prosumers:
        nominal_K.extend(s.value for _, s in dp.slots())
    pos = 0
    for ip, dp in enumerate(model.dynamic_prosumers):
        kv = nominal_K[pos: pos + dp.n_params]
        pos += dp.n_params
        loc = machine_local_lin(dp, steady.machine_eq[ip], kv)
        jt, jv = lay.z_index[dp.bus]
        nb = len(lay.nonslack)
        row_p = jt  # P balance row index for this bus
        row_q = nb + jt
        o = lay.state_offsets[ip]
        ns = dp.n_states
        h_x[row_p, o: o + ns] = loc.h_x[0]
        h_x[row_q, o: o + ns] = loc.h_x[1]
        hz[row_p, jt] += loc.h_z[0, 0]
        hz[row_p, jv] += loc.h_z[0, 1]
        hz[row_q, jt] += loc.h_z[1, 0]
        hz[row_q, jv] += loc.h_z[1, 1]

    channels = list(model.disturbances)
    h_w = np.zeros((lay.n_z, len(channels)))
    nb = len(lay.nonslack)
    for col, (sp_idx, channel) in enumerate(channels):
        bus = model.static_prosumers[sp_idx].bus
        jt, _ = lay.z_index[bus]
        h_w[jt if channel == "p" else nb + jt, col] = 1.0
    return hz, h_x, h_w


def linearize_and_reduce(model, steady: SteadyState, outputs=None) -> ParametricStateSpace:
    """Reduce the linearized DAE to a parametric state space.

    Outputs are the rotor-speed deviations of the prosumers listed in
    ``outputs`` (default: the model's output list).  Raises
    :class:`EliminationError` when the algebraic Jacobian is singular,
    naming the dominant component of its near-null direction.
    """
    lay = _layout(model)
    hz, h_x, h_w = _algebraic_blocks(model, steady, lay)

    cond_check = np.linalg.svd(hz, compute_uv=False)
    if cond_check[-1] < 1e-12 * max(1.0, cond_check[0]):
        _, _, vt = np.linalg.svd(hz)
        null = vt[-1]
        j = int(np.argmax(np.abs(null)))
        nb = len(lay.nonslack)
        var = (
            f"theta@bus{lay.nonslack[j]}" if j < nb else f"V@bus{lay.nonslack[j - nb]}"
        )
        raise EliminationError(
            f"algebraic Jacobian is singular; near-null direction dominated by {var}"
        )
    lu = scipy.linalg.lu_factor(hz)
    m_x = scipy.linalg.lu_solve(lu, h_x)
    m_w = scipy.linalg.lu_solve(lu, h_w)

    slot_keys = []
    names = []
    values = []
    lower = []
    upper = []
    for ip, dp in enumerate(model.dynamic_prosumers):
        for key, slot in dp.slots():
            slot_keys.append((ip, key))
            names.append(f"p{ip}.{key}")
            values.append(slot.value)
            lower.append(slot.lower)
            upper.append(slot.upper)

    asm = _Assembler(
        model=model, steady=steady, lay=lay, m_x=m_x, m_w=m_w, slot_keys=slot_keys
    )

    if outputs is None:
        outputs = model.outputs
    C = np.zeros((len(outputs), lay.n_x))
    for row, ip in enumerate(outputs):
        C[row, lay.state_offsets[ip] + 1] = 1.0  # the speed-deviation state

    if values:
        width = np.array(upper) - np.array(lower)
        trust = 0.1 * width
        trust[~np.isfinite(trust)] = 10.0 * np.abs(np.array(values)[~np.isfinite(trust)]) + 1.0
        params = ParameterVector(
            values=values, lower=lower, upper=upper, trust_radius=trust, names=tuple(names)
        )
    else:
        params = None

    return ParametricStateSpace(
        n_x=lay.n_x,
        n_w=max(h_w.shape[1], 0),
        n_y=len(outputs),
        eval_fn=asm.eval,
        C=C,
        params=params,
        jac_fn=asm.jac if params is not None else None,
    )


def build_system(model, outputs=None) -> tuple:
    """Power flow + reduction in one call; returns (system, steady_state)."""
    steady = solve_power_flow(model)
    return linearize_and_reduce(model, steady, outputs=outputs), steady


def build_pencil(model, steady: SteadyState, K) -> tuple:
    """Unreduced descriptor pair (Abar, E) of the linearized DAE.

    The finite generalized eigenvalues of (Abar, E) equal the eigenvalues
    of the reduced A(K); used as the elimination oracle.
    """
    lay = _layout(model)
    hz, h_x, _ = _algebraic_blocks(model, steady, lay)
    asm = _Assembler(
        model=model, steady=steady, lay=lay,
        m_x=np.zeros((lay.n_z, lay.n_x)), m_w=np.zeros((lay.n_z, 0)),
        slot_keys=[],
    )
    f_x, f_z = asm.f_matrices(np.asarray(K, dtype=float))
    abar = np.block([[f_x, f_z], [h_x, hz]])
    e = np.zeros_like(abar)
    e[: lay.n_x, : lay.n_x] = np.eye(lay.n_x)
    return abar, e
