"""Dynamic prosumers: generator models and tunable controller blocks.

Two generator models are supported:

* ``classical``: constant voltage behind transient reactance, states
  (rotor angle, speed deviation).  No controller blocks.
* ``flux_decay``: third-order one-axis model, states (rotor angle, speed
  deviation, transient EMF), optionally extended by an exciter/AVR (one
  state), a governor (one state) and a washout + double lead-lag power
  system stabilizer acting on the AVR input (three states).

The stator/network interface is the usual voltage-behind-reactance pair

    P = E V sin(delta - th) / X',   Q = (E V cos(delta - th) - V^2) / X'.

Block coefficients enter the state matrices through products and
reciprocals of the tunable parameters (gains and time constants), so the
parameter dependency of the assembled system is nonlinear.  Every block
also exposes the exact partial derivatives of its coefficient rows with
respect to its own parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

CLASSICAL = "classical"
FLUX_DECAY = "flux_decay"


@dataclass(frozen=True)
class MachineConstants:
    """Per-unit machine data (inertia in seconds, speed base in rad/s)."""

    h: float
    d: float
    xd: float
    xdp: float
    td0p: float
    omega0: float

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("inertia must be positive")
        if self.xdp <= 0:
            raise ValueError("transient reactance must be positive")


@dataclass(frozen=True)
class ParamSlot:
    """One tunable scalar with its box bounds."""

    name: str
    value: float
    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower <= self.value <= self.upper):
            raise ValueError(
                f"slot {self.name}: value {self.value} outside "
                f"[{self.lower}, {self.upper}]"
            )


@dataclass(frozen=True)
class AvrBlock:
    """First-order exciter: Ta dEfd/dt = Ka (Vref - V + v_pss) - Efd."""

    gain: ParamSlot
    time_const: ParamSlot

    kind = "avr"
    n_states = 1

    def slots(self):
        return [("avr.gain", self.gain), ("avr.time_const", self.time_const)]


@dataclass(frozen=True)
class TgovBlock:
    """First-order governor: Tg dPm/dt = Pref - Kg w - Pm."""

    droop_gain: ParamSlot
    time_const: ParamSlot

    kind = "tgov"
    n_states = 1

    def slots(self):
        return [("tgov.droop_gain", self.droop_gain), ("tgov.time_const", self.time_const)]


@dataclass(frozen=True)
class PssBlock:
    """Washout + two lead-lag stages feeding the AVR voltage input.

    Transfer function Kp * (s Tw)/(1 + s Tw) * (1+s T1)/(1+s T2)
    * (1+s T3)/(1+s T4); the washout time constant is fixed.
    """

    gain: ParamSlot
    t_lead1: ParamSlot
    t_lag1: ParamSlot
    t_lead2: ParamSlot
    t_lag2: ParamSlot
    washout_time: float = 5.0

    kind = "pss"
    n_states = 3

    def slots(self):
        return [
            ("pss.gain", self.gain),
            ("pss.t_lead1", self.t_lead1),
            ("pss.t_lag1", self.t_lag1),
            ("pss.t_lead2", self.t_lead2),
            ("pss.t_lag2", self.t_lag2),
        ]


@dataclass(frozen=True)
class StaticProsumer:
    """Pure power injection; optionally a disturbance input channel."""

    bus: int
    p: float
    q: float
    is_disturbance: bool = False


@dataclass(frozen=True)
class DynamicProsumer:
    """A power plant: generator plus its ordered tunable blocks."""

    bus: int
    model: str
    constants: MachineConstants
    v_setpoint: float
    p_dispatch: float
    avr: Optional[AvrBlock] = None
    tgov: Optional[TgovBlock] = None
    pss: Optional[PssBlock] = None

    def __post_init__(self):
        if self.model not in (CLASSICAL, FLUX_DECAY):
            raise ValueError(f"unknown machine model {self.model!r}")
        if self.model == CLASSICAL and (self.avr or self.tgov or self.pss):
            raise ValueError("classical machines carry no controller blocks")
        if self.pss is not None and self.avr is None:
            raise ValueError("a PSS requires an AVR to act on")
        if self.v_setpoint <= 0:
            raise ValueError("voltage setpoint must be positive")

    @property
    def blocks(self) -> tuple:
        return tuple(b for b in (self.avr, self.tgov, self.pss) if b is not None)

    @property
    def state_names(self) -> tuple:
        if self.model == CLASSICAL:
            return ("delta", "omega")
        names = ["delta", "omega", "eq"]
        if self.avr:
            names.append("efd")
        if self.tgov:
            names.append("pm")
        if self.pss:
            names.extend(["pss_wash", "pss_ll1", "pss_ll2"])
        return tuple(names)

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def slots(self):
        out = []
        for b in self.blocks:
            out.extend(b.slots())
        return out

    @property
    def n_params(self) -> int:
        return len(self.slots())


@dataclass(frozen=True)
class MachineEquilibrium:
    """Internal operating point derived from the bus phasor and dispatch."""

    delta0: float
    e0: float  # E'q for flux decay, constant E for classical
    efd0: float
    pm0: float
    id0: float
    pe0: float
    qe0: float
    vref: float
    pref: float
    v0: float
    th0: float


def init_machine(pros: DynamicProsumer, v, th, p, q) -> MachineEquilibrium:
    """Steady state of one machine given its terminal conditions.

    The AVR/governor references absorb the parameter values so the state
    equilibrium itself does not move when K is retuned.
    """
    c = pros.constants
    vph = v * np.exp(1j * th)
    iph = (p - 1j * q) / np.conj(vph)
    eph = vph + 1j * c.xdp * iph
    delta0 = float(np.angle(eph))
    e0 = float(np.abs(eph))
    phi = delta0 - th
    id0 = (e0 - v * np.cos(phi)) / c.xdp
    pe0 = e0 * v * np.sin(phi) / c.xdp
    qe0 = (e0 * v * np.cos(phi) - v * v) / c.xdp
    if pros.model == FLUX_DECAY:
        efd0 = e0 + (c.xd - c.xdp) * id0
    else:
        efd0 = e0
    vref = v + (efd0 / pros.avr.gain.value if pros.avr else 0.0)
    return MachineEquilibrium(
        delta0=delta0, e0=e0, efd0=efd0, pm0=pe0, id0=id0,
        pe0=pe0, qe0=qe0, vref=vref, pref=pe0, v0=v, th0=th,
    )


@dataclass
class MachineLocalLin:
    """Local Jacobian blocks of one prosumer at its equilibrium.

    ``f_x``: (n_s, n_s) state rows; ``f_z``: (n_s, 2) columns for the bus
    (theta, V); ``h_x``: (2, n_s) and ``h_z``: (2, 2) partials of the
    injected (P, Q).  ``d_params`` maps slot keys to (df_x, df_z).
    """

    f_x: np.ndarray
    f_z: np.ndarray
    h_x: np.ndarray
    h_z: np.ndarray
    d_params: dict


def machine_local_lin(pros: DynamicProsumer, eq: MachineEquilibrium, kvals) -> MachineLocalLin:
    """Assemble local Jacobians; ``kvals`` orders as ``pros.slots()``."""
    c = pros.constants
    ns = pros.n_states
    names = pros.state_names
    ix = {n: i for i, n in enumerate(names)}
    f_x = np.zeros((ns, ns))
    f_z = np.zeros((ns, 2))  # columns: theta_bus, V_bus
    h_x = np.zeros((2, ns))
    h_z = np.zeros((2, 2))
    d_params = {key: (np.zeros((ns, ns)), np.zeros((ns, 2))) for key, _ in pros.slots()}

    kmap = {key: float(val) for (key, _), val in zip(pros.slots(), kvals)}

    v = eq.v0
    phi = eq.delta0 - eq.th0
    sph, cph = np.sin(phi), np.cos(phi)
    e = eq.e0
    xdp = c.xdp

    # Electrical power / current partials (flux-decay: wrt eq as well)
    pe_d = e * v * cph / xdp
    pe_e = v * sph / xdp
    pe_v = e * sph / xdp
    id_d = v * sph / xdp
    id_e = 1.0 / xdp
    id_v = -cph / xdp

    two_h = 2.0 * c.h

    # Rotor angle and speed
    f_x[ix["delta"], ix["omega"]] = c.omega0
    f_x[ix["omega"], ix["delta"]] = -pe_d / two_h
    f_x[ix["omega"], ix["omega"]] = -c.d / two_h
    f_z[ix["omega"], 0] = pe_d / two_h  # d(-pe)/d(theta) = +pe_d
    f_z[ix["omega"], 1] = -pe_v / two_h
    if pros.model == FLUX_DECAY:
        f_x[ix["omega"], ix["eq"]] = -pe_e / two_h

        # Flux decay
        dx = c.xd - c.xdp
        f_x[ix["eq"], ix["delta"]] = -dx * id_d / c.td0p
        f_x[ix["eq"], ix["eq"]] = (-1.0 - dx * id_e) / c.td0p
        f_z[ix["eq"], 0] = dx * id_d / c.td0p
        f_z[ix["eq"], 1] = -dx * id_v / c.td0p
        if pros.avr:
            f_x[ix["eq"], ix["efd"]] = 1.0 / c.td0p
    if pros.tgov:
        f_x[ix["omega"], ix["pm"]] = 1.0 / two_h

    # Injection interface (P row then Q row)
    h_x[0, ix["delta"]] = pe_d
    h_z[0, 0] = -pe_d
    h_z[0, 1] = pe_v
    h_x[1, ix["delta"]] = -e * v * sph / xdp
    h_z[1, 0] = e * v * sph / xdp
    h_z[1, 1] = (e * cph - 2.0 * v) / xdp
    if pros.model == FLUX_DECAY:
        h_x[0, ix["eq"]] = v * sph / xdp
        h_x[1, ix["eq"]] = v * cph / xdp

    if pros.avr:
        ka = kmap["avr.gain"]
        ta = kmap["avr.time_const"]
        i_efd = ix["efd"]
        f_x[i_efd, i_efd] = -1.0 / ta
        f_z[i_efd, 1] = -ka / ta
        dka_fx, dka_fz = d_params["avr.gain"]
        dta_fx, dta_fz = d_params["avr.time_const"]
        dta_fx[i_efd, i_efd] = 1.0 / ta ** 2
        dka_fz[i_efd, 1] = -1.0 / ta
        dta_fz[i_efd, 1] = ka / ta ** 2

        if pros.pss:
            kp = kmap["pss.gain"]
            t1 = kmap["pss.t_lead1"]
            t2 = kmap["pss.t_lag1"]
            t3 = kmap["pss.t_lead2"]
            t4 = kmap["pss.t_lag2"]
            r1 = t1 / t2
            r2 = t3 / t4
            i_w, i_x1, i_x2, i_x3 = ix["omega"], ix["pss_wash"], ix["pss_ll1"], ix["pss_ll2"]

            # v_pss = r2 (r1 kp (w - x1) + (1 - r1) x2) + (1 - r2) x3
            f_x[i_efd, i_w] = ka * kp * r1 * r2 / ta
            f_x[i_efd, i_x1] = -ka * kp * r1 * r2 / ta
            f_x[i_efd, i_x2] = ka * r2 * (1.0 - r1) / ta
            f_x[i_efd, i_x3] = ka * (1.0 - r2) / ta

            dkp_fx = d_params["pss.gain"][0]
            dt1_fx = d_params["pss.t_lead1"][0]
            dt2_fx = d_params["pss.t_lag1"][0]
            dt3_fx = d_params["pss.t_lead2"][0]
            dt4_fx = d_params["pss.t_lag2"][0]

            # AVR row partials through v_pss
            for col, sign in ((i_w, 1.0), (i_x1, -1.0)):
                dka_fx[i_efd, col] = sign * kp * r1 * r2 / ta
                dta_fx[i_efd, col] = -sign * ka * kp * r1 * r2 / ta ** 2
                dkp_fx[i_efd, col] = sign * ka * r1 * r2 / ta
                dt1_fx[i_efd, col] = sign * ka * kp * r2 / (t2 * ta)
                dt2_fx[i_efd, col] = -sign * ka * kp * t1 * r2 / (t2 ** 2 * ta)
                dt3_fx[i_efd, col] = sign * ka * kp * r1 / (t4 * ta)
                dt4_fx[i_efd, col] = -sign * ka * kp * r1 * t3 / (t4 ** 2 * ta)
            dka_fx[i_efd, i_x2] = r2 * (1.0 - r1) / ta
            dta_fx[i_efd, i_x2] = -ka * r2 * (1.0 - r1) / ta ** 2
            dt1_fx[i_efd, i_x2] = -ka * r2 / (t2 * ta)
            dt2_fx[i_efd, i_x2] = ka * r2 * t1 / (t2 ** 2 * ta)
            dt3_fx[i_efd, i_x2] = ka * (1.0 - r1) / (t4 * ta)
            dt4_fx[i_efd, i_x2] = -ka * (1.0 - r1) * t3 / (t4 ** 2 * ta)
            dka_fx[i_efd, i_x3] = (1.0 - r2) / ta
            dta_fx[i_efd, i_x3] = -ka * (1.0 - r2) / ta ** 2
            dt3_fx[i_efd, i_x3] = -ka / (t4 * ta)
            dt4_fx[i_efd, i_x3] = ka * t3 / (t4 ** 2 * ta)

            # Washout (fixed time constant)
            tw = pros.pss.washout_time
            f_x[i_x1, i_w] = 1.0 / tw
            f_x[i_x1, i_x1] = -1.0 / tw

            # First lead-lag: dx2/dt = (kp (w - x1) - x2)/t2
            f_x[i_x2, i_w] = kp / t2
            f_x[i_x2, i_x1] = -kp / t2
            f_x[i_x2, i_x2] = -1.0 / t2
            dkp_fx[i_x2, i_w] = 1.0 / t2
            dkp_fx[i_x2, i_x1] = -1.0 / t2
            dt2_fx[i_x2, i_w] = -kp / t2 ** 2
            dt2_fx[i_x2, i_x1] = kp / t2 ** 2
            dt2_fx[i_x2, i_x2] = 1.0 / t2 ** 2

            # Second lead-lag: dx3/dt = (r1 kp (w - x1) + (1 - r1) x2 - x3)/t4
            f_x[i_x3, i_w] = r1 * kp / t4
            f_x[i_x3, i_x1] = -r1 * kp / t4
            f_x[i_x3, i_x2] = (1.0 - r1) / t4
            f_x[i_x3, i_x3] = -1.0 / t4
            dkp_fx[i_x3, i_w] = r1 / t4
            dkp_fx[i_x3, i_x1] = -r1 / t4
            dt1_fx[i_x3, i_w] = kp / (t2 * t4)
            dt1_fx[i_x3, i_x1] = -kp / (t2 * t4)
            dt1_fx[i_x3, i_x2] = -1.0 / (t2 * t4)
            dt2_fx[i_x3, i_w] = -kp * t1 / (t2 ** 2 * t4)
            dt2_fx[i_x3, i_x1] = kp * t1 / (t2 ** 2 * t4)
            dt2_fx[i_x3, i_x2] = t1 / (t2 ** 2 * t4)
            dt4_fx[i_x3, i_w] = -r1 * kp / t4 ** 2
            dt4_fx[i_x3, i_x1] = r1 * kp / t4 ** 2
            dt4_fx[i_x3, i_x2] = -(1.0 - r1) / t4 ** 2
            dt4_fx[i_x3, i_x3] = 1.0 / t4 ** 2

    if pros.tgov:
        kg = kmap["tgov.droop_gain"]
        tg = kmap["tgov.time_const"]
        i_pm = ix["pm"]
        i_w = ix["omega"]
        f_x[i_pm, i_w] = -kg / tg
        f_x[i_pm, i_pm] = -1.0 / tg
        dkg_fx = d_params["tgov.droop_gain"][0]
        dtg_fx = d_params["tgov.time_const"][0]
        dkg_fx[i_pm, i_w] = -1.0 / tg
        dtg_fx[i_pm, i_w] = kg / tg ** 2
        dtg_fx[i_pm, i_pm] = 1.0 / tg ** 2

    return MachineLocalLin(f_x=f_x, f_z=f_z, h_x=h_x, h_z=h_z, d_params=d_params)
