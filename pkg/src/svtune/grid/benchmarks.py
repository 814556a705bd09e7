"""Deterministic synthetic multi-machine benchmarks.

``two-area-4``: four flux-decay plants with AVR/governor/PSS in two areas
joined by a weak tie, plus an external-grid (slack) connection.
``ring-10``: ten plants around a ring with interleaved loads.

Each benchmark ships a nominal parameterization that is small-signal
stable; scaling the whole parameter vector up (1.25x/1.5x/2x) destabilizes
it, which is the protocol the tuning drivers are exercised against.
Construction is pure (no randomness): the same name and knobs always
produce bit-identical models.
"""

from __future__ import annotations

import numpy as np

from ..errors import SetupError
from .machines import (
    AvrBlock,
    DynamicProsumer,
    MachineConstants,
    ParamSlot,
    PssBlock,
    StaticProsumer,
    TgovBlock,
)
from .modelfile import Bus, GridModel, Line

BENCHMARK_NAMES = ("two-area-4", "ring-10")

# Canonical destabilized variants mirroring the scaled-parameter protocol.
VARIANT_SCALES = (1.0, 1.25, 1.5, 2.0)


def _gain_slot(name, value, scale_room=4.0):
    return ParamSlot(name=name, value=value, lower=0.02 * value, upper=scale_room * value)


def _time_slot(name, value, scale_room=4.0):
    return ParamSlot(
        name=name, value=value, lower=max(0.01, 0.1 * value), upper=scale_room * value
    )


def _plant(bus, h, d, v_set, p_disp, ka, ta, kg, tg, kp, t1, t2, t3, t4,
           xd=1.8, xdp=0.3, td0p=6.0, omega0=2.0 * np.pi * 50.0, tw=5.0):
    return DynamicProsumer(
        bus=bus,
        model="flux_decay",
        constants=MachineConstants(h=h, d=d, xd=xd, xdp=xdp, td0p=td0p, omega0=omega0),
        v_setpoint=v_set,
        p_dispatch=p_disp,
        avr=AvrBlock(gain=_gain_slot("gain", ka), time_const=_time_slot("time_const", ta)),
        tgov=TgovBlock(
            droop_gain=_gain_slot("droop_gain", kg), time_const=_time_slot("time_const", tg)
        ),
        pss=PssBlock(
            gain=_gain_slot("gain", kp),
            t_lead1=_time_slot("t_lead1", t1),
            t_lag1=_time_slot("t_lag1", t2),
            t_lead2=_time_slot("t_lead2", t3),
            t_lag2=_time_slot("t_lag2", t4),
            washout_time=tw,
        ),
    )


def _two_area(tie_x=0.9, load_scale=1.0) -> GridModel:
    buses = (
        Bus(kind="slack", v_setpoint=1.0),
        Bus(kind="dynamic"),
        Bus(kind="dynamic"),
        Bus(kind="dynamic"),
        Bus(kind="dynamic"),
        Bus(kind="static"),
        Bus(kind="static"),
    )
    lines = (
        Line(0, 5, r=0.01, x=0.35, b=0.02),
        Line(1, 5, r=0.005, x=0.15, b=0.01),
        Line(2, 5, r=0.005, x=0.15, b=0.01),
        Line(3, 6, r=0.005, x=0.15, b=0.01),
        Line(4, 6, r=0.005, x=0.15, b=0.01),
        Line(5, 6, r=0.02, x=tie_x, b=0.04),
    )
    statics = (
        StaticProsumer(bus=5, p=-1.1 * load_scale, q=-0.20 * load_scale, is_disturbance=True),
        StaticProsumer(bus=6, p=-1.3 * load_scale, q=-0.25 * load_scale, is_disturbance=True),
    )
    # The nominal set sits close to the stability boundary so the scaled
    # variants (1.25x and up) are genuinely unstable.
    plants = (
        _plant(1, h=3.2, d=1.0, v_set=1.02, p_disp=0.60,
               ka=106.7, ta=0.1164, kg=34.92, tg=0.873,
               kp=6.208, t1=0.5044, t2=0.097, t3=0.5044, t4=0.097),
        _plant(2, h=3.6, d=1.0, v_set=1.02, p_disp=0.55,
               ka=97.0, ta=0.1067, kg=38.8, tg=0.776,
               kp=5.82, t1=0.5432, t2=0.097, t3=0.5432, t4=0.097),
        _plant(3, h=4.0, d=1.0, v_set=1.01, p_disp=0.60,
               ka=116.4, ta=0.1261, kg=31.04, tg=0.97,
               kp=6.596, t1=0.4656, t2=0.0873, t3=0.4656, t4=0.0873),
        _plant(4, h=3.4, d=1.0, v_set=1.01, p_disp=0.55,
               ka=100.88, ta=0.097, kg=42.68, tg=0.8148,
               kp=6.014, t1=0.5238, t2=0.097, t3=0.5238, t4=0.097),
    )
    return GridModel(
        name="two-area-4",
        buses=buses,
        lines=lines,
        static_prosumers=statics,
        dynamic_prosumers=plants,
        outputs=(0, 1, 2, 3),
        disturbances=((0, "p"), (1, "p")),
    )


def _ring(n_plants=10, ring_x=0.4, load_scale=1.0) -> GridModel:
    # Buses 0..2n-1 alternate machine/load around the ring; the external
    # grid hangs off load bus 1.
    n_bus = 2 * n_plants + 1
    slack = 2 * n_plants
    buses = []
    for b in range(2 * n_plants):
        buses.append(Bus(kind="dynamic" if b % 2 == 0 else "static"))
    buses.append(Bus(kind="slack", v_setpoint=1.0))

    lines = []
    for b in range(2 * n_plants):
        nxt = (b + 1) % (2 * n_plants)
        x = ring_x * (1.0 + 0.05 * (b % 3))
        lines.append(Line(b, nxt, r=0.01, x=x, b=0.02))
    lines.append(Line(slack, 1, r=0.01, x=0.3, b=0.02))

    statics = []
    for i in range(n_plants):
        statics.append(
            StaticProsumer(
                bus=2 * i + 1,
                p=-0.5 * load_scale * (1.0 + 0.04 * (i % 4)),
                q=-0.10 * load_scale,
                is_disturbance=(i in (0, 5)),
            )
        )
    plants = []
    for i in range(n_plants):
        h = 3.0 + 0.3 * (i % 5)
        plants.append(
            _plant(
                2 * i,
                h=h,
                d=1.0,
                v_set=1.02 - 0.01 * (i % 2),
                p_disp=0.50 + 0.02 * (i % 3),
                ka=97.5 + 7.8 * (i % 4),
                ta=0.0975 + 0.00975 * (i % 3),
                kg=35.1 + 3.9 * (i % 3),
                tg=0.78 + 0.078 * (i % 2),
                kp=5.85 + 0.39 * (i % 3),
                t1=0.4875 + 0.0195 * (i % 2),
                t2=0.0975,
                t3=0.4875 + 0.0195 * (i % 2),
                t4=0.0975,
            )
        )
    return GridModel(
        name="ring-10",
        buses=tuple(buses),
        lines=tuple(lines),
        static_prosumers=tuple(statics),
        dynamic_prosumers=tuple(plants),
        outputs=tuple(range(n_plants)),
        disturbances=((0, "p"), (5, "p")),
    )


def build_benchmark(name, **knobs) -> tuple:
    """Construct a named benchmark.

    Returns ``(model, variants)`` where ``variants`` maps a scale factor to
    the full parameter vector ``scale * K_nominal`` (the protocol's
    destabilized starting points).
    """
    if name == "two-area-4":
        model = _two_area(**knobs)
    elif name == "ring-10":
        model = _ring(**knobs)
    else:
        raise SetupError(f"unknown benchmark {name!r}; available: {BENCHMARK_NAMES}")
    k_nominal = np.array(
        [slot.value for dp in model.dynamic_prosumers for _, slot in dp.slots()]
    )
    variants = {scale: scale * k_nominal for scale in VARIANT_SCALES}
    return model, variants
