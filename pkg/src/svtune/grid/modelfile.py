"""Versioned JSON interchange format for grid models.

Top-level sections: ``buses``, ``lines``, ``static_prosumers``,
``dynamic_prosumers``, ``outputs``, ``disturbances`` under a ``format: 1``
header.  The loader rejects unknown fields anywhere and validates all
cross-references; an optional explicit ``admittance`` section must be
consistent with the declared shunts (row sums of G + jB equal the total
shunt admittance per bus, since series terms cancel).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ModelFormatError
from .machines import (
    AvrBlock,
    DynamicProsumer,
    MachineConstants,
    ParamSlot,
    PssBlock,
    StaticProsumer,
    TgovBlock,
)
from .network import (
    BUS_KINDS,
    DYNAMIC,
    SLACK,
    STATIC,
    GridNetwork,
    build_admittance,
    declared_row_shunts,
)

FORMAT_VERSION = 1

ADMITTANCE_TOL = 1e-9


@dataclass(frozen=True)
class Bus:
    kind: str
    v_setpoint: Optional[float] = None
    shunt_g: float = 0.0
    shunt_b: float = 0.0


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b: float = 0.0


@dataclass(frozen=True)
class GridModel:
    """Validated in-memory grid model."""

    name: str
    buses: tuple
    lines: tuple
    static_prosumers: tuple
    dynamic_prosumers: tuple
    outputs: tuple  # dynamic prosumer indices whose frequency is an output
    disturbances: tuple  # (static prosumer index, "p" | "q") channels
    network: GridNetwork = None

    def __post_init__(self):
        if self.network is None:
            gc, bs = build_admittance(
                len(self.buses),
                self.lines,
                [b.shunt_g for b in self.buses],
                [b.shunt_b for b in self.buses],
            )
            object.__setattr__(
                self,
                "network",
                GridNetwork(gc=gc, bs=bs, bus_kinds=tuple(b.kind for b in self.buses)),
            )
        _validate_model(self)

    @property
    def n_bus(self) -> int:
        return len(self.buses)


def _validate_model(m: GridModel) -> None:
    n = len(m.buses)
    kinds = [b.kind for b in m.buses]
    if kinds.count(SLACK) != 1:
        raise ModelFormatError("exactly one slack bus is required")
    slack = kinds.index(SLACK)
    if m.buses[slack].v_setpoint is None:
        raise ModelFormatError("slack bus needs a v_setpoint", f"buses[{slack}]")
    for i, ln in enumerate(m.lines):
        for end in (ln.from_bus, ln.to_bus):
            if not (0 <= end < n):
                raise ModelFormatError(f"line endpoint {end} out of range", f"lines[{i}]")
        if ln.from_bus == ln.to_bus:
            raise ModelFormatError("line endpoints coincide", f"lines[{i}]")
        if ln.x == 0:
            raise ModelFormatError("line reactance must be nonzero", f"lines[{i}]")

    dyn_buses = [dp.bus for dp in m.dynamic_prosumers]
    for i, dp in enumerate(m.dynamic_prosumers):
        if not (0 <= dp.bus < n):
            raise ModelFormatError(f"bus {dp.bus} out of range", f"dynamic_prosumers[{i}]")
        if kinds[dp.bus] != DYNAMIC:
            raise ModelFormatError(
                f"bus {dp.bus} is {kinds[dp.bus]!r}, expected 'dynamic'",
                f"dynamic_prosumers[{i}]",
            )
    if len(set(dyn_buses)) != len(dyn_buses):
        raise ModelFormatError("multiple dynamic prosumers share a bus")
    for b, k in enumerate(kinds):
        if k == DYNAMIC and b not in dyn_buses:
            raise ModelFormatError(f"dynamic bus {b} has no dynamic prosumer")

    static_buses = {sp.bus for sp in m.static_prosumers}
    for i, sp in enumerate(m.static_prosumers):
        if not (0 <= sp.bus < n):
            raise ModelFormatError(f"bus {sp.bus} out of range", f"static_prosumers[{i}]")
        if kinds[sp.bus] != STATIC:
            raise ModelFormatError(
                f"bus {sp.bus} is {kinds[sp.bus]!r}, expected 'static'",
                f"static_prosumers[{i}]",
            )
    for b, k in enumerate(kinds):
        if k == STATIC and b not in static_buses:
            raise ModelFormatError(f"static bus {b} has no static prosumer")

    if not m.disturbances:
        raise ModelFormatError("at least one disturbance channel is required")
    seen = set()
    for i, (sp_idx, channel) in enumerate(m.disturbances):
        if not (0 <= sp_idx < len(m.static_prosumers)):
            raise ModelFormatError(
                f"static prosumer index {sp_idx} out of range", f"disturbances[{i}]"
            )
        if channel not in ("p", "q"):
            raise ModelFormatError(f"unknown channel {channel!r}", f"disturbances[{i}]")
        if (sp_idx, channel) in seen:
            raise ModelFormatError("duplicate disturbance channel", f"disturbances[{i}]")
        seen.add((sp_idx, channel))
    flagged = {idx for idx, _ in m.disturbances}
    for i, sp in enumerate(m.static_prosumers):
        if sp.is_disturbance != (i in flagged):
            raise ModelFormatError(
                "is_disturbance flag inconsistent with the disturbances section",
                f"static_prosumers[{i}]",
            )

    if m.dynamic_prosumers and not m.outputs:
        raise ModelFormatError("at least one frequency output is required")
    for i, ip in enumerate(m.outputs):
        if not (0 <= ip < len(m.dynamic_prosumers)):
            raise ModelFormatError(
                f"dynamic prosumer index {ip} out of range", f"outputs[{i}]"
            )

    # Row-sum consistency of the admittance with the declared shunts
    expected = declared_row_shunts(
        n, m.lines, [b.shunt_g for b in m.buses], [b.shunt_b for b in m.buses]
    )
    rows = (m.network.gc + 1j * m.network.bs).sum(axis=1)
    bad = np.abs(rows - expected) > ADMITTANCE_TOL
    if np.any(bad):
        b = int(np.argmax(bad))
        raise ModelFormatError(
            f"admittance row {b} sums to {rows[b]:.6g}, declared shunts give "
            f"{expected[b]:.6g}",
            f"buses[{b}]",
        )


# --------------------------------------------------------------------------
# dict <-> model


def _require_keys(d, allowed, required, where):
    if not isinstance(d, dict):
        raise ModelFormatError(f"expected an object, got {type(d).__name__}", where)
    for k in d:
        if k not in allowed:
            raise ModelFormatError(f"unknown field {k!r}", where)
    for k in required:
        if k not in d:
            raise ModelFormatError(f"missing field {k!r}", where)


def _slot(d, name, where) -> ParamSlot:
    _require_keys(d, {"value", "lower", "upper"}, {"value", "lower", "upper"}, where)
    try:
        return ParamSlot(
            name=name, value=float(d["value"]), lower=float(d["lower"]),
            upper=float(d["upper"]),
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc), where) from exc


def _block_from_dict(d, where):
    _require_keys(d, {"type", "params", "washout_time"}, {"type", "params"}, where)
    btype = d["type"]
    params = d["params"]
    if btype == "avr":
        _require_keys(params, {"gain", "time_const"}, {"gain", "time_const"}, where)
        return AvrBlock(
            gain=_slot(params["gain"], "gain", f"{where}.gain"),
            time_const=_slot(params["time_const"], "time_const", f"{where}.time_const"),
        )
    if btype == "tgov":
        _require_keys(params, {"droop_gain", "time_const"}, {"droop_gain", "time_const"}, where)
        return TgovBlock(
            droop_gain=_slot(params["droop_gain"], "droop_gain", f"{where}.droop_gain"),
            time_const=_slot(params["time_const"], "time_const", f"{where}.time_const"),
        )
    if btype == "pss":
        names = {"gain", "t_lead1", "t_lag1", "t_lead2", "t_lag2"}
        _require_keys(params, names, names, where)
        return PssBlock(
            gain=_slot(params["gain"], "gain", f"{where}.gain"),
            t_lead1=_slot(params["t_lead1"], "t_lead1", f"{where}.t_lead1"),
            t_lag1=_slot(params["t_lag1"], "t_lag1", f"{where}.t_lag1"),
            t_lead2=_slot(params["t_lead2"], "t_lead2", f"{where}.t_lead2"),
            t_lag2=_slot(params["t_lag2"], "t_lag2", f"{where}.t_lag2"),
            washout_time=float(d.get("washout_time", 5.0)),
        )
    raise ModelFormatError(f"unknown block type {btype!r}", where)


def model_from_dict(data) -> GridModel:
    top_allowed = {
        "format", "name", "buses", "lines", "admittance", "static_prosumers",
        "dynamic_prosumers", "outputs", "disturbances",
    }
    top_required = {
        "format", "name", "buses", "lines", "static_prosumers",
        "dynamic_prosumers", "outputs", "disturbances",
    }
    _require_keys(data, top_allowed, top_required, "model")
    if data["format"] != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format version {data['format']!r} (expected {FORMAT_VERSION})",
            "model.format",
        )

    buses = []
    for i, bd in enumerate(data["buses"]):
        where = f"buses[{i}]"
        _require_keys(bd, {"id", "kind", "v_setpoint", "shunt_g", "shunt_b"}, {"id", "kind"}, where)
        if bd["id"] != i:
            raise ModelFormatError(f"bus ids must be 0..n-1 in order, got {bd['id']}", where)
        if bd["kind"] not in BUS_KINDS:
            raise ModelFormatError(f"unknown bus kind {bd['kind']!r}", where)
        buses.append(
            Bus(
                kind=bd["kind"],
                v_setpoint=(
                    float(bd["v_setpoint"]) if bd.get("v_setpoint") is not None else None
                ),
                shunt_g=float(bd.get("shunt_g", 0.0)),
                shunt_b=float(bd.get("shunt_b", 0.0)),
            )
        )

    lines = []
    for i, ld in enumerate(data["lines"]):
        where = f"lines[{i}]"
        _require_keys(ld, {"from", "to", "r", "x", "b"}, {"from", "to", "r", "x"}, where)
        lines.append(
            Line(
                from_bus=int(ld["from"]), to_bus=int(ld["to"]),
                r=float(ld["r"]), x=float(ld["x"]), b=float(ld.get("b", 0.0)),
            )
        )

    disturbances = []
    for i, dd in enumerate(data["disturbances"]):
        where = f"disturbances[{i}]"
        _require_keys(dd, {"static_prosumer", "channel"}, {"static_prosumer", "channel"}, where)
        disturbances.append((int(dd["static_prosumer"]), str(dd["channel"])))
    flagged = {idx for idx, _ in disturbances}

    statics = []
    for i, sd in enumerate(data["static_prosumers"]):
        where = f"static_prosumers[{i}]"
        _require_keys(sd, {"bus", "p", "q"}, {"bus", "p", "q"}, where)
        statics.append(
            StaticProsumer(
                bus=int(sd["bus"]), p=float(sd["p"]), q=float(sd["q"]),
                is_disturbance=i in flagged,
            )
        )

    dynamics = []
    for i, dd in enumerate(data["dynamic_prosumers"]):
        where = f"dynamic_prosumers[{i}]"
        _require_keys(
            dd,
            {"bus", "model", "v_setpoint", "p_dispatch", "machine", "blocks"},
            {"bus", "model", "v_setpoint", "p_dispatch", "machine"},
            where,
        )
        md = dd["machine"]
        _require_keys(
            md, {"h", "d", "xd", "xdp", "td0p", "omega0"},
            {"h", "d", "xd", "xdp", "td0p", "omega0"}, f"{where}.machine",
        )
        try:
            constants = MachineConstants(
                h=float(md["h"]), d=float(md["d"]), xd=float(md["xd"]),
                xdp=float(md["xdp"]), td0p=float(md["td0p"]), omega0=float(md["omega0"]),
            )
        except ValueError as exc:
            raise ModelFormatError(str(exc), f"{where}.machine") from exc
        blocks = {"avr": None, "tgov": None, "pss": None}
        for j, bd in enumerate(dd.get("blocks", [])):
            blk = _block_from_dict(bd, f"{where}.blocks[{j}]")
            if blocks[blk.kind] is not None:
                raise ModelFormatError(
                    f"duplicate block type {blk.kind!r}", f"{where}.blocks[{j}]"
                )
            blocks[blk.kind] = blk
        try:
            dynamics.append(
                DynamicProsumer(
                    bus=int(dd["bus"]), model=str(dd["model"]), constants=constants,
                    v_setpoint=float(dd["v_setpoint"]), p_dispatch=float(dd["p_dispatch"]),
                    avr=blocks["avr"], tgov=blocks["tgov"], pss=blocks["pss"],
                )
            )
        except ValueError as exc:
            raise ModelFormatError(str(exc), where) from exc

    if not isinstance(data["outputs"], dict):
        raise ModelFormatError("outputs must be an object", "model.outputs")
    _require_keys(data["outputs"], {"frequencies"}, {"frequencies"}, "model.outputs")
    outputs = tuple(int(i) for i in data["outputs"]["frequencies"])

    network = None
    if "admittance" in data:
        ad = data["admittance"]
        _require_keys(ad, {"g", "b"}, {"g", "b"}, "model.admittance")
        gc = np.asarray(ad["g"], dtype=float)
        bs = np.asarray(ad["b"], dtype=float)
        network = GridNetwork(gc=gc, bs=bs, bus_kinds=tuple(b.kind for b in buses))

    try:
        return GridModel(
            name=str(data["name"]),
            buses=tuple(buses),
            lines=tuple(lines),
            static_prosumers=tuple(statics),
            dynamic_prosumers=tuple(dynamics),
            outputs=outputs,
            disturbances=tuple(disturbances),
            network=network,
        )
    except ModelFormatError:
        raise
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


def _slot_to_dict(slot: ParamSlot) -> dict:
    return {"value": slot.value, "lower": slot.lower, "upper": slot.upper}


def model_to_dict(m: GridModel) -> dict:
    buses = []
    for i, b in enumerate(m.buses):
        bd = {"id": i, "kind": b.kind}
        if b.v_setpoint is not None:
            bd["v_setpoint"] = b.v_setpoint
        if b.shunt_g:
            bd["shunt_g"] = b.shunt_g
        if b.shunt_b:
            bd["shunt_b"] = b.shunt_b
        buses.append(bd)
    lines = [
        {"from": ln.from_bus, "to": ln.to_bus, "r": ln.r, "x": ln.x, "b": ln.b}
        for ln in m.lines
    ]
    statics = [{"bus": sp.bus, "p": sp.p, "q": sp.q} for sp in m.static_prosumers]
    dynamics = []
    for dp in m.dynamic_prosumers:
        c = dp.constants
        dd = {
            "bus": dp.bus,
            "model": dp.model,
            "v_setpoint": dp.v_setpoint,
            "p_dispatch": dp.p_dispatch,
            "machine": {
                "h": c.h, "d": c.d, "xd": c.xd, "xdp": c.xdp,
                "td0p": c.td0p, "omega0": c.omega0,
            },
        }
        blocks = []
        if dp.avr:
            blocks.append({
                "type": "avr",
                "params": {
                    "gain": _slot_to_dict(dp.avr.gain),
                    "time_const": _slot_to_dict(dp.avr.time_const),
                },
            })
        if dp.tgov:
            blocks.append({
                "type": "tgov",
                "params": {
                    "droop_gain": _slot_to_dict(dp.tgov.droop_gain),
                    "time_const": _slot_to_dict(dp.tgov.time_const),
                },
            })
        if dp.pss:
            blocks.append({
                "type": "pss",
                "washout_time": dp.pss.washout_time,
                "params": {
                    "gain": _slot_to_dict(dp.pss.gain),
                    "t_lead1": _slot_to_dict(dp.pss.t_lead1),
                    "t_lag1": _slot_to_dict(dp.pss.t_lag1),
                    "t_lead2": _slot_to_dict(dp.pss.t_lead2),
                    "t_lag2": _slot_to_dict(dp.pss.t_lag2),
                },
            })
        if blocks:
            dd["blocks"] = blocks
        dynamics.append(dd)
    return {
        "format": FORMAT_VERSION,
        "name": m.name,
        "buses": buses,
        "lines": lines,
        "static_prosumers": statics,
        "dynamic_prosumers": dynamics,
        "outputs": {"frequencies": list(m.outputs)},
        "disturbances": [
            {"static_prosumer": idx, "channel": ch} for idx, ch in m.disturbances
        ],
    }


def load_model(path) -> GridModel:
    """Parse and validate a model file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not valid JSON: {exc}", str(path)) from exc
    return model_from_dict(data)


def save_model(m: GridModel, path) -> None:
    """Serialize with exact float round-trip."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(m), fh, indent=2)
        fh.write("\n")
