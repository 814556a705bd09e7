"""Power-system model assembly: networks, machines, power flow, reduction."""

from .network import GridNetwork, compute_injections, injection_jacobians
from .machines import (
    AvrBlock,
    DynamicProsumer,
    MachineConstants,
    ParamSlot,
    PssBlock,
    StaticProsumer,
    TgovBlock,
)
from .modelfile import (
    Bus,
    GridModel,
    Line,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from .powerflow import SteadyState, solve_power_flow
from .reduce import build_pencil, build_system, linearize_and_reduce
from .benchmarks import build_benchmark

__all__ = [
    "GridNetwork",
    "compute_injections",
    "injection_jacobians",
    "MachineConstants",
    "ParamSlot",
    "AvrBlock",
    "TgovBlock",
    "PssBlock",
    "DynamicProsumer",
    "StaticProsumer",
    "Bus",
    "Line",
    "GridModel",
    "load_model",
    "save_model",
    "model_to_dict",
    "model_from_dict",
    "SteadyState",
    "solve_power_flow",
    "linearize_and_reduce",
    "build_system",
    "build_pencil",
    "build_benchmark",
]
