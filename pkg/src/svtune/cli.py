"""Command-line front end.

Commands:

* ``analyze``: load a model, report its poles, no tuning.
* ``stabilize``: shift all poles into the open left half-plane.
* ``minimize-gamma``: one curve, one minimization run (``--delta``).
* ``pk-baseline``: the Lyapunov coordinate-descent comparison method.

Exit codes: 0 when the command's goal was achieved, 1 on setup errors
(bad model, bad flags), 2 on tuning failure (artifacts still written).
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .curves import VerticalLine
from .errors import SvtuneError
from .grid import build_benchmark, build_system, load_model
from .pk_baseline import PKConfig, pk_stabilize
from .reporting import _f, params_dict, write_report
from .tuner import Alg1Config, StabilizeConfig, TuningReport, minimize_gamma, stabilize

EXIT_OK = 0
EXIT_SETUP = 1
EXIT_FAILURE = 2


@dataclass(frozen=True)
class RunConfig:
    """Parsed invocation; exactly one of benchmark/model must be set."""

    command: str
    benchmark: Optional[str] = None
    model_path: Optional[str] = None
    scale: float = 1.0
    out_dir: str = "svtune-out"
    alpha: float = 0.5
    k_max: int = 10
    rel_tol: float = 1e-3
    outer_cap: int = 50
    delta: Optional[float] = None
    seed: Optional[int] = None  # recorded only; the pipeline is deterministic

    def __post_init__(self):
        if (self.benchmark is None) == (self.model_path is None):
            raise SvtuneError("exactly one model source (benchmark or model path) required")
        if self.scale <= 0:
            raise SvtuneError("scaling factor must be positive")


def parse_model(path):
    """Load and validate a model file (CLI surface for the grid loader)."""
    return load_model(path)


def _load(cfg: RunConfig):
    if cfg.benchmark is not None:
        model, variants = build_benchmark(cfg.benchmark)
        k_nominal = variants[1.0]
    else:
        model = parse_model(cfg.model_path)
        k_nominal = np.array(
            [slot.value for dp in model.dynamic_prosumers for _, slot in dp.slots()]
        )
    sys_, steady = build_system(model)
    K0 = cfg.scale * k_nominal
    sys_.params.check_inside(K0)
    return model, sys_, K0


def _meta(cfg: RunConfig, extra=None) -> dict:
    meta = {
        "command": cfg.command,
        "source": cfg.benchmark or cfg.model_path,
        "scale": _f(cfg.scale),
        "config": {
            "alpha": _f(cfg.alpha),
            "k_max": cfg.k_max,
            "rel_tol": _f(cfg.rel_tol),
            "outer_cap": cfg.outer_cap,
        },
    }
    if cfg.seed is not None:
        meta["seed"] = cfg.seed
    if cfg.delta is not None:
        meta["delta"] = _f(cfg.delta)
    meta.update(extra or {})
    return meta


def _params_payload(sys_, K) -> dict:
    return params_dict(
        K, names=sys_.params.names, lower=sys_.params.lower, upper=sys_.params.upper
    )


def run(cfg: RunConfig) -> int:
    """Execute one command and write artifacts into the output directory."""
    try:
        return _run(cfg)
    except (SvtuneError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_SETUP


def _run(cfg: RunConfig) -> int:
    model, sys_, K0 = _load(cfg)

    outdir = Path(cfg.out_dir)
    inner_cfg = Alg1Config(k_max=cfg.k_max, alpha=cfg.alpha, rel_tol=cfg.rel_tol)

    if cfg.command == "analyze":
        poles = sys_.at(K0).poles()
        report = TuningReport(status="analyzed", K_initial=K0, K_final=K0)
        doc_extra = {
            "poles": [
                {"re": _f(p.real), "im": _f(p.imag), "multiplicity": m}
                for p, m in zip(poles.poles, poles.multiplicities)
            ],
            "max_re_pole": _f(poles.max_real),
            "stable": bool(poles.max_real < 0),
        }
        paths = write_report(
            report, outdir, meta=_meta(cfg, doc_extra), params=_params_payload(sys_, K0)
        )
        doc = json.loads(paths["report"].read_text())
        doc["poles"] = doc_extra["poles"]
        paths["report"].write_text(json.dumps(doc, indent=2) + "\n")
        print(f"poles: {poles.n_distinct} distinct, max Re = {poles.max_real:+.6g}")
        return EXIT_OK

    if cfg.command == "stabilize":
        K, report = stabilize(
            sys_, K0, StabilizeConfig(inner=inner_cfg, outer_cap=cfg.outer_cap)
        )
        final_re = sys_.at(K).poles().max_real
        write_report(
            report, outdir,
            meta=_meta(cfg, {"max_re_pole_final": _f(final_re)}),
            params=_params_payload(sys_, K),
        )
        print(
            f"status: {report.status}, outer iterations: {len(report.outer)}, "
            f"final max Re = {final_re:+.6g}"
        )
        return EXIT_OK if report.status == "stabilized" else EXIT_FAILURE

    if cfg.command == "minimize-gamma":
        if cfg.delta is None:
            print("error: minimize-gamma requires --delta", file=_sys.stderr)
            return EXIT_SETUP
        try:
            K, report = minimize_gamma(sys_, K0, VerticalLine(cfg.delta), inner_cfg)
        except SvtuneError as exc:
            print(f"error: {exc}", file=_sys.stderr)
            return EXIT_SETUP
        write_report(report, outdir, meta=_meta(cfg), params=_params_payload(sys_, K))
        print(f"status: {report.status}, Gamma = {report.gamma_final:.6g}")
        achieved = report.status in ("converged", "max-iterations") and (
            not report.accepted() or report.gamma_final <= report.inner[0].gamma_before
        )
        return EXIT_OK if achieved else EXIT_FAILURE

    if cfg.command == "pk-baseline":
        result = pk_stabilize(
            sys_, K0, PKConfig(outer_cap=cfg.outer_cap, alpha=cfg.alpha)
        )
        report = TuningReport(status=result.status, K_initial=K0, K_final=result.K_final)
        final_re = sys_.at(result.K_final).poles().max_real
        paths = write_report(
            report, outdir,
            meta=_meta(cfg, {"method": "pk", "max_re_pole_final": _f(final_re)}),
            params=_params_payload(sys_, result.K_final),
        )
        doc = json.loads(paths["report"].read_text())
        doc["pk_iterations"] = [
            {
                "mu": r.mu,
                "beta": _f(r.beta),
                "max_re_before": _f(r.max_re_before),
                "max_re_after": _f(r.max_re_after),
                "accepted": bool(r.accepted),
                "wall_ms": _f(r.wall_ms),
            }
            for r in result.iterations
        ]
        paths["report"].write_text(json.dumps(doc, indent=2) + "\n")
        print(
            f"status: {result.status}, outer iterations: {result.outer_iterations}, "
            f"final max Re = {final_re:+.6g}"
        )
        return EXIT_OK if result.status == "stabilized" else EXIT_FAILURE

    print(f"error: unknown command {cfg.command!r}", file=_sys.stderr)
    return EXIT_SETUP


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svtune",
        description=(
            "Tune structured controller parameters by minimizing the largest "
            "singular value of the closed-loop response along movable curves "
            "in the complex plane."
        ),
    )
    parser.add_argument("--version", action="version", version=f"svtune {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--benchmark", help="builtin benchmark name (two-area-4, ring-10)")
        src.add_argument("--model", dest="model_path", help="path to a model file (JSON, format 1)")
        p.add_argument("--scale", type=float, default=1.0,
                       help="multiply the nominal parameter vector (default 1.0)")
        p.add_argument("--out", dest="out_dir", default="svtune-out",
                       help="output directory for report.json / iterations.csv / params_final.json")
        p.add_argument("--alpha", type=float, default=0.5,
                       help="trust-region shrink factor in (0,1) (default 0.5)")
        p.add_argument("--kmax", dest="k_max", type=int, default=10,
                       help="max inner iterations per curve (default 10)")
        p.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-3,
                       help="relative improvement convergence threshold (default 1e-3)")
        p.add_argument("--outer-cap", dest="outer_cap", type=int, default=50,
                       help="max outer iterations (default 50)")
        p.add_argument("--seed", type=int, default=None,
                       help="seed recorded in the report (runs are deterministic)")

    p = sub.add_parser("analyze", help="compute poles, no tuning")
    common(p)
    p = sub.add_parser("stabilize", help="shift all poles into the left half-plane")
    common(p)
    p = sub.add_parser("minimize-gamma", help="minimize Gamma along one vertical line")
    common(p)
    p.add_argument("--delta", type=float, required=True,
                   help="real-axis position of the vertical optimization curve")
    p = sub.add_parser("pk-baseline", help="Lyapunov PK-iteration comparison method")
    common(p)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    kwargs = {k: v for k, v in vars(args).items() if k != "version"}
    try:
        cfg = RunConfig(**kwargs)
    except SvtuneError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_SETUP
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
