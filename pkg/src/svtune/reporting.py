"""Machine-readable run artifacts.

``write_report`` emits three files into the output directory:

* ``report.json``: the full tuning report (validates against
  ``schemas/report.schema.json``),
* ``iterations.csv``: one row per inner iteration with the columns
  ``mu,k,delta,gamma,max_re_pole,accepted,wall_ms``,
* ``params_final.json``: the final parameter vector with names and bounds.

Output is deterministic for a fixed report: stable field order and floats
formatted at 12 significant digits.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .tuner import TuningReport

REPORT_FORMAT = 1


def _f(x):
    """Quantize to 12 significant digits (deterministic emission)."""
    if x is None:
        return None
    x = float(x)
    if not np.isfinite(x):
        return None
    return float(f"{x:.12g}")


def _fl(xs):
    return [_f(x) for x in np.asarray(xs, dtype=float).ravel()]


def report_to_dict(report: TuningReport, meta=None) -> dict:
    """Stable-ordered dictionary form of a tuning report."""
    meta = dict(meta or {})
    outer = [
        {
            "mu": r.mu,
            "delta": _f(r.delta),
            "max_re_before": _f(r.max_re_before),
            "max_re_after": _f(r.max_re_after),
            "inner_iterations": r.inner_iterations,
            "wall_ms": _f(r.wall_ms),
            "improved": bool(r.improved),
            "note": r.note,
        }
        for r in report.outer
    ]
    inner = [
        {
            "mu": r.mu,
            "run": r.run,
            "k": r.k,
            "delta": _f(r.delta),
            "gamma_before": _f(r.gamma_before),
            "gamma_after": _f(r.gamma_after),
            "accepted": bool(r.accepted),
            "crossing": bool(r.crossing),
            "max_re_pole": _f(r.max_re_pole),
            "wall_ms": _f(r.wall_ms),
            "trust_radii": _fl(r.trust_radii),
            "omega": _fl(r.omega_ts),
            "K_after": _fl(r.K_after),
            "note": r.note,
        }
        for r in report.inner
    ]
    return {
        "format": REPORT_FORMAT,
        "status": report.status,
        "meta": meta,
        "summary": {
            "outer_iterations": len(report.outer),
            "inner_iterations": len(report.inner),
            "accepted_steps": len(report.accepted()),
            "gamma_final": _f(report.gamma_final),
            "max_re_pole_final": _f(
                report.outer[-1].max_re_after
                if report.outer
                else meta.get("max_re_pole_final", meta.get("max_re_pole"))
            ),
        },
        "outer": outer,
        "inner": inner,
        "K_initial": _fl(report.K_initial) if report.K_initial is not None else None,
        "K_final": _fl(report.K_final) if report.K_final is not None else None,
    }


def iterations_csv(report: TuningReport) -> str:
    lines = ["mu,k,delta,gamma,max_re_pole,accepted,wall_ms"]
    for r in report.inner:
        lines.append(
            f"{r.mu},{r.k},{_f(r.delta)},{_f(r.gamma_after)},"
            f"{_f(r.max_re_pole)},{int(r.accepted)},{_f(r.wall_ms)}"
        )
    return "\n".join(lines) + "\n"


def params_dict(values, names=None, lower=None, upper=None) -> dict:
    out = {"values": _fl(values)}
    if names is not None:
        out["names"] = list(names)
    if lower is not None:
        out["lower"] = _fl(lower)
    if upper is not None:
        out["upper"] = _fl(upper)
    return out


def write_report(report: TuningReport, outdir, meta=None, params=None) -> dict:
    """Write report.json, iterations.csv and params_final.json.

    Returns the paths written.  Byte-identical for identical reports.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = report_to_dict(report, meta)
    paths = {}

    p = outdir / "report.json"
    p.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    paths["report"] = p

    p = outdir / "iterations.csv"
    p.write_text(iterations_csv(report), encoding="utf-8")
    paths["iterations"] = p

    p = outdir / "params_final.json"
    final = params or {}
    if "values" not in final and report.K_final is not None:
        final = params_dict(report.K_final)
    p.write_text(json.dumps(final, indent=2) + "\n", encoding="utf-8")
    paths["params"] = p
    return paths


def load_schema() -> dict:
    """The shipped JSON schema for report.json."""
    text = resources.files("svtune").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)
