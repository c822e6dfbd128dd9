"""Report assembly and serialization.

Reports are JSON objects.  Floats are written with 17 significant digits
(``%.17g``) so every value round-trips exactly; non-finite floats become
``null``.  Keys keep insertion order, so identical runs give identical
bytes apart from the trailing ``timing`` member.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import __version__
from .analysis import PointRecord, Verdict

SCHEMA_VERSION = 1
EVIDENCE_NOTE = (
    "pointwise evidence only: each record certifies the obstruction at that point; "
    "no claim is made about points that were not sampled"
)


def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = "%.17g" % x
    if all(c not in text for c in ".en"):
        text += ".0"
    return text


def dumps(obj, indent: int = 2) -> str:
    """Serialize ``obj`` (dicts, lists, tuples, str, int, float, bool, None)."""
    out = []
    _write(obj, out, 0, indent)
    return "".join(out) + "\n"


def _write(obj, out, level, indent):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(str(k)) + ": ")
            _write(v, out, level + 1, indent)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            out.append("[")
            for i, v in enumerate(seq):
                _write(v, out, level + 1, indent)
                if i < len(seq) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _write(v, out, level + 1, indent)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def loads(text: str):
    return json.loads(text)


def _names(index, coords):
    return None if index is None else [coords[i] for i in index]


def point_record(rec: PointRecord, coords) -> dict:
    return {
        "index": rec.index,
        "point": list(rec.point),
        "status": rec.status,
        "case": rec.case,
        "pass": rec.passed,
        "residual": rec.residual,
        "scale": rec.scale,
        "threshold": rec.threshold,
        "worst_component": _names(rec.component, coords),
        "failing_components": [_names(c, coords) for c in rec.failing_components],
        "flat_residual": rec.flat_residual,
        "flat_scale": rec.flat_scale,
        "flat_pass": rec.flat_pass,
        "nondegeneracy": rec.nondegeneracy,
        "projector_residual": rec.projector_residual,
        "skipped_reason": rec.skipped_reason,
    }


def header(command, config) -> dict:
    chart = config.chart
    return {
        "tool": "cfoliation",
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": {"name": config.name, "digest": config.digest},
        "chart": {"n": chart.n, "coords": list(chart.coords), "params": dict(chart.params)},
        "distribution": {
            "kind": config.distribution.kind,
            "leaf_dimension": config.distribution.leaf_dim(chart.n),
            "obstruction": "Pi-projected (B^||(Pi) and T^||(Pi); B^||(P) denotes the same object)",
        },
    }


def analysis_report(config, verdict: Verdict, tolerances, exit_code: int, seconds: float) -> dict:
    coords = config.chart.coords
    rep = header("analyze", config)
    rep["tolerances"] = {"atol": tolerances.atol, "rtol": tolerances.rtol,
                         "decisive_factor": tolerances.decisive_factor}
    rep["evidence"] = EVIDENCE_NOTE
    rep["points"] = [point_record(r, coords) for r in verdict.records]
    rep["verdict"] = {
        "aggregate": verdict.aggregate,
        "flatness": verdict.flatness,
        "explanation": verdict.explanation,
        "exit_code": exit_code,
    }
    rep["diagnostics"] = verdict.diagnostics
    rep["timing"] = {"seconds": seconds}
    return rep


def without_timing(text: str) -> dict:
    data = loads(text)
    data.pop("timing", None)
    return data
