"""Run configuration files.

A config is an INI-style document::

    [chart]
    coords = t, r, th, ph

    [parameters]
    M = 1

    [metric]
    g[0][0] = "-(1 - 2*M/r)"
    g[0][1] = "0"
    ...                       # every upper-triangle entry, 0-based

    [distribution]
    kind = oneform            # or: span
    omega[0] = "1"            # oneform: all N components
    ...
    v[0][1] = "1"             # span: v[field][component], all N per field

    [sampling]
    kind = explicit           # or: box
    point[0] = 0, 3, pi/4, 0  # explicit points (constant expressions)
    low = ...                 # box: low, high, count, seed

    [tolerances]
    atol = 1e-10
    rtol = 1e-8

    [output]
    report = report.json
    verbosity = 1

    [oracle]
    slice = t                 # optional, used by ``verify``
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .analysis import DistributionSpec, SamplePlan, Tolerances
from .errors import ConfigError, ExprSyntaxError, UnknownIdentifierError
from .expr import _const_value, parse_expression
from .geometry import ChartSpec

SECTIONS = {
    "chart": {"coords", "name"},
    "parameters": None,
    "metric": None,
    "distribution": None,
    "sampling": None,
    "tolerances": {"atol", "rtol"},
    "output": {"report", "verbosity"},
    "oracle": {"slice"},
}
REQUIRED = ("chart", "metric", "distribution", "sampling")

_G_KEY = re.compile(r"^g\[(\d+)\]\[(\d+)\]$")
_OMEGA_KEY = re.compile(r"^omega\[(\d+)\]$")
_V_KEY = re.compile(r"^v\[(\d+)\]\[(\d+)\]$")
_POINT_KEY = re.compile(r"^point\[(\d+)\]$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")
_INT = re.compile(r"^[+-]?\d+$")


@dataclass(frozen=True)
class RunConfig:
    name: str
    chart: ChartSpec
    distribution: DistributionSpec
    plan: SamplePlan
    tolerances: Tolerances
    report_path: str | None
    verbosity: int
    slice_index: int | None
    digest: str


def bundled_configs():
    root = resources.files("cfoliation") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def resolve_config(ref: str):
    """``(name, text)`` for a file path or the name of a bundled config."""
    path = Path(ref)
    if path.is_file():
        return path.stem, path.read_text(encoding="utf-8")
    stem = ref[:-4] if ref.endswith(".ini") else ref
    res = resources.files("cfoliation") / "configs" / f"{stem}.ini"
    if res.is_file():
        return stem, res.read_text(encoding="utf-8")
    raise ConfigError(f"no such config file or bundled config: {ref!r}", "config")


def parse_config(ref: str) -> RunConfig:
    name, text = resolve_config(ref)
    return parse_config_text(text, name)


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _expr(text, key, coords, params):
    try:
        return parse_expression(text, coords, params)
    except (ExprSyntaxError, UnknownIdentifierError) as exc:
        raise ConfigError(f"{exc}: {text!r}", key) from None


def _number(text, key, params, kind=float):
    if kind is int and _INT.match(_unquote(text)):
        return int(_unquote(text))
    ast = _expr(_unquote(text), key, (), tuple(params))
    val = _const_value(ast, params)
    if val is None:
        raise ConfigError(f"cannot evaluate {text!r} to a number", key)
    if kind is int:
        if val != int(val):
            raise ConfigError(f"expected an integer, got {text!r}", key)
        return int(val)
    return float(val)


def _vector(text, key, params, n):
    parts = [p for p in _unquote(text).split(",")]
    if len(parts) != n:
        raise ConfigError(f"expected {n} comma-separated values, got {len(parts)}", key)
    return [_number(p, key, params) for p in parts]


def parse_config_text(text: str, name: str = "config") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", sec)
        allowed = SECTIONS[sec]
        if allowed is not None:
            for key in cp[sec]:
                if key not in allowed:
                    raise ConfigError(f"unknown key {key!r}", f"{sec}.{key}")
    for sec in REQUIRED:
        if not cp.has_section(sec):
            raise ConfigError(f"missing section [{sec}]", sec)

    if "coords" not in cp["chart"]:
        raise ConfigError("missing coordinate list", "chart.coords")
    coords = tuple(c.strip() for c in cp["chart"]["coords"].split(","))
    if len(coords) < 2 or any(not _NAME.match(c) for c in coords):
        raise ConfigError("coords must list at least two identifiers", "chart.coords")
    if len(set(coords)) != len(coords):
        raise ConfigError("duplicate coordinate name", "chart.coords")
    n = len(coords)
    name = cp["chart"].get("name", name)

    params = {}
    if cp.has_section("parameters"):
        for key, raw in cp["parameters"].items():
            if not _NAME.match(key):
                raise ConfigError("parameter names must be identifiers", f"parameters.{key}")
            if key in coords:
                raise ConfigError(f"{key!r} is declared as both coordinate and parameter",
                                  f"parameters.{key}")
            params[key] = _number(raw, f"parameters.{key}", params)
    pnames = tuple(params)

    entries = {}
    for key, raw in cp["metric"].items():
        m = _G_KEY.match(key)
        if not m:
            raise ConfigError("metric keys must look like g[i][j]", f"metric.{key}")
        i, j = int(m.group(1)), int(m.group(2))
        if i >= n or j >= n:
            raise ConfigError(f"index out of range for N={n}", f"metric.{key}")
        a, b = min(i, j), max(i, j)
        if (a, b) in entries:
            raise ConfigError("entry given twice (metric is symmetric)", f"metric.{key}")
        entries[(a, b)] = _expr(_unquote(raw), f"metric.{key}", coords, pnames)
    for i in range(n):
        for j in range(i, n):
            if (i, j) not in entries:
                raise ConfigError("missing metric entry", f"metric.g[{i}][{j}]")
    rows = tuple(tuple(entries[(min(i, j), max(i, j))] for j in range(n)) for i in range(n))
    chart = ChartSpec(n, coords, params, rows)

    dist = _parse_distribution(cp["distribution"], chart, pnames)
    plan = _parse_sampling(cp["sampling"], n, params)

    tol = Tolerances()
    if cp.has_section("tolerances"):
        sec = cp["tolerances"]
        atol = _number(sec["atol"], "tolerances.atol", params) if "atol" in sec else tol.atol
        rtol = _number(sec["rtol"], "tolerances.rtol", params) if "rtol" in sec else tol.rtol
        if atol < 0 or rtol < 0:
            raise ConfigError("tolerances must be non-negative", "tolerances")
        tol = Tolerances(atol, rtol)

    report_path, verbosity = None, 1
    if cp.has_section("output"):
        report_path = _unquote(cp["output"].get("report", "")) or None
        if "verbosity" in cp["output"]:
            verbosity = _number(cp["output"]["verbosity"], "output.verbosity", {}, int)

    slice_index = None
    if cp.has_section("oracle") and "slice" in cp["oracle"]:
        s = cp["oracle"]["slice"].strip()
        if s in coords:
            slice_index = coords.index(s)
        elif s.isdigit() and int(s) < n:
            slice_index = int(s)
        else:
            raise ConfigError(f"unknown slice coordinate {s!r}", "oracle.slice")

    digest = "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()
    return RunConfig(name, chart, dist, plan, tol, report_path, verbosity, slice_index, digest)


def _parse_distribution(sec, chart, pnames):
    n, coords = chart.n, chart.coords
    kind = sec.get("kind", "").strip()
    if kind == "oneform":
        comps = {}
        for key, raw in sec.items():
            if key == "kind":
                continue
            m = _OMEGA_KEY.match(key)
            if not m or int(m.group(1)) >= n:
                raise ConfigError("expected omega[i] with 0 <= i < N", f"distribution.{key}")
            comps[int(m.group(1))] = _expr(_unquote(raw), f"distribution.{key}", coords, pnames)
        for i in range(n):
            if i not in comps:
                raise ConfigError("missing 1-form component", f"distribution.omega[{i}]")
        return DistributionSpec("oneform", omega=tuple(comps[i] for i in range(n)))
    if kind == "span":
        comps = {}
        for key, raw in sec.items():
            if key == "kind":
                continue
            m = _V_KEY.match(key)
            if not m or int(m.group(2)) >= n:
                raise ConfigError("expected v[k][i] with 0 <= i < N", f"distribution.{key}")
            comps[(int(m.group(1)), int(m.group(2)))] = _expr(
                _unquote(raw), f"distribution.{key}", coords, pnames)
        count = 1 + max((k for k, _ in comps), default=-1)
        if not 1 <= count <= n - 1:
            raise ConfigError(f"span needs 1..{n - 1} fields", "distribution")
        for k in range(count):
            for i in range(n):
                if (k, i) not in comps:
                    raise ConfigError("missing vector field component", f"distribution.v[{k}][{i}]")
        fields = tuple(tuple(comps[(k, i)] for i in range(n)) for k in range(count))
        return DistributionSpec("span", fields=fields)
    raise ConfigError("kind must be 'oneform' or 'span'", "distribution.kind")


def _parse_sampling(sec, n, params):
    kind = sec.get("kind", "explicit").strip()
    if kind == "explicit":
        pts = {}
        for key, raw in sec.items():
            if key == "kind":
                continue
            m = _POINT_KEY.match(key)
            if not m:
                raise ConfigError("expected point[k] entries", f"sampling.{key}")
            pts[int(m.group(1))] = _vector(raw, f"sampling.{key}", params, n)
        if not pts:
            raise ConfigError("no sample points given", "sampling")
        return SamplePlan.explicit([pts[k] for k in sorted(pts)])
    if kind == "box":
        for key in ("low", "high", "count"):
            if key not in sec:
                raise ConfigError("missing box setting", f"sampling.{key}")
        for key in sec:
            if key not in ("kind", "low", "high", "count", "seed"):
                raise ConfigError("unknown key for box sampling", f"sampling.{key}")
        low = _vector(sec["low"], "sampling.low", params, n)
        high = _vector(sec["high"], "sampling.high", params, n)
        count = _number(sec["count"], "sampling.count", params, int)
        seed = _number(sec.get("seed", "0"), "sampling.seed", params, int)
        try:
            return SamplePlan.box(low, high, count, seed)
        except ValueError as exc:
            raise ConfigError(str(exc), "sampling") from None
    raise ConfigError("kind must be 'explicit' or 'box'", "sampling.kind")
