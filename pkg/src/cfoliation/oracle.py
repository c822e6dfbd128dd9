"""Intrinsic ground truth for coordinate-slice foliations.

For leaves ``x^k = const`` the first fundamental form is the metric with
row and column ``k`` deleted and ``x^k`` frozen.  The oracle builds that
chart and evaluates its Weyl, Ricci and Cotton-type tensors with the
plain Levi-Civita kernels, never touching the bi-conformal code.  The
pipeline side uses the distribution ``Span{d_i : i != k}``, whose leaf
projection has exactly the leaf-coordinate components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .biconformal import evaluate_point, projectors_from_span
from .expr import const, substitute_coordinate
from .geometry import (
    ChartSpec,
    christoffel,
    covariant_derivative,
    metric_at,
    ricci,
    riemann,
    scalar_curv,
    weyl,
)
from .tensor import permute, scale_by_jet

# T^|| slot i corresponds to Weyl slot SLOT_MAP[i]; identity was confirmed
# numerically (the reversed map (2, 1, 0, 3) fails on generic metrics).
SLOT_MAP = (0, 1, 2, 3)
DEFAULT_FLOOR = 1e-9


@dataclass(frozen=True)
class SliceSpec:
    k: int
    c: float


def induced_chart(chart: ChartSpec, k: int, c: float) -> ChartSpec:
    """The ``(N-1)``-dimensional chart on the leaf ``x^k = c``."""
    if not 0 <= k < chart.n:
        raise IndexError(f"slice index {k} out of range for N={chart.n}")
    if chart.n - 1 < 2:
        raise ValueError("induced chart needs N >= 3")
    keep = [i for i in range(chart.n) if i != k]
    remap = {old: new for new, old in enumerate(keep)}
    rows = tuple(
        tuple(substitute_coordinate(chart.metric[i][j], k, float(c), remap) for j in keep)
        for i in keep
    )
    return ChartSpec(chart.n - 1, tuple(chart.coords[i] for i in keep), dict(chart.params), rows)


def slice_fields(n: int, k: int):
    """Constant coordinate fields ``d_i``, ``i != k``, as expression vectors."""
    zero, one = const(0.0), const(1.0)
    return [[one if a == i else zero for a in range(n)] for i in range(n) if i != k]


def slice_projectors(k):
    def build(chart, point, order, metric):
        return projectors_from_span(slice_fields(chart.n, k), chart, point, order, metric)
    return build


@dataclass
class OracleComparison:
    deviation: float
    worst_point: tuple | None = None
    worst_index: tuple | None = None
    per_point: list = field(default_factory=list)


def _leaf_block(data, keep):
    return data[np.ix_(*([keep] * data.ndim))]


def _finish(records):
    if not records:
        return OracleComparison(0.0)
    worst = max(records, key=lambda r: r["deviation"])
    return OracleComparison(worst["deviation"], worst["point"], worst["index"], records)


def _record(point, diff, scale, floor, off_leaf=0.0):
    idx = np.unravel_index(int(np.argmax(np.abs(diff))), diff.shape) if diff.size else ()
    err = max(float(np.max(np.abs(diff))) if diff.size else 0.0, off_leaf)
    return {
        "point": tuple(float(x) for x in point),
        "index": tuple(int(i) for i in idx),
        "residual": err,
        "scale": scale,
        "deviation": err / max(scale, floor),
    }


def _intrinsic(chart, k, point):
    point = np.asarray(point, dtype=float)
    sub = induced_chart(chart, k, point[k])
    q = np.delete(point, k)
    h, h_inv = metric_at(sub, q, 3)
    lc = christoffel(h, h_inv)
    riem = riemann(lc)
    ric = ricci(riem)
    scal = scalar_curv(ric, h_inv)
    return sub, h, h_inv, lc, riem, ric, scal


def compare_T(chart: ChartSpec, k: int, points, slot_map=SLOT_MAP, floor=DEFAULT_FLOOR,
              **pipeline_opts) -> OracleComparison:
    """Max relative deviation of ``T^||`` from twice the induced Weyl tensor.

    The relative scale at a point is ``max(|2 W|, |2 Riem|)`` of the leaf
    metric, floored at ``floor``.
    The contravariant ``x^k`` components of ``T^||`` must vanish and are
    folded into the residual.
    """
    if chart.n - 1 < 4:
        raise ValueError("compare_T needs leaves of dimension >= 4")
    keep = [i for i in range(chart.n) if i != k]
    records = []
    for point in points:
        res = evaluate_point(chart, point, slice_projectors(k), with_B=False, **pipeline_opts)
        T = res.obstructions.T_parallel.value
        _, h, h_inv, _, riem, ric, scal = _intrinsic(chart, k, point)
        W = weyl(riem.truncate(0), ric.truncate(0), scal, h.truncate(0), h_inv.truncate(0),
                 chart.n - 1)
        target = 2.0 * permute(W, slot_map).value
        diff = _leaf_block(T, keep) - target
        off = float(np.max(np.abs(T[..., k])))
        scale = max(float(np.max(np.abs(target))), 2.0 * riem.truncate(0).max_abs())
        records.append(_record(point, diff, scale, floor, off))
    return _finish(records)


def intrinsic_L(h, h_inv, ric, scal, n_leaf):
    """``L = 2 Ric + R h / (1 - n)`` of a leaf metric."""
    return ric * 2.0 + scale_by_jet(h, scal) * (1.0 / (1 - n_leaf))


def compare_L(chart: ChartSpec, k: int, points, floor=DEFAULT_FLOOR, **pipeline_opts):
    """Deviation of the leaf block of the projected ``L^Pi`` from the intrinsic ``L``.

    The relative scale is ``max(|L|, |Riem|)`` of the leaf metric, so that
    Ricci-flat leaves are compared against their curvature size.
    """
    from .biconformal import project_all

    keep = [i for i in range(chart.n) if i != k]
    records = []
    for point in points:
        res = evaluate_point(chart, point, slice_projectors(k), with_B=False, **pipeline_opts)
        Lp = project_all(res.obstructions.L_Pi.truncate(0), res.projectors.Pi_ud).value
        _, h, h_inv, _, riem, ric, scal = _intrinsic(chart, k, point)
        target = intrinsic_L(h, h_inv, ric, scal, chart.n - 1).value
        diff = _leaf_block(Lp, keep) - target
        scale = max(float(np.max(np.abs(target))), riem.truncate(0).max_abs())
        records.append(_record(point, diff, scale, floor))
    return _finish(records)


def compare_B(chart: ChartSpec, k: int, points, floor=DEFAULT_FLOOR,
              **pipeline_opts) -> OracleComparison:
    """Max relative deviation of ``B^||`` from ``nabla_[a L_b]c`` of the induced 3-metric.

    The relative scale is ``max|nabla L|`` of the intrinsic side.
    """
    if chart.n - 1 != 3:
        raise ValueError("compare_B needs three-dimensional leaves")
    keep = [i for i in range(chart.n) if i != k]
    records = []
    for point in points:
        res = evaluate_point(chart, point, slice_projectors(k), **pipeline_opts)
        B = res.obstructions.B_parallel.value
        _, h, h_inv, lc, _, ric, scal = _intrinsic(chart, k, point)
        L = intrinsic_L(h, h_inv, ric, scal, 3)
        dL = covariant_derivative(L, lc)
        target = ((dL - permute(dL, (1, 0, 2))) * 0.5).value
        diff = _leaf_block(B, keep) - target
        records.append(_record(point, diff, float(np.max(np.abs(dL.value))), floor))
    return _finish(records)


__all__ = [
    "SliceSpec", "OracleComparison", "SLOT_MAP", "induced_chart", "slice_fields",
    "slice_projectors", "compare_T", "compare_B", "compare_L", "intrinsic_L",
]

