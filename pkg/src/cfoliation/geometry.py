"""Pseudo-Riemannian kernels evaluated at a point over jets.

Curvature convention (fixed by the commutator identity, which the test
suite checks numerically)::

    nabla_a nabla_b X^c - nabla_b nabla_a X^c = R_{bad}^c X^d
    R_{ac} = R_{abc}^b

A Riemann tensor is stored with slots ``[b, a, d, c]`` for ``R_{bad}^c``,
variance ``(d, d, d, u)``.  In components::

    R_{bad}^c = d_a G^c_{bd} - d_b G^c_{ad} + G^c_{ae} G^e_{bd} - G^c_{be} G^e_{ad}

Connection coefficients ``G^c_{ab}`` are stored as ``[c, a, b]`` with
``nabla_a d_b = G^c_{ab} d_c``.  Once lowered, this Riemann tensor agrees
with the usual ``R_{abcd}`` (positive scalar curvature on spheres).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import JetOrderError, SingularMetricError
from .expr import ExprAst, eval_jet, parse_expression
from .jets import Jet3
from .tensor import (
    DOWN,
    UP,
    DenseTensor,
    contract,
    contract_product,
    coordinate_gradient,
    from_jets,
    jet_matrix_inverse,
    permute,
    raise_slot,
    scale_by_jet,
)

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class ChartSpec:
    """A coordinate chart with a metric given by component expressions."""

    n: int
    coords: tuple
    params: dict = field(default_factory=dict)
    metric: tuple = ()

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("chart dimension must be >= 2")
        if len(self.coords) != self.n:
            raise ValueError(f"expected {self.n} coordinate names, got {len(self.coords)}")
        if len(self.metric) != self.n or any(len(row) != self.n for row in self.metric):
            raise ValueError("metric must be an n x n matrix of expressions")
        for i in range(self.n):
            for j in range(i):
                if self.metric[i][j] != self.metric[j][i]:
                    raise ValueError(f"metric entries [{i}][{j}] and [{j}][{i}] differ")

    @classmethod
    def from_strings(cls, coords, metric, params=None):
        """Build from expression strings.

        ``metric`` is either an ``n x n`` nested list or a dict mapping
        ``(i, j)`` to a string.  Missing dict entries are zero and the
        lower triangle is completed by symmetry; a nested list must
        already be symmetric.
        """
        coords = tuple(coords)
        params = dict(params or {})
        n = len(coords)
        entries = {}
        if isinstance(metric, dict):
            items = metric.items()
        else:
            items = (((i, j), metric[i][j]) for i in range(n) for j in range(n))
        for (i, j), text in items:
            a, b = min(i, j), max(i, j)
            ast = parse_expression(str(text), coords, tuple(params))
            if entries.setdefault((a, b), ast) != ast:
                raise ValueError(f"metric entries [{a}][{b}] and [{b}][{a}] differ")
        zero = ExprAst("const", 0.0)
        rows = []
        for i in range(n):
            rows.append(tuple(entries.get((min(i, j), max(i, j)), zero) for j in range(n)))
        return cls(n, coords, params, tuple(rows))


@dataclass(frozen=True)
class ConnectionSample:
    """Connection coefficients ``G^a_{bc}`` at a point (slots ``[a, b, c]``)."""

    coeffs: DenseTensor
    torsion_free: bool = True

    @property
    def order(self):
        return self.coeffs.order


def eval_components(asts, point, params, order, variance):
    """Evaluate a nested list of expressions into a tensor of jets."""
    def walk(node):
        if isinstance(node, ExprAst):
            return eval_jet(node, point, params, order)
        return [walk(x) for x in node]

    return from_jets(walk(asts), variance)


def metric_at(chart: ChartSpec, point, order: int = 3):
    """Metric and inverse metric jets at ``point``."""
    point = np.asarray(point, dtype=float)
    g = eval_components([list(r) for r in chart.metric], point, chart.params, order, (DOWN, DOWN))
    g0 = g.value
    scale = float(np.max(np.abs(g0)))
    det = float(np.linalg.det(g0))
    if scale == 0.0 or abs(det) < SINGULAR_RTOL * scale**chart.n:
        raise SingularMetricError(f"metric is singular at {tuple(point)} (det={det:.3e})")
    return g, jet_matrix_inverse(g)


def christoffel(g: DenseTensor, g_inv: DenseTensor) -> ConnectionSample:
    if g.order < 1:
        raise JetOrderError("Christoffel symbols need metric jets of order >= 1")
    dg = coordinate_gradient(g)  # [e, a, b] = d_e g_ab
    # first kind [d, b, c] = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    first = (permute(dg, (1, 0, 2)) + permute(dg, (1, 2, 0)) - dg) * 0.5
    coeffs = contract_product(g_inv, first, [(1, 0)])
    return ConnectionSample(coeffs, torsion_free=True)


def riemann(conn: ConnectionSample) -> DenseTensor:
    """``R_{bad}^c`` of an arbitrary connection, slots ``[b, a, d, c]``."""
    gam = conn.coeffs
    if gam.order < 1:
        raise JetOrderError("curvature needs connection jets of order >= 1")
    dgam = coordinate_gradient(gam)  # [a, c, b, d] = d_a G^c_bd
    # quad[c, a, b, d] = G^c_ae G^e_bd
    quad = contract_product(gam, gam, [(2, 0)])
    term_da = permute(dgam, (2, 0, 3, 1))  # [b, a, d, c] <- d_a G^c_bd
    term_db = permute(dgam, (0, 2, 3, 1))  # [b, a, d, c] <- d_b G^c_ad
    quad_ab = permute(quad, (2, 1, 3, 0))  # G^c_ae G^e_bd
    quad_ba = permute(quad, (1, 2, 3, 0))  # G^c_be G^e_ad
    out = term_da - term_db + quad_ab - quad_ba
    return DenseTensor(out.data, (DOWN, DOWN, DOWN, UP), out.n, out.order)


def ricci(riem: DenseTensor) -> DenseTensor:
    """``R_{ac} = R_{abc}^b``."""
    if riem.rank != 4:
        raise ValueError("ricci expects a rank-4 curvature tensor")
    return contract(riem, 3, 1)


def scalar_curv(ric: DenseTensor, g_inv: DenseTensor) -> Jet3:
    if ric.rank != 2:
        raise ValueError("scalar_curv expects a rank-2 tensor")
    s = contract_product(g_inv, ric, [(0, 0), (1, 1)])
    return Jet3(s.data, s.n, s.order)


def covariant_derivative(t: DenseTensor, conn: ConnectionSample) -> DenseTensor:
    """``nabla_e t`` with the derivative index as a new leading slot."""
    if t.order < 1:
        raise JetOrderError("covariant derivative needs jets of order >= 1")
    gam = conn.coeffs
    out = coordinate_gradient(t)
    r = t.rank
    for s, var in enumerate(t.variance):
        if var == UP:
            # G^{i_s}_{e x} t[..x..]: slots (c, e, rest...)
            prod = contract_product(gam, t, [(2, s)])
            perm = [1] + [2 + j for j in range(s)] + [0] + [1 + j for j in range(s + 1, r)]
            out = out + permute(prod, perm)
        else:
            # G^x_{e i_s} t[..x..]: slots (e, c, rest...)
            prod = contract_product(gam, t, [(0, s)])
            perm = [0] + [2 + j for j in range(s)] + [1] + [1 + j for j in range(s + 1, r)]
            out = out - permute(prod, perm)
    return out


def lower_riemann(riem: DenseTensor, g: DenseTensor) -> DenseTensor:
    return contract_product(riem, g, [(3, 0)])


def weyl(riem: DenseTensor, ric: DenseTensor, scalar: Jet3, g: DenseTensor,
         g_inv: DenseTensor, n: int) -> DenseTensor:
    """Weyl tensor ``W_{abc}^d`` in the same slot layout as ``riemann``."""
    if n < 3:
        raise ValueError("Weyl tensor needs dimension >= 3")
    low = lower_riemann(riem, g)
    gr = _outer_sym(g, ric)  # g_ac R_bd - g_ad R_bc - g_bc R_ad + g_bd R_ac
    gg = _outer_sym(g, g) * 0.5
    w = low - gr * (1.0 / (n - 2)) + scale_by_jet(gg, scalar) * (1.0 / ((n - 1) * (n - 2)))
    return raise_slot(w, 3, g_inv)


def _outer_sym(h: DenseTensor, k: DenseTensor) -> DenseTensor:
    """Kulkarni-Nomizu product ``h_ac k_bd - h_ad k_bc - h_bc k_ad + h_bd k_ac`` (slots a,b,c,d)."""
    hk = contract_product(h, k, [])  # [a, c, b, d] = h_ac k_bd
    t1 = permute(hk, (0, 2, 1, 3))   # h_ac k_bd
    t2 = permute(hk, (0, 2, 3, 1))   # h_ad k_bc
    t3 = permute(hk, (2, 0, 1, 3))   # h_bc k_ad
    t4 = permute(hk, (2, 0, 3, 1))   # h_bd k_ac
    return t1 - t2 - t3 + t4


def cotton_schouten(ric: DenseTensor, scalar: Jet3, g: DenseTensor, n: int,
                    conn: ConnectionSample):
    """Schouten tensor ``S`` and ``C_abc = nabla_[a S_b]c``."""
    if n < 3:
        raise ValueError("Schouten/Cotton need dimension >= 3")
    s = (ric - scale_by_jet(g, scalar) * (1.0 / (2 * (n - 1)))) * (1.0 / (n - 2))
    ds = covariant_derivative(s, conn)
    return s, (ds - permute(ds, (1, 0, 2))) * 0.5
