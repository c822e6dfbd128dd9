"""Projectors, the bi-conformal connection and the leaf obstruction tensors.

Conventions: ``Pi`` projects onto the leaf-tangent distribution and ``P``
onto its orthogonal complement, ``p = tr P`` is the leaf co-dimension and
``N - p`` the leaf dimension.  Everything is evaluated in the coordinate
frame.

Two printed formulas are ambiguous and are exposed as options so the test
suite can check them against an intrinsic computation on coordinate
slices:

* ``t_denominator``: ``"leaf"`` uses ``2 - N + p`` (the Weyl decomposition
  of an ``N - p`` dimensional leaf); ``"printed"`` uses ``2 - N - p``.  Only
  ``"leaf"`` reproduces twice the induced Weyl tensor.
* ``l1_variant``: the third trace term of ``L^Pi`` is taken from the
  bi-conformal curvature (``"barred"``, default) or from the Levi-Civita
  curvature (``"printed"``).  Both give identical leaf projections for
  integrable distributions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDistributionError, JetOrderError, RankDeficientError
from .geometry import (
    ConnectionSample,
    christoffel,
    covariant_derivative,
    eval_components,
    metric_at,
    riemann,
)
from .jets import Jet3, jet_recip
from .tensor import (
    DOWN,
    UP,
    DenseTensor,
    antisymmetrize,
    contract_product,
    from_jets,
    invert_jet_matrix,
    kronecker,
    lower_slot,
    permute,
    raise_slot,
    scale_by_jet,
    tensor_product,
)

DEGENERACY_RTOL = 1e-12
RANK_RTOL = 1e-10
TRACE_ATOL = 1e-8


@dataclass(frozen=True)
class ProjectorPair:
    P_ud: DenseTensor
    Pi_ud: DenseTensor
    P_dd: DenseTensor
    Pi_dd: DenseTensor
    p: int
    n: int

    @property
    def leaf_dim(self):
        return self.n - self.p

    def invariant_residuals(self, g: DenseTensor) -> dict:
        """Max-abs residuals of the projector identities (values only)."""
        P, Pi = self.P_ud.value, self.Pi_ud.value
        Pd, Pid = self.P_dd.value, self.Pi_dd.value
        return {
            "P_idempotent": float(np.max(np.abs(P @ P - P))),
            "Pi_idempotent": float(np.max(np.abs(Pi @ Pi - Pi))),
            "P_Pi_orthogonal": float(np.max(np.abs(P @ Pi))),
            "P_low_idempotent": float(np.max(np.abs(Pd @ P - Pd))),
            "Pi_low_idempotent": float(np.max(np.abs(Pid @ Pi - Pid))),
            "P_low_Pi_zero": float(np.max(np.abs(Pd @ Pi))),
            "sum_is_metric": float(np.max(np.abs(Pd + Pid - g.value))),
            "P_low_symmetric": float(np.max(np.abs(Pd - Pd.T))),
            "Pi_low_symmetric": float(np.max(np.abs(Pid - Pid.T))),
            "trace_P_integer": float(abs(np.trace(P) - self.p)),
        }


def _checked_p(P_ud: DenseTensor, n: int) -> int:
    tr = float(np.trace(P_ud.value))
    p = int(round(tr))
    if abs(tr - p) > TRACE_ATOL or not 1 <= p <= n - 1:
        raise DegenerateDistributionError(f"tr P = {tr!r} is not an integer in 1..{n - 1}")
    return p


def projectors_from_oneform(omega, chart, point, order=3, metric=None) -> ProjectorPair:
    """``P = w^# (x) w / g(w, w)`` for a leaf-defining 1-form ``w``; ``Pi = 1 - P``."""
    g, g_inv = metric if metric is not None else metric_at(chart, point, order)
    w = eval_components(list(omega), point, chart.params, order, (DOWN,))
    w_up = raise_slot(w, 0, g_inv)
    norm = contract_product(w_up, w, [(0, 0)])
    norm = Jet3(norm.data, norm.n, norm.order)
    scale = float(np.max(np.abs(g_inv.value))) * float(np.max(np.abs(w.value))) ** 2
    if scale == 0.0 or abs(norm.value) <= DEGENERACY_RTOL * scale:
        raise DegenerateDistributionError(
            f"1-form is null or zero at {tuple(point)} (g(w, w) = {norm.value:.3e})"
        )
    inv = jet_recip(norm)
    P_ud = scale_by_jet(tensor_product(w_up, w), inv)
    P_dd = scale_by_jet(tensor_product(w, w), inv)
    Pi_ud = kronecker(chart.n, P_ud.order) - P_ud
    Pi_dd = g - P_dd
    return ProjectorPair(P_ud, Pi_ud, P_dd, Pi_dd, _checked_p(P_ud, chart.n), chart.n)


def projectors_from_span(fields, chart, point, order=3, metric=None) -> ProjectorPair:
    """Orthogonal projector ``Pi`` onto the span of the given vector fields; ``P = 1 - Pi``."""
    g, g_inv = metric if metric is not None else metric_at(chart, point, order)
    vecs = [eval_components(list(f), point, chart.params, order, (UP,)) for f in fields]
    m = len(vecs)
    if not 1 <= m <= chart.n - 1:
        raise DegenerateDistributionError(f"span needs 1..{chart.n - 1} fields, got {m}")
    sv = np.linalg.svd(np.array([v.value for v in vecs]), compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficientError(f"spanning fields are linearly dependent at {tuple(point)}")
    lows = [lower_slot(v, 0, g) for v in vecs]
    k = lows[0].data.shape[-1]
    order = lows[0].order
    gram = np.empty((m, m, k))
    for i in range(m):
        for j in range(m):
            gram[i, j] = contract_product(vecs[i], lows[j], [(0, 0)]).data
    g0 = gram[..., 0]
    gscale = float(np.max(np.abs(g0)))
    if abs(np.linalg.det(g0)) <= DEGENERACY_RTOL * gscale**m:
        raise DegenerateDistributionError(f"span is degenerate (null directions) at {tuple(point)}")
    ginv = invert_jet_matrix(gram, chart.n, order)
    Pi_ud = None
    Pi_dd = None
    for i in range(m):
        for j in range(m):
            c = Jet3(ginv[i, j], chart.n, order)
            up = scale_by_jet(tensor_product(vecs[i], lows[j]), c)
            low = scale_by_jet(tensor_product(lows[i], lows[j]), c)
            Pi_ud = up if Pi_ud is None else Pi_ud + up
            Pi_dd = low if Pi_dd is None else Pi_dd + low
    P_ud = kronecker(chart.n, Pi_ud.order) - Pi_ud
    P_dd = g - Pi_dd
    return ProjectorPair(P_ud, Pi_ud, P_dd, Pi_dd, _checked_p(P_ud, chart.n), chart.n)


@dataclass(frozen=True)
class Deformation:
    M: DenseTensor
    E: DenseTensor
    W: DenseTensor
    L: DenseTensor


def deformation_tensor(pp: ProjectorPair, lc: ConnectionSample, g, g_inv) -> Deformation:
    """``M_abc``, ``E_a``, ``W_a`` and the difference tensor ``L^a_bc``."""
    n, p = pp.n, pp.p
    if not 1 <= p <= n - 1:
        raise DegenerateDistributionError(f"trivial distribution (p = {p}, N = {n})")
    if pp.P_dd.order < 1:
        raise JetOrderError("deformation tensor needs projector jets of order >= 1")
    dP = covariant_derivative(pp.P_dd, lc)  # [e, a, c] = nabla_e P_ac
    M = permute(dP, (1, 0, 2)) + permute(dP, (1, 2, 0)) - dP
    P_uu = raise_slot(pp.P_ud, 1, g_inv)
    Pi_uu = raise_slot(pp.Pi_ud, 1, g_inv)
    E = contract_product(M, P_uu, [(1, 0), (2, 1)])
    W = -contract_product(M, Pi_uu, [(1, 0), (2, 1)])
    M_up = raise_slot(M, 0, g_inv)

    def sym_bc(t):
        return t + permute(t, (0, 2, 1))

    EP = permute(tensor_product(pp.P_ud, E), (0, 2, 1))    # E_b P^a_c
    WPi = permute(tensor_product(pp.Pi_ud, W), (0, 2, 1))  # W_b Pi^a_c
    mix = contract_product(pp.P_ud - pp.Pi_ud, M_up, [(1, 0)])
    L = sym_bc(EP) * (1.0 / (2 * p)) + sym_bc(WPi) * (1.0 / (2 * (n - p))) + mix * 0.5
    return Deformation(M, E, W, L)


def bar_connection(lc: ConnectionSample, L: DenseTensor) -> ConnectionSample:
    return ConnectionSample(lc.coeffs + L, torsion_free=True)


def bar_riemann(bc: ConnectionSample) -> DenseTensor:
    return riemann(bc)


def L_Pi_and_scalar(barR, pp: ProjectorPair, g_inv, lc_riemann=None, l1_variant="barred"):
    """The leaf Schouten-type tensor ``L^Pi_bc`` and the scalar ``Rbar^Pi``."""
    n, p = pp.n, pp.p
    k = n - p
    if k < 2:
        raise DegenerateDistributionError(f"L^Pi needs leaf dimension >= 2, got {k}")
    Pi = pp.Pi_ud
    A = contract_product(barR, Pi, [(1, 0), (3, 1)])           # Pi^d_r Rbar_bdc^r
    X = contract_product(barR, Pi, [(2, 0), (3, 1)])           # Pi^r_q Rbar_bdr^q  [b, d]
    if l1_variant == "barred":
        Y = X
    elif l1_variant == "printed":
        if lc_riemann is None:
            raise ValueError("l1_variant='printed' needs the Levi-Civita curvature")
        Y = contract_product(lc_riemann, Pi, [(2, 0), (3, 1)])
    else:
        raise ValueError(f"unknown l1_variant {l1_variant!r}")
    term2 = contract_product(X, Pi, [(1, 0)])                  # Pi^d_c X_bd
    term3 = permute(contract_product(Y, Pi, [(1, 0)]), (1, 0))  # Pi^d_b Y_cd
    term4 = permute(X, (1, 0))                                 # X_cb
    Pi_uu = raise_slot(Pi, 1, g_inv)
    RPi = contract_product(A, Pi_uu, [(0, 1), (1, 0)])
    RPi = Jet3(RPi.data, RPi.n, RPi.order)
    L_Pi = (A - (term2 + term3 - term4) * (1.0 / k)) * 2.0
    L_Pi = L_Pi + scale_by_jet(pp.Pi_dd, RPi) * (1.0 / (1 - k))
    return L_Pi, RPi


def project_all(t: DenseTensor, Pi_ud: DenseTensor) -> DenseTensor:
    """Apply ``Pi`` to every slot of ``t`` (full leaf projection)."""
    Pi = Pi_ud.truncate(min(Pi_ud.order, t.order))
    out = t
    for s, var in enumerate(t.variance):
        pair = (s, 0) if var == DOWN else (s, 1)
        prod = contract_product(out, Pi, [pair])
        perm = list(range(out.rank - 1))
        perm.insert(s, out.rank - 1)
        out = permute(prod, perm)
    return out


@dataclass
class ObstructionSet:
    T_parallel: DenseTensor | None
    B_parallel: DenseTensor | None
    barR_parallel: DenseTensor
    L_Pi: DenseTensor
    R_Pi: float
    scales: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


def t_tensor(barR, L_Pi, pp: ProjectorPair, g_inv, t_denominator="leaf") -> DenseTensor:
    """``T_bac^d`` (slots ``[b, a, c, d]``), evaluated on values only."""
    n, p = pp.n, pp.p
    denom = {"leaf": 2 - n + p, "printed": 2 - n - p}[t_denominator]
    if denom == 0:
        raise DegenerateDistributionError("T is undefined for two-dimensional leaves")
    R = barR.truncate(0)
    L = L_Pi.truncate(0)
    Pi_ud = pp.Pi_ud.truncate(0)
    Pi_dd = pp.Pi_dd.truncate(0)
    Pi_uu = raise_slot(Pi_ud, 1, g_inv.truncate(0))
    La = antisymmetrize(L, [0, 1])
    t1 = permute(tensor_product(La, Pi_ud), (1, 0, 3, 2))       # Pi^d_c L_[ab]
    tp2 = tensor_product(Pi_ud, L)
    t2 = (permute(tp2, (1, 2, 3, 0)) - permute(tp2, (2, 1, 3, 0))) * 0.5  # Pi^d_[b L_a]c
    Lq = contract_product(L, Pi_uu, [(1, 0)])                  # L_bq Pi^qd
    tp3 = tensor_product(Pi_dd, Lq)
    t3 = (permute(tp3, (2, 1, 0, 3)) - permute(tp3, (1, 2, 0, 3))) * 0.5  # Pi_c[a L_b]q Pi^qd
    return R * 2.0 - (t1 + t2 + t3) * (2.0 / denom)


def obstruction_tensors(barR, L_Pi, R_Pi, pp: ProjectorPair, g, g_inv, bc: ConnectionSample,
                        t_denominator="leaf", with_B=True, lc_riemann=None) -> ObstructionSet:
    """Leaf projections ``T^||``, ``B^||`` and ``Rbar^||`` with their vanishing scales.

    ``T^||`` is computed for leaf dimension >= 3 and ``B^||`` (which needs
    ``L^Pi`` jets of order >= 1) when ``with_B`` is set.  The ``Rbar^||``
    scale is the larger of ``max|Rbar|`` and ``max|R|`` (Levi-Civita, when
    given), since ``Rbar`` itself can vanish on flat leaves.
    """
    k = pp.leaf_dim
    Pi = pp.Pi_ud
    scales = {}
    barR_par = project_all(barR.truncate(0), Pi)
    scales["barR"] = max(barR.max_abs(), lc_riemann.max_abs() if lc_riemann is not None else 0.0)
    T_par = None
    if k >= 3:
        T = t_tensor(barR, L_Pi, pp, g_inv, t_denominator)
        T_par = project_all(T, Pi)
        scales["T"] = 2.0 * barR_par.max_abs()
    B_par = None
    if with_B and k >= 2:
        if L_Pi.order < 1:
            raise JetOrderError("B^|| needs metric jets of order 3")
        DL = covariant_derivative(L_Pi, bc)  # [r, s, q] = nablabar_r L^Pi_sq
        B = (DL - permute(DL, (1, 0, 2))) * 0.5
        B_par = project_all(B, Pi)
        scales["B"] = project_all(DL, Pi).max_abs()
    return ObstructionSet(T_par, B_par, barR_par, L_Pi, float(R_Pi.value), scales)


@dataclass
class PipelineResult:
    g: DenseTensor
    g_inv: DenseTensor
    projectors: ProjectorPair
    lc: ConnectionSample
    deformation: Deformation
    bar: ConnectionSample
    barR: DenseTensor
    riemann: DenseTensor
    obstructions: ObstructionSet


def evaluate_point(chart, point, build_projectors, *, t_denominator="leaf",
                   l1_variant="barred", with_B=True) -> PipelineResult:
    """Run the whole per-point pipeline.

    ``build_projectors(chart, point, order, metric)`` returns a
    :class:`ProjectorPair`.  Metric jets are taken to order 3.
    """
    point = np.asarray(point, dtype=float)
    g, g_inv = metric_at(chart, point, 3)
    pp = build_projectors(chart, point, 3, (g, g_inv))
    lc = christoffel(g, g_inv)
    deform = deformation_tensor(pp, lc, g, g_inv)
    bc = bar_connection(lc, deform.L)
    barR = bar_riemann(bc)
    lc_riem = riemann(lc)
    if pp.leaf_dim >= 2:
        L_Pi, R_Pi = L_Pi_and_scalar(barR, pp, g_inv, lc_riem, l1_variant)
        obs = obstruction_tensors(barR, L_Pi, R_Pi, pp, g, g_inv, bc, t_denominator, with_B,
                                  lc_riem)
    else:
        barR_par = project_all(barR.truncate(0), pp.Pi_ud)
        scale = max(barR.max_abs(), lc_riem.max_abs())
        obs = ObstructionSet(None, None, barR_par, None, 0.0, {"barR": scale})
    return PipelineResult(g, g_inv, pp, lc, deform, bc, barR, lc_riem, obs)
