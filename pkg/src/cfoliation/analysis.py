"""Foliation verdicts: non-degeneracy, involutivity, case selection and sampling."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .biconformal import evaluate_point, projectors_from_oneform, projectors_from_span
from .errors import (
    DegenerateDistributionError,
    DomainError,
    InvolutivityError,
    SingularMetricError,
)
from .expr import parse_expression
from .geometry import ChartSpec, eval_components, metric_at
from .tensor import DOWN, UP, contract_product, coordinate_gradient

T_TEST = "T-test"
B_TEST = "B-test"
TRIVIAL = "trivial"

CONFORMALLY_FLAT = "conformally-flat"
NOT_CONFORMALLY_FLAT = "not-conformally-flat"
INDETERMINATE = "indeterminate"
NEAR_TOLERANCE = "indeterminate-near-tolerance"

INVOLUTIVITY_ATOL = 1e-10
INVOLUTIVITY_RTOL = 1e-8

LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_MASK64 = (1 << 64) - 1


class Lcg64:
    """64-bit linear congruential generator ``s <- a*s + c mod 2^64``.

    A uniform draw in ``[0, 1)`` uses the top 53 bits of the new state.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (LCG_MULTIPLIER * self.state + LCG_INCREMENT) & _MASK64
        return self.state

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class DistributionSpec:
    """Leaf distribution: the kernel of a 1-form, or the span of vector fields."""

    kind: str
    omega: tuple = ()
    fields: tuple = ()

    def __post_init__(self):
        if self.kind == "oneform":
            if not self.omega:
                raise ValueError("oneform distribution needs components")
        elif self.kind == "span":
            if not self.fields:
                raise ValueError("span distribution needs at least one field")
            n = len(self.fields[0])
            if any(len(f) != n for f in self.fields):
                raise ValueError("span fields must have equal length")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def oneform(cls, comps, chart: ChartSpec):
        asts = tuple(_parse(c, chart) for c in comps)
        if len(asts) != chart.n:
            raise ValueError(f"1-form needs {chart.n} components")
        return cls("oneform", omega=asts)

    @classmethod
    def span(cls, fields, chart: ChartSpec):
        out = []
        for f in fields:
            if len(f) != chart.n:
                raise ValueError(f"vector fields need {chart.n} components")
            out.append(tuple(_parse(c, chart) for c in f))
        if not 1 <= len(out) <= chart.n - 1:
            raise ValueError(f"span needs 1..{chart.n - 1} fields")
        return cls("span", fields=tuple(out))

    def projectors(self, chart, point, order=3, metric=None):
        if self.kind == "oneform":
            return projectors_from_oneform(self.omega, chart, point, order, metric)
        return projectors_from_span(self.fields, chart, point, order, metric)

    def leaf_dim(self, n):
        return n - 1 if self.kind == "oneform" else len(self.fields)


def _parse(c, chart):
    if hasattr(c, "kind"):
        return c
    return parse_expression(str(c), chart.coords, tuple(chart.params))


@dataclass(frozen=True)
class SamplePlan:
    """Explicit points, or ``count`` LCG draws in the box ``[low, high]``."""

    kind: str
    points: tuple = ()
    low: tuple = ()
    high: tuple = ()
    count: int = 0
    seed: int = 0

    @classmethod
    def explicit(cls, points):
        pts = tuple(tuple(float(x) for x in p) for p in points)
        if not pts:
            raise ValueError("explicit sample plan needs at least one point")
        return cls("explicit", points=pts)

    @classmethod
    def box(cls, low, high, count, seed=0):
        low = tuple(float(x) for x in low)
        high = tuple(float(x) for x in high)
        if len(low) != len(high):
            raise ValueError("box bounds differ in length")
        if any(not a < b for a, b in zip(low, high)):
            raise ValueError("box needs low < high componentwise")
        if count < 1:
            raise ValueError("box count must be >= 1")
        return cls("box", low=low, high=high, count=int(count), seed=int(seed))

    def with_seed(self, seed):
        if self.kind != "box":
            return self
        return SamplePlan.box(self.low, self.high, self.count, seed)

    def sample(self, n=None) -> np.ndarray:
        if self.kind == "explicit":
            pts = np.array(self.points, dtype=float)
        else:
            rng = Lcg64(self.seed)
            lo, hi = np.array(self.low), np.array(self.high)
            pts = np.empty((self.count, len(lo)))
            for i in range(self.count):
                for j in range(len(lo)):
                    pts[i, j] = lo[j] + (hi[j] - lo[j]) * rng.uniform()
        if n is not None and pts.shape[1] != n:
            raise ValueError(f"sample points have dimension {pts.shape[1]}, chart has {n}")
        return pts


@dataclass(frozen=True)
class Tolerances:
    atol: float = 1e-10
    rtol: float = 1e-8
    decisive_factor: float = 10.0

    def threshold(self, scale):
        return self.atol + self.rtol * scale


@dataclass(frozen=True)
class NondegeneracyCheck:
    ok: bool
    value: float
    threshold: float
    reason: str = ""


def check_nondegenerate(spec: DistributionSpec, chart: ChartSpec, point) -> NondegeneracyCheck:
    """Gate a point: the metric must be regular and the distribution non-null there.

    A metric that cannot be evaluated or is singular at the point is
    reported as degenerate rather than raised.
    """
    point = np.asarray(point, dtype=float)
    try:
        g, g_inv = metric_at(chart, point, 0)
    except (SingularMetricError, DomainError) as exc:
        return NondegeneracyCheck(False, 0.0, 0.0, f"metric unusable: {exc.args[0]}")
    if spec.kind == "oneform":
        w = eval_components(list(spec.omega), point, chart.params, 0, (DOWN,)).value
        gi = g_inv.value
        value = float(w @ gi @ w)
        thr = 1e-12 * float(np.max(np.abs(gi))) * float(np.max(np.abs(w))) ** 2
        if not np.any(w):
            return NondegeneracyCheck(False, 0.0, 0.0, "1-form vanishes")
        if abs(value) <= thr:
            return NondegeneracyCheck(False, value, thr, "null 1-form: g(w, w) = 0")
        return NondegeneracyCheck(True, value, thr)
    V = np.array([eval_components(list(f), point, chart.params, 0, (UP,)).value
                  for f in spec.fields])
    m = V.shape[0]
    sv = np.linalg.svd(V, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= 1e-10 * sv[0]:
        return NondegeneracyCheck(False, 0.0, 0.0, "spanning fields are linearly dependent")
    gram = V @ g.value @ V.T
    value = float(np.linalg.det(gram))
    thr = 1e-12 * float(np.max(np.abs(gram))) ** m
    if abs(value) <= thr:
        return NondegeneracyCheck(False, value, thr, "degenerate span: Gram matrix singular")
    return NondegeneracyCheck(True, value, thr)


@dataclass(frozen=True)
class InvolutivityCheck:
    ok: bool
    max_residual: float = 0.0
    point: tuple | None = None
    witness: tuple | None = None
    checked: int = 0


def _oneform_integrability(spec, chart, point):
    w = eval_components(list(spec.omega), point, chart.params, 1, (DOWN,))
    dw_full = coordinate_gradient(w).value  # [a, b] = d_a w_b
    dw = dw_full - dw_full.T                # (dw)_ab = d_a w_b - d_b w_a
    w0 = w.value
    n = chart.n
    worst, witness = 0.0, None
    for a, b, c in itertools.combinations(range(n), 3):
        val = w0[a] * dw[b, c] + w0[b] * dw[c, a] + w0[c] * dw[a, b]
        if abs(val) > worst:
            worst, witness = abs(val), (a, b, c)
    scale = float(np.max(np.abs(w0))) * float(np.max(np.abs(dw), initial=0.0))
    return worst, scale, witness


def _span_brackets(spec, chart, point):
    vecs = [eval_components(list(f), point, chart.params, 1, (UP,)) for f in spec.fields]
    pp = spec.projectors(chart, point, order=1)
    P = pp.P_ud.value
    grads = [coordinate_gradient(v).value for v in vecs]  # [b, a] = d_b V^a
    vals = [v.value for v in vecs]
    worst, witness = 0.0, None
    scale = max(float(np.max(np.abs(v))) for v in vals) * max(
        float(np.max(np.abs(d))) for d in grads)
    for i, j in itertools.combinations(range(len(vecs)), 2):
        br = vals[i] @ grads[j] - vals[j] @ grads[i]
        res = float(np.max(np.abs(P @ br)))
        if res > worst:
            worst, witness = res, (i, j)
    return worst, scale, witness


def check_involutive(spec: DistributionSpec, chart: ChartSpec, points,
                     atol=INVOLUTIVITY_ATOL, rtol=INVOLUTIVITY_RTOL) -> InvolutivityCheck:
    """Frobenius test at each point.

    For a 1-form every component of ``w ^ dw`` must vanish; for a span the
    complement projection of every bracket ``[V_i, V_j]`` must vanish.
    Points where the test cannot be evaluated (metric or distribution
    degenerate, domain errors) are skipped.  The witness is the index
    triple ``(a, b, c)`` or the field pair ``(i, j)``.
    """
    worst = 0.0
    checked = 0
    for point in np.atleast_2d(np.asarray(points, dtype=float)):
        try:
            if spec.kind == "oneform":
                res, scale, witness = _oneform_integrability(spec, chart, point)
            else:
                res, scale, witness = _span_brackets(spec, chart, point)
        except (DomainError, SingularMetricError, DegenerateDistributionError):
            continue
        checked += 1
        worst = max(worst, res)
        if res > atol + rtol * scale:
            return InvolutivityCheck(False, res, tuple(float(x) for x in point), witness, checked)
    return InvolutivityCheck(True, worst, None, None, checked)


def classify_case(n: int, p: int) -> str:
    if not 1 <= p <= n - 1:
        raise ValueError(f"co-dimension p={p} out of range 1..{n - 1}")
    k = n - p
    if k > 3:
        return T_TEST
    if k == 3:
        return B_TEST
    return TRIVIAL


@dataclass
class PointRecord:
    index: int
    point: tuple
    case: str | None = None
    residual: float | None = None
    scale: float | None = None
    threshold: float | None = None
    status: str = "skipped"
    passed: bool | None = None
    component: tuple | None = None
    failing_components: list = field(default_factory=list)
    flat_residual: float | None = None
    flat_scale: float | None = None
    flat_pass: bool | None = None
    skipped_reason: str | None = None
    nondegeneracy: float | None = None
    projector_residual: float | None = None


@dataclass
class Verdict:
    records: list
    aggregate: str
    flatness: str
    explanation: str = ""
    diagnostics: dict = field(default_factory=dict)


def _worst_component(arr):
    """Index of the largest component, taken among indices with slot 0 > slot 1.

    Both obstruction tensors are antisymmetric in their first two slots;
    restricting to one member of each pair keeps the choice deterministic.
    """
    a = np.abs(arr)
    mask = np.zeros(a.shape, dtype=bool)
    idx = np.indices(a.shape)
    mask[idx[0] > idx[1]] = True
    masked = np.where(mask, a, -1.0)
    return tuple(int(i) for i in np.unravel_index(int(np.argmax(masked)), a.shape))


def _failing(arr, thr, limit=12):
    a = np.abs(arr)
    hits = [tuple(int(i) for i in ix) for ix in zip(*np.nonzero(a > thr))]
    hits.sort(key=lambda ix: (-a[ix], ix))
    return hits[:limit]


def analyze_point(chart, spec, point, tol: Tolerances, index=0, **pipeline_opts) -> PointRecord:
    point = np.asarray(point, dtype=float)
    rec = PointRecord(index, tuple(float(x) for x in point))
    try:
        nd = check_nondegenerate(spec, chart, point)
    except DomainError as exc:
        rec.skipped_reason = f"domain error: {exc.args[0]}"
        return rec
    rec.nondegeneracy = nd.value
    if not nd.ok:
        rec.skipped_reason = f"degenerate: {nd.reason}"
        return rec
    try:
        res = evaluate_point(chart, point, spec.projectors, **pipeline_opts)
    except (DomainError, SingularMetricError, DegenerateDistributionError) as exc:
        rec.skipped_reason = f"{type(exc).__name__}: {exc.args[0]}"
        return rec
    pp = res.projectors
    rec.projector_residual = max(pp.invariant_residuals(res.g).values())
    rec.case = classify_case(chart.n, pp.p)
    obs = res.obstructions
    rec.flat_residual = obs.barR_parallel.max_abs()
    rec.flat_scale = obs.scales["barR"]
    rec.flat_pass = rec.flat_residual <= tol.threshold(rec.flat_scale)
    if rec.case == TRIVIAL:
        rec.residual, rec.scale = 0.0, 0.0
        rec.threshold = tol.threshold(0.0)
        rec.status, rec.passed = "pass", True
        return rec
    tensor = obs.T_parallel if rec.case == T_TEST else obs.B_parallel
    scale = obs.scales["T" if rec.case == T_TEST else "B"]
    arr = tensor.value
    rec.residual = float(np.max(np.abs(arr)))
    rec.scale = scale
    rec.threshold = tol.threshold(scale)
    rec.component = _worst_component(arr)
    if rec.residual <= rec.threshold:
        rec.status, rec.passed = "pass", True
    else:
        rec.passed = False
        rec.failing_components = _failing(arr, rec.threshold)
        decisive = rec.residual > tol.decisive_factor * rec.threshold
        rec.status = "fail" if decisive else "marginal"
    return rec


def _analyze_star(args):
    chart, spec, point, tol, index, opts = args
    return analyze_point(chart, spec, point, tol, index, **opts)


def aggregate(records):
    """``(aggregate, flatness, explanation)`` from point records."""
    used = [r for r in records if r.status != "skipped"]
    if not used:
        return INDETERMINATE, "n/a", "every sample point was degenerate or outside the domain"
    if any(r.status == "fail" for r in used):
        agg = NOT_CONFORMALLY_FLAT
        expl = "decisive nonzero obstruction at one or more points"
    elif any(r.status == "marginal" for r in used):
        agg = NEAR_TOLERANCE
        expl = "obstruction residual within 10x of the tolerance at one or more points"
    else:
        agg = CONFORMALLY_FLAT
        expl = "obstruction vanishes within tolerance at every evaluated point"
    flat = "flat" if all(r.flat_pass for r in used) else "not-flat"
    return agg, flat, expl


def analyze(chart: ChartSpec, spec: DistributionSpec, plan: SamplePlan,
            tolerances: Tolerances | None = None, jobs: int = 1, **pipeline_opts) -> Verdict:
    """Pointwise conformal-flatness verdict for the leaves of ``spec``.

    Raises :class:`InvolutivityError` when the distribution fails the
    Frobenius test at some sample point.
    """
    tol = tolerances or Tolerances()
    points = plan.sample(chart.n)
    inv = check_involutive(spec, chart, points)
    if not inv.ok:
        raise InvolutivityError("distribution is not integrable", inv.point, inv.witness)
    tasks = [(chart, spec, p, tol, i, pipeline_opts) for i, p in enumerate(points)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_analyze_star, tasks))
    else:
        records = [_analyze_star(t) for t in tasks]
    agg, flat, expl = aggregate(records)
    diag = {
        "involutivity": {"ok": inv.ok, "max_residual": inv.max_residual,
                         "points_checked": inv.checked},
        "nondegeneracy": {"skipped": sum(r.status == "skipped" for r in records),
                          "evaluated": sum(r.status != "skipped" for r in records)},
    }
    return Verdict(records, agg, flat, expl, diag)
