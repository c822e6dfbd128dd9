import numpy as np
import pytest

from cfoliation.analysis import DistributionSpec
from cfoliation.biconformal import (
    L_Pi_and_scalar,
    evaluate_point,
    project_all,
    projectors_from_oneform,
    projectors_from_span,
    t_tensor,
)
from cfoliation.errors import DegenerateDistributionError, RankDeficientError
from cfoliation.expr import parse_expression
from cfoliation.geometry import ChartSpec, christoffel, metric_at, ricci, riemann, scalar_curv
from cfoliation.oracle import induced_chart

from _support import (
    minkowski,
    oneform,
    product_schwarzschild,
    random_points,
    random_poly_chart,
    schwarzschild,
)

SIGNS5 = [-1, 1, 1, 1, 1]
# d(t + x1*x2) is exact; the last form fails the Frobenius condition
EXACT = ["1", "x2", "x1", "0", "0"]
TWISTED = ["1", "x2", "0", "x0*x1", "0"]


def parsed(chart, comps):
    return [parse_expression(c, chart.coords, tuple(chart.params)) for c in comps]


def block_chart(rng, n, p):
    """Random metric that is block diagonal in the split (first p, last n - p)."""
    full = random_poly_chart(n, [-1] + [1] * (n - 1), rng)
    zero = parse_expression("0", full.coords)
    rows = tuple(
        tuple(full.metric[i][j] if (i < p) == (j < p) else zero for j in range(n))
        for i in range(n))
    return ChartSpec(n, full.coords, {}, rows)


class TestProjectors:
    @pytest.mark.parametrize("comps", [EXACT, TWISTED])
    def test_oneform_invariants(self, comps):
        rng = np.random.default_rng(1)
        chart = random_poly_chart(5, SIGNS5, rng)
        for point in random_points(rng, 5, 3):
            g, g_inv = metric_at(chart, point)
            pp = projectors_from_oneform(parsed(chart, comps), chart, point, metric=(g, g_inv))
            assert pp.p == 1 and pp.leaf_dim == 4
            assert max(pp.invariant_residuals(g).values()) < 1e-12

    def test_span_invariants(self):
        rng = np.random.default_rng(2)
        chart = random_poly_chart(5, SIGNS5, rng)
        fields = [["1", "0", "0", "0", "0"], ["0", "1", "x0", "0", "0"], ["0", "0", "0", "1", "x4"]]
        fields = [parsed(chart, f) for f in fields]
        for point in random_points(rng, 5, 3):
            g, _ = metric_at(chart, point)
            pp = projectors_from_span(fields, chart, point)
            assert pp.p == 2 and pp.leaf_dim == 3
            assert max(pp.invariant_residuals(g).values()) < 1e-12

    def test_oneform_and_span_agree(self):
        chart = schwarzschild(1.0)
        point = [0.0, 5.0, 0.8, 0.3]
        a = projectors_from_oneform(parsed(chart, ["1", "0", "0", "0"]), chart, point)
        fields = [parsed(chart, f) for f in (["0", "1", "0", "0"], ["0", "0", "1", "0"],
                                              ["0", "0", "0", "1"])]
        b = projectors_from_span(fields, chart, point)
        for x, y in ((a.P_ud, b.P_ud), (a.Pi_dd, b.Pi_dd)):
            assert x.order == y.order == 3
            assert np.max(np.abs(x.data - y.data)) < 1e-12

    def test_null_oneform(self):
        chart = minkowski()
        with pytest.raises(DegenerateDistributionError):
            projectors_from_oneform(parsed(chart, ["1", "1", "0", "0"]), chart, [0, 0, 0, 0])

    def test_dependent_span(self):
        chart = minkowski()
        fields = [parsed(chart, ["0", "1", "0", "0"]), parsed(chart, ["0", "2", "0", "0"])]
        with pytest.raises(RankDeficientError):
            projectors_from_span(fields, chart, [0, 0, 0, 0])

    def test_null_span(self):
        chart = minkowski()
        fields = [parsed(chart, ["1", "1", "0", "0"]), parsed(chart, ["0", "0", "1", "0"])]
        with pytest.raises(DegenerateDistributionError):
            projectors_from_span(fields, chart, [0, 0, 0, 0])


class TestConnection:
    def test_difference_tensor_is_symmetric(self):
        rng = np.random.default_rng(3)
        chart = random_poly_chart(5, SIGNS5, rng)
        res = evaluate_point(chart, random_points(rng, 5, 1)[0], oneform(chart, TWISTED).projectors)
        L = res.deformation.L.value
        assert np.abs(L).max() > 1e-3
        np.testing.assert_allclose(L, np.transpose(L, (0, 2, 1)), atol=1e-15)
        assert res.bar.torsion_free

    def test_block_components_match_levi_civita(self):
        """In an adapted holonomic frame each block of the connection is Levi-Civita."""
        rng = np.random.default_rng(4)
        n, p = 5, 2
        chart = block_chart(rng, n, p)
        spec = DistributionSpec.span([["0"] * i + ["1"] + ["0"] * (n - 1 - i) for i in range(p, n)],
                                     chart)
        res = evaluate_point(chart, random_points(rng, n, 1)[0], spec.projectors)
        assert res.projectors.p == p
        bar, lc = res.bar.coeffs.value, res.lc.coeffs.value
        for block in (range(p), range(p, n)):
            ix = np.ix_(block, block, block)
            np.testing.assert_allclose(bar[ix], lc[ix], atol=1e-14)
        assert np.abs(bar - lc).max() > 1e-3

    def test_product_metric_has_zero_deformation(self):
        chart = product_schwarzschild(1.0)
        res = evaluate_point(chart, [0.2, 0.0, 4.0, 1.0, 0.5],
                             oneform(chart, ["1", "0", "0", "0", "0"]).projectors)
        assert res.deformation.L.max_abs() < 1e-15
        np.testing.assert_allclose(res.barR.value, res.riemann.value, atol=1e-15)


@pytest.fixture(scope="module")
def generic():
    rng = np.random.default_rng(5)
    chart = random_poly_chart(5, SIGNS5, rng)
    point = random_points(rng, 5, 1)[0]
    return chart, point, evaluate_point(chart, point, oneform(chart, EXACT).projectors)


class TestObstructions:
    def test_T_has_weyl_symmetries(self, generic):
        _, _, res = generic
        T = res.obstructions.T_parallel.value
        low = np.einsum("bacd,de->bace", T, res.g.value)
        assert np.abs(T).max() > 1e-2
        np.testing.assert_allclose(T, -np.transpose(T, (1, 0, 2, 3)), atol=1e-14)
        cyc = T + np.transpose(T, (1, 2, 0, 3)) + np.transpose(T, (2, 0, 1, 3))
        assert np.abs(cyc).max() < 1e-14
        np.testing.assert_allclose(low, np.transpose(low, (2, 3, 0, 1)), atol=1e-13)
        for slot in range(3):
            assert np.abs(np.trace(T, axis1=slot, axis2=3)).max() < 1e-13

    def test_T_vanishes_for_three_dimensional_leaves(self):
        rng = np.random.default_rng(6)
        chart = random_poly_chart(4, [-1, 1, 1, 1], rng)
        spec = oneform(chart, ["1", "x2", "x1", "0"])
        for point in random_points(rng, 4, 3):
            obs = evaluate_point(chart, point, spec.projectors).obstructions
            assert obs.T_parallel.max_abs() < 1e-13 * max(1.0, obs.scales["T"])
            assert obs.B_parallel.max_abs() > 1e-4

    def test_l1_variants_agree_on_integrable_distributions(self, generic):
        chart, point, res = generic
        other = evaluate_point(chart, point, oneform(chart, EXACT).projectors, l1_variant="printed")
        for name in ("T_parallel", "B_parallel"):
            a = getattr(res.obstructions, name).value
            b = getattr(other.obstructions, name).value
            assert np.abs(a - b).max() < 1e-13

    def test_l1_variants_differ_without_integrability(self):
        rng = np.random.default_rng(7)
        chart = random_poly_chart(5, SIGNS5, rng)
        point = random_points(rng, 5, 1)[0]
        spec = oneform(chart, TWISTED)
        a = evaluate_point(chart, point, spec.projectors).obstructions.T_parallel.value
        b = evaluate_point(chart, point, spec.projectors, l1_variant="printed").obstructions.T_parallel.value
        assert np.abs(a - b).max() > 1e-4

    def test_unknown_options(self, generic):
        chart, point, res = generic
        pp = res.projectors
        with pytest.raises(ValueError):
            L_Pi_and_scalar(res.barR, pp, res.g_inv, l1_variant="other")
        with pytest.raises(ValueError):
            L_Pi_and_scalar(res.barR, pp, res.g_inv, l1_variant="printed")
        with pytest.raises(KeyError):
            t_tensor(res.barR, res.obstructions.L_Pi, pp, res.g_inv, t_denominator="other")

    def test_leaf_scalar_matches_induced_metric(self):
        rng = np.random.default_rng(8)
        chart = random_poly_chart(5, SIGNS5, rng)
        for point in random_points(rng, 5, 3):
            res = evaluate_point(chart, point, oneform(chart, ["1", "0", "0", "0", "0"]).projectors)
            leaf = induced_chart(chart, 0, point[0])
            g, g_inv = metric_at(leaf, point[1:])
            ref = scalar_curv(ricci(riemann(christoffel(g, g_inv))), g_inv).value
            assert res.obstructions.R_Pi == pytest.approx(ref, rel=1e-12, abs=1e-14)

    def test_schwarzschild_static_slices(self):
        chart = schwarzschild(1.0)
        res = evaluate_point(chart, [0.0, 4.0, 1.0, 0.5], oneform(chart, ["1", "0", "0", "0"]).projectors)
        obs = res.obstructions
        assert obs.B_parallel.max_abs() < 1e-14
        assert obs.scales["B"] > 1e-3
        assert abs(obs.R_Pi) < 1e-14

    def test_two_dimensional_leaves_skip_T(self):
        rng = np.random.default_rng(9)
        chart = random_poly_chart(4, [-1, 1, 1, 1], rng)
        spec = DistributionSpec.span([["0", "0", "1", "0"], ["0", "0", "0", "1"]], chart)
        obs = evaluate_point(chart, random_points(rng, 4, 1)[0], spec.projectors).obstructions
        assert obs.T_parallel is None
        assert obs.B_parallel is not None

    def test_projection_kills_complement(self, generic):
        _, _, res = generic
        P = res.projectors.P_ud.value
        bar = project_all(res.barR.truncate(0), res.projectors.Pi_ud).value
        # contracting any down slot with a complement vector gives zero
        v = P[:, 0]
        for slot in range(3):
            assert np.abs(np.tensordot(bar, v, axes=([slot], [0]))).max() < 1e-13
