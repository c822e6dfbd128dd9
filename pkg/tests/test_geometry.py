import math

import numpy as np
import pytest

from cfoliation.errors import SingularMetricError
from cfoliation.expr import eval_jet, parse_expression
from cfoliation.geometry import (
    ChartSpec,
    ConnectionSample,
    christoffel,
    cotton_schouten,
    covariant_derivative,
    lower_riemann,
    metric_at,
    ricci,
    riemann,
    scalar_curv,
    weyl,
)
from cfoliation.oracle import induced_chart
from cfoliation.tensor import DOWN, UP, DenseTensor, contract, contract_product, from_jets, permute

from _support import (
    flat_leaves_5d,
    minkowski,
    random_points,
    random_poly_chart,
    schwarzschild,
    sphere,
)


def curvature(chart, point):
    g, g_inv = metric_at(chart, point)
    conn = christoffel(g, g_inv)
    riem = riemann(conn)
    ric = ricci(riem)
    return g, g_inv, conn, riem, ric, scalar_curv(ric, g_inv)


def vector_field(rng, chart, point):
    names = chart.coords
    comps = []
    for _ in range(chart.n):
        a, b = rng.integers(0, chart.n, 2)
        text = f"{rng.uniform(-1, 1):.6f}*sin({names[a]}) + {names[b]}^2"
        comps.append(eval_jet(parse_expression(text, names), point))
    return from_jets(comps, (UP,))


class TestMetric:
    def test_minkowski_is_flat(self):
        _, g_inv, conn, riem, ric, s = curvature(minkowski(), [0.3, 1.0, -2.0, 0.5])
        np.testing.assert_array_equal(g_inv.value, np.diag([-1.0, 1, 1, 1]))
        assert not conn.coeffs.data.any() and not riem.data.any()
        assert s.value == 0.0

    def test_schwarzschild_inverse_metric(self):
        chart = schwarzschild(1.0)
        point = np.array([0.0, 4.0, 1.0, 0.0])
        _, g_inv = metric_at(chart, point)
        assert g_inv.value[0, 0] == pytest.approx(-2.0, rel=1e-15)
        # d_r g^tt: independent central difference of the order-0 inverse
        h = 1e-5
        up = metric_at(chart, point + [0, h, 0, 0], order=0)[1].value[0, 0]
        dn = metric_at(chart, point - [0, h, 0, 0], order=0)[1].value[0, 0]
        fd = (up - dn) / (2 * h)
        assert fd == pytest.approx(0.5, rel=1e-8)
        assert g_inv.jet(0, 0).grad[1] == pytest.approx(fd, rel=1e-8)

    def test_singular_metric(self):
        chart = ChartSpec.from_strings(("x", "y"), {(0, 0): "x", (1, 1): "1"})
        with pytest.raises(SingularMetricError):
            metric_at(chart, [0.0, 1.0])

    def test_asymmetric_metric_rejected(self):
        with pytest.raises(ValueError):
            ChartSpec.from_strings(("x", "y"), [["1", "x"], ["y", "1"]])


class TestCurvatureValues:
    def test_schwarzschild_christoffel(self):
        _, _, conn, _, ric, s = curvature(schwarzschild(1.0), [0.0, 4.0, 1.0, 0.0])
        assert conn.coeffs.value[1, 0, 0] == pytest.approx(1 / 32, rel=1e-14)
        assert conn.coeffs.value[0, 0, 1] == pytest.approx(1 / 8, rel=1e-14)
        assert ric.max_abs() < 1e-14
        assert abs(s.value) < 1e-14

    def test_schwarzschild_kretschmann(self):
        r, M = 5.0, 1.3
        g, g_inv, _, riem, _, _ = curvature(schwarzschild(M), [0.0, r, 0.8, 0.2])
        low = lower_riemann(riem, g).value
        gi = g_inv.value
        k = np.einsum("abcd,ae,bf,cg,dh,efgh->", low, gi, gi, gi, gi, low)
        assert k == pytest.approx(48 * M**2 / r**6, rel=1e-12)

    def test_unit_sphere(self):
        th = 0.7
        g, _, conn, riem, ric, s = curvature(sphere(), [th, 0.3])
        c = conn.coeffs.value
        assert c[0, 1, 1] == pytest.approx(-math.sin(th) * math.cos(th), rel=1e-14)
        assert c[1, 0, 1] == pytest.approx(1 / math.tan(th), rel=1e-14)
        assert s.value == pytest.approx(2.0, rel=1e-14)
        low = lower_riemann(riem, g).value
        assert low[0, 1, 0, 1] == pytest.approx(math.sin(th) ** 2, rel=1e-14)
        np.testing.assert_allclose(ric.value, g.value, atol=1e-14)


class TestIdentities:
    def test_commutator_defines_curvature(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            chart = random_poly_chart(3 + trial % 2, [-1, 1, 1, 1][: 3 + trial % 2], rng)
            point = random_points(rng, chart.n, 1)[0]
            g, g_inv, conn, riem, _, _ = curvature(chart, point)
            x = vector_field(rng, chart, point)
            ddx = covariant_derivative(covariant_derivative(x, conn), conn)  # [a, b, c]
            comm = ddx - permute(ddx, (1, 0, 2))
            rx = permute(contract_product(riem, x, [(2, 0)]), (1, 0, 2))
            scale = max(1.0, ddx.max_abs())
            assert np.max(np.abs(comm.value - rx.value)) < 1e-11 * scale

    def test_bianchi_identities(self):
        rng = np.random.default_rng(12)
        chart = random_poly_chart(4, [-1, 1, 1, 1], rng)
        for point in random_points(rng, 4, 3):
            _, _, conn, riem, _, _ = curvature(chart, point)
            first = riem + permute(riem, (1, 2, 0, 3)) + permute(riem, (2, 0, 1, 3))
            assert first.max_abs() < 1e-13
            d = covariant_derivative(riem, conn)
            second = d + permute(d, (1, 2, 0, 3, 4)) + permute(d, (2, 0, 1, 3, 4))
            assert second.max_abs() < 1e-12 * max(1.0, d.max_abs())

    def test_metric_compatibility(self):
        rng = np.random.default_rng(13)
        chart = random_poly_chart(4, [-1, 1, 1, 1], rng)
        g, _, conn, _, _, _ = curvature(chart, random_points(rng, 4, 1)[0])
        dg = covariant_derivative(g, conn)
        assert dg.order == 2
        assert np.max(np.abs(dg.data)) < 1e-13

    def test_weyl_is_trace_free(self):
        rng = np.random.default_rng(14)
        chart = random_poly_chart(5, [-1, 1, 1, 1, 1], rng)
        g, g_inv, _, riem, ric, s = curvature(chart, random_points(rng, 5, 1)[0])
        w = weyl(riem, ric, s, g, g_inv, 5)
        assert w.max_abs() > 1e-3
        assert contract(w, 3, 1).max_abs() < 1e-13
        assert contract(w, 3, 2).max_abs() < 1e-13

    def test_weyl_vanishes_on_conformally_flat_metric(self):
        chart = flat_leaves_5d()
        g, g_inv, _, riem, ric, s = curvature(chart, [0.7, 0.1, 0.2, 0.3, 0.4])
        assert riem.max_abs() > 1e-2
        assert weyl(riem, ric, s, g, g_inv, 5).max_abs() < 1e-14

    def test_weyl_of_schwarzschild(self):
        g, g_inv, _, riem, ric, s = curvature(schwarzschild(1.0), [0.0, 4.0, 1.0, 0.0])
        w = weyl(riem, ric, s, g, g_inv, 4)
        # Ricci-flat: Weyl equals Riemann
        np.testing.assert_allclose(w.value, riem.value, atol=1e-14)


class TestCotton:
    def test_spatial_schwarzschild_slice_is_conformally_flat(self):
        leaf = induced_chart(schwarzschild(1.0), 0, 0.0)
        g, g_inv, conn, _, ric, s = curvature(leaf, [4.0, 1.0, 0.3])
        assert ric.max_abs() > 1e-3
        _, c = cotton_schouten(ric, s, g, 3, conn)
        assert c.max_abs() < 1e-14

    def test_generic_three_metric_has_cotton(self):
        rng = np.random.default_rng(15)
        chart = random_poly_chart(3, [1, 1, 1], rng, amp=0.3)
        g, g_inv, conn, _, ric, s = curvature(chart, [0.1, -0.2, 0.05])
        _, c = cotton_schouten(ric, s, g, 3, conn)
        assert c.max_abs() > 1e-4
        np.testing.assert_allclose(c.value, -permute(c, (1, 0, 2)).value, atol=1e-15)


class TestGeneralConnection:
    def test_asymmetric_ricci_and_commutator(self):
        """A torsion-free but non-metric connection has an antisymmetric Ricci part."""
        rng = np.random.default_rng(16)
        n = 3
        names = ("x", "y", "z")
        point = np.array([0.2, -0.1, 0.3])
        jets = [[[None] * n for _ in range(n)] for _ in range(n)]
        for c in range(n):
            for a in range(n):
                for b in range(a, n):
                    k = rng.integers(0, n)
                    text = f"{rng.uniform(-1, 1):.6f}*{names[k]}^2 + {rng.uniform(-1, 1):.6f}*{names[a]}"
                    jets[c][a][b] = jets[c][b][a] = eval_jet(parse_expression(text, names), point, order=2)
        conn = ConnectionSample(from_jets(jets, (UP, DOWN, DOWN)))
        riem = riemann(conn)
        ric = ricci(riem)
        assert np.max(np.abs(ric.value - ric.value.T)) > 1e-3
        x = from_jets([eval_jet(parse_expression(f"sin({v}) + x*y", names), point) for v in names], (UP,))
        ddx = covariant_derivative(covariant_derivative(x, conn), conn)
        comm = ddx - permute(ddx, (1, 0, 2))
        rx = permute(contract_product(riem, x, [(2, 0)]), (1, 0, 2))
        np.testing.assert_allclose(comm.value, rx.value, atol=1e-13)
