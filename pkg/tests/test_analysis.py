import math

import numpy as np
import pytest

from cfoliation.analysis import (
    B_TEST,
    CONFORMALLY_FLAT,
    INDETERMINATE,
    LCG_INCREMENT,
    LCG_MULTIPLIER,
    NEAR_TOLERANCE,
    NOT_CONFORMALLY_FLAT,
    T_TEST,
    TRIVIAL,
    DistributionSpec,
    Lcg64,
    PointRecord,
    SamplePlan,
    Tolerances,
    _worst_component,
    aggregate,
    analyze,
    analyze_point,
    check_involutive,
    check_nondegenerate,
    classify_case,
)
from cfoliation.biconformal import evaluate_point
from cfoliation.errors import InvolutivityError

from _support import minkowski, oneform, closed_form_B, random_points, random_poly_chart, schwarzschild

STATIC_POINTS = [(0, 3, math.pi / 4, 0), (0, 5, math.pi / 3, 1), (0, 10, 1.0, 2)]


class TestLcg:
    def test_first_draws_match_recurrence(self):
        state = 12345
        expected = []
        for _ in range(3):
            state = (state * 6364136223846793005 + 1442695040888963407) % 2**64
            expected.append(state)
        rng = Lcg64(12345)
        assert [rng.next_u64() for _ in range(3)] == expected
        assert (LCG_MULTIPLIER, LCG_INCREMENT) == (6364136223846793005, 1442695040888963407)

    def test_uniform_uses_top_53_bits(self):
        rng = Lcg64(0)
        u = rng.uniform()
        assert u == (1442695040888963407 >> 11) / 2**53
        assert 0.0 <= u < 1.0

    def test_seed_is_reduced_mod_2_64(self):
        assert Lcg64(-1).state == 2**64 - 1
        assert Lcg64(2**64 + 5).state == 5


class TestSamplePlan:
    def test_box_is_reproducible_and_inside(self):
        plan = SamplePlan.box((0, -1), (1, 1), 50, seed=9)
        a, b = plan.sample(2), plan.sample(2)
        np.testing.assert_array_equal(a, b)
        assert a.shape == (50, 2)
        assert np.all(a[:, 0] >= 0) and np.all(a[:, 0] < 1)
        assert np.all(a[:, 1] >= -1) and np.all(a[:, 1] < 1)

    def test_seed_changes_points(self):
        plan = SamplePlan.box((0, 0), (1, 1), 3, seed=1)
        assert not np.array_equal(plan.sample(), plan.with_seed(2).sample())

    def test_draw_order_is_point_major(self):
        pts = SamplePlan.box((0, 0), (1, 1), 2, seed=4).sample()
        rng = Lcg64(4)
        np.testing.assert_array_equal(pts.ravel(), [rng.uniform() for _ in range(4)])

    @pytest.mark.parametrize("args", [((0, 0), (1, 1), 0), ((0, 1), (1, 1), 3), ((0,), (1, 1), 3)])
    def test_invalid_box(self, args):
        with pytest.raises(ValueError):
            SamplePlan.box(*args)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            SamplePlan.explicit([(0, 1, 2)]).sample(4)
        with pytest.raises(ValueError):
            SamplePlan.explicit([])


class TestClassify:
    @pytest.mark.parametrize("n,p,case", [(5, 1, T_TEST), (4, 1, B_TEST), (3, 1, TRIVIAL),
                                          (6, 2, T_TEST), (5, 2, B_TEST), (4, 2, TRIVIAL)])
    def test_cases(self, n, p, case):
        assert classify_case(n, p) == case

    @pytest.mark.parametrize("p", [0, 4])
    def test_out_of_range(self, p):
        with pytest.raises(ValueError):
            classify_case(4, p)


class TestNondegeneracy:
    def test_timelike_form(self):
        chk = check_nondegenerate(oneform(minkowski(), ["1", "0", "0", "0"]), minkowski(), [0] * 4)
        assert chk.ok and chk.value == -1.0

    def test_null_form(self):
        chart = minkowski()
        chk = check_nondegenerate(oneform(chart, ["1", "1", "0", "0"]), chart, [0] * 4)
        assert not chk.ok and "null" in chk.reason

    def test_horizon(self):
        chart = schwarzschild(1.0)
        chk = check_nondegenerate(oneform(chart, ["0", "1", "0", "0"]), chart, [0, 2.0, 1, 0])
        assert not chk.ok

    def test_null_span(self):
        chart = minkowski()
        spec = DistributionSpec.span([["1", "1", "0", "0"], ["0", "0", "1", "0"]], chart)
        assert not check_nondegenerate(spec, chart, [0] * 4).ok
        spec = DistributionSpec.span([["1", "0", "0", "0"], ["0", "0", "1", "0"]], chart)
        assert check_nondegenerate(spec, chart, [0] * 4).ok


class TestInvolutivity:
    def test_exact_form(self):
        chart = schwarzschild()
        spec = oneform(chart, ["1", "0", "0", "1"])
        chk = check_involutive(spec, chart, STATIC_POINTS)
        assert chk.ok and chk.checked == 3

    def test_twisted_form(self):
        chart = minkowski()
        spec = oneform(chart, ["1", "0", "x", "0"])
        chk = check_involutive(spec, chart, [[0, 1, 0, 0]])
        assert not chk.ok
        assert chk.witness == (0, 1, 2)
        assert chk.max_residual == pytest.approx(1.0)

    def test_coordinate_span(self):
        chart = minkowski()
        spec = DistributionSpec.span([["0", "1", "0", "0"], ["0", "0", "1", "0"]], chart)
        assert check_involutive(spec, chart, [[0, 1, 2, 3]]).ok

    def test_twisted_span(self):
        chart = minkowski()
        spec = DistributionSpec.span([["0", "1", "0", "0"], ["0", "0", "1", "x"]], chart)
        chk = check_involutive(spec, chart, [[0, 1, 2, 3]])
        assert not chk.ok and chk.witness == (0, 1)

    def test_degenerate_points_are_skipped(self):
        chart = schwarzschild()
        spec = oneform(chart, ["0", "1", "0", "0"])
        chk = check_involutive(spec, chart, [[0, 2.0, 1, 0], [0, 4, 1, 0]])
        assert chk.ok


class TestWorstComponent:
    def test_prefers_first_slot_larger(self):
        a = np.zeros((3, 3, 3))
        a[1, 2, 0] = 5.0
        a[2, 1, 0] = -5.0
        assert _worst_component(a) == (2, 1, 0)

    def test_tie_break_is_first_in_row_major_order(self):
        a = np.zeros((3, 3, 3))
        a[2, 0, 1] = a[2, 1, 0] = 1.0
        assert _worst_component(a) == (2, 0, 1)


class TestAggregate:
    def rec(self, status, flat=True):
        return PointRecord(0, (0.0,), status=status, flat_pass=flat)

    def test_rules(self):
        assert aggregate([self.rec("pass"), self.rec("pass")])[:2] == (CONFORMALLY_FLAT, "flat")
        assert aggregate([self.rec("pass"), self.rec("fail")])[0] == NOT_CONFORMALLY_FLAT
        assert aggregate([self.rec("marginal"), self.rec("pass")])[0] == NEAR_TOLERANCE
        assert aggregate([self.rec("marginal"), self.rec("fail")])[0] == NOT_CONFORMALLY_FLAT
        assert aggregate([self.rec("skipped")])[0] == INDETERMINATE
        assert aggregate([self.rec("pass", flat=False), self.rec("skipped")])[1] == "not-flat"

    def test_marginal_band(self):
        chart = schwarzschild()
        spec = oneform(chart, ["1", "0", "0", "1"])
        point = (0, 4, 0.6, 1)
        res = analyze_point(chart, spec, point, Tolerances())
        assert res.status == "fail"
        # put the residual between 1x and 10x of the threshold
        tol = Tolerances(atol=res.residual / 5, rtol=0.0)
        assert analyze_point(chart, spec, point, tol).status == "marginal"
        tol = Tolerances(atol=res.residual * 2, rtol=0.0)
        assert analyze_point(chart, spec, point, tol).status == "pass"


class TestAnalyze:
    def test_schwarzschild_static_slices(self):
        chart = schwarzschild()
        v = analyze(chart, oneform(chart, ["1", "0", "0", "0"]), SamplePlan.explicit(STATIC_POINTS))
        assert v.aggregate == CONFORMALLY_FLAT
        assert v.flatness == "not-flat"
        for r in v.records:
            assert r.case == B_TEST and r.passed
            assert r.residual <= 1e-9 * r.scale
            assert r.flat_residual > 1e-3

    def test_mixed_foliation(self):
        chart = schwarzschild()
        pts = [(0, 4, 0.6, 1), (0, 7, 1.0, 0.5)]
        v = analyze(chart, oneform(chart, ["1", "0", "0", "1"]), SamplePlan.explicit(pts))
        assert v.aggregate == NOT_CONFORMALLY_FLAT
        for r in v.records:
            assert r.status == "fail"
            assert (3, 2, 3) in r.failing_components
        assert v.records[1].component == (3, 2, 3)

    def test_minkowski_is_flat(self):
        chart = minkowski()
        plan = SamplePlan.box((-1, -1, -1, -1), (1, 1, 1, 1), 4, seed=3)
        v = analyze(chart, oneform(chart, ["1", "0", "0", "0"]), plan)
        assert (v.aggregate, v.flatness) == (CONFORMALLY_FLAT, "flat")
        for r in v.records:
            assert r.residual <= 1e-12 and r.flat_residual <= 1e-12

    def test_horizon_point_is_recorded_as_skipped(self):
        chart = schwarzschild()
        plan = SamplePlan.explicit([(0, 2, 1.0, 0), (0, 4, 1.0, 0)])
        v = analyze(chart, oneform(chart, ["0", "1", "0", "0"]), plan)
        assert v.records[0].status == "skipped"
        assert v.records[0].skipped_reason.startswith("degenerate")
        assert v.records[1].status == "pass"
        assert v.diagnostics["nondegeneracy"] == {"skipped": 1, "evaluated": 1}

    def test_all_degenerate(self):
        chart = minkowski()
        v = analyze(chart, oneform(chart, ["1", "1", "0", "0"]), SamplePlan.explicit([(0, 0, 0, 0)]))
        assert v.aggregate == INDETERMINATE

    def test_not_integrable(self):
        chart = minkowski()
        with pytest.raises(InvolutivityError) as info:
            analyze(chart, oneform(chart, ["1", "0", "x", "0"]), SamplePlan.explicit([(0, 1, 0, 0)]))
        assert info.value.witness == (0, 1, 2)

    def test_trivial_case(self):
        chart = minkowski(3)
        v = analyze(chart, oneform(chart, ["1", "0", "0"]), SamplePlan.explicit([(0, 0, 0)]))
        assert v.records[0].case == TRIVIAL and v.aggregate == CONFORMALLY_FLAT

    def test_parallel_matches_serial(self):
        chart = schwarzschild()
        spec = oneform(chart, ["1", "0", "0", "1"])
        plan = SamplePlan.box((0, 3, 0.4, 0), (1, 10, 1.2, 6), 4, seed=5)
        a = analyze(chart, spec, plan, jobs=1)
        b = analyze(chart, spec, plan, jobs=2)
        assert [r.__dict__ for r in a.records] == [r.__dict__ for r in b.records]


class TestInvariance:
    def test_oneform_rescaling(self):
        rng = np.random.default_rng(31)
        chart = random_poly_chart(5, [-1, 1, 1, 1, 1], rng)
        base = oneform(chart, ["1", "x2", "x1", "0", "0"])
        f = "(2 + sin(x0 + x3))"
        scaled = oneform(chart, [f, f"{f}*x2", f"{f}*x1", "0", "0"])
        for point in random_points(rng, 5, 3):
            a = evaluate_point(chart, point, base.projectors).obstructions
            b = evaluate_point(chart, point, scaled.projectors).obstructions
            assert np.abs(a.T_parallel.value - b.T_parallel.value).max() <= 1e-10
            assert np.abs(a.B_parallel.value - b.B_parallel.value).max() <= 1e-10
            assert np.abs(a.barR_parallel.value - b.barR_parallel.value).max() <= 1e-10

    def test_span_recombination(self):
        rng = np.random.default_rng(32)
        chart = random_poly_chart(5, [-1, 1, 1, 1, 1], rng)
        e = [["1" if i == j else "0" for j in range(5)] for i in range(5)]
        base = DistributionSpec.span([e[1], e[2], e[3]], chart)
        mixed = DistributionSpec.span([
            ["0", "1", "x0", "0", "0"],
            ["0", "2", "1", "exp(x4)", "0"],
            ["0", "0", "0", "1 + x1^2", "0"],
        ], chart)
        for point in random_points(rng, 5, 3):
            ra = evaluate_point(chart, point, base.projectors)
            rb = evaluate_point(chart, point, mixed.projectors)
            assert np.abs(ra.projectors.Pi_ud.data - rb.projectors.Pi_ud.data).max() <= 1e-10
            a, b = ra.obstructions, rb.obstructions
            assert np.abs(a.B_parallel.value - b.B_parallel.value).max() <= 1e-10
            assert np.abs(a.barR_parallel.value - b.barR_parallel.value).max() <= 1e-10


class TestMixedFoliationClosedForm:
    def test_B_matches_up_to_convention_factor(self):
        chart = schwarzschild(1.0)
        spec = oneform(chart, ["1", "0", "0", "1"])
        for point in [(0, 3.5, 0.5, 0), (0, 6, 0.9, 1)]:
            B = evaluate_point(chart, point, spec.projectors).obstructions.B_parallel.value
            ref = closed_form_B(point[1], point[2])
            assert -2.0 * B[3, 2, 3] == pytest.approx(ref, rel=1e-10)
            assert 2.0 * B[2, 3, 3] == pytest.approx(ref, rel=1e-10)
