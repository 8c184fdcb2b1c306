import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from martgap.curves import (Curve, a_sequence, bound_curve, evaluate, gap_curve, gap_curves,
                            l1_transform, l2_gap_curve, l2_transform, l2_roots, next_a, solve_left,
                            solve_right)
from martgap.errors import CurveError, UsageError

RES = 10_000


@pytest.fixture(scope="module")
def c1():
    return gap_curve(1, RES)


@pytest.fixture(scope="module")
def c2():
    return gap_curve(2, RES)


class TestEvaluate:
    def test_seed_curve_values(self, c1):
        assert evaluate(c1, 0.5) == 0.5
        assert evaluate(c1, 0.0) == 0.0
        assert evaluate(c1, 0.25) == pytest.approx(0.375, abs=1e-15)

    def test_exact_at_grid_points(self, c1):
        k = np.arange(0, RES + 1, 137)
        np.testing.assert_array_equal(c1(c1.grid[k]), c1.heights[k])

    @pytest.mark.parametrize("x", [-1e-9, 1.0000001, float("nan")])
    def test_domain_error(self, c1, x):
        with pytest.raises(CurveError):
            evaluate(c1, x)

    def test_array_input(self, c1):
        x = np.array([0.1, 0.3])
        np.testing.assert_allclose(c1(x), oracles.c1(x), atol=1e-8)


class TestCurveInvariants:
    def test_rejects_nonzero_endpoint(self):
        with pytest.raises(CurveError):
            Curve(np.array([0.1, 0.2, 0.0]))

    def test_rejects_negative(self):
        with pytest.raises(CurveError):
            Curve(np.array([0.0, -0.2, 0.0]))

    def test_rejects_false_symmetry_flag(self):
        with pytest.raises(CurveError):
            Curve(np.array([0.0, 0.1, 0.3, 0.0]), symmetric=True)

    def test_concavity_flag(self):
        assert Curve(np.array([0.0, 0.5, 0.6, 0.5, 0.0])).is_concave
        assert not Curve(np.array([0.0, 0.5, 0.1, 0.5, 0.0])).is_concave

    def test_heights_read_only(self, c1):
        with pytest.raises(ValueError):
            c1.heights[3] = 1.0


class TestRoots:
    def test_left_root_of_seed(self, c1):
        assert solve_left(c1, 0.5) == pytest.approx((3 - math.sqrt(5)) / 4, abs=1e-6)

    def test_right_root_of_seed(self, c1):
        assert solve_right(c1, 0.5) == pytest.approx((1 + math.sqrt(5)) / 4, abs=1e-6)

    def test_endpoints(self, c1):
        assert solve_left(c1, 0.0) == 0.0
        assert solve_right(c1, 1.0) == 1.0

    def test_second_curve_roots(self, c2):
        assert solve_left(c2, 0.5) == pytest.approx(0.2593, abs=5e-5)
        assert solve_right(c2, 0.5) == pytest.approx(0.7407, abs=5e-5)

    def test_residuals(self, c2):
        x = np.linspace(0, 1, 101)
        xs, xl = solve_left(c2, x), solve_right(c2, x)
        assert np.all(np.abs(xs + c2(xs) - x) <= 1e-12)
        assert np.all(np.abs(xl - c2(xl) - x) <= 1e-12)
        assert np.all((0 <= xs) & (xs <= x) & (x <= xl) & (xl <= 1))

    def test_non_concave_rejected(self):
        bumpy = Curve(np.array([0.0, 0.5, 0.1, 0.5, 0.0]))
        with pytest.raises(CurveError):
            solve_left(bumpy, 0.5)
        with pytest.raises(CurveError):
            l1_transform(bumpy)

    def test_l2_roots_bracket(self):
        d1 = bound_curve("D", 1, RES)
        lo, hi = l2_roots(d1, 0.5)
        assert lo < 0.5 < hi
        assert d1(lo) == pytest.approx((lo - 0.5) ** 2, abs=1e-12)


class TestTransforms:
    def test_first_iterate_midpoint(self, c2):
        assert c2(0.5) == pytest.approx((math.sqrt(5) - 1) / 4, abs=1e-8)

    def test_first_iterate_matches_closed_form(self, c2):
        x = np.linspace(0, 1, 201)
        ref = np.array([oracles.c2(v) for v in x])
        assert np.max(np.abs(c2(x) - ref)) < 1e-6

    def test_third_curve_midpoint(self):
        assert gap_curve(3, RES)(0.5) == pytest.approx(0.2407, abs=5e-4)

    def test_cprime_seed(self):
        assert gap_curve(1, RES, "Cprime")(0.5) == 0.25
        assert gap_curve(1, RES, "C")(0.3) == pytest.approx(0.42, abs=1e-12)

    def test_endpoints_fixed(self):
        for c in gap_curves(6, 2000) + [l2_gap_curve(4, 2000)]:
            assert c.heights[0] == 0.0 and c.heights[-1] == 0.0

    def test_symmetry_and_concavity_preserved(self):
        for c in gap_curves(12, RES)[1:]:
            assert c.symmetric
            assert np.max(np.abs(c.heights - c.heights[::-1])) <= 1e-9
            h = c.heights
            assert np.all(h[1:-1] >= 0.5 * (h[:-2] + h[2:]) - 1e-6)

    def test_asymmetric_input_keeps_working(self):
        f = Curve.from_function(lambda x: x * (1 - x) * (2 - x), 2000)
        g = l1_transform(f)
        assert not g.symmetric and g.is_concave

    def test_monotone(self):
        lo = bound_curve("L", 4, RES)
        hi = gap_curve(4, RES)
        assert np.all(hi.heights >= lo.heights - 1e-6)
        assert np.all(l1_transform(hi).heights >= l1_transform(lo).heights - 1e-6)

    def test_l2_closed_form_examples(self):
        d1 = bound_curve("D", 1, RES)
        t1 = l2_transform(d1)
        assert t1(0.5) == pytest.approx(0.125, abs=1e-6)
        assert t1(0.0) == 0.0
        assert l2_transform(t1)(0.5) == pytest.approx(1 / 12, abs=1e-6)

    def test_iterates_cached_and_prefix_stable(self):
        a = gap_curves(5, 3000)
        b = gap_curves(3, 3000)
        assert all(x is y for x, y in zip(a, b))


class TestFamilies:
    def test_closed_form_examples(self):
        assert bound_curve("L", 3, RES)(0.5) == pytest.approx(0.223607, abs=1e-6)
        assert bound_curve("U", 3, RES)(0.5) == pytest.approx(0.288675, abs=1e-6)
        assert bound_curve("D", 3, RES)(0.5) == pytest.approx(0.083333, abs=1e-6)
        assert bound_curve("Lprime", 3, RES)(0.5) == pytest.approx(math.sqrt(0.5) / 4, abs=1e-12)
        assert bound_curve("G", 2, RES)(0.5) == pytest.approx((math.sqrt(5) - 1) / 4, abs=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(UsageError):
            bound_curve("Z", 2)

    def test_g_curves_below_transform(self):
        for n in range(1, 17):
            tg = l1_transform(bound_curve("G", n, RES))
            assert np.all(tg.heights >= bound_curve("G", n + 1, RES).heights - 1e-6), n

    def test_u_curves_above_transform(self):
        for n in range(1, 17):
            tu = l1_transform(bound_curve("U", n, RES))
            assert np.all(bound_curve("U", n + 1, RES).heights >= tu.heights - 1e-6), n
            sq = l2_transform(bound_curve("D", n, RES))
            assert np.all(tu.heights ** 2 <= sq.heights + 1e-6), n

    def test_cprime_between_lprime_and_tent(self):
        cps = gap_curves(32, RES, "Cprime")
        x = cps[0].grid
        for n, c in enumerate(cps, start=1):
            assert np.all(c.heights >= bound_curve("Lprime", n, RES).heights - 1e-6), n
            assert np.all(c.heights <= np.minimum(x, 1 - x) + 1e-12), n


class TestSequence:
    def test_examples(self):
        assert list(a_sequence(2, 1).values) == [2.0]
        np.testing.assert_allclose(a_sequence(2, 2).values, [2, math.sqrt(5) - 1], atol=1e-12)
        np.testing.assert_allclose(a_sequence(1, 2).values, [1, 2 * (math.sqrt(2) - 1)], atol=1e-12)

    def test_rewrite_agrees_with_direct_recurrence(self):
        for a in np.geomspace(1e-3, 10, 50):
            assert next_a(a) == pytest.approx(2 * (math.sqrt(a * a + 1) - 1) / a, rel=1e-9)

    def test_strictly_decreasing(self):
        v = a_sequence(2, 1000).values
        assert np.all(np.diff(v) < 0)

    def test_lower_bounds(self):
        n = np.arange(1, 10_001)
        a = a_sequence(2, 10_000)
        ap = a_sequence(1, 10_000)
        assert np.all(a.values >= 2 / np.sqrt(2 * n - 1) - 1e-15)
        assert np.all(ap.values >= np.sqrt(2 / (n + 1)) - 1e-15)
        assert np.all(a.values >= a.lower_bounds() - 1e-15)

    def test_sqrt_gap_inequality(self):
        x = np.random.default_rng(0).exponential(50.0, 10_000)
        lhs = 1 / (4 * (np.sqrt(x + 1) - np.sqrt(x)) ** 2)
        assert np.all(lhs <= x + 0.5 + 1e-9 * (1 + x))


class TestExport:
    def test_csv_format(self):
        text = gap_curve(1, 4).to_csv()
        assert text.splitlines() == ["x,y", "0,0", "0.25,0.375", "0.5,0.5", "0.75,0.375", "1,0"]

    def test_json_round_trip(self, tmp_path):
        c = gap_curve(2, 500)
        p = tmp_path / "c.json"
        c.to_json(p)
        data = json.loads(p.read_text())
        assert data["resolution"] == 500
        back = Curve.from_json(p.read_text())
        np.testing.assert_array_equal(back.heights, c.heights)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0))
def test_roots_on_seed_match_quadratic(x):
    c1 = gap_curve(1, RES)
    xs = (3 - math.sqrt(9 - 8 * x)) / 4
    assert solve_left(c1, x) == pytest.approx(xs, abs=2e-8)
