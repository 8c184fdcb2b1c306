import numpy as np
import pytest

import oracles
from martgap.curves import gap_curve
from martgap.errors import RuleError, TreeValidationError
from martgap.scores import (directional_susceptibility, max_score, min_score, sample_maximal_rules,
                            score_of_rule, sum_squared_increments)
from martgap.tree import MartingaleTree, StoppingRule, leaf, node


def coin(x):
    return node([(1 - x, leaf(0)), (x, leaf(1))])


class TestExamples:
    def test_majority_max(self, majority3):
        r = max_score(majority3, "L1")
        assert r.score == 0.375
        assert score_of_rule(majority3, r.rule) == r.score

    def test_majority_min_below_max(self, majority3):
        brute = oracles.brute_force(majority3)
        assert min_score(majority3).score == pytest.approx(brute["min_L1"], abs=1e-12)
        assert min_score(majority3).score < 0.375

    def test_optimal_tree_scores(self, optimal3):
        assert max_score(optimal3).score == pytest.approx(0.2407, abs=1e-4)
        assert min_score(optimal3).score == pytest.approx(0.2407, abs=1e-4)

    def test_single_coin(self):
        assert max_score(coin(0.3), "L1").score == pytest.approx(0.42, abs=1e-15)
        assert max_score(coin(0.3), "L2").score == pytest.approx(0.21, abs=1e-15)
        assert min_score(coin(0.3), "L1").score == pytest.approx(0.42, abs=1e-15)

    def test_rule_scores(self, majority3):
        half = coin(0.5)
        assert score_of_rule(half, StoppingRule.of([(0,), (1,)])) == 0.5
        assert score_of_rule(majority3, StoppingRule()) == 0.0
        with pytest.raises(RuleError):
            score_of_rule(majority3, StoppingRule.of([(0,), (0, 1)]))

    def test_optimal_rule_is_replayable(self, majority3):
        rule = max_score(majority3).rule
        assert rule.is_antichain and score_of_rule(majority3, rule) == 0.375

    def test_invalid_tree(self):
        bad = MartingaleTree(0.6, ((0.5, leaf(0)), (0.5, leaf(1))))
        for f in (max_score, min_score, directional_susceptibility, sum_squared_increments):
            with pytest.raises(TreeValidationError):
                f(bad)

    def test_unknown_norm(self, majority3):
        with pytest.raises(ValueError):
            max_score(majority3, "L3")


class TestTieBreaks:
    # child 0 has gap 0.375 and both its best and worst continuation score 0.375
    @pytest.fixture
    def tied(self):
        return node([(0.5, coin(0.25)), (0.5, leaf(1))])

    def test_max_prefers_stop(self, tied):
        assert tied.value == 0.625
        assert max_score(tied).rule.stops == {(0,), (1,)}

    def test_min_prefers_continue(self, tied):
        assert min_score(tied).rule.stops == {(0, 0), (0, 1), (1,)}


class TestDirectional:
    def test_fair_bit(self, fair_bit):
        d = directional_susceptibility(fair_bit)
        assert d.up == 0.25 and d.down == 0.25
        assert d.up_rule.stops == {(0,)}

    def test_majority(self, majority3):
        d = directional_susceptibility(majority3)
        assert d.up == 0.1875 and d.down == 0.1875

    def test_deterministic(self):
        assert directional_susceptibility(node([(1.0, node([(1.0, leaf(1))]))])).insecurity == 0.0

    def test_only_first_round_random(self):
        t = node([(0.5, node([(1.0, leaf(0))])), (0.5, node([(1.0, leaf(1))]))])
        assert directional_susceptibility(t).up == 0.25

    def test_rules_realize_values(self, majority3):
        d = directional_susceptibility(majority3)
        table = oracles.edge_table(majority3)
        assert oracles.signed_gain(table, d.up_rule.stops, 1.0) == pytest.approx(d.up, abs=1e-15)
        assert oracles.signed_gain(table, d.down_rule.stops, -1.0) == pytest.approx(d.down, abs=1e-15)


class TestAgainstEnumeration:
    @pytest.fixture(scope="class")
    @staticmethod
    def cases():
        rng = np.random.default_rng(99)
        out = []
        for _ in range(120):
            t = oracles.random_bounded_tree(rng, max_rules=5000)
            out.append((t, oracles.brute_force(t)))
        return out

    def test_max_and_min(self, cases):
        for t, b in cases:
            for norm in ("L1", "L2"):
                hi, lo = max_score(t, norm), min_score(t, norm)
                assert hi.score == pytest.approx(b[f"max_{norm}"], abs=1e-12)
                assert lo.score == pytest.approx(b[f"min_{norm}"], abs=1e-12)
                assert score_of_rule(t, hi.rule, norm) == pytest.approx(hi.score, abs=1e-12)
                assert score_of_rule(t, lo.rule, norm) == pytest.approx(lo.score, abs=1e-12)
                assert lo.rule.is_maximal(t)

    def test_directional(self, cases):
        for t, b in cases:
            d = directional_susceptibility(t)
            assert d.up == pytest.approx(b["up"], abs=1e-12)
            assert d.down == pytest.approx(b["down"], abs=1e-12)
            assert d.up + d.down >= b["max_L1"] - 1e-12


class TestConservation:
    def test_examples(self, majority3, optimal3):
        assert sum_squared_increments(optimal3) == pytest.approx(0.25, abs=1e-9)
        assert sum_squared_increments(majority3) == 0.25
        assert sum_squared_increments(node([(1.0, leaf(0))])) == 0.0

    def test_random_trees(self):
        for t in oracles.random_uniform_trees(100, seed=3):
            assert sum_squared_increments(t) == pytest.approx(t.value * (1 - t.value), abs=1e-9)
            n = t.height
            assert max_score(t, "L2").score >= t.value * (1 - t.value) / n - 1e-9


class TestSampling:
    def test_single_level(self, fair_bit):
        rules = sample_maximal_rules(fair_bit, 5, seed=1)
        assert all(r.stops == {(0,), (1,)} for r in rules)

    def test_all_maximal_and_seeded(self, majority3):
        a = sample_maximal_rules(majority3, 50, seed=7)
        b = sample_maximal_rules(majority3, 50, seed=7)
        assert a == b
        assert all(r.is_maximal(majority3) for r in a)
        scores = {score_of_rule(majority3, r) for r in a}
        assert len(scores) > 1 and max(scores) <= 0.375

    def test_constant_on_optimal_tree(self, optimal3):
        for r in sample_maximal_rules(optimal3, 100, seed=0):
            assert score_of_rule(optimal3, r) == pytest.approx(0.2407, abs=1e-4)

    def test_count_validation(self, fair_bit):
        with pytest.raises(ValueError):
            sample_maximal_rules(fair_bit, 0, 1)

    def test_curve_agreement(self):
        assert gap_curve(3)(0.5) == pytest.approx(0.2407, abs=1e-4)
