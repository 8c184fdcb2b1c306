"""Martingale gap curves, optimal coin-tossing trees, and attacks on protocol trees."""

from .attacks import (AttackReport, FailStopReport, assign_defenses, best_party_attack,
                      failstop_attack, restart_attack, score_sprime, simulate_attack,
                      specialized_max_score, sprime_split)
from .curves import (Curve, SequenceA, a_sequence, bound_curve, evaluate, gap_curve, gap_curves,
                     l1_transform, l2_gap_curve, l2_transform, solve_left, solve_right)
from .errors import CurveError, RootFindingError, RuleError, TreeValidationError, UsageError
from .protocols import (ProtocolSpec, build_majority, build_optimal, build_threshold, insecurity,
                        processors_needed)
from .scores import (Directional, ScoreReport, directional_susceptibility, max_score, min_score,
                     sample_maximal_rules, score_of_rule, sum_squared_increments)
from .tree import (Decision, MartingaleTree, StoppingRule, Violation, doob_from_outcome, leaf, node,
                   random_tree, validate)

__version__ = "0.1.0"

__all__ = [
    "AttackReport",
    "FailStopReport",
    "assign_defenses",
    "best_party_attack",
    "failstop_attack",
    "restart_attack",
    "score_sprime",
    "simulate_attack",
    "specialized_max_score",
    "sprime_split",
    "Curve",
    "SequenceA",
    "a_sequence",
    "bound_curve",
    "evaluate",
    "gap_curve",
    "gap_curves",
    "l1_transform",
    "l2_gap_curve",
    "l2_transform",
    "solve_left",
    "solve_right",
    "CurveError",
    "RootFindingError",
    "RuleError",
    "TreeValidationError",
    "UsageError",
    "ProtocolSpec",
    "build_majority",
    "build_optimal",
    "build_threshold",
    "insecurity",
    "processors_needed",
    "Directional",
    "ScoreReport",
    "directional_susceptibility",
    "max_score",
    "min_score",
    "sample_maximal_rules",
    "score_of_rule",
    "sum_squared_increments",
    "Decision",
    "MartingaleTree",
    "StoppingRule",
    "Violation",
    "doob_from_outcome",
    "leaf",
    "node",
    "random_tree",
    "validate",
]
