"""
Optimal coin-tossing trees versus majority
==========================================

Build the depth-3 optimal tree for a fair coin and the majority-of-three
tree, then compare what a stopping-time adversary can extract from each.
"""

from martgap import (build_majority, build_optimal, directional_susceptibility, max_score, min_score,
                     processors_needed, sample_maximal_rules, score_of_rule, sum_squared_increments)

opt = build_optimal(0.5, 3)
maj = build_majority(3)

for path, prob, nd in opt.walk():
    if not nd.is_leaf:
        print(f"{'  ' * len(path)}{path or 'root'}: value {nd.value:.4f}  (reached w.p. {prob:.4f})")

# On the optimal tree every maximal stopping rule earns the same score.
print("\noptimal: max score", round(max_score(opt).score, 6), " min score", round(min_score(opt).score, 6))
print("  sampled rules:", sorted({round(score_of_rule(opt, r), 6) for r in sample_maximal_rules(opt, 20)}))

# Majority is lopsided: the best rule gets more, the worst gets less.
print("majority: max score", max_score(maj).score, " min score", min_score(maj).score)

# Both trees spend the same total squared movement, x0(1 - x0).
print("sum of squared increments:", round(sum_squared_increments(opt), 12), sum_squared_increments(maj))

d = directional_susceptibility(maj)
print(f"majority(3) one-sided restart gain: up {d.up}, down {d.down}")

# How many rounds buy a given fairness target?
for eps in (0.05, 0.01, 0.001):
    print(f"eps={eps}: optimal needs {processors_needed(0.5, eps)}, "
          f"majority needs {processors_needed(0.5, eps, 'majority_asymptotic')}")
