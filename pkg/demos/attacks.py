"""
Attacking a protocol tree
=========================

Restart-once and fail-stop adversaries on small protocols, checked by
Monte Carlo replay.
"""

from martgap import (assign_defenses, best_party_attack, build_majority, build_optimal, failstop_attack,
                     restart_attack, simulate_attack)

# A party that may restart once pushes majority-of-15 toward 1.
tree = build_majority(15)
rule, gain = restart_attack(tree, "up")
mean, err = simulate_attack(tree, rule, "restart_up", 1_000_000, seed=42)
print(f"majority(15) restart: exact shift {gain:.5f}, simulated {mean - 0.5:.5f} +- {err:.5f}")
print(f"  the rule stops at {len(rule.stops)} distinct histories")

# Fail-stop: each node carries the fallback bit probability used when a party aborts.
two_party = assign_defenses(build_optimal(0.5, 4), "random", seed=3)
report = failstop_attack(two_party)
who, shift = best_party_attack(report)
print(f"\nfail-stop on optimal(4): S' = {report.s_prime:.4f} (guaranteed >= {report.bound:.4f})")
for key, value in report.split.items():
    print(f"  {key}: {value:.4f}")
print(f"best single attacker {who} shifts the outcome by {shift:.4f}")

mean, err = simulate_attack(two_party, report.rule, "failstop", 500_000, seed=1)
print(f"simulated outcome with aborts: {mean:.4f} +- {err:.4f} (honest {two_party.value:.4f})")
