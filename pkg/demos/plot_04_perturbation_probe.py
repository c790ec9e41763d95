"""
Probing perturbation resilience
===============================

Resilience says the optimum survives every multiplicative perturbation of
the distances by a factor in [1, alpha].  Sampling perturbations can only
refute that, never prove it, but it is a useful sanity check.
"""

from stablecluster import Objective, build_from_points, gen_resilient, resilience_probe

obj = Objective("kmedian")

# %%
# A well separated instance survives 200 random perturbations.
planted = gen_resilient(9, 3, 3.0, seed=4)
rep = resilience_probe(planted.instance, obj, 3, alpha=2.5, trials=200, seed=0)
print(f"planted, factor {planted.factor:.2f}: {rep.failures} failures in {rep.trials} trials")

# %%
# Two tight pairs with a point only slightly closer to the left pair.
inst = build_from_points([[0], [1], [5.4], [10], [11]])
rep = resilience_probe(inst, obj, 2, alpha=2.0, trials=200, seed=0)
print(f"borderline point: {rep.failures} failures; first failing seed {rep.failing_seeds[0]}")
