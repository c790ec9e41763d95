"""
Center proximity versus min-stability
=====================================

Plant clusterings with a chosen proximity factor, just above the target,
and count how often they fail min-stability.  From a factor of 3 on,
failures should vanish for data-point centers, and from 2 + sqrt(3) on
for centroid centers.  Below that, failures show up.
"""

import math

import numpy as np

from stablecluster import check_min_stability_exact, gen_resilient
from stablecluster.generators import METRIC_FAMILIES
from stablecluster.metric import STEINER

TRIALS = 400

# %%
# Data-point centers, mixed metric families.
print("data centers")
for target in (1.5, 2.0, 2.5, 3.0, 3.5):
    fails = 0
    for seed in range(TRIALS):
        p = gen_resilient(10, 3, target, seed=seed, metric=METRIC_FAMILIES[seed % 5], tight=True)
        fails += not check_min_stability_exact(p.instance, p.clustering).stable
    print(f"  factor >= {target:<4}: {fails:4d} / {TRIALS} not min-stable")

# %%
# Centroid centers in the plane.
print("centroid centers")
for target in (2.0, 3.0, 2 + math.sqrt(3), 4.0):
    fails = 0
    for seed in range(TRIALS):
        p = gen_resilient(10, 3, target, STEINER, seed=seed, tight=True)
        fails += not check_min_stability_exact(p.instance, p.clustering).stable
    print(f"  factor >= {target:.3f}: {fails:4d} / {TRIALS} not min-stable")
