"""Exact clustering of perturbation-resilient instances.

Single linkage followed by a dynamic program over tree prunings recovers
the optimal k-median, k-means or k-center clustering whenever that
clustering is min-stable, which center proximity guarantees.  The package
also ships exhaustive oracles, stability checkers and instance generators
for testing that claim.
"""

from .exceptions import (
    BudgetExceededError,
    GeneratorError,
    InstanceError,
    PreconditionError,
    StableClusterError,
)
from .generators import gen_coverage_reduction, gen_fig2, gen_fig3, gen_resilient
from .linkage import Dendrogram, cut_at_k, single_linkage_tree
from .metric import (
    Instance,
    PerturbationSpec,
    blowup_within_cluster,
    build_from_points,
    d_min,
    load_instance,
    perturb,
    save_instance,
    validate_metric,
)
from .objectives import Objective, cluster_cost
from .oracle import (
    enumerate_partitions,
    optimal_clustering,
    optimal_clustering_bruteforce,
    optimal_clustering_by_centers,
    stirling2,
)
from .pruning import Clustering, best_k_pruning, make_clustering, naive_single_linkage_at_k, solve
from .stability import (
    check_corollary_separation,
    check_min_stability_exact,
    check_min_stability_via_tree,
    proximity_factor,
    resilience_probe,
    stability_report,
)

__version__ = "0.1.0"
