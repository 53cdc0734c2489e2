"""Private hierarchical cluster trees over per-vertex graph data.

Users report Laplace-noised degree vectors over random vertex bins; a
Metropolis-Hastings chain over binary trees maximises Dasgupta's cost on
the resulting dissimilarities. The trees then drive cold-start social
recommendation.
"""

__version__ = "0.1.0"

from .graph import Graph, RatingsMatrix, load_graph, load_ratings, shortest_paths_from  # noqa: E402
from .ldp import build_dissimilarity, degree_vector, noise_vector, random_partition  # noqa: E402
from .tree import ClusterTree, nearest_neighbors, parse_newick, random_tree  # noqa: E402
from .cost import clique_cost, cmn_log_cost, dasgupta_cost  # noqa: E402
from .mcmc import McmcConfig, apply_swap, gentree, propose_swap  # noqa: E402
from .pipeline import privact  # noqa: E402

__all__ = [
    "Graph", "RatingsMatrix", "load_graph", "load_ratings", "shortest_paths_from",
    "build_dissimilarity", "degree_vector", "noise_vector", "random_partition",
    "ClusterTree", "nearest_neighbors", "parse_newick", "random_tree",
    "clique_cost", "cmn_log_cost", "dasgupta_cost",
    "McmcConfig", "apply_swap", "gentree", "propose_swap", "privact",
]
