"""Spring-electrical graph embeddings and link-prediction evaluation."""

from .baselines import (ScoreTable, adamic_adar, common_neighbors,
                        load_external_scores, preferential_attachment)
from .errors import (LayoutError, ParameterError, ParseError, SamplingError,
                     SingularityError, SpringlinkError, StructureError)
from .evalharness import (EvalSplit, TrialStats, auc, load_split, make_scorer,
                          run_trials, sample_negatives, save_split,
                          split_edges)
from .graphs import (Graph, GraphKind, connected_components, degree,
                     generate_icosphere_graph, largest_connected_component,
                     parse_edge_list, serialize_edge_list,
                     undirected_projection)
from .sfdp import (CoarseningLevel, Layout, SfdpParams, SpatialTree,
                   attractive_force, build_spatial_tree, coarsen,
                   distance_score, layout_multilevel, layout_single_level,
                   load_layout, repulsion_field, repulsive_force, save_layout,
                   system_energy)
from .variants import (SplitNodeMap, bipartite_repulsion_mask, di_score,
                       directed_to_bipartite, orient_by_degree)

__version__ = "0.1.0"

__all__ = [
    "Graph", "GraphKind", "Layout", "SfdpParams", "SpatialTree",
    "CoarseningLevel", "EvalSplit", "TrialStats", "ScoreTable", "SplitNodeMap",
    "SpringlinkError", "ParseError", "StructureError", "ParameterError",
    "SingularityError", "LayoutError", "SamplingError",
    "parse_edge_list", "serialize_edge_list", "generate_icosphere_graph",
    "largest_connected_component", "connected_components", "degree",
    "undirected_projection",
    "attractive_force", "repulsive_force", "system_energy",
    "build_spatial_tree", "repulsion_field", "coarsen",
    "layout_single_level", "layout_multilevel", "distance_score",
    "save_layout", "load_layout",
    "bipartite_repulsion_mask", "directed_to_bipartite", "di_score",
    "orient_by_degree",
    "common_neighbors", "adamic_adar", "preferential_attachment",
    "load_external_scores",
    "split_edges", "sample_negatives", "auc", "run_trials", "make_scorer",
    "save_split", "load_split",
]
