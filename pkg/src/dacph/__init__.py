"""Divide-and-conquer persistent homology for Vietoris-Rips filtrations."""
from .geometry import (
    BoundaryFacet,
    DistanceMatrix,
    HyperRect,
    PartitionScheme,
    PointCloud,
    assign_points,
    bounding_box,
    build_augmented_distance_matrix,
    grid_counts,
    make_grid_partition,
    point_facet_distance,
)
from .persistence import (
    PersistenceDiagram,
    ReducedMatrix,
    RepresentativeCycle,
    compute_diagram,
    diagram,
    reduce,
    representative_cycles,
)
from .rips import Filtration, FiltrationTooLarge, Simplex, build_filtration, enclosing_radius

__version__ = "0.1.0"
