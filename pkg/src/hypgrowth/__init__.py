"""Percolation laboratory on vertex-transitive graphs in hyperbolic
half-space: graph generation, slab clipping, exact small-graph event
calculus, and Monte Carlo estimators for connection-probability decay."""

from .hypgeom import (
    Box,
    Isometry,
    Point,
    Slab,
    clip_geodesic,
    hyperbolic_distance,
    origin,
    position_isometry,
    proj_distance,
    reflection_through,
)
from .graphs import (
    EmbeddedGraph,
    GenerationCapError,
    GuardBandError,
    LatticeFamily,
    SlabGraph,
    TilingFamily,
    check_coverage,
    clip_to_slab,
    edge_span,
    height_ratio_bound,
    height_ratio_empirical,
    required_ball_radius,
    slab_lattice,
    tiling_edge_length,
    tiling_graph,
    tiling_graph_with_frames,
    tiling_slab_component,
)
from .seeds import derive_seed, edge_uniform, edge_uniforms, seed_stream
from .percolate import (
    Adjacency,
    BitPropagator,
    ClusterReport,
    Configuration,
    Sphere,
    adjacency_of,
    build_adjacency,
    cluster_labels,
    cluster_of,
    cluster_report,
    connects,
    count_bits,
    descending_or,
    is_subset_bits,
    lazy_reach,
    open_fraction_bits,
    sample_open_bits,
    sphere_reach_event,
    thick_origin,
    two_point_event,
)
from .oracle import (
    CapExceededError,
    CheckRecord,
    EventDoesNotOccur,
    EventSpec,
    NotIncreasingError,
    OracleGraph,
    PolyInP,
    disjoint_occurrence,
    event_table,
    exact_prob,
    exact_reach_curve,
    increasing_event_from_witnesses,
    pivotal_expectation,
    sausage_decompose,
    sphere_reach_poly,
    verify_bk,
    verify_russo,
    verify_russo_integral,
    verify_saus,
)
from .decay import (
    BoundaryReport,
    FitResult,
    FunctionalReport,
    GpCurve,
    PcReport,
    RecursionTrace,
    ThickTailReport,
    WaldReport,
    default_hr_sampler,
    estimate_boundary_point_prob,
    estimate_gp,
    estimate_pc,
    estimate_thick_origin_tail,
    fit_decay,
    functional_inequality_check,
    menshikov_recursion,
    recursion_budget,
    renewal_wald_check,
    synthetic_curve,
    two_point_curve,
)
from .ends import (
    EndsSurvey,
    ScalingReport,
    SlabTowerReport,
    TowerFrame,
    end_boundary_survey,
    scaling_equivariance_check,
    slab_tower,
    survey_to_csv,
)
from .gadgets import (
    bk_pairs,
    corpus_events,
    gadget,
    gadget_from_json,
    gadget_names,
    gadget_to_json,
    increasing_events,
    slab_gadget_names,
)

__version__ = "0.1.0"
