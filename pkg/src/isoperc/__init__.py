"""Percolation and random-cluster tools on isoradial graphs.

The package builds rhombic tilings, derives isoradial graphs and their
canonical edge weights, implements the star-triangle (Yang-Baxter) moves
that make those weights special, and provides Monte Carlo estimators plus
fitting helpers for the associated percolation and random-cluster models.
"""

from .analysis import (
    ExponentFit,
    ScalingReport,
    fit_exponential,
    fit_power_law,
    map_fit,
    scaling_report,
)
from .errors import IsopercError, ValidationError
from .isoradial import (
    EdgeWeights,
    IsoradialGraph,
    build_isoradial,
    dual_graph,
    percolation_probability,
    percolation_weights,
    rc_edge_activity,
    rc_weights,
)
from .percsim import (
    Configuration,
    CrossingSpec,
    ObservableCurve,
    cluster_decomposition,
    crossing_probability,
    near_critical_scan,
    one_arm_curve,
    sample_configuration,
    spacetime_crossing,
    two_point_curve,
    volume_tail_curve,
)
from .rcm import (
    BoundaryCondition,
    RCParams,
    exact_rc_distribution,
    rc_critical_point,
    rc_crossing_scan,
    rc_heat_bath_sample,
    rc_two_point_decay,
    square_block_spec,
    square_lattice_patch,
)
from .render import render_configuration, render_graph, render_tiling
from .startriangle import (
    TriangleParams,
    apply_switch,
    coupling_kernel,
    partition_law,
    verify_equivalence,
)
from .tiling import (
    RhombicTiling,
    extract_tracks,
    hexagon_flip,
    multigrid_tiling,
    penrose_tiling,
    periodic_tiling,
    validate_tiling,
)

__version__ = "0.1.0"
