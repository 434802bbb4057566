"""Cubical cut-and-project point sets and their pattern statistics."""

from .acceptance import (
    ComponentId,
    RegularGrid,
    all_frequencies,
    build_grid,
    component_of,
    frequency,
    max_side,
    min_side,
)
from .diophantine import (
    ApproximationProfile,
    PsiFamily,
    approximation_profile,
    continued_fraction,
    kg_classify,
    transference,
    transference_verify,
)
from .discrepancy import (
    DiscrepancyReport,
    KroneckerOrbit,
    component_counts,
    empirical_frequency,
    etk_bound,
    exp_sum_closed_form,
    log_power_sum,
    sup_discrepancy,
)
from .patches import (
    AcceptanceRegion,
    BallOmega,
    Box,
    BoxOmega,
    PatchKind,
    PatchShape,
    PolytopeOmega,
    StaircasePattern,
    acceptance_region,
    box_minus_cubes_decompose,
    lattice_candidates,
    staircase,
)
from .regions import (
    BallRegion,
    BoxRegion,
    CubeComplex,
    DyadicDecomposition,
    PolytopeRegion,
    cover_region,
    intrinsic_count,
    laczkovich_decompose,
    region_discrepancy,
)
from .regularity import (
    RegularityCurve,
    repetitivity,
    repetitivity_curve,
    repulsivity,
    repulsivity_curve,
)
from .scheme import (
    LatticeVector,
    SchemeSpec,
    generate_points,
    lift,
    project_chart,
    window_coord,
    window_coords,
)

__version__ = "0.1.0"
