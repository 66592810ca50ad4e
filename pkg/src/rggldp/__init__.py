"""Large-deviation rate functions and Monte Carlo ensembles for
near-intermediate random geometric graphs."""

from .exceptions import (
    DegenerateInputError,
    DomainError,
    InvalidDimensionError,
    InvalidKernelError,
    InvalidMeasureError,
    InvalidParameterError,
    InvalidRadiusError,
    RGGError,
    UndefinedMeasureError,
)
from .geometry import (
    BoundaryMode,
    ColouredGraph,
    Graph,
    ModelParams,
    PointCloud,
    build_coloured_rgg,
    build_rgg,
    radius_from_c,
    sample_points,
)
from .measures import (
    Consistency,
    CountableMeasure,
    NeighbourhoodMeasure,
    consistency_check,
    degree_distribution,
    empirical_colour_measure,
    empirical_neighbourhood_measure,
    empirical_pair_measure,
    h_map,
    locality_vector,
)
from .montecarlo import (
    TailEstimate,
    TrialSummary,
    coloured_typical_check,
    estimate_rate_slope,
    estimate_tail_probability,
    run_trials,
)
from .rates import (
    PoissonLaw,
    eta1,
    eta_at_x,
    hc_d,
    kl,
    optimal_conditional_delta,
    q_measure,
    rate_J,
    rho,
    solve_a,
    typical_neighbourhood_measure,
    xi1,
)

__version__ = "0.1.0"
