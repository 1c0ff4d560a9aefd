"""Hard-core polymer gas toolkit.

Exact finite-volume partition functions and pinned series, side-by-side
convergence criteria with their certified correlation bounds, and the
pivot-equation iteration that tightens those bounds step by step, all
checked against exact enumeration.
"""

from .errors import (
    DivergenceIndicator,
    ModelError,
    NonHomogeneousModel,
    NormalizationFailure,
    PolygasError,
    PrecheckFailure,
    ResourceLimit,
    UniverseError,
)
from .gas import (
    ActivityMap,
    PolymerUniverse,
    build_universe,
    config_probability,
    correlation,
    fundamental_identity_residual,
    mayer_partial_sum,
    neighborhood,
    partition_function,
    pi,
    pressure,
    reduced_correlation,
    telescope_residual,
    theta,
    theta_telescope,
    ursell_coefficient,
)
from .subset import (
    InductiveBoundReport,
    SubsetUniverse,
    build_subset_universe,
    inductive_bound_report,
    region_partition_function,
    site_addition_residual,
    site_deletion_residual,
    site_reduced_correlation,
    site_telescope_residual,
    site_theta,
    subset_activities,
)
from .weights import PolymerWeights, SiteWeights
from .criteria import (
    BOUND_KINDS,
    CRITERION_KINDS,
    CriteriaComparison,
    CriterionReport,
    OptimizeResult,
    bound_value,
    check_criterion,
    compare_criteria,
    optimize_uniform_weight,
    phi_value,
)
from .ks import (
    AbstractKSEngine,
    KSIterationTrace,
    KSNormBound,
    RegionFunction,
    SubsetKSEngine,
    ks_apply_abstract,
    ks_apply_subset,
    ks_norm_bound,
    ks_residual,
    necessity_margins,
    neumann_partial,
    t_apply,
    t_dominates,
    t_iterate,
)
from .models import (
    BuiltModel,
    ModelSpec,
    RunSpec,
    WeightsSpec,
    build,
    generate_model,
    load_model,
    model_from_dict,
    save_model,
)

__version__ = "0.1.0"
