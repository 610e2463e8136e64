"""Directional complexity of billiards in kites: unfolding, beams, periodic orbits, bounds."""

__version__ = "0.1.0"

from .beams import (
    BeamCorridor,
    NoPeriodicInside,
    ShearExtension,
    SplitEvent,
    SurvivedToHorizon,
    Unsplit,
    partition_splitting_times,
    shear_extend,
    shear_iterations_bound,
    splitting_time,
    trace_beam,
)
from .bounds import (
    AssumedFTable,
    BoundProfile,
    ConstantsConfig,
    FSourceUnresolved,
    NSource,
    OutOfTable,
    RSource,
    RSourceUnresolved,
    ZeroDenominator,
    M_of_eps,
    N_theta,
    P_alpha_beta,
    T_of_eps,
    bad_set,
    convention_extend,
    generic_T_bound,
    lower_bound_L,
)
from .complexity import (
    CodingPartition,
    ComplexityProfile,
    directional_complexity,
    empirical_partition_bound,
    empirical_T_table,
    initial_partition,
    refine_partition,
)
from .config import ConfigError, RunConfig
from .diophantine import (
    BudgetExhausted,
    EmptySet,
    NetBudget,
    RationalDependenceWarning,
    estimate_net_function,
    is_alpha_beta_connected,
    is_relative_eps_net,
    small_denominator,
    small_denominator_table,
)
from .geometry import (
    AngleValue,
    DegenerateTriangle,
    Direction,
    KiteSpec,
    VertexHit,
    build_kite,
    fold_trajectory,
    reflect_direction,
)
from .periodic import (
    CatalogNotExhaustive,
    EnumerationCapExceeded,
    PeriodicCatalog,
    PeriodicDirection,
    PeriodicTheta,
    enumerate_periodic_directions,
    phi,
)
from .unfolding import BoundaryVertexAmbiguous, Unfolding, unfold_ray
