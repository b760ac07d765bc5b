"""Simulation and verification laboratory for the normalized pluriclosed flow
on Inoue surfaces: integer-matrix quotient construction, explicit model
geometry, the scalar potential flow on the 4D grid chart, and estimate
diagnostics."""

from .construct import (
    GridChart,
    InoueStructure,
    admissibility_check,
    analyze_matrix,
    glue_index,
    lattice_chart,
    parse_matrix,
    point_of_index,
)
from .diagnostics import (
    DiagnosticsRow,
    c0_envelope,
    collapse_indicators,
    dilaton,
    metric_lower_bound,
    monotonicity_check,
    phidot_bounds,
    trace_fields,
    weighted_scalar,
)
from .modelgeom import (
    BlockMetric,
    ModelParams,
    bismut_ricci_model,
    chern_curvature_model,
    gk_residual,
    model_flow,
    model_metric,
    model_sampler,
    pluriclosed_residual,
    richardson_order,
    unnormalize_time,
)
from .config import InitSpec, OutputSpec, RunConfig, config_from_dict, load_config
from .runner import RunResult, run
from .solver import (
    PotentialState,
    SplitMetricField,
    TwistedHessian,
    initial_potential,
    make_state,
    reconstruct_metric,
    rhs,
    stable_dt,
    step,
    twisted_hessian,
)

__version__ = "0.1.0"
