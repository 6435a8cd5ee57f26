"""Monte Carlo workbench for classical angular-momentum Bell tests.

Four detector models measure exactly anti-correlated classical angular
momenta: direct projection readout, thresholded sign, noisy sign, and an
ensemble-updating detector whose outcome statistics follow the particle's
ensemble rather than its individual vector.  The analysis layer estimates
pair correlations, evaluates and sweeps the CHSH combination, and decides
joint-distribution feasibility; independent oracles (quadrature and exact
enumeration) back every closed form.
"""

from .geometry import (
    Axis,
    PhaseSpacePoint,
    RngStream,
    angle_delta,
    delta,
    is_unit,
    project,
    sample_hemisphere,
    sample_ring,
    sample_sphere,
)
from .distributions import (
    ConfigDensity,
    Ensemble,
    FullSphere,
    Hemisphere,
    PairSource,
    Ring,
    RotatingHemispheres,
    StaticSphere,
    ensemble_mean_projection,
    half_mean_projection,
    quad_density_normalization,
    quad_ring_mean_projection,
    sample_ensemble,
    sample_pair,
)
from .detectors import (
    DetectorModel,
    Direct,
    EnsembleDep,
    MeasurementRecord,
    Sign,
    StochasticSign,
    is_pointlike,
    measure_ensemble,
    measure_pair,
    measure_pair_batch,
    measure_pointlike,
    measure_sequence,
    model_from_name,
    model_name,
    outcome_probabilities,
    projection_delta_alt_form,
    sequence_outcomes,
    v_max,
)
from .analysis import (
    ChshResult,
    CorrelationRecord,
    JointTable,
    chsh,
    chsh_inequalities_hold,
    e_closed,
    estimate_correlation,
    fine_feasible,
    inequality_from_joint,
    lune_probability,
    stochastic_sign_alt_form,
    sweep_chsh,
)
from .oracles import (
    QuadratureSpec,
    enumerate_ensemble_E,
    enumerate_pointlike_E,
    quad_expectation,
    sequence_tree_mean,
)

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "ChshResult",
    "ConfigDensity",
    "CorrelationRecord",
    "DetectorModel",
    "Direct",
    "Ensemble",
    "EnsembleDep",
    "FullSphere",
    "Hemisphere",
    "JointTable",
    "MeasurementRecord",
    "PairSource",
    "PhaseSpacePoint",
    "QuadratureSpec",
    "Ring",
    "RngStream",
    "RotatingHemispheres",
    "Sign",
    "StaticSphere",
    "StochasticSign",
    "angle_delta",
    "chsh",
    "chsh_inequalities_hold",
    "delta",
    "e_closed",
    "ensemble_mean_projection",
    "enumerate_ensemble_E",
    "enumerate_pointlike_E",
    "estimate_correlation",
    "fine_feasible",
    "half_mean_projection",
    "inequality_from_joint",
    "is_pointlike",
    "is_unit",
    "lune_probability",
    "measure_ensemble",
    "measure_pair",
    "measure_pair_batch",
    "measure_pointlike",
    "measure_sequence",
    "model_from_name",
    "model_name",
    "outcome_probabilities",
    "project",
    "projection_delta_alt_form",
    "quad_density_normalization",
    "quad_expectation",
    "quad_ring_mean_projection",
    "sample_ensemble",
    "sample_hemisphere",
    "sample_pair",
    "sample_ring",
    "sample_sphere",
    "sequence_outcomes",
    "sequence_tree_mean",
    "stochastic_sign_alt_form",
    "sweep_chsh",
    "v_max",
]
