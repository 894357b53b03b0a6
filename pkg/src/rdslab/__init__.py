"""Degree-weighted estimation of population means from respondent-driven samples."""

from .estimators import (
    generalized_estimate,
    generalized_estimate_grouped,
    identification_oracle,
    ignorability_audit,
    naive_estimate,
    plim_oracle,
    vh_estimate,
)
from .experiments import StudyReport, run_replicate, run_study, scenario_grid
from .network import Bottleneck, Graph, build_network
from .population import (
    DegreeTable,
    GroupShift,
    LogisticInDegree,
    OutcomeModel,
    TableMean,
    TruncatedPowerLaw,
    UniformDegrees,
    conditional_means,
    generate_population,
    true_mean,
)
from .sampling import (
    BernoulliDegree,
    CouponRDS,
    Misreport,
    NonIgnorableTilt,
    RandomWalk,
    bernoulli_degree_sample,
    coupon_rds_sample,
    inclusion_probabilities,
    misreport_degrees,
    nonignorable_sample,
    random_walk_sample,
)
from .types import (
    Constant,
    EstimateResult,
    Population,
    Power,
    Sample,
    SampleRecord,
    Table,
    Unit,
    ValidationError,
    f_eval,
)

__version__ = "0.1.0"
