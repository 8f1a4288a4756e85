"""Workshop-grade expert elicitation engine.

Quantile-constrained distribution fitting (SHELF style), conditional
extension models, Gaussian-copula joint distributions, and Monte Carlo
probability-of-success simulation for confirmatory trial programs, with an
event-sourced session store, HTTP API and CLI.
"""

from .distributions import (
    DiscreteDistribution,
    FittedDistribution,
    MixtureDistribution,
    Support,
    UNBOUNDED,
    families_for_support,
    linear_pool,
)
from .fitting import FitResult, ProbabilityConstraint, fit, fit_best
from .judgements import (
    ElicitationRecord,
    JudgementSet,
    QuantityOfInterest,
    Stage,
    candidate_fits,
    fit_judgement,
    reveal_summary,
    to_constraints,
)
from .extension import (
    ConditionalModel,
    ConditioningSchedule,
    MedianFunction,
    conditional,
    fit_median_function,
    marginalize_x,
    schedule_from_marginal,
)
from .copula import (
    ConcordanceJudgement,
    CopulaModel,
    build,
    concordance_to_rho,
    explore,
    rho_to_concordance,
    sample_joint,
)
from .pos import (
    Benchmarks,
    ExacerbationEndpoint,
    Fev1Endpoint,
    PointMassEffects,
    PosResult,
    SuccessRule,
    TrialDesign,
    decompose,
    sensitivity,
    simulate_program,
)
from .session import SessionStore, derive_state, derived_hash, export_report

__version__ = "0.1.0"
