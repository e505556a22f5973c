"""Logit fits, plug-in and ITT estimators for randomized experiments under
Neyman's potential-outcomes model."""

from neyman_logit.errors import (
    DegenerateParameter,
    InvalidFraction,
    LengthMismatch,
    MaxIterations,
    NeymanLogitError,
    ParseError,
    RankDeficient,
    Separation,
    TooLarge,
    TooManyFailures,
)
from neyman_logit.population import (
    Assignment,
    EstimateTriple,
    StudyPopulation,
    Subject,
    assign,
    individual_estimates,
    observe,
    population_params,
)
from neyman_logit.fitting import (
    Beta,
    FitData,
    FitOptions,
    FitResult,
    fit_mle,
    gradient,
    hessian,
    link_prob,
    log_likelihood,
)
from neyman_logit.estimators import coefficient_delta, itt, plug_in
from neyman_logit.montecarlo import (
    ScenarioSpec,
    SimulationReport,
    build_population,
    run_experiment,
    run_study,
)

__all__ = [
    "Assignment",
    "Beta",
    "DegenerateParameter",
    "EstimateTriple",
    "FitData",
    "FitOptions",
    "FitResult",
    "InvalidFraction",
    "LengthMismatch",
    "MaxIterations",
    "NeymanLogitError",
    "ParseError",
    "RankDeficient",
    "ScenarioSpec",
    "Separation",
    "SimulationReport",
    "StudyPopulation",
    "Subject",
    "TooLarge",
    "TooManyFailures",
    "assign",
    "build_population",
    "coefficient_delta",
    "fit_mle",
    "gradient",
    "hessian",
    "individual_estimates",
    "itt",
    "link_prob",
    "log_likelihood",
    "observe",
    "plug_in",
    "population_params",
    "run_experiment",
    "run_study",
]
