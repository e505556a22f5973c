"""Plug-in, ITT and coefficient readings of the treatment effect on log odds."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from neyman_logit.errors import DegenerateParameter, LengthMismatch
from neyman_logit.fitting import P_CLAMP, FitResult, linear_predictor, mean_function
from neyman_logit.population import Assignment, EstimateTriple


def plug_in(
    fit: FitResult, z_values: Sequence[float], link: str | None = None
) -> EstimateTriple:
    """Average predicted probabilities with treatment forced on, then off.

    Averages run over every subject's covariate, treated and control alike.
    For a probit fit the probit-scale contrast is available as
    ``result.probit_delta``.
    """
    link = link or fit.link
    z = np.asarray(z_values, dtype=float)
    if z.size == 0:
        raise ValueError("z_values is empty")
    alpha_t = float(np.mean(mean_function(linear_predictor(fit.beta, 1.0, z), link)))
    alpha_c = float(np.mean(mean_function(linear_predictor(fit.beta, 0.0, z), link)))
    for a in (alpha_t, alpha_c):
        if not P_CLAMP <= a <= 1.0 - P_CLAMP:
            raise DegenerateParameter(f"average predicted probability {a!r} is degenerate")
    return EstimateTriple(alpha_t, alpha_c)


def itt(observed: Sequence[int], a: Assignment) -> EstimateTriple:
    y = np.asarray(observed)
    if len(y) != a.n:
        raise LengthMismatch("observed responses and assignment differ in length")
    alpha_t = int(y[a.x == 1].sum()) / a.n_t
    alpha_c = int(y[a.x == 0].sum()) / a.n_c
    return EstimateTriple(alpha_t, alpha_c)


def coefficient_delta(fit: FitResult) -> float:
    """The treatment coefficient: the model's claimed common log-odds shift.

    This is not a consistent estimate of the differential log odds.
    """
    return fit.beta.b2
