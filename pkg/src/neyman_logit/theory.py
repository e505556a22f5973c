"""Executable versions of the analytic results behind the estimators.

Pooling inequality, the log(1 + e^x) bounds, hypergeometric fourth moments,
the limiting log-likelihood over the 12 (z, x, y) cells, its maximizer, and an
exhaustive randomization oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import mpmath
import numpy as np
from scipy.special import gammaln

from neyman_logit.errors import TooLarge
from neyman_logit.fitting import (
    Beta,
    FitData,
    FitOptions,
    FitResult,
    fit_mle,
    linear_predictor,
    mean_function,
    softplus,
)
from neyman_logit.population import (
    Assignment,
    EstimateTriple,
    StudyPopulation,
    observe,
)

Z_SUPPORT = (0, 1, 2)


# --- pooling ----------------------------------------------------------------


class PooledOdds(NamedTuple):
    p_bar: float
    q_bar: float
    pooled: float


def odds(a):
    return a / (1.0 - a)


def h_transform(q, lam: float):
    """Treated probability whose odds are ``lam`` times the odds of ``q``."""
    q = np.asarray(q, dtype=float)
    return lam * q / (1.0 + (lam - 1.0) * q)


def pooled_multiplier(q: Sequence[float], lam: float) -> PooledOdds:
    q = np.asarray(q, dtype=float)
    if q.size == 0 or np.any((q <= 0) | (q >= 1)):
        raise ValueError("every q must lie strictly inside (0, 1)")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    p_bar = float(np.mean(h_transform(q, lam)))
    q_bar = float(np.mean(q))
    return PooledOdds(p_bar, q_bar, odds(p_bar) / odds(q_bar))


def pooling_verdict(q: Sequence[float], lam: float) -> str:
    pooled = pooled_multiplier(q, lam).pooled
    q = np.asarray(q, dtype=float)
    if lam == 1:
        return "identity: lambda = 1"
    if np.all(q == q[0]):
        return "degenerate: q constant"
    if lam > 1:
        return "1 < pooled < lambda" if 1 < pooled < lam else "VIOLATED: expected 1 < pooled < lambda"
    return "lambda < pooled < 1" if lam < pooled < 1 else "VIOLATED: expected lambda < pooled < 1"


# --- log(1 + e^x) bounds ------------------------------------------------------


@dataclass(frozen=True)
class Log1pExpVerdict:
    x: float
    float_ok: bool  # holds in double precision with absolute slack
    exact_ok: bool  # holds strictly at high precision
    min_margin: float  # smallest high-precision gap between bound and value

    @property
    def ok(self) -> bool:
        return self.float_ok and self.exact_ok


def log1pexp_bounds_check(x: float, slack: float = 1e-15) -> Log1pExpVerdict:
    """Check both two-sided bounds on ``log(1 + e^x)`` at ``x``.

    The second pair is compared after subtracting ``x`` from all three sides
    (so ``log1p(e^-x)`` against ``e^-x``), which keeps the float comparison
    meaningful for large positive ``x``.
    """
    x = float(x)
    f = float(softplus(x))
    e, e_neg = math.exp(x), math.exp(-x)
    g = math.log1p(e_neg)  # f - x
    float_ok = (
        e - 0.5 * e * e < f + slack
        and f < e + slack
        and e_neg - 0.5 * e_neg * e_neg < g + slack
        and g < e_neg + slack
    )
    with mpmath.workdps(80):
        X = mpmath.mpf(x)
        F = mpmath.log1p(mpmath.exp(X))
        E, En = mpmath.exp(X), mpmath.exp(-X)
        gaps = [
            F - (E - E * E / 2),
            E - F,
            F - (X + En - En * En / 2),
            X + En - F,
        ]
        exact_ok = all(gap > 0 for gap in gaps)
        min_margin = float(min(gaps))
    return Log1pExpVerdict(x, float_ok, exact_ok, min_margin)


# --- hypergeometric concentration ---------------------------------------------


def _log_comb(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def hypergeometric_fourth_moment(n: int, r: int, m: int) -> tuple[float, float]:
    """``E[(X - r m / n)^4]`` for X red among m of n drawn without replacement.

    Returns ``(moment, m + 3 m (m - 1))``; the second value bounds the
    matching with-replacement moment term by term. Exact integer arithmetic up
    to n = 300, log-space pmf beyond.
    """
    if not (0 < r < n and 0 < m <= n):
        raise ValueError("need 0 < r < n and 0 < m <= n")
    bound = float(m + 3 * m * (m - 1))
    ks = range(max(0, m - (n - r)), min(r, m) + 1)
    if n <= 300:
        num = sum(
            math.comb(r, k) * math.comb(n - r, m - k) * (k * n - r * m) ** 4 for k in ks
        )
        moment = Fraction(num, math.comb(n, m) * n**4)
        return float(moment), bound
    k = np.arange(ks.start, ks.stop, dtype=float)
    logp = _log_comb(r, k) + _log_comb(n - r, m - k) - _log_comb(n, m)
    moment = float(np.sum(np.exp(logp) * (k - r * m / n) ** 4))
    return moment, bound


def binomial_fourth_moment(m, p):
    """Fourth central moment of Binomial(m, p)."""
    pq = p * (1.0 - p)
    return m * pq * (1.0 + 3.0 * (m - 2) * pq)


def hypergeometric_fourth_moment_grid(n: int) -> np.ndarray:
    """Fourth central moments for every ``1 <= r < n``, ``1 <= m <= n``.

    Vectorized float version of ``hypergeometric_fourth_moment``; entry
    ``[r - 1, m - 1]``.
    """
    m = np.arange(1, n + 1, dtype=float)[:, None]
    k = np.arange(0, n + 1, dtype=float)[None, :]
    out = np.empty((n - 1, n))
    with np.errstate(invalid="ignore"):
        for r in range(1, n):
            valid = (k <= r) & (k <= m) & (m - k <= n - r)
            logp = _log_comb(r, k) + _log_comb(n - r, m - k) - _log_comb(n, m)
            pmf = np.where(valid, np.exp(np.where(valid, logp, -np.inf)), 0.0)
            out[r - 1] = np.sum(pmf * (k - r * m / n) ** 4, axis=1)
    return out


# --- types and the limiting log-likelihood ------------------------------------


@dataclass(frozen=True)
class TypeDistribution:
    """Limiting treated fraction and type fractions ``weights[z, c, t]``.

    ``z`` runs over ``Z_SUPPORT``; ``c`` and ``t`` are the control and
    treatment responses.
    """

    lambda_t: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(Z_SUPPORT), 2, 2):
            raise ValueError("weights must have shape (3, 2, 2)")
        if not np.all(w > 0):
            raise ValueError("all type weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"type weights sum to {w.sum()!r}, not 1")
        if not 0 < self.lambda_t < 1:
            raise ValueError("lambda_t must lie in (0, 1)")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, lambda_t: float, raw) -> "TypeDistribution":
        raw = np.asarray(raw, dtype=float)
        return cls(lambda_t, raw / raw.sum())

    @property
    def lambda_c(self) -> float:
        return 1.0 - self.lambda_t

    @property
    def lambda_z(self) -> np.ndarray:
        return self.weights.sum(axis=(1, 2))

    @property
    def alpha_t(self) -> float:
        return float(self.weights[:, :, 1].sum())

    @property
    def alpha_c(self) -> float:
        return float(self.weights[:, 1, :].sum())

    def truth(self) -> EstimateTriple:
        return EstimateTriple(self.alpha_t, self.alpha_c)

    def cell_weight(self, z: int, x: int, y: int) -> float:
        """Limiting fraction of subjects with ``Z = z, X = x, Y = y``."""
        w = self.weights[Z_SUPPORT.index(z)]
        if x == 1:
            return float(self.lambda_t * (w[0, y] + w[1, y]))
        return float(self.lambda_c * (w[y, 0] + w[y, 1]))

    def cells(self) -> FitData:
        """The 12 weighted ``(x, z, y)`` rows of the limiting problem."""
        rows = [
            (x, z, y, self.cell_weight(z, x, y))
            for z in Z_SUPPORT
            for x in (1, 0)
            for y in (1, 0)
        ]
        return FitData.from_rows(rows)


def limiting_loglik(dist: TypeDistribution, beta) -> float:
    """Limiting per-subject log-likelihood, summed arm by arm over z."""
    b1, b2, b3 = beta
    w = dist.weights
    lam_z = dist.lambda_z
    arm_t = arm_c = 0.0
    for iz, z in enumerate(Z_SUPPORT):
        phi_t = b1 + b2 + b3 * z
        phi_c = b1 + b3 * z
        arm_t += -lam_z[iz] * float(softplus(phi_t)) + (w[iz, 0, 1] + w[iz, 1, 1]) * phi_t
        arm_c += -lam_z[iz] * float(softplus(phi_c)) + (w[iz, 1, 0] + w[iz, 1, 1]) * phi_c
    return dist.lambda_t * arm_t + dist.lambda_c * arm_c


def limiting_maximizer(
    dist: TypeDistribution, link: str = "logit", tol: float = 1e-10
) -> FitResult:
    return fit_mle(dist.cells(), link, FitOptions(tol=tol))


def limiting_plug_in(dist: TypeDistribution, beta, link: str = "logit") -> EstimateTriple:
    z = np.array(Z_SUPPORT, dtype=float)
    lam_z = dist.lambda_z
    a_t = float(lam_z @ mean_function(linear_predictor(beta, 1.0, z), link))
    a_c = float(lam_z @ mean_function(linear_predictor(beta, 0.0, z), link))
    return EstimateTriple(a_t, a_c)


@dataclass(frozen=True)
class ProbitGap:
    truth: EstimateTriple
    plug_in: EstimateTriple

    @property
    def alpha_t_gap(self) -> float:
        return self.plug_in.alpha_t - self.truth.alpha_t

    @property
    def alpha_c_gap(self) -> float:
        return self.plug_in.alpha_c - self.truth.alpha_c

    @property
    def delta_gap(self) -> float:
        return self.plug_in.delta - self.truth.delta

    @property
    def probit_delta_gap(self) -> float:
        return self.plug_in.probit_delta - self.truth.probit_delta


def probit_plugin_gap(dist: TypeDistribution) -> ProbitGap:
    """Asymptotic error of the probit plug-in at the limiting distribution.

    Measured only; there is no reference magnitude to compare against.
    """
    fit = limiting_maximizer(dist, "probit")
    return ProbitGap(dist.truth(), limiting_plug_in(dist, fit.beta, "probit"))


def default_type_distribution() -> TypeDistribution:
    """Fixed all-positive type table used by the convergence checks.

    Treatment mostly helps, more so at larger z; a few subjects are harmed.
    """
    raw = [
        # (c, t) = (0,0) (0,1)   (1,0) (1,1)
        [[0.30, 0.10], [0.02, 0.08]],  # z = 0
        [[0.20, 0.15], [0.03, 0.12]],  # z = 1
        [[0.10, 0.25], [0.04, 0.20]],  # z = 2
    ]
    return TypeDistribution.normalized(0.75, raw)


def population_from_types(
    dist: TypeDistribution, n: int, rng: np.random.Generator | None = None
) -> StudyPopulation:
    """Population of size ``n`` with type counts matching ``dist``.

    Without ``rng`` the counts are apportioned by largest remainder, so the
    type fractions are within 1/n of the limits. With ``rng`` subjects are
    drawn iid from the type distribution instead.
    """
    flat = dist.weights.ravel()
    if rng is None:
        raw = flat * n
        counts = np.floor(raw).astype(int)
        short = n - counts.sum()
        counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
    else:
        counts = rng.multinomial(n, flat)
    types = list(itertools.product(range(len(Z_SUPPORT)), (0, 1), (0, 1)))
    z, y_c, y_t = [], [], []
    for (iz, c, t), k in zip(types, counts):
        z += [Z_SUPPORT[iz]] * int(k)
        y_c += [c] * int(k)
        y_t += [t] * int(k)
    return StudyPopulation(z, y_t, y_c)


# --- cell bookkeeping ---------------------------------------------------------


def grouped_log_likelihood(data: FitData, beta) -> float:
    """Logit log-likelihood accumulated over distinct ``(z, x)`` groups.

    Each group contributes ``-n_zx softplus(eta) + n_zx1 eta``; unit weights.
    """
    total = 0.0
    keys = np.column_stack([data.z, data.x])
    groups, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    n_zx = np.bincount(inverse, weights=data.w)
    n_zx1 = np.bincount(inverse, weights=data.w * data.y)
    for (z, x), cnt, succ in zip(groups, n_zx, n_zx1):
        eta = float(linear_predictor(beta, x, z))
        total += -cnt * float(softplus(eta)) + succ * eta
    return total


def cell_counts(pop: StudyPopulation, a: Assignment) -> dict[tuple, int]:
    """Observed counts ``n[z, x, y]``."""
    y = observe(pop, a)
    out: dict[tuple, int] = {}
    for z, x, yy in zip(pop.z.tolist(), a.x.tolist(), y.tolist()):
        out[(z, x, yy)] = out.get((z, x, yy), 0) + 1
    return out


def type_arm_counts(pop: StudyPopulation, a: Assignment) -> dict[tuple, int]:
    """Unobservable counts ``n[arm, z, c, t]`` of each type within each arm."""
    out: dict[tuple, int] = {}
    for z, x, c, t in zip(pop.z.tolist(), a.x.tolist(), pop.y_c.tolist(), pop.y_t.tolist()):
        key = ("T" if x else "C", z, c, t)
        out[key] = out.get(key, 0) + 1
    return out


def cells_from_types(type_counts: dict[tuple, int]) -> dict[tuple, int]:
    """Observed cell counts implied by type-by-arm counts.

    Treated subjects show their treatment response, controls their control
    response; the other response is summed out.
    """
    out: dict[tuple, int] = {}
    for (arm, z, c, t), k in type_counts.items():
        key = (z, 1, t) if arm == "T" else (z, 0, c)
        out[key] = out.get(key, 0) + k
    return out


# --- exhaustive randomization -------------------------------------------------


@dataclass(frozen=True)
class ExactExpectations:
    assignments: int
    alpha_t: Fraction | float
    alpha_c: Fraction | float
    individual: tuple[tuple[Fraction | float, Fraction | float], ...]


def exact_randomization_oracle(
    pop: StudyPopulation, n_t: int, max_assignments: int = 10**6
) -> ExactExpectations:
    """Average the ITT rates and per-subject estimates over every assignment.

    Rational arithmetic up to n = 12; compensated float sums beyond.
    """
    n = pop.n
    if not 0 < n_t < n:
        raise ValueError("need 0 < n_t < n")
    count = math.comb(n, n_t)
    if count > max_assignments:
        raise TooLarge(f"C({n}, {n_t}) = {count} assignments exceeds {max_assignments}")
    exact = n <= 12
    num = Fraction if exact else float
    y_t = [int(v) for v in pop.y_t]
    y_c = [int(v) for v in pop.y_c]
    pi_t = Fraction(n_t, n)
    n_c = n - n_t

    sum_at: list = []
    sum_ac: list = []
    est_t = [[] for _ in range(n)]
    est_c = [[] for _ in range(n)]
    for treated in itertools.combinations(range(n), n_t):
        tset = set(treated)
        sum_at.append(num(sum(y_t[i] for i in treated)) / n_t)
        sum_ac.append(num(sum(y_c[i] for i in range(n) if i not in tset)) / n_c)
        for i in range(n):
            if i in tset:
                est_t[i].append(y_t[i] / (pi_t if exact else float(pi_t)))
                est_c[i].append(num(0))
            else:
                est_t[i].append(num(0))
                est_c[i].append(y_c[i] / ((1 - pi_t) if exact else float(1 - pi_t)))

    if exact:
        def avg(v):
            return sum(v, Fraction(0)) / count
    else:
        def avg(v):
            return math.fsum(v) / count
    return ExactExpectations(
        assignments=count,
        alpha_t=avg(sum_at),
        alpha_c=avg(sum_ac),
        individual=tuple((avg(est_t[i]), avg(est_c[i])) for i in range(n)),
    )
