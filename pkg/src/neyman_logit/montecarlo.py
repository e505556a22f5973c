"""Frozen-population simulation of randomized experiments analysed by logit.

A population of potential responses is drawn once and frozen. Each
replication then re-randomizes assignment, fits the model and records the
coefficients, the plug-in estimate and the ITT estimate.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, TextIO

import numpy as np

from neyman_logit.errors import NeymanLogitError, TooManyFailures
from neyman_logit.estimators import itt, plug_in
from neyman_logit.fitting import LINKS, FitData, FitOptions, fit_mle
from neyman_logit.population import (
    Assignment,
    EstimateTriple,
    StudyPopulation,
    assign,
    observe,
    population_params,
)

log = logging.getLogger(__name__)

COVARIATE_KINDS = ("V", "U_plus_V")
COLUMNS = ("b1", "b2", "b3", "plug_in", "itt")
POPULATION_STREAM = 0
REPLICATION_STREAM = 1
MAX_FAILURE_FRACTION = 0.01


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream addressed by ``(seed, *key)``.

    The same address always yields the same stream, regardless of how many
    other streams were created or in which order.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    covariate_kind: str = "V"
    cut_c: float = 0.5
    cut_t: float = 0.75
    pi_t: float = 0.75
    replications: int = 1000
    link: str = "logit"
    seed: int = 20080601

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("n must be at least 10")
        if not 0.0 < self.pi_t < 1.0:
            raise ValueError("pi_t must lie in (0, 1)")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.covariate_kind not in COVARIATE_KINDS:
            raise ValueError(f"covariate_kind must be one of {COVARIATE_KINDS}")
        if self.link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def draw_subjects(
    n: int,
    rng: np.random.Generator,
    covariate_kind: str = "V",
    cut_c: float = 0.5,
    cut_t: float = 0.75,
) -> StudyPopulation:
    """``U, V`` iid uniform; ``y_c = [U > cut_c]``, ``y_t = [U + V > cut_t]``."""
    u = rng.random(n)
    v = rng.random(n)
    z = v if covariate_kind == "V" else u + v
    return StudyPopulation(z, (u + v > cut_t).astype(np.int8), (u > cut_c).astype(np.int8))


def build_population(
    spec: ScenarioSpec, rng: np.random.Generator | None = None
) -> StudyPopulation:
    if rng is None:
        rng = substream(spec.seed, POPULATION_STREAM)
    return draw_subjects(spec.n, rng, spec.covariate_kind, spec.cut_c, spec.cut_t)


class Replication(NamedTuple):
    b1: float
    b2: float
    b3: float
    plug_in: float
    itt: float
    failure: str | None = None

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(self)[: len(COLUMNS)]


def experiment_data(
    pop: StudyPopulation, spec: ScenarioSpec, rng: np.random.Generator
) -> tuple[Assignment, np.ndarray, FitData]:
    a = assign(pop, spec.pi_t, rng)
    y = observe(pop, a)
    return a, y, FitData(a.x, pop.z, y)


def run_experiment(
    pop: StudyPopulation,
    spec: ScenarioSpec,
    rng: np.random.Generator,
    opts: FitOptions | None = None,
) -> Replication:
    """One randomized experiment. Numerical failures are recorded, not raised."""
    a, y, data = experiment_data(pop, spec, rng)
    try:
        fit = fit_mle(data, spec.link, opts)
        pi = plug_in(fit, pop.z)
        it = itt(y, a)
    except NeymanLogitError as exc:
        nan = math.nan
        return Replication(nan, nan, nan, nan, nan, f"{type(exc).__name__}: {exc}")
    return Replication(*fit.beta, pi.delta, it.delta)


@dataclass(frozen=True)
class SimulationReport:
    spec: ScenarioSpec
    truth: EstimateTriple
    rows: np.ndarray  # (k, 5), successful replications in index order
    indices: np.ndarray
    failures: tuple[tuple[int, str], ...] = ()
    mean: dict = field(default_factory=dict)
    sd: dict = field(default_factory=dict)
    mcse: dict = field(default_factory=dict)

    @classmethod
    def from_replications(
        cls, spec: ScenarioSpec, truth: EstimateTriple, reps: list[Replication]
    ) -> "SimulationReport":
        ok = [(i, r) for i, r in enumerate(reps) if r.failure is None]
        failures = tuple((i, r.failure) for i, r in enumerate(reps) if r.failure)
        rows = np.array([r.values for _, r in ok], dtype=float).reshape(-1, len(COLUMNS))
        mean, sd, mcse = {}, {}, {}
        for j, col in enumerate(COLUMNS):
            v = rows[:, j]
            mean[col] = float(np.mean(v)) if len(v) else math.nan
            sd[col] = float(np.std(v, ddof=1)) if len(v) > 1 else math.nan
            mcse[col] = sd[col] / math.sqrt(spec.replications)
        return cls(
            spec=spec,
            truth=truth,
            rows=rows,
            indices=np.array([i for i, _ in ok], dtype=int),
            failures=failures,
            mean=mean,
            sd=sd,
            mcse=mcse,
        )

    @property
    def failure_count(self) -> int:
        return len(self.failures)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, COLUMNS.index(name)]

    def bias(self, name: str) -> float:
        return self.mean[name] - self.truth.delta

    def to_table(self, header: bool = True) -> str:
        """Mean over SD for each column, in the layout of the classic table."""
        cols = ("n",) + COLUMNS + ("truth",)
        lines = []
        if header:
            lines.append("".join(f"{c:>12}" for c in cols))
        means = [self.mean[c] for c in COLUMNS] + [self.truth.delta]
        sds = [self.sd[c] for c in COLUMNS]
        lines.append(f"{self.spec.n:>12}" + "".join(f"{v:>12.6g}" for v in means))
        lines.append(" " * 12 + "".join(f"{v:>12.6g}" for v in sds))
        return "\n".join(lines)

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh)
        w.writerow(("replication",) + COLUMNS + ("status",))
        failed = dict(self.failures)
        ok = {int(i): row for i, row in zip(self.indices, self.rows)}
        for i in range(self.spec.replications):
            if i in ok:
                w.writerow((i, *(repr(float(v)) for v in ok[i]), "ok"))
            else:
                w.writerow((i,) + ("",) * len(COLUMNS) + (failed.get(i, "missing"),))
        w.writerow(())
        w.writerow(("statistic",) + COLUMNS + ("truth",))
        t = self.truth
        w.writerow(("mean", *(repr(self.mean[c]) for c in COLUMNS), repr(t.delta)))
        w.writerow(("sd", *(repr(self.sd[c]) for c in COLUMNS), ""))
        w.writerow(("mcse", *(repr(self.mcse[c]) for c in COLUMNS), ""))
        w.writerow(("truth_alpha_t", "", "", "", "", "", repr(t.alpha_t)))
        w.writerow(("truth_alpha_c", "", "", "", "", "", repr(t.alpha_c)))
        w.writerow(("failures", "", "", "", "", "", self.failure_count))

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def run_study(
    spec: ScenarioSpec,
    threads: int | None = None,
    population: StudyPopulation | None = None,
    opts: FitOptions | None = None,
) -> SimulationReport:
    """Freeze one population and run ``spec.replications`` experiments on it.

    Replication ``i`` draws from its own substream, so results do not depend
    on ``threads``. Raises TooManyFailures above 1% failed fits.
    """
    pop = population if population is not None else build_population(spec)
    truth = population_params(pop)

    def one(i: int) -> Replication:
        return run_experiment(pop, spec, substream(spec.seed, REPLICATION_STREAM, i), opts)

    threads = threads or os.cpu_count() or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(one, range(spec.replications)))
    else:
        reps = [one(i) for i in range(spec.replications)]

    report = SimulationReport.from_replications(spec, truth, reps)
    if report.failure_count > MAX_FAILURE_FRACTION * spec.replications:
        raise TooManyFailures(
            f"{report.failure_count} of {spec.replications} fits failed; "
            f"first: {report.failures[0][1]}"
        )
    if report.failures:
        log.warning("%d failed fits excluded", report.failure_count)
    return report
