"""Study populations with fixed potential responses, randomized assignment,
observed responses, and the population-level success rates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from neyman_logit.errors import (
    DegenerateParameter,
    InvalidFraction,
    LengthMismatch,
    ParseError,
)

POPULATION_HEADER = ("z", "y_t", "y_c")


class Subject(NamedTuple):
    z: float
    y_t: int
    y_c: int


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_binary(values: np.ndarray, name: str) -> None:
    if not np.all((values == 0) | (values == 1)):
        raise ValueError(f"{name} must contain only 0/1 values")


def log_odds(a: float) -> float:
    if not 0.0 < a < 1.0:
        raise DegenerateParameter(f"log odds undefined for rate {a!r}")
    return math.log(a) - math.log1p(-a)


@dataclass(frozen=True)
class StudyPopulation:
    """Fixed table of subjects: covariate ``z`` and potential responses.

    Stored column-wise as read-only arrays. Nothing about a population is
    random once it has been constructed.
    """

    z: np.ndarray
    y_t: np.ndarray
    y_c: np.ndarray

    def __post_init__(self):
        z = _frozen(self.z, float)
        y_t = _frozen(self.y_t, np.int8)
        y_c = _frozen(self.y_c, np.int8)
        if not (z.ndim == y_t.ndim == y_c.ndim == 1):
            raise ValueError("population columns must be one-dimensional")
        if not (len(z) == len(y_t) == len(y_c)):
            raise LengthMismatch("population columns differ in length")
        if len(z) < 2:
            raise ValueError("a study population needs at least 2 subjects")
        if not np.all(np.isfinite(z)):
            raise ValueError("covariate values must be finite")
        _check_binary(np.asarray(self.y_t), "y_t")
        _check_binary(np.asarray(self.y_c), "y_c")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y_t", y_t)
        object.__setattr__(self, "y_c", y_c)

    @classmethod
    def from_subjects(cls, subjects: Iterable[Subject | tuple]) -> "StudyPopulation":
        rows = [Subject(*s) for s in subjects]
        if not rows:
            raise ValueError("a study population needs at least 2 subjects")
        z, y_t, y_c = zip(*rows)
        return cls(z, y_t, y_c)

    @property
    def n(self) -> int:
        return len(self.z)

    def __len__(self) -> int:
        return self.n

    @property
    def subjects(self) -> tuple[Subject, ...]:
        return tuple(
            Subject(float(z), int(t), int(c))
            for z, t, c in zip(self.z, self.y_t, self.y_c)
        )

    def permuted(self, order: Sequence[int]) -> "StudyPopulation":
        idx = np.asarray(order)
        return StudyPopulation(self.z[idx], self.y_t[idx], self.y_c[idx])


@dataclass(frozen=True)
class Assignment:
    """0/1 treatment indicators with ``0 < n_t < n``."""

    x: np.ndarray

    def __post_init__(self):
        x = _frozen(self.x, np.int8)
        if x.ndim != 1:
            raise ValueError("assignment must be one-dimensional")
        _check_binary(x, "x")
        n_t = int(x.sum())
        if not 0 < n_t < len(x):
            raise InvalidFraction(
                f"assignment must leave both arms nonempty (n_t={n_t}, n={len(x)})"
            )
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def n_t(self) -> int:
        return int(self.x.sum())

    @property
    def n_c(self) -> int:
        return self.n - self.n_t

    @property
    def treated(self) -> np.ndarray:
        return np.flatnonzero(self.x)

    @property
    def control(self) -> np.ndarray:
        return np.flatnonzero(self.x == 0)


@dataclass(frozen=True)
class EstimateTriple:
    """Success rates under treatment and control plus their log-odds difference.

    ``delta`` is always derived from the two rates, never stored independently.
    """

    alpha_t: float
    alpha_c: float
    delta: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha_t", float(self.alpha_t))
        object.__setattr__(self, "alpha_c", float(self.alpha_c))
        object.__setattr__(
            self, "delta", log_odds(self.alpha_t) - log_odds(self.alpha_c)
        )

    @property
    def probit_delta(self) -> float:
        """Contrast on the probit scale, ``Phi^-1(alpha_t) - Phi^-1(alpha_c)``."""
        from neyman_logit.normal import norm_ppf

        return float(norm_ppf(self.alpha_t) - norm_ppf(self.alpha_c))

    def swapped(self) -> "EstimateTriple":
        return EstimateTriple(self.alpha_c, self.alpha_t)


def population_params(pop: StudyPopulation) -> EstimateTriple:
    alpha_t = int(pop.y_t.sum()) / pop.n
    alpha_c = int(pop.y_c.sum()) / pop.n
    return EstimateTriple(alpha_t, alpha_c)


def treated_count(n: int, pi_t: float) -> int:
    """``round(n * pi_t)`` with ties to even; both arms must be nonempty."""
    if not 0.0 < pi_t < 1.0:
        raise InvalidFraction(f"pi_t must lie in (0, 1), got {pi_t!r}")
    n_t = round(n * pi_t)
    if not 1 <= n_t <= n - 1:
        raise InvalidFraction(f"n={n}, pi_t={pi_t} gives n_t={n_t}")
    return n_t


def assign(
    pop: StudyPopulation | int, pi_t: float, rng: np.random.Generator
) -> Assignment:
    """Draw ``round(n * pi_t)`` subjects uniformly without replacement."""
    n = pop if isinstance(pop, int) else pop.n
    n_t = treated_count(n, pi_t)
    # draw the smaller arm; its complement is then uniform too
    k = min(n_t, n - n_t)
    # partial Fisher-Yates: after step i, idx[:i+1] is a uniform random (i+1)-subset
    idx = list(range(n))
    for i, j in enumerate(rng.integers(np.arange(k), n).tolist()):
        idx[i], idx[j] = idx[j], idx[i]
    if k == n_t:
        x = np.zeros(n, dtype=np.int8)
        x[idx[:k]] = 1
    else:
        x = np.ones(n, dtype=np.int8)
        x[idx[:k]] = 0
    return Assignment(x)


def observe(pop: StudyPopulation, a: Assignment | Sequence[int]) -> np.ndarray:
    """Observed responses ``x * y_t + (1 - x) * y_c``.

    Accepts a raw indicator vector so that all-treated or all-control
    assignments can be used.
    """
    x = a.x if isinstance(a, Assignment) else np.asarray(a, dtype=np.int8)
    if len(x) != pop.n:
        raise LengthMismatch(f"assignment has {len(x)} entries, population {pop.n}")
    _check_binary(x, "x")
    return np.where(x == 1, pop.y_t, pop.y_c).astype(np.int8)


def individual_estimates(
    observed: Sequence[int], a: Assignment, pi_t: float
) -> np.ndarray:
    """Per-subject unbiased estimates of ``(y_t, y_c)``, as an ``(n, 2)`` array."""
    if not 0.0 < pi_t < 1.0:
        raise InvalidFraction(f"pi_t must lie in (0, 1), got {pi_t!r}")
    y = np.asarray(observed, dtype=float)
    x = a.x.astype(float)
    if len(y) != len(x):
        raise LengthMismatch("observed responses and assignment differ in length")
    return np.column_stack([y * x / pi_t, y * (1.0 - x) / (1.0 - pi_t)])


def write_population_csv(pop: StudyPopulation, path: str | PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(POPULATION_HEADER)
        for s in pop.subjects:
            w.writerow((repr(s.z), s.y_t, s.y_c))


def read_population_csv(path: str | PathLike) -> StudyPopulation:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != POPULATION_HEADER:
            raise ParseError(f"{path}: expected header {','.join(POPULATION_HEADER)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                z, y_t, y_c = row
                rows.append((float(z), _parse_bit(y_t), _parse_bit(y_c)))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    try:
        return StudyPopulation.from_subjects(rows)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _parse_bit(s: str) -> int:
    v = int(s)
    if v not in (0, 1):
        raise ValueError(f"expected 0 or 1, got {s!r}")
    return v
