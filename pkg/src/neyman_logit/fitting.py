"""Maximum-likelihood fits of ``y ~ 1 + x + z`` with a logit or probit link.

The fitted model is usually wrong for experimental data, so the objective is
a pseudo-log-likelihood. It is still strictly concave on a full-rank design,
which is all Newton's method needs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from os import PathLike
from typing import Literal, NamedTuple, Sequence

import numpy as np
from scipy import optimize
from scipy.special import expit

from neyman_logit import normal
from neyman_logit.errors import (
    LengthMismatch,
    MaxIterations,
    ParseError,
    RankDeficient,
    Separation,
)

Link = Literal["logit", "probit"]
LINKS: tuple[str, ...] = ("logit", "probit")
FIT_DATA_HEADER = ("y", "x", "z")

P_CLAMP = 1e-12
# fitted probabilities this close to 0 or 1 prompt a separation check
SEPARATION_P = 1e-6


class Beta(NamedTuple):
    b1: float
    b2: float
    b3: float


@dataclass(frozen=True)
class FitData:
    """Rows ``(x, z, y, w)``; the design row is ``(1, x, z)``."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    w: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        y = np.asarray(self.y, dtype=float)
        w = np.ones_like(y) if self.w is None else np.asarray(self.w, dtype=float)
        if not (x.shape == z.shape == y.shape == w.shape) or x.ndim != 1:
            raise LengthMismatch("x, z, y and w must be 1-d arrays of equal length")
        if len(y) == 0:
            raise ValueError("no rows")
        for name, v in (("x", x), ("y", y)):
            if not np.all((v == 0) | (v == 1)):
                raise ValueError(f"{name} must be 0/1")
        if not np.all(np.isfinite(z)):
            raise ValueError("z must be finite")
        if not np.all((w > 0) & np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
        for name, v in (("x", x), ("z", z), ("y", y), ("w", w)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple]) -> "FitData":
        """Rows of ``(x, z, y)`` or ``(x, z, y, w)``."""
        cols = list(zip(*rows))
        return cls(*cols)

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def design(self) -> np.ndarray:
        return np.column_stack([np.ones_like(self.x), self.x, self.z])


@dataclass(frozen=True)
class FitOptions:
    tol: float | None = None  # gradient sup-norm; None means 1e-8 * n_rows
    max_iter: int = 100
    max_halvings: int = 50
    separation_bound: float = 30.0

    def tolerance(self, n_rows: int) -> float:
        return self.tol if self.tol is not None else 1e-8 * n_rows


@dataclass(frozen=True)
class FitResult:
    beta: Beta
    link: str
    iterations: int
    grad_norm: float
    converged: bool
    loglik: float
    trace: tuple[float, ...] = field(default=(), repr=False)


def _check_link(link: str) -> None:
    if link not in LINKS:
        raise ValueError(f"unknown link {link!r}; expected one of {LINKS}")


def linear_predictor(beta, x, z):
    b1, b2, b3 = beta
    return b1 + b2 * np.asarray(x, dtype=float) + b3 * np.asarray(z, dtype=float)


def mean_function(eta, link: str = "logit"):
    """Unclamped success probability for linear predictor ``eta``."""
    _check_link(link)
    return expit(eta) if link == "logit" else normal.norm_cdf(eta)


def link_prob(beta, x, z, link: str = "logit"):
    """``p(beta, x, z)``, clamped strictly inside (0, 1)."""
    p = mean_function(linear_predictor(beta, x, z), link)
    p = np.clip(p, P_CLAMP, 1.0 - P_CLAMP)
    return float(p) if np.ndim(p) == 0 else p


def softplus(eta):
    """``log(1 + exp(eta))`` split by sign so neither branch overflows."""
    eta = np.asarray(eta, dtype=float)
    return np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def _row_terms(data: FitData, beta, link: str):
    """Per-row log-likelihood terms and first/second derivatives in eta."""
    eta = linear_predictor(beta, data.x, data.z)
    y = data.y
    if link == "logit":
        ll = y * eta - softplus(eta)
        p = expit(eta)
        d1 = y - p
        d2 = -p * (1.0 - p)
    else:
        ll = y * normal.norm_logcdf(eta) + (1.0 - y) * normal.norm_logcdf(-eta)
        m_pos = normal.mills_ratio(eta)
        m_neg = normal.mills_ratio(-eta)
        d1 = y * m_pos - (1.0 - y) * m_neg
        d2 = -y * m_pos * (eta + m_pos) - (1.0 - y) * m_neg * (m_neg - eta)
    return ll, d1, d2


def log_likelihood(data: FitData, beta, link: str = "logit") -> float:
    _check_link(link)
    ll, _, _ = _row_terms(data, beta, link)
    return float(np.dot(data.w, ll))


def gradient(data: FitData, beta, link: str = "logit") -> np.ndarray:
    _check_link(link)
    _, d1, _ = _row_terms(data, beta, link)
    return data.design.T @ (data.w * d1)


def _hessian(data: FitData, beta, link: str) -> np.ndarray:
    _, _, d2 = _row_terms(data, beta, link)
    X = data.design
    H = X.T @ (X * (data.w * d2)[:, None])
    return 0.5 * (H + H.T)


def design_rank(data: FitData) -> int:
    return int(np.linalg.matrix_rank(data.design))


def hessian(data: FitData, beta, link: str = "logit") -> np.ndarray:
    """Second derivative of the log-likelihood; negative definite on rank-3 data."""
    _check_link(link)
    if design_rank(data) < 3:
        raise RankDeficient("design matrix (1, x, z) has rank < 3")
    return _hessian(data, beta, link)


def is_separated(data: FitData) -> bool:
    """Whether some nonzero beta has ``(2y - 1) * (X @ beta) >= 0`` on every row.

    On a full-rank design this is exactly the condition under which the
    likelihood has no finite maximizer (complete or quasi-complete separation).
    """
    S = (2.0 * data.y - 1.0)[:, None] * data.design
    res = optimize.linprog(
        -S.sum(axis=0),
        A_ub=-S,
        b_ub=np.zeros(data.n_rows),
        bounds=[(-1.0, 1.0)] * 3,
        method="highs",
    )
    if res.status != 0:
        return False
    return -res.fun > 1e-7 * max(1.0, np.abs(S).max())


def fit_mle(
    data: FitData, link: str = "logit", opts: FitOptions | None = None
) -> FitResult:
    """Newton's method with step halving, started at ``beta = 0``.

    Raises RankDeficient, Separation or MaxIterations.
    """
    _check_link(link)
    opts = opts or FitOptions()
    if design_rank(data) < 3:
        raise RankDeficient("design matrix (1, x, z) has rank < 3")
    tol = opts.tolerance(data.n_rows)

    beta = np.zeros(3)
    ll = log_likelihood(data, beta, link)
    trace = [ll]
    checked_separation = False
    for it in range(opts.max_iter + 1):
        g = gradient(data, beta, link)
        gn = float(np.max(np.abs(g)))
        if gn <= tol:
            break
        if it == opts.max_iter:
            raise MaxIterations(f"no convergence after {opts.max_iter} iterations")
        if not checked_separation and np.max(np.abs(beta)) > opts.separation_bound:
            if is_separated(data):
                raise Separation("data are separated; coefficients diverge")
            checked_separation = True
        try:
            step = np.linalg.solve(-_hessian(data, beta, link), g)
        except np.linalg.LinAlgError:
            if is_separated(data):
                raise Separation("data are separated; coefficients diverge") from None
            raise RankDeficient("Hessian singular to working precision") from None
        t = 1.0
        for _ in range(opts.max_halvings):
            cand = beta + t * step
            ll_cand = log_likelihood(data, cand, link)
            if ll_cand >= ll:
                break
            t *= 0.5
        else:
            # no ascent left at working precision
            if gn <= 1e3 * tol:
                break
            raise MaxIterations("line search failed to increase the log-likelihood")
        beta, ll = cand, ll_cand
        trace.append(ll)

    if gn <= tol:
        # one extra full Newton step takes the residual to rounding level; its
        # objective gain is below float resolution, so judge it by the gradient
        try:
            cand = beta + np.linalg.solve(-_hessian(data, beta, link), g)
            gn_cand = float(np.max(np.abs(gradient(data, cand, link))))
            if gn_cand < gn:
                beta, gn = cand, gn_cand
                ll = log_likelihood(data, beta, link)
        except np.linalg.LinAlgError:
            pass

    # a slowly diverging fit can still meet the gradient test; confirm finiteness
    p = mean_function(data.design @ beta, link)
    if min(p.min(), 1.0 - p.max()) < SEPARATION_P and is_separated(data):
        raise Separation("data are separated; coefficients diverge")
    return FitResult(
        beta=Beta(*map(float, beta)),
        link=link,
        iterations=len(trace) - 1,
        grad_norm=gn,
        converged=gn <= tol,
        loglik=ll,
        trace=tuple(trace),
    )


def write_fit_data_csv(data: FitData, path: str | PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIT_DATA_HEADER)
        for y, x, z in zip(data.y, data.x, data.z):
            w.writerow((int(y), int(x), repr(float(z))))


def read_fit_data_csv(path: str | PathLike) -> FitData:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FIT_DATA_HEADER:
            raise ParseError(f"{path}: expected header {','.join(FIT_DATA_HEADER)}")
        ys, xs, zs = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                y, x, z = row
                y, x, z = int(y), int(x), float(z)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if y not in (0, 1) or x not in (0, 1):
                raise ParseError(f"{path}:{lineno}: y and x must be 0 or 1")
            ys.append(y)
            xs.append(x)
            zs.append(z)
    try:
        return FitData(xs, zs, ys)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
