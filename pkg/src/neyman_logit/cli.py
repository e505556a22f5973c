"""Command-line interface: ``simulate``, ``fit``, ``check``, ``pooled-odds``.

Exit codes (stable):

    0  ok
    1  usage error
    2  data error (unreadable or malformed input)
    3  separation
    4  property failure (``check``)
    5  rank-deficient design
    6  degenerate parameter (a success rate of 0 or 1)
    7  other numerical failure (iteration limit, too many failed fits)
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from neyman_logit import checks, theory
from neyman_logit.errors import (
    DegenerateParameter,
    MaxIterations,
    NeymanLogitError,
    ParseError,
    RankDeficient,
    Separation,
    TooManyFailures,
)
from neyman_logit.estimators import coefficient_delta, itt, plug_in
from neyman_logit.fitting import LINKS, fit_mle, read_fit_data_csv, write_fit_data_csv
from neyman_logit.montecarlo import (
    REPLICATION_STREAM,
    ScenarioSpec,
    build_population,
    experiment_data,
    run_study,
    substream,
)
from neyman_logit.population import (
    Assignment,
    read_population_csv,
    write_population_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SEPARATION = 3
EXIT_PROPERTY = 4
EXIT_RANK = 5
EXIT_DEGENERATE = 6
EXIT_NUMERICAL = 7

COVARIATES = {"v": "V", "u+v": "U_plus_V"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (ParseError, OSError)):
        return EXIT_DATA
    if isinstance(exc, Separation):
        return EXIT_SEPARATION
    if isinstance(exc, RankDeficient):
        return EXIT_RANK
    if isinstance(exc, DegenerateParameter):
        return EXIT_DEGENERATE
    if isinstance(exc, (MaxIterations, TooManyFailures)):
        return EXIT_NUMERICAL
    return EXIT_USAGE


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


# --- simulate ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    out, close = _open_out(args.out)
    try:
        reports = []
        for i, n in enumerate(args.n):
            spec = ScenarioSpec(
                n=n,
                covariate_kind=COVARIATES[args.covariate],
                cut_c=args.cut_c,
                cut_t=args.cut_t,
                pi_t=args.pi_t,
                replications=args.reps,
                link=args.link,
                seed=args.seed,
            )
            pop = read_population_csv(args.population) if args.population else build_population(spec)
            if args.save_population:
                write_population_csv(pop, args.save_population)
            if args.emit_data:
                _emit_data(Path(args.emit_data), pop, spec)
            report = run_study(spec, threads=args.threads, population=pop)
            reports.append(report)
            if args.format == "csv":
                report.write_csv(out)
                continue
            print(report.to_table(header=i == 0), file=out)
            if args.link == "probit":
                paired = run_study(
                    ScenarioSpec(**{**spec.__dict__, "link": "logit"}),
                    threads=args.threads,
                    population=pop,
                )
                ratio = report.mean["b2"] / paired.mean["b2"]
                print(
                    f"{'':>12}probit/logit b2 ratio {_fmt(ratio)} "
                    f"(logit b2 {_fmt(paired.mean['b2'])}); "
                    f"probit-scale truth {_fmt(report.truth.probit_delta)}",
                    file=out,
                )
        if args.format == "table":
            print(file=out)
            for r in reports:
                print(
                    f"n={r.spec.n}: bias b2 {_fmt(r.bias('b2'))}, "
                    f"plug-in {_fmt(r.bias('plug_in'))} (mcse {_fmt(r.mcse['plug_in'])}), "
                    f"itt {_fmt(r.bias('itt'))} (mcse {_fmt(r.mcse['itt'])}), "
                    f"failed fits {r.failure_count}",
                    file=out,
                )
    finally:
        if close:
            out.close()
    return EXIT_OK


def _emit_data(directory: Path, pop, spec: ScenarioSpec) -> None:
    """Write the frozen population and every replication's fit data."""
    directory.mkdir(parents=True, exist_ok=True)
    write_population_csv(pop, directory / f"population_n{spec.n}.csv")
    for i in range(spec.replications):
        _, _, data = experiment_data(pop, spec, substream(spec.seed, REPLICATION_STREAM, i))
        write_fit_data_csv(data, directory / f"n{spec.n}_rep{i:04d}.csv")


# --- fit -------------------------------------------------------------------------------


def cmd_fit(args) -> int:
    data = read_fit_data_csv(args.csv)
    fit = fit_mle(data, args.link)
    pi = plug_in(fit, data.z)
    try:
        a = Assignment(data.x)
        it = itt(data.y.astype(int), a)
    except NeymanLogitError as exc:
        it, itt_note = None, str(exc)
    b = fit.beta
    print(f"link        {fit.link}")
    print(f"beta        {b.b1!r} {b.b2!r} {b.b3!r}")
    print(f"iterations  {fit.iterations}  (gradient sup-norm {fit.grad_norm:.3g})")
    print(f"plug-in     alpha_t {_fmt(pi.alpha_t)}  alpha_c {_fmt(pi.alpha_c)}  delta {_fmt(pi.delta)}")
    if fit.link == "probit":
        print(f"            probit-scale delta {_fmt(pi.probit_delta)}")
    if it is not None:
        print(f"itt         alpha_t {_fmt(it.alpha_t)}  alpha_c {_fmt(it.alpha_c)}  delta {_fmt(it.delta)}")
    else:
        print(f"itt         unavailable: {itt_note}")
    b2 = coefficient_delta(fit)
    print(f"b2          {_fmt(b2)}  (model's common log-odds shift; not a consistent estimate of delta)")
    if fit.link == "logit" and b.b3 != 0 and np.ptp(data.z) > 0 and b2 != 0:
        rel = ">" if b2 > 0 else "<"
        print(f"note        b2 {rel} plug-in delta: pooling over z moves the odds multiplier toward 1")
    return EXIT_OK


# --- check -----------------------------------------------------------------------------


def cmd_check(args) -> int:
    cfg = checks.CheckConfig(seed=args.seed, grid_max_n=args.grid_max_n)
    results = checks.run_checks(args.filter, cfg)
    if not results:
        print(f"no checks match filter {args.filter!r}", file=sys.stderr)
        return EXIT_USAGE
    for r in results:
        print(f"[{r.status.upper():4}] {r.property}/{r.name}  worst={r.worst_violation:.3g}  {r.detail}")
    out, close = _open_out(args.out)
    try:
        if not close:
            print(file=out)
        w = csv.writer(out)
        w.writerow(("property", "name", "status", "worst_violation"))
        for r in results:
            w.writerow((r.property, r.name, r.status, repr(r.worst_violation)))
    finally:
        if close:
            out.close()
    return EXIT_OK if all(r.passed is not False for r in results) else EXIT_PROPERTY


# --- pooled-odds -----------------------------------------------------------------------


def cmd_pooled_odds(args) -> int:
    try:
        q = [float(v) for v in args.q.split(",") if v.strip()]
        res = theory.pooled_multiplier(q, args.lam)
    except ValueError as exc:
        print(f"pooled-odds: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"p_bar   {_fmt(res.p_bar)}")
    print(f"q_bar   {_fmt(res.q_bar)}")
    print(f"pooled  {_fmt(res.pooled)}")
    print(f"lambda  {_fmt(args.lam)}")
    print(f"verdict {theory.pooling_verdict(q, args.lam)}")
    return EXIT_OK


# --- wiring ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="neyman-logit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="frozen-population simulation study")
    s.add_argument("--n", type=int, nargs="+", default=[100, 500, 1000, 5000])
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--pi-t", type=float, default=0.75)
    s.add_argument("--seed", type=int, default=ScenarioSpec.seed)
    s.add_argument("--link", choices=LINKS, default="logit")
    s.add_argument("--covariate", choices=sorted(COVARIATES), default="v")
    s.add_argument("--cut-c", type=float, default=0.5)
    s.add_argument("--cut-t", type=float, default=0.75)
    s.add_argument("--format", choices=("table", "csv"), default="table")
    s.add_argument("--out", help="write the report here instead of stdout")
    s.add_argument("--emit-data", metavar="DIR", help="write population and per-replication fit data CSVs")
    s.add_argument("--population", metavar="CSV", help="use this frozen population (z,y_t,y_c)")
    s.add_argument("--save-population", metavar="CSV")
    s.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a CSV with header y,x,z")
    f.add_argument("csv")
    f.add_argument("--link", choices=LINKS, default="logit")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("check", help="run the theory property suite")
    c.add_argument("--filter")
    c.add_argument("--grid-max-n", type=int, default=200)
    c.add_argument("--seed", type=int, default=checks.CheckConfig.seed)
    c.add_argument("--out", help="write the CSV summary here instead of stdout")
    c.set_defaults(func=cmd_check)

    o = sub.add_parser("pooled-odds", help="pooled odds multiplier for given q and lambda")
    o.add_argument("--q", required=True, help="comma-separated probabilities in (0, 1)")
    o.add_argument("--lambda", dest="lam", type=float, required=True)
    o.set_defaults(func=cmd_pooled_odds)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (NeymanLogitError, OSError) as exc:
        print(f"neyman-logit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except ValueError as exc:
        print(f"neyman-logit: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
