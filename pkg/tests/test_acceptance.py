"""Acceptance gate: every criterion at its stated tolerance.

Each test records a one-line PASS/FAIL verdict that is printed in the
terminal summary, then asserts. Run alone with ``pytest tests/test_acceptance.py``.
"""

import math

import numpy as np
import pytest

from neyman_logit import checks
from neyman_logit.montecarlo import ScenarioSpec, run_study

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow

CFG = checks.CheckConfig()
STUDY_SIZES = (100, 500, 1000, 5000)


def verdict(k: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {k:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    assert ok, line


def from_checks(k: int, title: str, results) -> None:
    ok = all(r.passed for r in results)
    detail = "; ".join(f"{r.name} worst={r.worst_violation:.3g} {r.detail}".strip() for r in results)
    verdict(k, title, ok, detail)


@pytest.fixture(scope="module")
def study():
    return {n: run_study(ScenarioSpec(n=n)) for n in STUDY_SIZES}


def test_criterion_01_study_behaviour(study):
    parts, ok = [], True
    for n, rep in study.items():
        bias = rep.bias("plug_in")
        within = abs(bias) <= 3 * rep.mcse["plug_in"]
        tighter = rep.sd["plug_in"] < rep.sd["b2"]
        ok &= within and tighter and rep.failure_count == 0
        parts.append(
            f"n={n} plug-in {rep.mean['plug_in']:.4f} truth {rep.truth.delta:.4f} "
            f"|bias|/mcse {abs(bias) / rep.mcse['plug_in']:.2f} "
            f"sd {rep.sd['plug_in']:.4f} < {rep.sd['b2']:.4f}"
        )
    verdict(1, "plug-in tracks truth, tighter than b2", ok, "; ".join(parts))


def test_criterion_02_b2_bias(study):
    rep = study[5000]
    bias = rep.bias("b2")
    verdict(2, "b2 bias at n=5000", 0.12 <= bias <= 0.28,
            f"mean b2 {rep.mean['b2']:.4f} - truth {rep.truth.delta:.4f} = {bias:.4f} "
            f"(mcse {rep.mcse['b2']:.4f}), band [0.12, 0.28]")


def test_criterion_03_u_plus_v_variant():
    rep = run_study(ScenarioSpec(n=5000, covariate_kind="U_plus_V"))
    b2 = rep.mean["b2"]
    bias = rep.bias("plug_in")
    ok = 2.5 <= b2 <= 3.5 and abs(bias) <= 3 * rep.mcse["plug_in"]
    verdict(3, "U+V covariate", ok,
            f"mean b2 {b2:.4f} in [2.5, 3.5]; plug-in {rep.mean['plug_in']:.4f} "
            f"truth {rep.truth.delta:.4f} |bias|/mcse {abs(bias) / rep.mcse['plug_in']:.2f}")


def test_criterion_04_ordering():
    from_checks(4, "b2 further from zero than plug-in", [checks.check_ordering(CFG)])


def test_criterion_05_pooling():
    from_checks(5, "pooled multiplier strictly between 1 and lambda", [checks.check_pooling_inequality(CFG)])


def test_criterion_06_likelihood_equations():
    from_checks(6, "likelihood equations and covariate balance",
                [checks.check_likelihood_equations(CFG), checks.check_covariate_balance(CFG)])


def test_criterion_07_exact_oracle():
    from_checks(7, "exact randomization unbiasedness", [checks.check_exact_unbiasedness(CFG)])


def test_criterion_08_fourth_moments():
    from_checks(8, "hypergeometric fourth moments", [checks.check_moment_bound(CFG), checks.check_moment_hoeffding(CFG)])


def test_criterion_09_log1pexp_bounds():
    from_checks(9, "log(1 + e^x) bounds", [checks.check_log1pexp(CFG)])


def test_criterion_10_convergence_trend():
    beta_inf, pts = checks._convergence(CFG)
    errs = [p.beta_error for p in pts]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    last = pts[-1]
    vals = (last.plug_in_alpha_t, last.itt_alpha_t, last.truth_alpha_t)
    spread = max(vals) - min(vals)
    ok = decreasing and errs[-1] < 0.05 and spread <= 0.01
    verdict(10, "fitted beta approaches the limit", ok,
            ", ".join(f"n={p.n} err {p.beta_error:.4g}" for p in pts)
            + f"; alpha_t plug-in/ITT/truth spread {spread:.2g}")


def test_criterion_11_probit_scale():
    from_checks(11, "probit/logit b2 ratio", [checks.check_probit_scale(CFG)])


def test_criterion_12_numerical_hygiene():
    from_checks(12, "numerical hygiene", [
        checks.check_gradient_fd(CFG),
        checks.check_hessian(CFG),
        checks.check_monotone_ascent(CFG),
    ])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
