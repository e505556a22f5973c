import pytest

from neyman_logit.checks import CHECKS, CheckConfig, CheckResult, run_checks

SMALL = CheckConfig(grid_max_n=40, pooling_instances=500, ordering_fits=50, convergence_reps=3)


@pytest.fixture(scope="module")
def results():
    return run_checks(cfg=SMALL)


def test_every_check_passes(results):
    failed = [f"{r.property}/{r.name}: {r.detail}" for r in results if r.passed is False]
    assert not failed


def test_result_shape(results):
    assert len(results) >= len(CHECKS)
    assert all(isinstance(r, CheckResult) for r in results)
    assert {r.status for r in results} <= {"pass", "fail", "info"}
    info = [r for r in results if r.status == "info"]
    assert [r.name for r in info] == ["limiting_plug_in_gap"]


def test_filter_by_group_and_name():
    names = {r.property for r in run_checks("pooling", SMALL)}
    assert names == {"pooling"}
    assert [r.name for r in run_checks("check_log1pexp", SMALL)] == ["log1pexp_bounds"]
    assert run_checks("no-such-check", SMALL) == []


def test_failure_status():
    r = CheckResult("p", "n", False, 1.0)
    assert r.status == "fail"
