import math
from statistics import NormalDist

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neyman_logit.normal import mills_ratio, norm_cdf, norm_logcdf, norm_pdf, norm_ppf


def test_cdf_against_erfc():
    for x in np.linspace(-12, 12, 961):
        assert abs(norm_cdf(x) - 0.5 * math.erfc(-x / math.sqrt(2))) <= 1e-12


def test_cdf_symmetric_at_zero():
    assert norm_cdf(0.0) == 0.5
    assert norm_ppf(0.5) == 0.0


@given(st.floats(1e-12, 1 - 1e-12))
def test_ppf_inverts_cdf(p):
    x = norm_ppf(p)
    assert x == pytest.approx(NormalDist().inv_cdf(p), rel=1e-12, abs=1e-12)


def test_ppf_deep_tails():
    with mpmath.workdps(40):
        for p in (1e-300, 1e-100, 1e-20, 1e-10):
            ref = mpmath.findroot(lambda x: mpmath.ncdf(x) - mpmath.mpf(p), norm_ppf(p))
            assert norm_ppf(p) == pytest.approx(float(ref), rel=1e-13)


def test_ppf_edges_and_errors():
    assert norm_ppf(0.0) == -np.inf
    assert norm_ppf(1.0) == np.inf
    with pytest.raises(ValueError):
        norm_ppf(1.5)
    out = norm_ppf(np.array([0.025, 0.975]))
    assert out == pytest.approx([-1.959963984540054, 1.959963984540054], rel=1e-14)


def test_log_cdf_and_mills_ratio_stay_finite():
    x = np.array([-40.0, -10.0, 0.0, 10.0])
    assert np.all(np.isfinite(norm_logcdf(x)))
    m = mills_ratio(x)
    assert np.all(np.isfinite(m))
    # phi(x) / Phi(x) ~ -x for large negative x
    assert m[0] == pytest.approx(40.0, rel=1e-3)
    assert m[2] == pytest.approx(norm_pdf(0.0) / 0.5)
