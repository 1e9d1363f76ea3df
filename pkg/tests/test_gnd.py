import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from gndmix.gnd import (
    GndParams,
    gnd_central_moment,
    gnd_kurtosis,
    gnd_log_pdf,
    gnd_sample,
    gnd_variance,
)
from gndmix.special import gammaincc

SHAPES = [0.5, 0.8, 1.0, 1.5, 2.0, 5.0, 10.0]


@pytest.mark.parametrize("kwargs", [
    dict(mu=0, sigma=0, nu=1),
    dict(mu=0, sigma=-1, nu=1),
    dict(mu=0, sigma=1, nu=0),
    dict(mu=math.inf, sigma=1, nu=1),
    dict(mu=0, sigma=1, nu=math.nan),
])
def test_params_reject_invalid(kwargs):
    with pytest.raises(ValueError):
        GndParams(**kwargs)


@pytest.mark.parametrize("p, x, expected", [
    (GndParams(0, 1, 2), 0.0, -0.5 * math.log(math.pi)),
    (GndParams(0, 1, 1), 0.0, math.log(0.5)),
    (GndParams(0, 1, 2), 1.0, -1.0 - 0.5 * math.log(math.pi)),
])
def test_log_pdf_examples(p, x, expected):
    assert gnd_log_pdf(p, x) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("nu", SHAPES)
def test_log_pdf_matches_scipy_gennorm(nu):
    p = GndParams(0.7, 1.3, nu)
    x = np.linspace(-6, 6, 41)
    expected = stats.gennorm.logpdf(x, nu, loc=0.7, scale=1.3)
    np.testing.assert_allclose(gnd_log_pdf(p, x), expected, rtol=1e-12, atol=1e-12)


def _integral(p, lo, hi):
    pdf = lambda t: math.exp(gnd_log_pdf(p, t))  # noqa: E731
    total = 0.0
    for a, b in [(lo, p.mu - 5 * p.sigma), (p.mu - 5 * p.sigma, p.mu),
                 (p.mu, p.mu + 5 * p.sigma), (p.mu + 5 * p.sigma, hi)]:
        total += integrate.quad(pdf, a, b, limit=500, epsabs=1e-13, epsrel=1e-12)[0]
    return total


@pytest.mark.parametrize("nu", SHAPES)
def test_density_integrates_to_one(nu):
    p = GndParams(0.3, 2.0, nu)
    assert _integral(p, -math.inf, math.inf) == pytest.approx(1.0, abs=1e-6)
    # Over +-50 sigma the missing mass is the gamma tail Q(1/nu, 50^nu); it
    # only matters for the heaviest tails (about 7e-3 at nu = 0.5).
    inside = 1.0 - gammaincc(1.0 / nu, 50.0 ** nu)
    assert _integral(p, p.mu - 50 * p.sigma, p.mu + 50 * p.sigma) == pytest.approx(inside, abs=1e-6)
    if nu >= 0.8:
        assert inside == pytest.approx(1.0, abs=1e-6)


def test_log_pdf_far_tail_stays_finite():
    p = GndParams(0.0, 1.0, 30.0)
    assert math.isfinite(gnd_log_pdf(p, 1e3 - 1)) or gnd_log_pdf(p, 1e3) == -math.inf
    p = GndParams(0.0, 1.0, 5.0)
    assert math.isfinite(gnd_log_pdf(p, 1e3))


@given(
    mu=st.floats(-100, 100),
    sigma=st.floats(1e-3, 1e3),
    nu=st.floats(0.1, 30),
    d=st.floats(0, 1e3),
)
def test_log_pdf_symmetric(mu, sigma, nu, d):
    p = GndParams(mu, sigma, nu)
    assert gnd_log_pdf(p, mu + d) == gnd_log_pdf(p, mu - d) or math.isclose(
        gnd_log_pdf(p, mu + d), gnd_log_pdf(p, mu - d), rel_tol=1e-12, abs_tol=1e-12
    )


def test_gaussian_reduction_on_grid():
    p = GndParams(1.5, 0.8, 2.0)
    x = np.linspace(-3, 6, 100)
    expected = stats.norm.logpdf(x, loc=1.5, scale=0.8 / math.sqrt(2))
    np.testing.assert_allclose(gnd_log_pdf(p, x), expected, rtol=0, atol=1e-12)


def test_central_moments():
    assert gnd_central_moment(GndParams(0, 1, 2), 3) == 0.0
    assert gnd_central_moment(GndParams(0, 1, 2), 2) == pytest.approx(0.5, abs=1e-14)
    # 9 * Gamma(0.6) / Gamma(0.2), evaluated with mpmath at 30 digits
    assert gnd_central_moment(GndParams(0, 3, 5), 2) == pytest.approx(2.919448162499079, rel=1e-12)
    assert gnd_central_moment(GndParams(0, 3, 5), 0) == 1.0


@pytest.mark.parametrize("nu, var, kurt", [(2.0, 0.5, 3.0), (1.0, 2.0, 6.0)])
def test_variance_and_kurtosis_reductions(nu, var, kurt):
    p = GndParams(0, 1, nu)
    assert gnd_variance(p) == pytest.approx(var, abs=1e-12)
    assert gnd_kurtosis(p) == pytest.approx(kurt, abs=1e-10)


@pytest.mark.parametrize("nu", [0.8, 1.5, 3.0, 5.0])
def test_moments_match_scipy(nu):
    p = GndParams(0, 1.7, nu)
    dist = stats.gennorm(nu, scale=1.7)
    assert gnd_variance(p) == pytest.approx(dist.var(), rel=1e-10)
    assert gnd_kurtosis(p) == pytest.approx(dist.stats(moments="k") + 3.0, rel=1e-10)


def test_sample_empty_and_deterministic():
    p = GndParams(0, 1, 2)
    assert gnd_sample(p, np.random.default_rng(0), 0).shape == (0,)
    a = gnd_sample(p, np.random.default_rng(5), 100)
    b = gnd_sample(p, np.random.default_rng(5), 100)
    np.testing.assert_array_equal(a, b)


def _mc_moment_check(draws, var, kurt, k):
    """Empirical variance and kurtosis within k Monte Carlo standard errors."""
    n = draws.size
    d = draws - draws.mean()
    m2 = np.mean(d ** 2)
    # delta-method standard errors from the sample's own higher moments
    se_var = np.sqrt((np.mean(d ** 4) - m2 ** 2) / n)
    y = d ** 4 / m2 ** 2 - 2 * (np.mean(d ** 4) / m2 ** 3) * (d ** 2 - m2)
    se_kurt = np.std(y) / np.sqrt(n)
    assert abs(m2 - var) <= k * se_var
    assert abs(np.mean(d ** 4) / m2 ** 2 - kurt) <= k * se_kurt


@pytest.mark.parametrize("nu", [0.8, 1.0, 1.5, 2.0, 5.0])
def test_sampler_matches_analytic_moments(nu):
    p = GndParams(0.0, 1.0, nu)
    draws = gnd_sample(p, np.random.default_rng(int(nu * 100)), 1_000_000)
    _mc_moment_check(draws, gnd_variance(p), gnd_kurtosis(p), k=4)


def test_sampler_examples():
    p2 = GndParams(0.0, 1.0, 2.0)
    draws = gnd_sample(p2, np.random.default_rng(11), 1_000_000)
    _mc_moment_check(draws, 0.5, 3.0, k=3)
    p5 = GndParams(0.0, 1.0, 5.0)
    draws = gnd_sample(p5, np.random.default_rng(12), 1_000_000)
    _mc_moment_check(draws, gnd_variance(p5), 2.0700983252962852, k=3)


def test_sampler_distribution_ks():
    p = GndParams(2.0, 0.5, 1.5)
    draws = gnd_sample(p, np.random.default_rng(3), 20_000)
    res = stats.kstest(draws, stats.gennorm(1.5, loc=2.0, scale=0.5).cdf)
    assert res.pvalue > 1e-3
