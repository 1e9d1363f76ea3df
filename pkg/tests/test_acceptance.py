"""End-to-end acceptance checks, one test per criterion.

The Monte Carlo criteria (4, 5, 6, 8) take several minutes in total.
"""

import math

import numpy as np
import pytest

from acceptance_log import record
from gndmix.em import FitConfig, fit, shape_curvature, shape_gradient
from gndmix.gnd import GndParams, gnd_kurtosis, gnd_log_pdf, gnd_sample
from gndmix.mixture import mixture_moments
from gndmix.selection import Candidate, aic, bic, compare_models, jarque_bera
from gndmix.simulation import builtin_scenarios, run_scenario, sample_mixture

from oracles import shape_derivatives_fd

SCENARIOS = builtin_scenarios()
REPLICATES = 50


def _study(index, sizes):
    spec = builtin_scenarios(replicates=REPLICATES, sample_sizes=sizes, n_starts=10)[index - 1]
    spec.fit_config_ecm = spec.fit_config_ecm.with_options(track_q=True)
    spec.fit_config_ecms = spec.fit_config_ecms.with_options(track_q=True)
    return run_scenario(spec)


@pytest.fixture(scope="module")
def scenario2_report():
    return _study(2, (250,))


@pytest.fixture(scope="module")
def scenario1_report():
    return _study(1, (250, 1000))


@pytest.fixture(scope="module")
def benign_reports():
    return {3: _study(3, (1000,)), 4: _study(4, (1000,))}


def test_criterion_01_analytic_reductions():
    x = np.linspace(-6, 8, 100)
    mu, sigma = 1.0, 1.7
    normal = -0.5 * math.log(2 * math.pi * sigma ** 2 / 2) - (x - mu) ** 2 / sigma ** 2
    err = float(np.max(np.abs(np.exp(gnd_log_pdf(GndParams(mu, sigma, 2.0), x)) - np.exp(normal))))
    k2 = gnd_kurtosis(GndParams(0, 1, 2.0))
    k1 = gnd_kurtosis(GndParams(0, 1, 1.0))
    ok = err <= 1e-12 and abs(k2 - 3) <= 1e-10 and abs(k1 - 6) <= 1e-10
    assert record(1, "analytic reductions", ok, f"max pdf err {err:.1e}, kurt(2)={k2!r}, kurt(1)={k1!r}")


def test_criterion_02_gradient_fidelity():
    worst_g = worst_gp = 0.0
    for seed in range(50):
        rng = np.random.default_rng(9000 + seed)
        nu = rng.uniform(0.5, 8.0)
        mu, sigma = rng.uniform(-2, 2), rng.uniform(0.3, 3.0)
        x = gnd_sample(GndParams(rng.uniform(-1, 1), rng.uniform(0.5, 2.5), rng.uniform(0.7, 6.0)), rng, 200)
        z = rng.uniform(0.01, 1.0, 200)
        fd_g, fd_gp = shape_derivatives_fd(x, z, mu, sigma, nu)
        worst_g = max(worst_g, abs(shape_gradient(x, z, mu, sigma, nu) - fd_g) / abs(fd_g))
        worst_gp = max(worst_gp, abs(shape_curvature(x, z, mu, sigma, nu) - fd_gp) / abs(fd_gp))
    ok = worst_g <= 1e-5 and worst_gp <= 1e-4
    assert record(2, "gradient fidelity", ok, f"max rel err g {worst_g:.1e}, g' {worst_gp:.1e}")


def test_criterion_03_sampler():
    n = 1_000_000
    worst = 0.0
    for i, spec in enumerate(SCENARIOS):
        truth = spec.truth
        x, labels = sample_mixture(truth, n, np.random.default_rng(300 + i), return_labels=True)
        mean, var, _, kurt = mixture_moments(truth)
        m4 = kurt * var ** 2
        z_mean = abs(x.mean() - mean) / math.sqrt(var / n)
        z_var = abs(np.mean((x - mean) ** 2) - var) / math.sqrt((m4 - var ** 2) / n)
        freq = np.bincount(labels, minlength=truth.n_components) / n
        z_freq = max(abs(f - w) / math.sqrt(w * (1 - w) / n) for f, w in zip(freq, truth.weights))
        worst = max(worst, z_mean, z_var, z_freq)
    assert record(3, "sampler correctness", worst <= 4, f"largest deviation {worst:.2f} standard errors")


def test_criterion_04_degeneracy_headline(scenario2_report):
    ecm = scenario2_report.rmse("ecm", 250, "nu1")
    ecms = scenario2_report.rmse("ecms", 250, "nu1")
    ok = ecms <= 3.0 and ecm >= 3 * ecms
    assert record(4, "scenario 2 degeneracy", ok, f"N=250 RMSE nu1: ECM {ecm:.3f}, ECMs {ecms:.3f}")


def test_criterion_05_scenario1(scenario1_report):
    r = scenario1_report
    ecm250, ecms250 = r.rmse("ecm", 250, "nu1"), r.rmse("ecms", 250, "nu1")
    ecms1000 = r.rmse("ecms", 1000, "nu1")
    ok = ecms250 <= ecm250 and ecms250 <= 2.2 and ecms1000 <= 1.1
    detail = f"RMSE nu1 N=250: ECM {ecm250:.3f}, ECMs {ecms250:.3f}; N=1000 ECMs {ecms1000:.3f}"
    assert record(5, "scenario 1 improvement", ok, detail)


def test_criterion_06_benign_parity(benign_reports):
    worst = {}
    ok = True
    for idx, report in benign_reports.items():
        for param in ("pi1", "mu1", "sigma1", "nu1", "pi2", "mu2", "sigma2", "nu2"):
            gap = abs(report.rmse("ecm", 1000, param) - report.rmse("ecms", 1000, param))
            tol = 0.2 if param.startswith("nu") else 0.15
            ok &= gap <= tol
            key = f"s{idx} {param}"
            worst[key] = gap
    top = sorted(worst.items(), key=lambda kv: -kv[1])[:2]
    detail = "largest RMSE gaps " + ", ".join(f"{k} {v:.3f}" for k, v in top)
    assert record(6, "benign-regime parity", ok, detail)


def test_criterion_07_ecm_identity():
    identical = 0
    for seed in range(5):
        x = sample_mixture(SCENARIOS[seed % 4].truth, 250, np.random.default_rng(700 + seed))
        ecm = fit(x, 2, FitConfig(algorithm="ecm", seed=seed))
        ecms = fit(x, 2, FitConfig(algorithm="ecms", step_size="unit", eta=-math.inf, seed=seed))
        identical += ecm.trajectory == ecms.trajectory and ecm.model == ecms.model
    assert record(7, "ECM recovery identity", identical == 5, f"{identical}/5 trajectories bit-identical")


def test_criterion_08_monotone_steps(scenario2_report, scenario1_report, benign_reports):
    reports = [scenario2_report, scenario1_report, *benign_reports.values()]
    violations = sum(r.total_q_violations() for r in reports)
    fits = sum(len(r.replicates) * 2 for r in reports)
    assert record(8, "monotone sigma/pi steps", violations == 0, f"{violations} violations over {fits} multi-start fits")


def test_criterion_09_jarque_bera():
    stat, _ = jarque_bera(3786, -0.466, 11.0513)
    rel = abs(stat - 10377) / 10377
    assert record(9, "JB cross-check", rel <= 0.01, f"JB {stat:.2f} vs 10377, rel diff {rel:.4f}")


def test_criterion_10_information_criteria():
    worst = 0.0
    for p, n, ll in [(7, 3786, -5884.35), (5, 3786, -5929.65), (3, 10, 1.0), (11, 5000, -22000.0)]:
        worst = max(worst, abs(bic(ll, p, n) - aic(ll, p) - p * (math.log(n) - 2)))
    truth = SCENARIOS[0].truth  # shapes (5, 1.5)
    wins = 0
    for seed in range(20):
        x = sample_mixture(truth, 5000, np.random.default_rng(1000 + seed))
        rows = compare_models(x, [
            Candidate("MGND2", 2, FitConfig(seed=seed, n_starts=3)),
            Candidate("MND2", 2, FitConfig(seed=seed, n_starts=3, fixed_shape=2.0)),
        ])
        wins += rows[0]["label"] == "MGND2"
    ok = worst <= 1e-10 and wins >= 18
    assert record(10, "information criteria", ok, f"identity err {worst:.1e}, MGND wins BIC {wins}/20")
