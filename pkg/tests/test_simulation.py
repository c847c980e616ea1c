"""
Test cases for the simulation module

The simulation module draws correlated trajectory panels around a catalog mean function and
replicates ISRP estimation over many simulated datasets.

The tests in this module cover the following scenarios:
1. The Koopman covariance for a diagonal and a correlated design, and its parameter checks.
2. Degenerate noise reproduces the mean function.
3. Identical plans and seeds give bitwise-identical panels; different replications differ.
4. The lag-one correlation of residuals is close to rho.
5. Replication results do not depend on the number of worker threads.
6. On the reference design, empirical variances of both estimators follow the delta-method curve and the
   estimates are centred with little skewness (slow).
7. Large simulated panels have the Koopman sample covariance and the model column means (slow).
"""
import numpy as np
import pytest

from growth_isrp.errors import ConfigError, DomainError
from growth_isrp.growth_models import size_profile
from growth_isrp.simulation import (
    count_nonpositive,
    koopman_matrix,
    reference_plan,
    replicate_isrp,
    replication_rng,
    simulate,
)


@pytest.fixture(name="plan")
def plan_fixture():
    """
    Fixture for a small version of the reference logistic design
    """
    return reference_plan(seed=7, replications=4, n=50)


def test_koopman_diagonal():
    np.testing.assert_allclose(koopman_matrix({"sigma2": 0.001, "rho": 0.0}, 3), 0.001 * np.eye(3))


def test_koopman_correlated():
    np.testing.assert_allclose(
        koopman_matrix({"sigma2": 0.001, "rho": 0.1}, 2), [[0.001, 0.0001], [0.0001, 0.001]], rtol=1e-12
    )


@pytest.mark.parametrize("cov", [{"sigma2": 0.0, "rho": 0.1}, {"sigma2": 0.001, "rho": 1.0}])
def test_koopman_rejects(cov):
    with pytest.raises(DomainError):
        koopman_matrix(cov, 3)


def test_degenerate_noise_reproduces_means(plan):
    plan["cov"]["sigma2"] = 1e-30
    data = simulate(plan)
    mu = size_profile(plan["model"], plan["params"], plan["grid"])
    assert data.shape == (50, 20)
    np.testing.assert_allclose(data, np.broadcast_to(mu, data.shape), rtol=1e-12)


def test_simulate_is_reproducible(plan):
    first = simulate(plan, replication=2)
    second = simulate(plan, replication=2)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, simulate(plan, replication=3))


def test_replication_streams_are_independent_of_order():
    late = replication_rng(5, 9).standard_normal(4)
    for rep in range(9):
        replication_rng(5, rep).standard_normal(4)
    assert np.array_equal(late, replication_rng(5, 9).standard_normal(4))


def test_simulate_rejects_bad_plan(plan):
    plan["n"] = 0
    with pytest.raises(ConfigError):
        simulate(plan)


def test_lag_one_correlation():
    """
    Test that adjacent-column residual correlations average to rho = 0.1.
    """
    plan = reference_plan(seed=11, replications=1, n=1000)
    data = simulate(plan)
    residuals = data - data.mean(axis=0)
    correlations = [np.corrcoef(residuals[:, i], residuals[:, i + 1])[0, 1] for i in range(19)]
    assert float(np.mean(correlations)) == pytest.approx(0.1, abs=0.03)


def test_count_nonpositive():
    assert count_nonpositive(np.array([[1.0, 0.0], [-2.0, 3.0]])) == 2


def test_replicate_isrp_threads_do_not_matter(plan):
    single, raw_single = replicate_isrp(plan, threads=1)
    multi, raw_multi = replicate_isrp(plan, threads=3)
    np.testing.assert_array_equal(raw_single, raw_multi)
    np.testing.assert_array_equal([s["variance"] for s in single], [s["variance"] for s in multi])


def test_replicate_isrp_shapes(plan):
    summaries, raw = replicate_isrp(plan)
    assert raw.shape == (4, 18)
    assert [s["j"] for s in summaries] == list(range(1, 19))
    assert summaries[0]["t_j"] == 1.0
    assert all(s["count"] + s["failures"] == 4 for s in summaries)
    assert summaries[0]["delta_variance"] > 0.0


def test_replicate_isrp_K(plan):
    summaries, _ = replicate_isrp(plan, target="K")
    assert summaries[0]["mean"] == pytest.approx(100.0, rel=0.05)


@pytest.mark.slow
def test_reference_design_matches_delta_method():
    """
    Test the reference logistic design: 1000 replications of n = 1000 trajectories.
    """
    summaries, _ = replicate_isrp(reference_plan(seed=1, replications=1000, n=1000), threads=4)
    for s in summaries[:12]:
        assert s["failures"] == 0
        assert s["variance"] == pytest.approx(s["delta_variance"], rel=0.15)
        assert s["skewness"] == pytest.approx(0.0, abs=0.25)
    for s in summaries[:4]:
        assert s["mean"] == pytest.approx(0.3, abs=1e-3)


@pytest.mark.slow
def test_reference_design_K_matches_delta_method():
    """
    Test the reference logistic design for the carrying-capacity estimator.
    """
    summaries, _ = replicate_isrp(reference_plan(seed=2, replications=1000, n=1000), target="K", threads=4)
    for s in summaries[:12]:
        assert s["failures"] == 0
        assert s["variance"] == pytest.approx(s["delta_variance"], rel=0.15)
        assert s["mean"] == pytest.approx(100.0, rel=1e-2)


@pytest.fixture(name="large_panel")
def large_panel_fixture():
    """
    Fixture for one replication of the reference design with n = 20000 trajectories
    """
    plan = reference_plan(seed=13, replications=1, n=20000)
    return plan, simulate(plan)


@pytest.mark.slow
def test_sample_covariance_converges_to_koopman(large_panel):
    plan, data = large_panel
    sigma = koopman_matrix(plan["cov"], plan["grid"]["q"])
    tolerance = 5.0 * plan["cov"]["sigma2"] * np.sqrt(2.0 / plan["n"])
    np.testing.assert_allclose(np.cov(data, rowvar=False), sigma, rtol=0.0, atol=tolerance)


@pytest.mark.slow
def test_column_means_follow_mean_function(large_panel):
    """
    Test that every column mean lies within 5 standard errors of the logistic mean function.
    """
    plan, data = large_panel
    mu = size_profile(plan["model"], plan["params"], plan["grid"])
    standard_error = np.sqrt(plan["cov"]["sigma2"] / plan["n"])
    assert np.all(np.abs(data.mean(axis=0) - mu) <= 5.0 * standard_error)
