"""
Test cases for the nls module

The nls module fits catalog size curves and explicit rate curves by damped least squares and
compares them by AIC, directly or over bootstrap resamples.

The tests in this module cover the following scenarios:
1. Exact logistic data is recovered from perturbed starting values.
2. Fixed parameters and box bounds are honoured.
3. A hump-shaped rate curve is recovered from its own values.
4. Entries without a closed form are fitted through the RK4 solution.
5. AIC, RMSE and the delta-AIC rule on worked values.
6. Problem validation, the strict iteration cap, stalled fits and singular normal equations.
7. Bootstrap comparison: single candidate, determinism, thread independence and recovery of
   the generating model (slow).
"""
import math
from unittest.mock import Mock

import numpy as np
import pytest

from growth_isrp.errors import DataError, DomainError, NoConvergence, SingularJacobian
from growth_isrp.growth_models import size_profile
from growth_isrp.model_types import ModelId, Parent, Variation
from growth_isrp.nls import (
    CandidateTemplate,
    FitProblem,
    ModelCurve,
    RateCurve,
    aic,
    bootstrap_select,
    delta_aic_rule,
    fit_or_none,
    initial_guess,
    nls_fit,
    rmse,
)
from growth_isrp.simulation import simulate

LOGISTIC = ModelId(Parent.LOGISTIC, Variation.CONSTANT_PARAMS)
HUMP = ModelId(Parent.EXPONENTIAL, Variation.GOMPERTZ_HUMP_RATE)
TRUE = {"r0": 0.3, "K": 100.0, "x0": 10.0}


@pytest.fixture(name="logistic_data")
def logistic_data_fixture():
    """
    Fixture for noiseless logistic sizes at t = 0..19
    """
    t = np.arange(20, dtype=float)
    y = size_profile(LOGISTIC, TRUE, {"t0": 0.0, "h": 1.0, "q": 20})
    return t, y


@pytest.fixture(name="hump_curve")
def hump_curve_fixture():
    return RateCurve("hump", ("a", "b", "c"), lambda t, p: p["a"] * np.exp(-p["b"] * t) * t ** p["c"])


def test_recovers_logistic(logistic_data):
    t, y = logistic_data
    init = {name: 1.5 * value for name, value in TRUE.items()}
    result = nls_fit(FitProblem(ModelCurve(LOGISTIC), t, y, init))
    assert result["converged"]
    assert result["rss"] < 1e-12
    for name, value in TRUE.items():
        assert result["estimates"][name] == pytest.approx(value, rel=1e-6)
    assert result["free"] == ["r0", "K", "x0"]
    assert result["m"] == 20 and result["k"] == 3


def test_fixed_parameters(logistic_data):
    t, y = logistic_data
    result = nls_fit(FitProblem(ModelCurve(LOGISTIC), t, y, {"r0": 0.5, "K": 100.0, "x0": 10.0}, free=("r0",)))
    assert result["estimates"]["r0"] == pytest.approx(0.3, rel=1e-8)
    assert result["estimates"]["K"] == 100.0
    assert list(result["stderr"]) == ["r0"]


def test_bounds_are_enforced(logistic_data):
    t, y = logistic_data
    problem = FitProblem(ModelCurve(LOGISTIC), t, y, {"r0": 0.1, "K": 100.0, "x0": 10.0}, free=("r0",),
                         bounds={"r0": (None, 0.2)})
    result = nls_fit(problem)
    assert result["estimates"]["r0"] == pytest.approx(0.2)


def test_recovers_hump_rate(hump_curve):
    """
    Test recovery of a*exp(-b*t)*t^c at the cattle-growth estimates from noiseless values.
    """
    truth = {"a": 0.1088834, "b": 0.4375366, "c": 0.6397442}
    t = np.linspace(0.5, 12.0, 24)
    y = hump_curve(t, truth)
    result = nls_fit(FitProblem(hump_curve, t, y, {"a": 0.15, "b": 0.3, "c": 0.5}))
    for name, value in truth.items():
        assert result["estimates"][name] == pytest.approx(value, abs=1e-3)


def test_fit_without_closed_form():
    """
    Test fitting the co-operation model with gamma = 0, theta = 1 held fixed.
    """
    model = ModelId(Parent.THETA_LOGISTIC, Variation.COOPERATION)
    params = {"r0": 0.3, "gamma": 0.0, "K": 100.0, "theta": 1.0, "x0": 10.0}
    t = np.arange(0.0, 15.0)
    y = size_profile(LOGISTIC, TRUE, {"t0": 0.0, "h": 1.0, "q": 15})
    init = {**params, "r0": 0.25, "K": 90.0}
    result = nls_fit(FitProblem(ModelCurve(model), t, y, init, free=("r0", "K")))
    assert result["estimates"]["r0"] == pytest.approx(0.3, rel=1e-4)
    assert result["estimates"]["K"] == pytest.approx(100.0, rel=1e-4)


def test_model_curve_unsorted_times():
    model = ModelId(Parent.THETA_LOGISTIC, Variation.COOPERATION)
    params = {"r0": 0.3, "gamma": 0.0, "K": 100.0, "theta": 1.0, "x0": 10.0}
    curve = ModelCurve(model)
    forward = curve(np.array([1.0, 2.0, 5.0]), params)
    shuffled = curve(np.array([5.0, 1.0, 2.0]), params)
    np.testing.assert_allclose(shuffled, forward[[2, 0, 1]], rtol=1e-12)


def test_aic_unit_mean_square():
    m = 20
    assert aic(float(m), m, 0) == pytest.approx(m * math.log(2.0 * math.pi) + m + 2.0)


def test_aic_rejects_zero_rss():
    with pytest.raises(DomainError):
        aic(0.0, 10, 2)


@pytest.mark.parametrize(
    "aics, expected",
    [
        ((-27.85451, -14.5925), (0, "decisive")),
        ((5.0, 5.0), (0, "weak")),
        ((100.0, 95.0), (1, "weak")),
    ],
)
def test_delta_aic_rule(aics, expected):
    assert delta_aic_rule(aics) == expected


def test_delta_aic_rule_needs_two_values():
    with pytest.raises(DomainError):
        delta_aic_rule([3.0])


def test_rmse():
    assert rmse(0.0, 5) == 0.0
    assert rmse(4.0, 4) == 1.0


def test_noiseless_fits_tie_on_aic(logistic_data):
    """
    Test that two exact fits score equal AIC up to their parameter counts.
    """
    t, y = logistic_data
    free = nls_fit(FitProblem(ModelCurve(LOGISTIC), t, y, dict(TRUE)))
    fixed = nls_fit(FitProblem(ModelCurve(LOGISTIC), t, y, dict(TRUE), free=("r0",)))
    assert free["aic"] - fixed["aic"] == pytest.approx(4.0)


def test_problem_validation(logistic_data):
    t, y = logistic_data
    with pytest.raises(DomainError):
        FitProblem(ModelCurve(LOGISTIC), t, y, {"r0": 0.3, "K": 100.0})
    with pytest.raises(DataError):
        FitProblem(ModelCurve(LOGISTIC), t[:3], y[:3], dict(TRUE))


def test_undefined_start():
    t = np.arange(5.0)
    y = np.ones(5)
    with pytest.raises(DomainError):
        nls_fit(FitProblem(ModelCurve(LOGISTIC), t, y, {"r0": 0.3, "K": -1.0, "x0": 1.0}))


def test_strict_cap(logistic_data):
    t, y = logistic_data
    init = {name: 1.5 * value for name, value in TRUE.items()}
    with pytest.raises(NoConvergence):
        nls_fit(FitProblem(ModelCurve(LOGISTIC), t, y, init), max_iterations=1, strict=True)
    assert not nls_fit(FitProblem(ModelCurve(LOGISTIC), t, y, init), max_iterations=1)["converged"]


def test_stall_with_large_gradient_is_not_converged():
    """
    Test that a fit stuck at a kink of its curve reports converged=False.
    """
    kink = RateCurve("kink", ("a",), lambda t, p: t * (1.0 - abs(p["a"])))
    t = np.arange(1.0, 8.0)
    result = nls_fit(FitProblem(kink, t, 2.0 * t, {"a": 0.0}))
    assert not result["converged"]
    assert result["estimates"]["a"] == 0.0
    assert "large gradient" in result["message"]


def test_stall_at_a_bound_is_converged(logistic_data):
    t, y = logistic_data
    problem = FitProblem(ModelCurve(LOGISTIC), t, y, {"r0": 0.2, "K": 100.0, "x0": 10.0}, free=("r0",),
                         bounds={"r0": (None, 0.2)})
    assert nls_fit(problem)["converged"]


def test_singular_normal_equations(mocker: Mock, logistic_data):
    """
    Test that nls_fit raises SingularJacobian when no damping makes the normal equations solvable.

    Args:
        mocker (Mock): A mocker object to patch the damped Cholesky step.
    """
    mocker.patch("growth_isrp.nls._damped_step", return_value=None)
    t, y = logistic_data
    with pytest.raises(SingularJacobian):
        nls_fit(FitProblem(ModelCurve(LOGISTIC), t, y, {"r0": 0.5, "K": 100.0, "x0": 10.0}))


def test_fit_or_none():
    t = np.arange(5.0)
    assert fit_or_none(FitProblem(ModelCurve(LOGISTIC), t, np.ones(5), {"r0": 0.3, "K": -1.0, "x0": 1.0})) is None


def test_initial_guess_names():
    t = np.arange(10.0)
    y = size_profile(LOGISTIC, TRUE, {"t0": 0.0, "h": 1.0, "q": 10})
    guess = initial_guess(ModelId(Parent.LOGISTIC, Variation.HYPERBOLIC_RATE), t, y)
    assert set(guess) == {"r0", "c", "K", "x0"}
    assert guess["K"] > max(y)


@pytest.fixture(name="panel")
def panel_fixture():
    plan = {
        "model": LOGISTIC, "params": dict(TRUE), "grid": {"t0": 0.0, "h": 1.0, "q": 12}, "n": 20,
        "cov": {"sigma2": 0.01, "rho": 0.1}, "replications": 1, "seed": 3,
    }
    return np.arange(12.0), simulate(plan)


def test_bootstrap_single_candidate(panel):
    t, data = panel
    report = bootstrap_select(data, t, [CandidateTemplate(ModelCurve(LOGISTIC), dict(TRUE))], B=5, seed=1)
    assert report["wins"] == {"Logistic Model": 5}
    assert report["failures"] == 0
    assert len(report["aic_samples"]["Logistic Model"]) == 5


def test_bootstrap_is_deterministic(panel):
    t, data = panel
    candidates = [
        CandidateTemplate(ModelCurve(LOGISTIC), dict(TRUE)),
        CandidateTemplate(ModelCurve(ModelId(Parent.EXPONENTIAL, Variation.CONSTANT_PARAMS)),
                          {"r0": 0.2, "x0": 10.0}),
    ]
    first = bootstrap_select(data, t, candidates, B=4, seed=9)
    second = bootstrap_select(data, t, candidates, B=4, seed=9, threads=2)
    assert first == second
    assert first["wins"]["Logistic Model"] == 4


def test_bootstrap_needs_rows():
    with pytest.raises(DataError):
        bootstrap_select(np.ones((1, 5)), np.arange(5.0),
                         [CandidateTemplate(ModelCurve(LOGISTIC), dict(TRUE))], B=2, seed=1)


@pytest.mark.slow
def test_bootstrap_recovers_generating_model():
    """
    Test that the hump-shaped rate with c = 1 wins most replicates on its own simulated data
    against the logistic model and the c = 2 variant.
    """
    truth = {"r0": 1.0, "b": 0.5, "c": 1.0, "x0": 1.0}
    plan = {
        "model": HUMP, "params": truth, "grid": {"t0": 1.0, "h": 1.0, "q": 11}, "n": 30,
        "cov": {"sigma2": 0.05, "rho": 0.1}, "replications": 1, "seed": 5,
    }
    data = simulate(plan)
    t = np.arange(1.0, 12.0)
    candidates = [
        CandidateTemplate(ModelCurve(LOGISTIC), {"r0": 0.6, "K": 55.0, "x0": 1.0}),
        CandidateTemplate(ModelCurve(HUMP, "hump c=1"), {"r0": 0.8, "b": 0.6, "c": 1.0, "x0": 1.2},
                          free=("r0", "b", "x0")),
        CandidateTemplate(ModelCurve(HUMP, "hump c=2"), {"r0": 0.25, "b": 0.5, "c": 2.0, "x0": 1.2},
                          free=("r0", "b", "x0")),
    ]
    report = bootstrap_select(data, t, candidates, B=200, seed=2, threads=4)
    assert report["wins"]["hump c=1"] > 100
