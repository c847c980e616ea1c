"""
Test cases for the selection module

The selection module identifies a growth model in two stages: rate forms are fitted to the ISRP
profile of r, then the catalog entries they imply are fitted to the mean sizes.

The tests in this module cover the following scenarios:
1. Noiseless logistic data ranks the constant form first and selects the logistic model; a single
   candidate is reported as uncontested.
2. A linearly increasing rate is detected ahead of the constant form.
3. Rate forms map to the right catalog entries under each parent.
4. Too few usable intervals raise EmptyProfile.
5. Moving averages, relative growth rates and their error cases.
6. Noisy panels with a power or linearly increasing rate recover their generating form (slow).
"""
import numpy as np
import pytest

from growth_isrp.errors import DomainError, EmptyProfile, NonPositiveValue, WindowTooLarge
from growth_isrp.growth_models import size_profile
from growth_isrp.model_types import ModelId, Parent, SimulationPlan, Variation
from growth_isrp.selection import (
    RateForm,
    default_forms,
    detect_variation,
    fit_rate_form,
    moving_average,
    rgr_matrix,
    rgr_series,
    select_model,
    variation_for,
)
from growth_isrp.simulation import simulate

L = Parent.LOGISTIC


@pytest.fixture(name="logistic_series")
def logistic_series_fixture():
    """
    Fixture for a single noiseless logistic series at t = 0..19
    """
    grid = {"t0": 0.0, "h": 1.0, "q": 20}
    values = size_profile(ModelId(L, Variation.CONSTANT_PARAMS), {"r0": 0.3, "K": 100.0, "x0": 10.0}, grid)
    return np.arange(20.0), values[np.newaxis, :]


def test_default_forms():
    assert RateForm.SINE not in default_forms()
    assert RateForm.SINE in default_forms(include_periodic=True)
    assert default_forms()[0] is RateForm.CONSTANT


def test_constant_ranks_first_on_noiseless_logistic(logistic_series):
    t, data = logistic_series
    stage = detect_variation(data, t, L)
    assert stage.ranking[0]["key"] == "constant"
    assert stage.ranking[0]["delta_aic"] == 0.0
    assert stage.no_variation
    assert stage.ranking[0]["result"]["estimates"]["r0"] == pytest.approx(0.3, rel=1e-8)


def test_select_logistic_on_noiseless_logistic(logistic_series):
    t, data = logistic_series
    stage = detect_variation(data, t, L)
    report = select_model(data, t, L, stage)
    assert report["chosen"] == "logistic/constant_params"
    assert report["parent"] == "logistic"
    assert report["model_stage"][0]["result"]["estimates"]["K"] == pytest.approx(100.0, rel=1e-6)
    assert report["strength"] in ("weak", "decisive")
    assert any("chosen" in line for line in report["narrative"])


def test_single_candidate_is_uncontested(logistic_series):
    t, data = logistic_series
    stage = detect_variation(data, t, L, [RateForm.CONSTANT])
    report = select_model(data, t, L, stage)
    assert len(report["model_stage"]) == 1
    assert report["strength"] == "uncontested"


def test_linear_rate_outranks_constant():
    """
    Test that a logistic with r = r0*(1 + c*t) ranks the linear form above the constant one.
    """
    grid = {"t0": 0.0, "h": 1.0, "q": 15}
    model = ModelId(L, Variation.LINEAR_INCREASING_RATE)
    values = size_profile(model, {"r0": 0.2, "c": 0.2, "K": 100.0, "x0": 5.0}, grid)
    stage = detect_variation(values, np.arange(15.0), L, [RateForm.CONSTANT, RateForm.LINEAR])
    keys = [e["key"] for e in stage.ranking]
    assert keys.index("linear") < keys.index("constant")
    assert not stage.no_variation
    assert stage.ranking[0]["result"]["estimates"]["c"] > 0.0


def test_early_only_uses_first_half(logistic_series):
    t, data = logistic_series
    stage = detect_variation(data, t, L, [RateForm.CONSTANT], early_only=True)
    assert len(stage.r) == 9


def test_empty_profile():
    t = np.arange(5.0)
    data = np.array([[1.0, 2.0, 3.0, 4.0, 5.0]])
    with pytest.raises(EmptyProfile):
        detect_variation(data, t, L)


def test_fit_rate_form_recovers_hyperbolic():
    t = np.arange(1.0, 15.0)
    r = 0.667 / (1.0 + 0.222 * t)
    fit = fit_rate_form(RateForm.HYPERBOLIC, t, r)
    assert fit["status"] == "ok"
    assert fit["result"]["estimates"]["r0"] == pytest.approx(0.667, rel=1e-5)
    assert fit["result"]["estimates"]["c"] == pytest.approx(0.222, rel=1e-5)


@pytest.mark.parametrize(
    "parent, form, estimates, expected",
    [
        (L, RateForm.CONSTANT, {}, [(ModelId(L, Variation.CONSTANT_PARAMS), {})]),
        (L, RateForm.LINEAR, {"c": 0.5}, [(ModelId(L, Variation.LINEAR_INCREASING_RATE), {})]),
        (L, RateForm.LINEAR, {"c": -0.05}, [(ModelId(L, Variation.LINEAR_DECAYING_RATE), {})]),
        (L, RateForm.HYPERBOLIC, {}, [(ModelId(L, Variation.HYPERBOLIC_RATE), {})]),
        (Parent.THETA_LOGISTIC, RateForm.POWER, {}, [(ModelId(Parent.THETA_LOGISTIC, Variation.KOYA_GOSHU), {})]),
        (Parent.EXPONENTIAL, RateForm.EXP_GROWTH, {}, []),
        (
            L, RateForm.GOMPERTZ_HUMP, {"c": 1.4},
            [
                (ModelId(Parent.EXPONENTIAL, Variation.GOMPERTZ_HUMP_RATE), {"c": 1.0}),
                (ModelId(Parent.EXPONENTIAL, Variation.GOMPERTZ_HUMP_RATE), {"c": 2.0}),
            ],
        ),
    ],
)
def test_variation_for(parent, form, estimates, expected):
    assert variation_for(parent, form, estimates) == expected


def test_moving_average_identity():
    t, y = moving_average([0.0, 1.0, 2.0], [3.0, 1.0, 2.0], 1)
    np.testing.assert_array_equal(y, [3.0, 1.0, 2.0])
    np.testing.assert_array_equal(t, [0.0, 1.0, 2.0])


def test_moving_average_constant():
    _, y = moving_average(np.arange(7.0), np.full(7, 4.0), 3)
    np.testing.assert_allclose(y, np.full(5, 4.0))


def test_moving_average_single_value():
    t, y = moving_average([1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 4.0, 5.0], 5)
    np.testing.assert_allclose(y, [3.0])
    np.testing.assert_allclose(t, [3.0])


def test_moving_average_errors():
    with pytest.raises(DomainError):
        moving_average([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 2)
    with pytest.raises(WindowTooLarge):
        moving_average([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 5)


def test_rgr_series_exponential():
    t = np.arange(6.0)
    mid, rates = rgr_series(t, 10.0 * np.exp(0.3 * t))
    np.testing.assert_allclose(rates, np.full(5, 0.3), rtol=1e-12)
    np.testing.assert_allclose(mid, t[:-1] + 0.5)


def test_rgr_series_constant():
    _, rates = rgr_series(np.arange(4.0), np.full(4, 7.0))
    np.testing.assert_array_equal(rates, np.zeros(3))


def test_rgr_series_rejects_non_positive():
    with pytest.raises(NonPositiveValue):
        rgr_series([0.0, 1.0], [1.0, 0.0])


def test_rgr_matrix():
    t = np.arange(4.0)
    data = np.vstack([np.exp(0.1 * t), 2.0 * np.exp(0.2 * t)])
    mid, rates = rgr_matrix(data, t)
    assert rates.shape == (2, 3)
    np.testing.assert_allclose(rates[0], 0.1, rtol=1e-12)
    np.testing.assert_allclose(rates[1], 0.2, rtol=1e-12)
    assert mid[0] == 0.5


def noisy_plan(variation: Variation, params: dict[str, float], seed: int) -> SimulationPlan:
    return {
        "model": ModelId(L, variation),
        "params": {**params, "K": 100.0, "x0": 10.0},
        "grid": {"t0": 1.0, "h": 1.0, "q": 20},
        "n": 1000,
        "cov": {"sigma2": 0.001, "rho": 0.1},
        "replications": 1,
        "seed": seed,
    }


@pytest.mark.slow
@pytest.mark.parametrize(
    "variation, params, expected",
    [
        (Variation.POWER_RATE, {"r0": 0.2, "c": 1.5}, "power"),
        (Variation.LINEAR_INCREASING_RATE, {"r0": 0.1, "c": 0.5}, "linear"),
    ],
    ids=["power", "linear"],
)
def test_noisy_rate_variation_is_recovered(variation, params, expected):
    """
    Test that 50 seeded noisy panels rank the generating rate form first, more than 2 AIC units
    ahead of the constant form, in at least 40 runs.
    """
    forms = [RateForm.CONSTANT, RateForm.LINEAR, RateForm.POWER]
    recovered = 0
    for seed in range(1, 51):
        stage = detect_variation(simulate(noisy_plan(variation, params, seed)), np.arange(1.0, 21.0), L, forms)
        constant = next(e for e in stage.ranking if e["key"] == "constant")
        if stage.ranking[0]["key"] == expected and (constant["delta_aic"] or 0.0) > 2.0:
            recovered += 1
    assert recovered >= 40
