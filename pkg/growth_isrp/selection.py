"""
selection

Two-stage model identification driven by the ISRP profile.

Stage one fits candidate rate forms r(t) to the interval estimates of r under a parent model
and ranks them by AIC. Stage two maps every competitive form to its catalog entry, fits the
full size curves to the mean sizes and picks the entry with the smallest AIC.

Classes:
    RateForm: Candidate time variations of r.
    IsrpStage: Profile plus ranked rate-form fits.

Functions:
    detect_variation: Stage one.
    variation_for: Catalog entries implied by a fitted rate form.
    select_model: Stage two and the final report.
    moving_average / rgr_series / rgr_matrix: Preprocessing of size series.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
from typing import Sequence

import numpy as np

from growth_isrp.datasets import uniform_step
from growth_isrp.errors import (
    DomainError,
    EmptyProfile,
    GrowthIsrpError,
    NonPositiveValue,
    NoConvergence,
    WindowTooLarge,
)
from growth_isrp.growth_models import get_spec
from growth_isrp.isrp import isrp_profile
from growth_isrp.model_types import (
    FitResult,
    FloatArray,
    IsrpSeries,
    ModelId,
    Parent,
    SelectionReport,
    StageFit,
    Variation,
)
from growth_isrp.nls import Bounds, FitProblem, ModelCurve, Params, RateCurve, delta_aic_rule, fit_or_none, initial_guess

logger = logging.getLogger(__name__)

MIN_INTERVALS = 4
NO_VARIATION_DELTA = 2.0
COMPETITIVE_DELTA = 10.0


class RateForm(StrEnum):
    """Time variations of r fitted to an ISRP profile; declaration order breaks AIC ties."""

    CONSTANT = "constant"
    LINEAR = "linear"
    POWER = "power"
    EXP_DECAY = "exp_decay"
    EXP_GROWTH = "exp_growth"
    HYPERBOLIC = "hyperbolic"
    SINE = "sine"
    COSINE = "cosine"
    GOMPERTZ_HUMP = "gompertz_hump"

    @property
    def curve(self) -> RateCurve:
        return _CURVES[self]

    @property
    def periodic(self) -> bool:
        return self in (RateForm.SINE, RateForm.COSINE)


def _power(t: FloatArray, p: Params) -> FloatArray:
    return p["r0"] * np.power(t, p["c"] - 1.0)


_CURVES: dict[RateForm, RateCurve] = {
    RateForm.CONSTANT: RateCurve("Constant", ("r0",), lambda t, p: np.full_like(t, p["r0"])),
    RateForm.LINEAR: RateCurve("Linearly varying", ("r0", "c"), lambda t, p: p["r0"] * (1.0 + p["c"] * t)),
    RateForm.POWER: RateCurve("Extended logistic (power)", ("r0", "c"), _power),
    RateForm.EXP_DECAY: RateCurve("Exponentially decaying", ("r0", "c"), lambda t, p: p["r0"] * np.exp(-p["c"] * t)),
    RateForm.EXP_GROWTH: RateCurve("Exponentially growing", ("r0", "c"), lambda t, p: p["r0"] * np.exp(p["c"] * t)),
    RateForm.HYPERBOLIC: RateCurve(
        "Hyperbolically varying", ("r0", "c"), lambda t, p: p["r0"] / (1.0 + p["c"] * t)
    ),
    RateForm.SINE: RateCurve(
        "Periodic (sine)", ("r0", "c", "omega"), lambda t, p: p["r0"] + p["c"] * np.sin(p["omega"] * t)
    ),
    RateForm.COSINE: RateCurve(
        "Periodic (cosine)", ("r0", "c", "omega"), lambda t, p: p["r0"] + p["c"] * np.cos(p["omega"] * t)
    ),
    RateForm.GOMPERTZ_HUMP: RateCurve(
        "Hump-shaped (Gompertz)", ("r0", "b", "c"),
        lambda t, p: p["r0"] * np.exp(-p["b"] * t) * np.power(t, p["c"]),
    ),
}

_BOUNDS: dict[RateForm, Bounds] = {
    RateForm.EXP_DECAY: {"c": (0.0, None)},
    RateForm.EXP_GROWTH: {"c": (0.0, None)},
    RateForm.HYPERBOLIC: {"c": (0.0, None)},
    RateForm.SINE: {"omega": (1e-6, None)},
    RateForm.COSINE: {"omega": (1e-6, None)},
    RateForm.GOMPERTZ_HUMP: {"b": (0.0, None), "c": (0.0, None)},
}

_CATALOG_ROW: dict[RateForm, Variation] = {
    RateForm.CONSTANT: Variation.CONSTANT_PARAMS,
    RateForm.POWER: Variation.POWER_RATE,
    RateForm.EXP_DECAY: Variation.EXP_DECAY_RATE,
    RateForm.EXP_GROWTH: Variation.EXP_GROWTH_RATE,
    RateForm.HYPERBOLIC: Variation.HYPERBOLIC_RATE,
    RateForm.SINE: Variation.SINE_RATE,
    RateForm.COSINE: Variation.COSINE_RATE,
    RateForm.GOMPERTZ_HUMP: Variation.GOMPERTZ_HUMP_RATE,
}


def default_forms(include_periodic: bool = False) -> list[RateForm]:
    return [f for f in RateForm if include_periodic or not f.periodic]


def _starts(form: RateForm, t: FloatArray, r: FloatArray) -> list[Params]:
    mean = float(np.mean(r))
    first = float(r[0]) if r[0] != 0.0 else mean
    span = float(t[-1] - t[0]) or 1.0
    match form:
        case RateForm.CONSTANT:
            return [{"r0": mean}]
        case RateForm.LINEAR:
            slope, intercept = np.polyfit(t, r, 1)
            r0 = float(intercept) if intercept != 0.0 else mean
            return [{"r0": r0, "c": float(slope) / r0}, {"r0": mean, "c": 0.0}]
        case RateForm.POWER:
            starts = [{"r0": mean, "c": c} for c in (1.0, 0.5, 1.5)]
            if np.all(r > 0.0) and np.all(t > 0.0):
                slope, intercept = np.polyfit(np.log(t), np.log(r), 1)
                starts.insert(0, {"r0": float(math.exp(intercept)), "c": float(slope) + 1.0})
            return starts
        case RateForm.EXP_DECAY | RateForm.HYPERBOLIC:
            return [{"r0": first, "c": c / span} for c in (0.1, 1.0, 5.0)]
        case RateForm.EXP_GROWTH:
            return [{"r0": first, "c": c / span} for c in (0.1, 1.0)]
        case RateForm.SINE | RateForm.COSINE:
            amplitude = float(np.std(r)) or 0.1 * abs(mean)
            return [{"r0": mean, "c": amplitude, "omega": 2.0 * math.pi * k / span} for k in (1.0, 2.0, 0.5)]
        case RateForm.GOMPERTZ_HUMP:
            peak = float(np.max(r))
            return [{"r0": peak, "b": b, "c": c} for b, c in ((0.5, 1.0), (0.1, 0.5), (1.0, 2.0))]


def _best_fit(problems: Sequence[FitProblem]) -> FitResult | None:
    best: FitResult | None = None
    for problem in problems:
        result = fit_or_none(problem)
        if result is not None and (best is None or result["rss"] < best["rss"]):
            best = result
    return best


def _rank(entries: list[StageFit], order: Sequence[str]) -> list[StageFit]:
    def key(entry: StageFit) -> tuple[float, int]:
        score = math.inf if entry["result"] is None else entry["result"]["aic"]
        return score, order.index(entry["key"])

    ranked = sorted(entries, key=key)
    if ranked and ranked[0]["result"] is not None:
        best = ranked[0]["result"]["aic"]
        for entry in ranked:
            if entry["result"] is not None:
                entry["delta_aic"] = entry["result"]["aic"] - best
    return ranked


def fit_rate_form(form: RateForm, t: Sequence[float] | FloatArray, r: Sequence[float] | FloatArray) -> StageFit:
    """Fit one rate form to (t, r) pairs from several starting points."""
    tt = np.asarray(t, dtype=np.float64)
    rr = np.asarray(r, dtype=np.float64)
    problems = [FitProblem(form.curve, tt, rr, init, bounds=_BOUNDS.get(form, {})) for init in _starts(form, tt, rr)]
    result = _best_fit(problems)
    return {
        "label": form.curve.label,
        "key": str(form),
        "fixed": {},
        "result": result,
        "delta_aic": None,
        "status": "ok" if result is not None else "fit failed from every start",
    }


@dataclass
class IsrpStage:
    """
    Stage one of the identification.

    Attributes:
        series (IsrpSeries): The ISRP profile of r.
        t (FloatArray): Interval times used in the fits.
        r (FloatArray): Interval estimates used in the fits.
        ranking (list[StageFit]): Rate forms, best first.
        no_variation (bool): Constant form within 2 AIC units of the best.
    """

    series: IsrpSeries
    t: FloatArray
    r: FloatArray
    ranking: list[StageFit]
    no_variation: bool


def detect_variation(
    data: FloatArray,
    times: Sequence[float] | FloatArray,
    parent: Parent,
    forms: Sequence[RateForm] | None = None,
    theta: float | None = None,
    early_only: bool = False,
    threads: int = 1,
) -> IsrpStage:
    """
    Fit rate forms to the ISRP profile of r and rank them by AIC.

    Parameters:
        data (FloatArray): n x q panel or a single series.
        times (Sequence[float] | FloatArray): Uniform column times.
        parent (Parent): Parent model the profile is computed under.
        forms (Sequence[RateForm] | None): Candidates; defaults to every non-periodic form.
        theta (float | None): Shape exponent for the theta-logistic parent.
        early_only (bool): Use only the first half of the intervals.
        threads (int): Worker threads for the candidate fits.

    Raises:
        EmptyProfile: If fewer than four intervals produced an estimate.
    """
    candidates = list(dict.fromkeys(forms if forms else default_forms()))
    series = isrp_profile(data, times, parent, "r", theta)
    estimates = series["estimates"]
    if early_only:
        estimates = estimates[: math.ceil(len(estimates) / 2)]
    usable = [e for e in estimates if e["value"] is not None]
    if len(usable) < MIN_INTERVALS:
        raise EmptyProfile(f"only {len(usable)} usable intervals; at least {MIN_INTERVALS} are needed")
    t = np.array([e["t_j"] for e in usable], dtype=np.float64)
    r = np.array([e["value"] for e in usable], dtype=np.float64)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        fits = list(pool.map(lambda form: fit_rate_form(form, t, r), candidates))
    ranking = _rank(fits, [str(f) for f in RateForm])
    constant = next((e for e in ranking if e["key"] == RateForm.CONSTANT), None)
    no_variation = bool(
        constant is not None and constant["delta_aic"] is not None and constant["delta_aic"] <= NO_VARIATION_DELTA
    )
    return IsrpStage(series, t, r, ranking, no_variation)


def variation_for(parent: Parent, form: RateForm, estimates: Params) -> list[tuple[ModelId, Params]]:
    """
    Catalog entries implied by a fitted rate form, with parameters to hold fixed.

    Linear forms map by the sign of c. The hump form maps to the exponential hump model with
    c fixed at the integers either side of the fitted c. Returns an empty list when the parent
    has no such row.
    """
    match form:
        case RateForm.LINEAR:
            increasing = estimates.get("c", 0.0) >= 0.0
            targets = [(Variation.LINEAR_INCREASING_RATE if increasing else Variation.LINEAR_DECAYING_RATE, {})]
        case RateForm.POWER if parent is Parent.THETA_LOGISTIC:
            targets = [(Variation.KOYA_GOSHU, {})]
        case RateForm.GOMPERTZ_HUMP:
            c = max(estimates.get("c", 1.0), 0.0)
            integers = sorted({float(math.floor(c)), float(math.ceil(c))})
            return [
                (ModelId(Parent.EXPONENTIAL, Variation.GOMPERTZ_HUMP_RATE), {"c": value}) for value in integers
            ]
        case _:
            targets = [(_CATALOG_ROW[form], {})]
    implied: list[tuple[ModelId, Params]] = []
    for variation, fixed in targets:
        model = ModelId(parent, variation)
        try:
            get_spec(model)
        except GrowthIsrpError:
            continue
        implied.append((model, fixed))
    return implied


def _model_starts(model: ModelId, t: FloatArray, y: FloatArray, form_estimates: Params | None, fixed: Params,
                  theta: float | None) -> list[Params]:
    base = initial_guess(model, t, y)
    if "theta" in base and theta is not None:
        base["theta"] = theta
    starts = [base]
    if form_estimates:
        derived = dict(base)
        for name, value in form_estimates.items():
            if name in derived:
                derived[name] = abs(value) if name == "c" and model.variation is Variation.LINEAR_DECAYING_RATE else value
        starts.append(derived)
    for start in starts:
        start.update(fixed)
    return starts


def _fit_model(model: ModelId, fixed: Params, t: FloatArray, y: FloatArray, form_estimates: Params | None,
               theta: float | None) -> StageFit:
    spec = get_spec(model)
    held = dict(fixed)
    if theta is not None and "theta" in spec.params:
        held["theta"] = theta
    free = tuple(n for n in spec.params if n not in held)
    curve = ModelCurve(model)
    bounds: Bounds = {n: (1e-12, None) for n in spec.positive if n in free}
    problems: list[FitProblem] = []
    status = "ok"
    try:
        problems = [
            FitProblem(curve, t, y, init, free, bounds)
            for init in _model_starts(model, t, y, form_estimates, held, theta)
        ]
    except GrowthIsrpError as e:
        status = f"{type(e).__name__}: {e}"
    result = _best_fit(problems)
    if result is None and status == "ok":
        status = "fit failed from every start"
    suffix = "".join(f", {k}={v:g}" for k, v in fixed.items())
    return {
        "label": spec.label + suffix,
        "key": str(model) + suffix,
        "fixed": held,
        "result": result,
        "delta_aic": None,
        "status": status,
    }


def select_model(
    data: FloatArray,
    times: Sequence[float] | FloatArray,
    parent: Parent,
    stage: IsrpStage,
    theta: float | None = None,
    threads: int = 1,
) -> SelectionReport:
    """
    Fit the catalog entries implied by the competitive rate forms to the mean sizes.

    A form is competitive when its AIC is within 10 of the best form; the constant form is
    always carried. Candidates whose fits fail are ranked last with their status.

    Raises:
        EmptyProfile: If the stage has no successful rate-form fit.
        NoConvergence: If no catalog entry could be fitted.
    """
    if not stage.ranking or stage.ranking[0]["result"] is None:
        raise EmptyProfile("no rate form could be fitted to the profile")
    panel = np.atleast_2d(np.asarray(data, dtype=np.float64))
    t = np.asarray(times, dtype=np.float64)
    y = panel.mean(axis=0)
    narrative = [f"ISRP profile of r under the {parent} parent: {len(stage.r)} usable intervals"]
    best_form = stage.ranking[0]
    narrative.append(f"best rate form: {best_form['label']} (AIC {best_form['result']['aic']:.4f})")
    if stage.no_variation:
        narrative.append("constant r is within 2 AIC units of the best form: no clear variation")

    competitive: list[tuple[RateForm, Params | None]] = []
    for entry in stage.ranking:
        if entry["result"] is not None and entry["delta_aic"] is not None and entry["delta_aic"] <= COMPETITIVE_DELTA:
            competitive.append((RateForm(entry["key"]), dict(entry["result"]["estimates"])))
    if all(form is not RateForm.CONSTANT for form, _ in competitive):
        competitive.append((RateForm.CONSTANT, None))
        narrative.append("constant form added as baseline")

    jobs: dict[str, tuple[ModelId, Params, Params | None]] = {}
    for form, estimates in competitive:
        implied = variation_for(parent, form, estimates or {})
        if not implied:
            narrative.append(f"{form}: no catalog entry under the {parent} parent")
        for model, fixed in implied:
            key = str(model) + "".join(f",{k}={v:g}" for k, v in fixed.items())
            jobs.setdefault(key, (model, fixed, estimates))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        fits = list(pool.map(lambda job: _fit_model(job[0], job[1], t, y, job[2], theta), jobs.values()))
    ranking = _rank(fits, [f["key"] for f in fits])
    if ranking[0]["result"] is None:
        raise NoConvergence("no catalog model could be fitted to the mean sizes")
    for entry in ranking:
        if entry["result"] is None:
            narrative.append(f"{entry['label']}: {entry['status']}")

    fitted = [e["result"]["aic"] for e in ranking if e["result"] is not None]
    strength = delta_aic_rule(fitted)[1] if len(fitted) > 1 else "uncontested"
    chosen = ranking[0]
    narrative.append(f"chosen: {chosen['label']} (AIC {chosen['result']['aic']:.4f}, {strength})")
    logger.info("selected %s", chosen["key"])
    return {
        "parent": str(parent),
        "isrp_stage": stage.ranking,
        "model_stage": ranking,
        "chosen": chosen["key"],
        "strength": strength,
        "no_variation": stage.no_variation,
        "narrative": narrative,
    }


def moving_average(t: Sequence[float] | FloatArray, y: Sequence[float] | FloatArray,
                   window: int) -> tuple[FloatArray, FloatArray]:
    """
    Centred moving average; the output is window - 1 points shorter.

    Raises:
        DomainError: If window is even or below 1.
        WindowTooLarge: If window exceeds the series length.
    """
    tt = np.asarray(t, dtype=np.float64)
    yy = np.asarray(y, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise DomainError(f"window must be a positive odd integer, got {window}")
    if window > yy.size:
        raise WindowTooLarge(f"window {window} is longer than the series ({yy.size})")
    half = window // 2
    smoothed = np.convolve(yy, np.full(window, 1.0 / window), mode="valid")
    return tt[half: tt.size - half], smoothed


def rgr_series(t: Sequence[float] | FloatArray, y: Sequence[float] | FloatArray) -> tuple[FloatArray, FloatArray]:
    """
    Relative growth rate (ln y[j+1] - ln y[j]) / h at the interval midpoints.

    Raises:
        NonPositiveValue: If any y is zero or negative.
    """
    tt = np.asarray(t, dtype=np.float64)
    yy = np.asarray(y, dtype=np.float64)
    if np.any(yy <= 0.0):
        raise NonPositiveValue("relative growth rates need positive sizes")
    h = uniform_step(tt)
    return (tt[:-1] + tt[1:]) / 2.0, np.diff(np.log(yy)) / h


def rgr_matrix(data: FloatArray, times: Sequence[float] | FloatArray) -> tuple[FloatArray, FloatArray]:
    """Individual RGR profiles of a panel: midpoints and an n x (q-1) matrix."""
    panel = np.atleast_2d(np.asarray(data, dtype=np.float64))
    tt = np.asarray(times, dtype=np.float64)
    if np.any(panel <= 0.0):
        raise NonPositiveValue("relative growth rates need positive sizes")
    h = uniform_step(tt)
    return (tt[:-1] + tt[1:]) / 2.0, np.diff(np.log(panel), axis=1) / h
