"""
growth_models

Catalog of growth models obtained from four parent models (exponential, logistic,
theta-logistic, confined exponential) by letting r or K vary continuously with time or size.

Every entry knows its right-hand side dX/dt, its rate function, its limit classification and,
where one exists, its closed-form solution X(t) with X(0) = x0. Entries without a closed form
are integrated numerically with the fixed-step RK4 scheme of growth_isrp.ode.

Classes:
    TimeRate: A time-dependent rate r(t) together with its integral from 0 to t.
    ModelSpec: One catalog entry.

Functions:
    catalog: Plain-data listing of the table rows.
    all_models: Table rows plus constant-parameter parents and the hump-shaped model.
    get_spec / parse_model_id: Lookups.
    size / rate / rgr / asymptotic_size: Evaluations of one entry.
    integrate / integrate_times: RK4 solutions.
    size_profile / sweep: Size profiles over a grid.
    export_catalog_json: JSON export of the catalog.

Usage:
    from growth_isrp.growth_models import size, parse_model_id

    logistic = parse_model_id("logistic/constant_params")
    size(logistic, {"r0": 0.3, "K": 100.0, "x0": 10.0}, 1.0)  # 13.043...

Dependencies:
    - numpy: grid evaluation.
"""
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from growth_isrp.errors import ConfigError, DomainError, UnsupportedClosedForm
from growth_isrp.model_types import (
    Asymptote,
    CatalogEntry,
    FloatArray,
    ModelId,
    ParameterSet,
    Parent,
    TimeGrid,
    Variation,
)
from growth_isrp.ode import integrate_scalar

THETA_VON_BERTALANFFY = 1.0 / 3.0

RateFn = Callable[[float, ParameterSet], float]
Rhs = Callable[[float, float, ParameterSet], float]
SizeFn = Callable[[float, ParameterSet], float]
Check = Callable[[ParameterSet], None]


def _exp(v: float) -> float:
    return math.exp(v) if v < 709.0 else math.inf


@dataclass(frozen=True)
class TimeRate:
    """
    A rate r(t) that depends on time only.

    Attributes:
        names (tuple[str, ...]): Parameters the rate reads.
        form (str): Human-readable expression.
        rate (RateFn): r(t).
        integral (RateFn): Integral of r from 0 to t.
        positive (tuple[str, ...]): Parameters that must be strictly positive.
    """

    names: tuple[str, ...]
    form: str
    rate: RateFn
    integral: RateFn
    positive: tuple[str, ...] = ()


def _power_rate(t: float, p: ParameterSet) -> float:
    c = p["c"]
    if t == 0.0:
        return 0.0 if c > 1.0 else (p["r0"] if c == 1.0 else math.inf)
    return p["r0"] * t ** (c - 1.0)


def _blowup_check(t: float, p: ParameterSet) -> None:
    if p["r0"] * t >= 1.0:
        raise DomainError(f"size is undefined at and beyond t = 1/r0 = {1.0 / p['r0']:.6g}")


def _blowup_rate(t: float, p: ParameterSet) -> float:
    _blowup_check(t, p)
    return p["r0"] / (1.0 - p["r0"] * t)


def _blowup_integral(t: float, p: ParameterSet) -> float:
    _blowup_check(t, p)
    return -math.log1p(-p["r0"] * t)


def _hump_integral(t: float, p: ParameterSet) -> float:
    c, b = p["c"], p["b"]
    if c < 0.0 or c != int(c):
        raise UnsupportedClosedForm(f"the hump-shaped rate has a closed form only for integer c >= 0, got c={c}")
    order = int(c)
    bt = b * t
    partial = sum(bt**k / math.factorial(k) for k in range(order + 1))
    return p["r0"] * math.factorial(order) / b ** (order + 1) * (1.0 - math.exp(-bt) * partial)


TIME_RATES: dict[Variation, TimeRate] = {
    Variation.CONSTANT_PARAMS: TimeRate(("r0",), "r = r0", lambda t, p: p["r0"], lambda t, p: p["r0"] * t),
    Variation.POWER_RATE: TimeRate(
        ("r0", "c"), "r = r0*t^(c-1)", _power_rate, lambda t, p: p["r0"] * t ** p["c"] / p["c"], ("c",)
    ),
    Variation.LINEAR_INCREASING_RATE: TimeRate(
        ("r0", "c"), "r = r0*(1+c*t)",
        lambda t, p: p["r0"] * (1.0 + p["c"] * t),
        lambda t, p: p["r0"] * (t + p["c"] * t * t / 2.0),
        ("c",),
    ),
    Variation.LINEAR_DECAYING_RATE: TimeRate(
        ("r0", "c"), "r = r0*(1-c*t)",
        lambda t, p: p["r0"] * (1.0 - p["c"] * t),
        lambda t, p: p["r0"] * (t - p["c"] * t * t / 2.0),
        ("c",),
    ),
    Variation.EXP_DECAY_RATE: TimeRate(
        ("r0", "c"), "r = r0*exp(-c*t)",
        lambda t, p: p["r0"] * math.exp(-p["c"] * t),
        lambda t, p: -p["r0"] * math.expm1(-p["c"] * t) / p["c"],
        ("c",),
    ),
    Variation.EXP_GROWTH_RATE: TimeRate(
        ("r0", "c"), "r = r0*exp(c*t)",
        lambda t, p: p["r0"] * _exp(p["c"] * t),
        lambda t, p: p["r0"] * math.expm1(min(p["c"] * t, 709.0)) / p["c"],
        ("c",),
    ),
    Variation.HYPERBOLIC_RATE: TimeRate(
        ("r0", "c"), "r = r0/(1+c*t)",
        lambda t, p: p["r0"] / (1.0 + p["c"] * t),
        lambda t, p: p["r0"] * math.log1p(p["c"] * t) / p["c"],
        ("c",),
    ),
    Variation.SINE_RATE: TimeRate(
        ("r0", "c", "omega"), "r = r0+c*sin(omega*t)",
        lambda t, p: p["r0"] + p["c"] * math.sin(p["omega"] * t),
        lambda t, p: p["r0"] * t + p["c"] / p["omega"] * (1.0 - math.cos(p["omega"] * t)),
        ("omega",),
    ),
    Variation.COSINE_RATE: TimeRate(
        ("r0", "c", "omega"), "r = r0+c*cos(omega*t)",
        lambda t, p: p["r0"] + p["c"] * math.cos(p["omega"] * t),
        lambda t, p: p["r0"] * t + p["c"] / p["omega"] * math.sin(p["omega"] * t),
        ("omega",),
    ),
    Variation.RECIPROCAL_RATE: TimeRate(
        ("r0",), "r = r0/(1+r0*t)",
        lambda t, p: p["r0"] / (1.0 + p["r0"] * t),
        lambda t, p: math.log1p(p["r0"] * t),
        ("r0",),
    ),
    Variation.BLOWUP_RATE: TimeRate(("r0",), "r = r0/(1-r0*t)", _blowup_rate, _blowup_integral, ("r0",)),
    Variation.GOMPERTZ_HUMP_RATE: TimeRate(
        ("r0", "b", "c"), "r = r0*exp(-b*t)*t^c",
        lambda t, p: p["r0"] * math.exp(-p["b"] * t) * t ** p["c"],
        _hump_integral,
        ("b",),
    ),
}


@dataclass(frozen=True)
class ModelSpec:
    """
    One catalog entry.

    Attributes:
        model_id (ModelId): Parent and row tag.
        table_ref (str): "group.row" coordinate; row 0 is the constant-parameter parent.
        label (str): Model identification.
        form (str): The varied parameter written out.
        params (tuple[str, ...]): Parameters the entry reads.
        rhs (Rhs): dX/dt as a function of (t, X, params).
        rate (Rhs): The varied rate as a function of (t, X, params).
        asymptote (Callable[[ParameterSet], Asymptote]): Limit classification.
        closed_form (SizeFn | None): X(t), or None for numeric-only entries.
        positive (tuple[str, ...]): Parameters that must be strictly positive.
        check (Check | None): Extra row constraint.
        distribution (bool): Identified as a probability distribution.
        identified_as (ModelId | None): Entry this row reduces to exactly.
        in_tables (bool): False for the parents and the hump-shaped model.
    """

    model_id: ModelId
    table_ref: str
    label: str
    form: str
    params: tuple[str, ...]
    rhs: Rhs
    rate: Rhs
    asymptote: Callable[[ParameterSet], Asymptote]
    closed_form: SizeFn | None = None
    positive: tuple[str, ...] = ()
    check: Check | None = None
    distribution: bool = False
    identified_as: ModelId | None = None
    in_tables: bool = True

    @property
    def has_closed_form(self) -> bool:
        return self.closed_form is not None

    def entry(self) -> CatalogEntry:
        return {
            "parent": str(self.model_id.parent),
            "variation": str(self.model_id.variation),
            "params": list(self.params),
            "table_ref": self.table_ref,
            "has_closed_form": self.has_closed_form,
            "label": self.label,
            "form": self.form,
            "distribution": self.distribution,
            "identified_as": str(self.identified_as) if self.identified_as else None,
        }


# Limit helpers

def _finite(value: float) -> Asymptote:
    return {"kind": "finite", "value": value}


def _zero(_: ParameterSet) -> Asymptote:
    return {"kind": "zero", "value": 0.0}


def _infinity(_: ParameterSet) -> Asymptote:
    return {"kind": "infinity", "value": None}


def _minus_infinity(_: ParameterSet) -> Asymptote:
    return {"kind": "minus_infinity", "value": None}


def _carrying(p: ParameterSet) -> Asymptote:
    return _finite(p["K"])


def _theta_sign(p: ParameterSet) -> Asymptote:
    return _zero(p) if p["theta"] < 0.0 else _carrying(p)


# Row checks

def _theta_nonzero(p: ParameterSet) -> None:
    if p["theta"] == 0.0:
        raise DomainError("theta = 0 is singular; use the Gompertz-limit entries for theta -> 0")


def _theta_fixed(value: float) -> Check:
    def check(p: ParameterSet) -> None:
        if "theta" in p and not math.isclose(p["theta"], value, rel_tol=0.0, abs_tol=1e-12):
            raise DomainError(f"this entry fixes theta = {value:.6g}, got {p['theta']}")
    return check


def _theta_limit(p: ParameterSet) -> None:
    if p.get("theta") == 0.0:
        raise DomainError("theta -> 0 entries use their limit form; a literal theta = 0 is rejected")


def _theta_range(lo: float, hi: float, lo_open: bool, hi_open: bool) -> Check:
    def check(p: ParameterSet) -> None:
        theta = p["theta"]
        below = theta <= lo if lo_open else theta < lo
        above = theta >= hi if hi_open else theta > hi
        if below or above or theta == 0.0:
            raise DomainError(f"theta={theta} outside the admissible range of this entry")
    return check


def _below_capacity(p: ParameterSet) -> None:
    _theta_limit(p)
    if p["x0"] >= p["K"]:
        raise DomainError("entries driven by ln(K/X) need 0 < x0 < K")


# Parent families with a time-dependent rate

def _exponential_family(kernel: TimeRate) -> tuple[SizeFn, Rhs, Rhs]:
    def closed(t: float, p: ParameterSet) -> float:
        return p["x0"] * _exp(kernel.integral(t, p))

    return closed, lambda t, x, p: kernel.rate(t, p) * x, lambda t, x, p: kernel.rate(t, p)


def _logistic_size(p: ParameterSet, decay: float) -> float:
    K = p["K"]
    return K / (1.0 + (K / p["x0"] - 1.0) * decay)


def _logistic_family(kernel: TimeRate) -> tuple[SizeFn, Rhs, Rhs]:
    def closed(t: float, p: ParameterSet) -> float:
        return _logistic_size(p, _exp(-kernel.integral(t, p)))

    def rhs(t: float, x: float, p: ParameterSet) -> float:
        return kernel.rate(t, p) * x * (1.0 - x / p["K"])

    return closed, rhs, lambda t, x, p: kernel.rate(t, p)


def _theta_size(p: ParameterSet, theta: float, exponent: float) -> float:
    K = p["K"]
    bracket = 1.0 + ((K / p["x0"]) ** theta - 1.0) * _exp(-theta * exponent)
    if bracket <= 0.0:
        raise DomainError("theta-logistic bracket is non-positive: the closed form has left its domain")
    return K * bracket ** (-1.0 / theta)


def _theta_family(kernel: TimeRate) -> tuple[SizeFn, Rhs, Rhs]:
    def closed(t: float, p: ParameterSet) -> float:
        return _theta_size(p, p["theta"], kernel.integral(t, p))

    def rhs(t: float, x: float, p: ParameterSet) -> float:
        return kernel.rate(t, p) * x * (1.0 - (x / p["K"]) ** p["theta"])

    return closed, rhs, lambda t, x, p: kernel.rate(t, p)


def _confined_family(kernel: TimeRate) -> tuple[SizeFn, Rhs, Rhs]:
    def closed(t: float, p: ParameterSet) -> float:
        K = p["K"]
        return K - (K - p["x0"]) * _exp(-kernel.integral(t, p))

    def rhs(t: float, x: float, p: ParameterSet) -> float:
        return kernel.rate(t, p) * (p["K"] - x)

    return closed, rhs, lambda t, x, p: kernel.rate(t, p)


_FAMILIES = {
    Parent.EXPONENTIAL: (_exponential_family, ("x0",), ("x0",)),
    Parent.LOGISTIC: (_logistic_family, ("K", "x0"), ("K", "x0")),
    Parent.THETA_LOGISTIC: (_theta_family, ("K", "theta", "x0"), ("K", "x0")),
    Parent.CONFINED_EXPONENTIAL: (_confined_family, ("K", "x0"), ("K", "x0")),
}


def _time_row(
    parent: Parent,
    variation: Variation,
    table_ref: str,
    label: str,
    asymptote: Callable[[ParameterSet], Asymptote],
    check: Check | None = None,
    closed: bool = True,
    distribution: bool = False,
    in_tables: bool = True,
    kernel: Variation | None = None,
) -> ModelSpec:
    rate_kernel = TIME_RATES[kernel or variation]
    family, extra, positive = _FAMILIES[parent]
    closed_form, rhs, rate_fn = family(rate_kernel)
    return ModelSpec(
        model_id=ModelId(parent, variation),
        table_ref=table_ref,
        label=label,
        form=rate_kernel.form,
        params=rate_kernel.names + extra,
        rhs=rhs,
        rate=rate_fn,
        asymptote=asymptote,
        closed_form=closed_form if closed else None,
        positive=rate_kernel.positive + positive,
        check=check,
        distribution=distribution,
        in_tables=in_tables,
    )


# Density-dependent and limit entries

def _log_gap(x: float, p: ParameterSet) -> float:
    return math.log(p["K"] / x)


def _gompertz_size(p: ParameterSet, decay: float) -> float:
    return p["K"] * math.exp(decay * math.log(p["x0"] / p["K"]))


def _von_bertalanffy_size(p: ParameterSet, theta: float, t: float) -> float:
    K = p["K"]
    return K * (1.0 + ((p["x0"] / K) ** theta - 1.0) * math.exp(-p["r0"] * theta * t)) ** (1.0 / theta)


def _von_bertalanffy_rhs(theta_of: Callable[[ParameterSet], float]) -> Rhs:
    def rhs(t: float, x: float, p: ParameterSet) -> float:
        theta = theta_of(p)
        return p["r0"] * (p["K"] / x) ** theta * x * (1.0 - (x / p["K"]) ** theta)
    return rhs


def _generalized_gompertz_size(t: float, p: ParameterSet) -> float:
    c, r0 = p["c"], p["r0"]
    gap0 = math.log(p["K"] / p["x0"])
    if c == 1.0:
        gap = gap0 * math.exp(-r0 * t)
    else:
        base = 1.0 + (c - 1.0) * r0 * t * gap0 ** (c - 1.0)
        gap = 0.0 if base <= 0.0 else gap0 * base ** (-1.0 / (c - 1.0))
    return p["K"] * math.exp(-gap)


def _crescenzo_spina_size(t: float, p: ParameterSet) -> float:
    c = p["c"]
    gap0 = math.log(p["K"] / p["x0"])
    gap = gap0 * (1.0 + c * p["r0"] * t * gap0**c) ** (-1.0 / c)
    return p["K"] * math.exp(-gap)


def _second_order_size(t: float, p: ParameterSet) -> float:
    # the root reaches zero at t* = 2 sqrt(ln(K/x0)) / r0 and X stays at K from then on
    root = max(math.sqrt(math.log(p["K"] / p["x0"])) - p["r0"] * t / 2.0, 0.0)
    return p["K"] * math.exp(-root * root)


def _positive_gap(x: float, p: ParameterSet) -> float:
    gap = _log_gap(x, p)
    return gap if gap > 0.0 else 0.0


def _gap_rate(power: Callable[[ParameterSet], float]) -> Rhs:
    def rate_fn(t: float, x: float, p: ParameterSet) -> float:
        gap = _log_gap(x, p)
        if gap <= 0.0:
            raise DomainError("ln(K/X) must be positive for this rate")
        return p["r0"] * gap ** power(p)
    return rate_fn


def _confined_linear_k(t: float, p: ParameterSet) -> float:
    r, c, K0 = p["r0"], p["c"], p["K0"]
    return K0 * (1.0 + c * t - c / r) + (p["x0"] - K0 * (1.0 - c / r)) * math.exp(-r * t)


def _confined_exp_growth_k(t: float, p: ParameterSet) -> float:
    r, c = p["r0"], p["c"]
    return p["x0"] * math.exp(-r * t) + r * p["K0"] / (r + c) * (_exp(c * t) - math.exp(-r * t))


def _confined_exp_decay_k(t: float, p: ParameterSet) -> float:
    r, c = p["r0"], p["c"]
    decay = math.exp(-r * t)
    if math.isclose(r, c, rel_tol=1e-12):
        return p["x0"] * decay + r * p["K0"] * t * decay
    return p["x0"] * decay + r * p["K0"] / (r - c) * (math.exp(-c * t) - decay)


def _logistic_exp_growth_k(t: float, p: ParameterSet) -> float:
    r, K0 = p["r0"], p["K0"]
    return K0 / ((r * t + K0 / p["x0"]) * math.exp(-r * t))


def _logistic_hyperbolic_k(t: float, p: ParameterSet) -> float:
    r, c, K0 = p["r0"], p["c"], p["K0"]
    denominator = (1.0 + c * t - c / r) + (K0 / p["x0"] - 1.0 + c / r) * math.exp(-r * t)
    if denominator <= 0.0:
        raise DomainError("hyperbolically varying K: the closed form has left its domain")
    return K0 / denominator


def _constant_rate(t: float, x: float, p: ParameterSet) -> float:
    return p["r0"]


def _build_catalog() -> dict[ModelId, ModelSpec]:
    E, L, T, C = Parent.EXPONENTIAL, Parent.LOGISTIC, Parent.THETA_LOGISTIC, Parent.CONFINED_EXPONENTIAL
    V = Variation
    logistic_id = ModelId(L, V.CONSTANT_PARAMS)

    def exp_constant_limit(p: ParameterSet) -> Asymptote:
        if p["r0"] > 0.0:
            return _infinity(p)
        return _zero(p) if p["r0"] < 0.0 else _finite(p["x0"])

    def hump_limit(p: ParameterSet) -> Asymptote:
        return _finite(p["x0"] * _exp(p["r0"] * math.gamma(p["c"] + 1.0) / p["b"] ** (p["c"] + 1.0)))

    rows: list[ModelSpec] = [
        # exponential parent
        _time_row(E, V.CONSTANT_PARAMS, "2.0", "Exponential Model", exp_constant_limit, in_tables=False),
        _time_row(E, V.LINEAR_DECAYING_RATE, "2.1", "Normal Distribution", _zero, distribution=True),
        _time_row(E, V.HYPERBOLIC_RATE, "2.2", "Power Law Exponential", _infinity),
        _time_row(E, V.RECIPROCAL_RATE, "2.3", "Linear Model", _infinity),
        _time_row(E, V.BLOWUP_RATE, "2.4", "Hyperbolic Model", _zero),
        _time_row(E, V.EXP_DECAY_RATE, "2.5", "Gompertz Model",
                  lambda p: _finite(p["x0"] * _exp(p["r0"] / p["c"]))),
        _time_row(E, V.POWER_RATE, "2.6", "Korf Model", _infinity),
        _time_row(E, V.LINEAR_INCREASING_RATE, "2.7", "Linearly Increasing r", _infinity),
        _time_row(E, V.SINE_RATE, "2.8", "Periodically Varying r (sine)", _infinity),
        _time_row(E, V.COSINE_RATE, "2.9", "Periodically Varying r (cosine)", _infinity),
        _time_row(E, V.GOMPERTZ_HUMP_RATE, "2.10", "Extended Gompertz Model (hump-shaped r)", hump_limit,
                  in_tables=False),
        # logistic parent
        _time_row(L, V.CONSTANT_PARAMS, "3.0", "Logistic Model", _carrying, in_tables=False),
        ModelSpec(
            ModelId(L, V.EXP_GROWTH_K), "3.1", "Exponential Model", "K = K0*exp(r0*t)", ("r0", "K0", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * (1.0 - x / (p["K0"] * _exp(p["r0"] * t))),
            rate=_constant_rate, asymptote=_infinity, closed_form=_logistic_exp_growth_k,
            positive=("r0", "K0", "x0"),
        ),
        ModelSpec(
            ModelId(L, V.HYPERBOLIC_K), "3.2", "Hyperbolically Varying K", "K = K0/(1+c*t)",
            ("r0", "c", "K0", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * (1.0 - x * (1.0 + p["c"] * t) / p["K0"]),
            rate=_constant_rate, asymptote=_zero, closed_form=_logistic_hyperbolic_k,
            positive=("r0", "c", "K0", "x0"),
        ),
        _time_row(L, V.LINEAR_INCREASING_RATE, "3.3", "Linearly Growing r", _carrying),
        _time_row(L, V.LINEAR_DECAYING_RATE, "3.4", "Linearly Decaying r", _zero),
        _time_row(L, V.POWER_RATE, "3.5", "Extended Logistic Model", _carrying),
        _time_row(L, V.EXP_DECAY_RATE, "3.6", "Exponentially Decaying r",
                  lambda p: _finite(_logistic_size(p, math.exp(-p["r0"] / p["c"])))),
        _time_row(L, V.EXP_GROWTH_RATE, "3.7", "Exponentially Growing r", _carrying),
        _time_row(L, V.HYPERBOLIC_RATE, "3.8", "Hyperbolically Varying r", _carrying),
        _time_row(L, V.SINE_RATE, "3.9", "Periodically Varying r (sine)", _carrying),
        _time_row(L, V.COSINE_RATE, "3.10", "Periodically Varying r (cosine)", _carrying),
        ModelSpec(
            ModelId(L, V.LINEAR_K), "6.1", "Linearly Varying K", "K = K0*(1+c*t)", ("r0", "c", "K0", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * (1.0 - x / (p["K0"] * (1.0 + p["c"] * t))),
            rate=_constant_rate, asymptote=_infinity, positive=("c", "K0", "x0"),
        ),
        # theta-logistic parent
        _time_row(T, V.CONSTANT_PARAMS, "4.0", "Theta-Logistic Model", _theta_sign, check=_theta_nonzero,
                  in_tables=False),
        ModelSpec(
            ModelId(T, V.LOGISTIC_REDUCTION), "4.1", "Logistic Model", "theta = 1", ("r0", "K", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * (1.0 - x / p["K"]),
            rate=_constant_rate, asymptote=_carrying,
            closed_form=lambda t, p: _logistic_size(p, _exp(-p["r0"] * t)),
            positive=("K", "x0"), check=_theta_fixed(1.0), identified_as=logistic_id,
        ),
        ModelSpec(
            ModelId(T, V.GOMPERTZ_LIMIT), "4.2", "Gompertz Model", "r = r0/theta, theta -> 0", ("r0", "K", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * _log_gap(x, p),
            rate=_constant_rate, asymptote=_carrying,
            closed_form=lambda t, p: _gompertz_size(p, math.exp(-p["r0"] * t)),
            positive=("K", "x0"), check=_theta_limit,
        ),
        _time_row(T, V.RICHARDS, "4.3", "Richards Model", _theta_sign,
                  check=_theta_range(-1.0, math.inf, False, True), kernel=V.CONSTANT_PARAMS),
        _time_row(T, V.KOYA_GOSHU, "4.4", "Koya-Goshu Model", _carrying,
                  check=_theta_range(0.0, math.inf, True, True), kernel=V.POWER_RATE),
        _time_row(T, V.LINEAR_INCREASING_RATE, "4.5", "Linearly Increasing r", _carrying, check=_theta_nonzero),
        _time_row(T, V.LINEAR_DECAYING_RATE, "4.6", "Linearly Decreasing r", _zero, check=_theta_nonzero),
        ModelSpec(
            ModelId(T, V.EXTENDED_GOMPERTZ), "4.7", "Extended Gompertz Model",
            "r = (r0/theta)*t^(c-1), theta -> 0", ("r0", "c", "K", "x0"),
            rhs=lambda t, x, p: _power_rate(t, p) * x * _log_gap(x, p),
            rate=lambda t, x, p: _power_rate(t, p), asymptote=_carrying,
            closed_form=lambda t, p: _gompertz_size(p, _exp(-p["r0"] * t ** p["c"] / p["c"])),
            positive=("c", "K", "x0"), check=_theta_limit,
        ),
        ModelSpec(
            ModelId(T, V.VON_BERTALANFFY), "4.8", "Von Bertalanffy Model", "r = r0*(K/X)^theta, theta = 1/3",
            ("r0", "K", "x0"),
            rhs=_von_bertalanffy_rhs(lambda p: THETA_VON_BERTALANFFY),
            rate=lambda t, x, p: p["r0"] * (p["K"] / x) ** THETA_VON_BERTALANFFY, asymptote=_carrying,
            closed_form=lambda t, p: _von_bertalanffy_size(p, THETA_VON_BERTALANFFY, t),
            positive=("K", "x0"), check=_theta_fixed(THETA_VON_BERTALANFFY),
        ),
        ModelSpec(
            ModelId(T, V.GENERALIZED_VON_BERTALANFFY), "4.9", "Generalized Von Bertalanffy Model",
            "r = r0*(K/X)^theta", ("r0", "K", "theta", "x0"),
            rhs=_von_bertalanffy_rhs(lambda p: p["theta"]),
            rate=lambda t, x, p: p["r0"] * (p["K"] / x) ** p["theta"], asymptote=_carrying,
            closed_form=lambda t, p: _von_bertalanffy_size(p, p["theta"], t),
            positive=("K", "x0"), check=_theta_range(0.0, 1.0, True, True),
        ),
        ModelSpec(
            ModelId(T, V.GENERALIZED_GOMPERTZ), "4.10", "Generalized Gompertz Model",
            "r = (r0/theta)*ln(K/X)^(c-1), theta -> 0", ("r0", "c", "K", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * _positive_gap(x, p) ** p["c"],
            rate=_gap_rate(lambda p: p["c"] - 1.0),
            asymptote=lambda p: _zero(p) if p["c"] < 1.0 else _carrying(p),
            closed_form=_generalized_gompertz_size, positive=("c", "K", "x0"), check=_below_capacity,
        ),
        ModelSpec(
            ModelId(T, V.CRESCENZO_SPINA), "4.11", "Crescenzo-Spina Model",
            "r = (r0/theta)*ln(K/X)^c, theta -> 0", ("r0", "c", "K", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * _positive_gap(x, p) ** (p["c"] + 1.0),
            rate=lambda t, x, p: p["r0"] * _positive_gap(x, p) ** p["c"], asymptote=_carrying,
            closed_form=_crescenzo_spina_size, positive=("c", "K", "x0"), check=_below_capacity,
        ),
        ModelSpec(
            ModelId(T, V.SECOND_ORDER_EXP_POLY), "4.12", "Second-order Exponential Polynomial",
            "r = (r0/theta)*ln(K/X)^(-1/2), theta -> 0", ("r0", "K", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * math.sqrt(_positive_gap(x, p)),
            rate=_gap_rate(lambda p: -0.5), asymptote=_zero,
            closed_form=_second_order_size, positive=("K", "x0"), check=_below_capacity,
        ),
        ModelSpec(
            ModelId(T, V.COOPERATION), "6.2", "Co-operation Model", "r = r0*X^gamma",
            ("r0", "gamma", "K", "theta", "x0"),
            rhs=lambda t, x, p: p["r0"] * x ** (p["gamma"] + 1.0) * (1.0 - (x / p["K"]) ** p["theta"]),
            rate=lambda t, x, p: p["r0"] * x ** p["gamma"], asymptote=_carrying,
            positive=("K", "x0"), check=_theta_nonzero,
        ),
        ModelSpec(
            ModelId(T, V.MARUSIC_BAJZER), "6.3", "Marusic-Bajzer Model", "r = r0*(X/K)^c",
            ("r0", "c", "K", "theta", "x0"),
            rhs=lambda t, x, p: p["r0"] * x * (x / p["K"]) ** p["c"] * (1.0 - (x / p["K"]) ** p["theta"]),
            rate=lambda t, x, p: p["r0"] * (x / p["K"]) ** p["c"], asymptote=_carrying,
            positive=("K", "x0"), check=_theta_range(0.0, math.inf, True, True),
        ),
        _time_row(T, V.EXP_GROWTH_RATE, "6.4", "Exponentially Increasing r", _carrying,
                  check=_theta_nonzero, closed=False),
        # confined exponential parent
        _time_row(C, V.CONSTANT_PARAMS, "5.0", "Confined Exponential Model", _carrying, in_tables=False),
        _time_row(C, V.EXP_GROWTH_RATE, "5.1", "Extreme Minimal Value Distribution", _carrying,
                  distribution=True),
        _time_row(C, V.POWER_RATE, "5.2", "Weibull Distribution", _carrying, distribution=True),
        ModelSpec(
            ModelId(C, V.DENSITY_LINEAR_RATE), "5.3", "Logistic Model", "r = r0*X/K", ("r0", "K", "x0"),
            rhs=lambda t, x, p: p["r0"] * x / p["K"] * (p["K"] - x),
            rate=lambda t, x, p: p["r0"] * x / p["K"], asymptote=_carrying,
            closed_form=lambda t, p: _logistic_size(p, _exp(-p["r0"] * t)),
            positive=("K", "x0"), identified_as=logistic_id,
        ),
        _time_row(C, V.LINEAR_DECAYING_RATE, "5.4", "Linearly Decaying r", _minus_infinity),
        _time_row(C, V.LINEAR_INCREASING_RATE, "5.5", "Linearly Increasing r", _carrying),
        _time_row(C, V.EXP_DECAY_RATE, "5.6", "Exponentially Decaying r",
                  lambda p: _finite(p["K"] - (p["K"] - p["x0"]) * math.exp(-p["r0"] / p["c"]))),
        _time_row(C, V.HYPERBOLIC_RATE, "5.7", "Hyperbolically Varying r", _carrying),
        _time_row(C, V.SINE_RATE, "5.8", "Periodically Varying r (sine)", _carrying),
        _time_row(C, V.COSINE_RATE, "5.9", "Periodically Varying r (cosine)", _carrying),
        ModelSpec(
            ModelId(C, V.LINEAR_K), "5.10", "Linearly Increasing K", "K = K0*(1+c*t)", ("r0", "c", "K0", "x0"),
            rhs=lambda t, x, p: p["r0"] * (p["K0"] * (1.0 + p["c"] * t) - x),
            rate=_constant_rate, asymptote=_infinity, closed_form=_confined_linear_k,
            positive=("r0", "c", "K0", "x0"),
        ),
        ModelSpec(
            ModelId(C, V.EXP_GROWTH_K), "5.11", "Exponentially Increasing K", "K = K0*exp(c*t)",
            ("r0", "c", "K0", "x0"),
            rhs=lambda t, x, p: p["r0"] * (p["K0"] * _exp(p["c"] * t) - x),
            rate=_constant_rate, asymptote=_infinity, closed_form=_confined_exp_growth_k,
            positive=("r0", "c", "K0", "x0"),
        ),
        ModelSpec(
            ModelId(C, V.EXP_DECAY_K), "5.12", "Exponentially Decaying K", "K = K0*exp(-c*t)",
            ("r0", "c", "K0", "x0"),
            rhs=lambda t, x, p: p["r0"] * (p["K0"] * math.exp(-p["c"] * t) - x),
            rate=_constant_rate, asymptote=_zero, closed_form=_confined_exp_decay_k,
            positive=("r0", "c", "K0", "x0"),
        ),
    ]
    registry: dict[ModelId, ModelSpec] = {}
    for spec in rows:
        if spec.model_id in registry:
            raise ConfigError(f"duplicate catalog entry {spec.model_id}")
        registry[spec.model_id] = spec
    return registry


_CATALOG: dict[ModelId, ModelSpec] = _build_catalog()


def _sort_key(spec: ModelSpec) -> tuple[int, int]:
    group, row = spec.table_ref.split(".")
    return int(group), int(row)


def all_models() -> list[ModelSpec]:
    """Every implemented entry, ordered by table coordinate."""
    return sorted(_CATALOG.values(), key=_sort_key)


def catalog(include_all: bool = False) -> list[CatalogEntry]:
    """
    Plain-data listing of the catalog.

    Parameters:
        include_all (bool): Also list the constant-parameter parents and the hump-shaped model.

    Returns:
        list[CatalogEntry]: One record per entry, ordered by table coordinate.
    """
    return [spec.entry() for spec in all_models() if include_all or spec.in_tables]


def get_spec(model: ModelId) -> ModelSpec:
    try:
        return _CATALOG[model]
    except KeyError as e:
        raise ConfigError(f"no catalog entry for {model}") from e


def parse_model_id(text: str) -> ModelId:
    """
    Parse "parent/variation" into a ModelId present in the catalog.

    Raises:
        ConfigError: If either part is unknown or the pair is not in the catalog.
    """
    parent_text, _, variation_text = text.partition("/")
    try:
        model = ModelId(Parent(parent_text.strip()), Variation(variation_text.strip()))
    except ValueError as e:
        raise ConfigError(f"unknown model '{text}', expected 'parent/variation'") from e
    get_spec(model)
    return model


def validate_params(model: ModelId, params: ParameterSet) -> ModelSpec:
    """
    Check that params carry every name the entry reads and respect its constraints.

    Returns:
        ModelSpec: The entry, for convenience.

    Raises:
        DomainError: On a missing, non-finite, or out-of-range parameter.
    """
    spec = get_spec(model)
    for name in spec.params:
        if name not in params:
            raise DomainError(f"{model} needs parameter '{name}'")
        if not math.isfinite(params[name]):
            raise DomainError(f"parameter '{name}' must be finite")
    for name in spec.positive:
        if params[name] <= 0.0:
            raise DomainError(f"{model} needs {name} > 0, got {params[name]}")
    if spec.check is not None:
        spec.check(params)
    return spec


def size(model: ModelId, params: ParameterSet, t: float) -> float:
    """
    Closed-form size X(t).

    Raises:
        UnsupportedClosedForm: If the entry has no closed form.
        DomainError: If params violate the row constraints or t < 0.
    """
    spec = validate_params(model, params)
    if spec.closed_form is None:
        raise UnsupportedClosedForm(f"{model} ({spec.label}) has no closed-form solution; use integrate")
    if t < 0.0:
        raise DomainError(f"t must be non-negative, got {t}")
    if t == 0.0:
        return float(params["x0"])
    return spec.closed_form(t, params)


def rate(model: ModelId, params: ParameterSet, t: float, x: float | None = None) -> float:
    """
    Value of the entry's varied rate at time t and size x.

    For theta -> 0 entries the coefficient multiplying X*ln(K/X) is returned, since r0/theta
    itself diverges. Entries that vary K return the constant r0.

    Raises:
        DomainError: On invalid params or a non-positive x.
    """
    spec = validate_params(model, params)
    if x is None:
        x = params["x0"]
    if x <= 0.0:
        raise DomainError(f"size must be positive, got {x}")
    return spec.rate(t, x, params)


def rgr(model: ModelId, params: ParameterSet, t: float) -> float:
    """Relative growth rate (1/X) dX/dt along the closed-form solution."""
    spec = get_spec(model)
    x = size(model, params, t)
    return spec.rhs(t, x, params) / x


def asymptotic_size(model: ModelId, params: ParameterSet) -> Asymptote:
    return validate_params(model, params).asymptote(params)


def integrate_times(model: ModelId, params: ParameterSet, times: list[float] | FloatArray,
                    reference_step: float | None = None) -> FloatArray:
    """RK4 solution at arbitrary sorted, non-negative times, starting from X(0) = x0."""
    spec = validate_params(model, params)
    values = integrate_scalar(
        lambda t, x: spec.rhs(t, x, params), params["x0"], [float(t) for t in times], reference_step
    )
    return np.asarray(values, dtype=np.float64)


def grid_times(grid: TimeGrid) -> FloatArray:
    """Time points t0 + j*h, j = 0..q-1."""
    if grid["h"] <= 0.0:
        raise DomainError("grid step h must be positive")
    if grid["q"] < 3:
        raise DomainError("a grid needs at least 3 points")
    return grid["t0"] + grid["h"] * np.arange(grid["q"], dtype=np.float64)


def integrate(model: ModelId, params: ParameterSet, grid: TimeGrid) -> FloatArray:
    """
    RK4 solution on a uniform grid; internal substeps are tied to the grid step.

    The initial condition x0 is placed at t = 0, so the first element equals x0 when t0 = 0.

    Raises:
        NumericalBlowup: If the state leaves (0, overflow bound).
    """
    return integrate_times(model, params, grid_times(grid), reference_step=grid["h"])


def size_profile(model: ModelId, params: ParameterSet, grid: TimeGrid) -> FloatArray:
    """Mean function on a grid: the closed form where available, RK4 otherwise."""
    spec = validate_params(model, params)
    times = grid_times(grid)
    if spec.closed_form is None:
        return integrate(model, params, grid)
    return np.array([size(model, params, float(t)) for t in times], dtype=np.float64)


def sweep(model: ModelId, params: ParameterSet, grid: TimeGrid, name: str,
          values: list[float]) -> dict[float, FloatArray]:
    """
    Size profiles for several values of one parameter, all others held fixed.

    Raises:
        DomainError: If name is not a parameter of the entry.
    """
    spec = get_spec(model)
    if name not in spec.params:
        raise DomainError(f"{model} has no parameter '{name}'")
    profiles: dict[float, FloatArray] = {}
    for value in values:
        varied: ParameterSet = {**params}
        varied[name] = value  # type: ignore[literal-required]
        profiles[value] = size_profile(model, varied, grid)
    return profiles


def export_catalog_json(include_all: bool = True) -> str:
    """JSON array with one record per catalog entry."""
    return json.dumps(catalog(include_all), indent=2) + "\n"
