"""
isrp

Interval-specific rate parameters (ISRP) of the four parent models.

Each sigmoid parent becomes linear in exp(-s*r*t) after a transform g of the size:

    g(mu_t) = g(K) + (g(mu_0) - g(K)) * exp(-s*r*t)

with g(x) = x^-theta, s = theta for the theta-logistic (theta = 1 is the logistic) and
g(x) = -x, s = 1 for the confined exponential. Three consecutive means x, y, z at spacing h
then give

    r = ln(a/b) / (s*h),   a = g(x) - g(y),   b = g(y) - g(z)

and, with m = t_j/h measured from the baseline time,

    g(K) = g(x0bar) - zeta,   zeta = a^2/(a-b) * (a/b)^m

The exponential parent uses the pair estimator ln(y/x)/h. Asymptotic variances follow from
the delta method with analytic gradients; the baseline mean x0bar is treated as fixed.

Functions:
    isrp_r / isrp_K: Point estimates from a mean sequence.
    grad_r / grad_K: Analytic gradients with respect to the means.
    delta_variance: grad' * Sigma * grad / n.
    triplet: Build a MeanTriplet from a mean sequence.
    isrp_profile: Estimates, variances and intervals for every admissible interval.
    series_to_rows: Flat records for CSV and JSON output.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from growth_isrp.datasets import uniform_step
from growth_isrp.errors import (
    ConfigError,
    DegenerateDenominator,
    DimensionMismatch,
    DomainError,
    NonPositiveBase,
    NonPositiveLogArgument,
    NumericalError,
)
from growth_isrp.model_types import (
    FloatArray,
    IsrpEstimate,
    IsrpSeries,
    IsrpTarget,
    MeanTriplet,
    Parent,
)

logger = logging.getLogger(__name__)

NORMAL_QUANTILE_975 = 1.959964


@dataclass(frozen=True)
class _Transform:
    g: Callable[[float], float]
    g_prime: Callable[[float], float]
    g_inv: Callable[[float], float]
    scale: float
    theta: float | None


def _theta_transform(theta: float) -> _Transform:
    def g(x: float) -> float:
        if x <= 0.0:
            raise NonPositiveBase(f"mean size must be positive under the theta-logistic transform, got {x}")
        return x ** -theta

    def g_inv(u: float) -> float:
        if theta == 1.0:
            if u == 0.0:
                raise DegenerateDenominator("1/K estimate is zero")
            return 1.0 / u
        if u <= 0.0:
            raise NonPositiveBase(f"K^-theta estimate is non-positive ({u:.6g}); cannot take the 1/theta root")
        return u ** (-1.0 / theta)

    return _Transform(g, lambda x: -theta * x ** (-theta - 1.0), g_inv, theta, theta)


_CONFINED = _Transform(lambda x: -x, lambda x: -1.0, lambda u: -u, 1.0, None)


def _transform(parent: Parent, theta: float | None) -> _Transform:
    match parent:
        case Parent.LOGISTIC:
            return _theta_transform(1.0)
        case Parent.THETA_LOGISTIC:
            if theta is None or theta == 0.0 or not math.isfinite(theta):
                raise ConfigError("the theta-logistic estimators need a finite, non-zero theta")
            return _theta_transform(theta)
        case Parent.CONFINED_EXPONENTIAL:
            return _CONFINED
        case _:
            raise ConfigError(f"{parent} has no three-point transform")


def triplet(xbar: Sequence[float] | FloatArray, j: int, t_j: float, h: float, width: int = 3) -> MeanTriplet:
    """
    Means around position j of a mean sequence (0-based).

    Parameters:
        xbar (Sequence[float] | FloatArray): Mean sizes on a uniform grid.
        j (int): Position of the first mean.
        t_j (float): Time of xbar[j] measured from the baseline time.
        h (float): Grid step.
        width (int): 2 for the exponential pair, 3 otherwise.

    Raises:
        DimensionMismatch: If the window does not fit inside the sequence.
    """
    if j < 0 or j + width > len(xbar):
        raise DimensionMismatch(f"window of {width} means at position {j} exceeds a sequence of {len(xbar)}")
    if h <= 0.0:
        raise DomainError("step h must be positive")
    mu: MeanTriplet = {"mu_j": float(xbar[j]), "mu_j1": float(xbar[j + 1]), "t_j": t_j, "h": h}
    if width == 3:
        mu["mu_j2"] = float(xbar[j + 2])
    return mu


def _differences(tr: _Transform, mu: MeanTriplet) -> tuple[float, float]:
    a = tr.g(mu["mu_j"]) - tr.g(mu["mu_j1"])
    b = tr.g(mu["mu_j1"]) - tr.g(mu["mu_j2"])
    if b == 0.0:
        raise DegenerateDenominator(f"consecutive transformed means are equal at t={mu['t_j']:.6g}")
    if a / b <= 0.0:
        raise NonPositiveLogArgument(
            f"transformed differences change sign at t={mu['t_j']:.6g}: the means are not monotone"
        )
    return a, b


def _difference_gradients(tr: _Transform, mu: MeanTriplet) -> tuple[FloatArray, FloatArray]:
    gx, gy, gz = tr.g_prime(mu["mu_j"]), tr.g_prime(mu["mu_j1"]), tr.g_prime(mu["mu_j2"])
    return np.array([gx, -gy, 0.0]), np.array([0.0, gy, -gz])


def _pair_rate(mu: MeanTriplet) -> float:
    ratio = mu["mu_j1"] / mu["mu_j"]
    if ratio <= 0.0:
        raise NonPositiveLogArgument(f"ratio of consecutive means is non-positive at t={mu['t_j']:.6g}")
    return math.log(ratio) / mu["h"]


def _rate(parent: Parent, mu: MeanTriplet, theta: float | None) -> float:
    if parent is Parent.EXPONENTIAL:
        return _pair_rate(mu)
    tr = _transform(parent, theta)
    a, b = _differences(tr, mu)
    return math.log(a / b) / (tr.scale * mu["h"])


def _log_zeta(a: float, b: float, m: float) -> tuple[float, float]:
    gap = a - b
    if gap == 0.0:
        raise DegenerateDenominator("transformed differences are equal: no decay information in the interval")
    log_abs = 2.0 * math.log(abs(a)) - math.log(abs(gap)) + m * math.log(a / b)
    if log_abs > 709.0:
        raise DomainError(f"carrying-capacity term overflows (log magnitude {log_abs:.1f})")
    return math.copysign(math.exp(log_abs), gap), log_abs


def _capacity(parent: Parent, mu: MeanTriplet, x0bar: float, theta: float | None) -> tuple[float, float, _Transform]:
    if parent is Parent.EXPONENTIAL:
        raise ConfigError("the exponential parent has no carrying capacity")
    if x0bar <= 0.0:
        raise DomainError(f"baseline mean must be positive, got {x0bar}")
    tr = _transform(parent, theta)
    a, b = _differences(tr, mu)
    zeta, _ = _log_zeta(a, b, mu["t_j"] / mu["h"])
    return tr.g_inv(tr.g(x0bar) - zeta), zeta, tr


def isrp_r(parent: Parent, xbar: Sequence[float] | FloatArray, j: int, h: float,
           theta: float | None = None) -> float:
    """
    Interval-specific estimate of r from means at positions j, j+1 (and j+2).

    Raises:
        NonPositiveLogArgument: If the means contradict the parent's monotone structure.
        DegenerateDenominator: If two consecutive transformed means coincide.
    """
    width = 2 if parent is Parent.EXPONENTIAL else 3
    return _rate(parent, triplet(xbar, j, 0.0, h, width), theta)


def isrp_K(parent: Parent, xbar: Sequence[float] | FloatArray, x0bar: float, j: int, h: float, t_j: float,
           theta: float | None = None) -> float:
    """
    Interval-specific estimate of K.

    Parameters:
        parent (Parent): Logistic, theta-logistic or confined exponential.
        xbar (Sequence[float] | FloatArray): Mean sizes on a uniform grid.
        x0bar (float): Baseline mean size.
        j (int): Position of the first mean of the triplet (0-based).
        h (float): Grid step.
        t_j (float): Time of xbar[j] measured from the baseline time.
        theta (float | None): Shape exponent for the theta-logistic parent.

    Raises:
        ConfigError: For the exponential parent.
        DegenerateDenominator: If a - b or the estimate of 1/K vanishes.
        NonPositiveBase: If a fractional root of a non-positive number would be needed.
    """
    return _capacity(parent, triplet(xbar, j, t_j, h), x0bar, theta)[0]


def grad_r(parent: Parent, mu: MeanTriplet, theta: float | None = None) -> FloatArray:
    """Gradient of the r estimator with respect to (mu_j, mu_j1[, mu_j2])."""
    if parent is Parent.EXPONENTIAL:
        x, y, h = mu["mu_j"], mu["mu_j1"], mu["h"]
        if x == 0.0 or y == 0.0:
            raise DegenerateDenominator("zero mean in the exponential pair")
        return np.array([-1.0 / (h * x), 1.0 / (h * y)])
    tr = _transform(parent, theta)
    a, b = _differences(tr, mu)
    da, db = _difference_gradients(tr, mu)
    return (da / a - db / b) / (tr.scale * mu["h"])


def grad_K(parent: Parent, mu: MeanTriplet, x0bar: float, theta: float | None = None) -> FloatArray:
    """
    Gradient of the K estimator with respect to (mu_j, mu_j1, mu_j2), x0bar held fixed.

    Raises:
        DegenerateDenominator: If g'(K) vanishes or a - b is zero.
    """
    K, zeta, tr = _capacity(parent, mu, x0bar, theta)
    a, b = _differences(tr, mu)
    da, db = _difference_gradients(tr, mu)
    m = mu["t_j"] / mu["h"]
    dlog_zeta = (m + 2.0) * da / a - m * db / b - (da - db) / (a - b)
    slope = tr.g_prime(K)
    if slope == 0.0:
        raise DegenerateDenominator("transform is flat at the K estimate")
    return -zeta * dlog_zeta / slope


def delta_variance(grad: Sequence[float] | FloatArray, sigma_sub: FloatArray, n: int) -> float:
    """
    Delta-method variance grad' * sigma_sub * grad / n.

    Raises:
        DimensionMismatch: If sigma_sub is not square with the gradient's length.
        DomainError: If n < 1.
    """
    g = np.asarray(grad, dtype=np.float64)
    s = np.asarray(sigma_sub, dtype=np.float64)
    if s.shape != (g.size, g.size):
        raise DimensionMismatch(f"covariance of shape {s.shape} does not match a gradient of length {g.size}")
    if n < 1:
        raise DomainError("n must be at least 1")
    return max(float(g @ s @ g) / n, 0.0)


def _interval(parent: Parent, target: IsrpTarget, means: FloatArray, times: FloatArray, idx: int, h: float,
              theta: float | None, baseline: tuple[float, float], sigma: FloatArray | None,
              n: int) -> IsrpEstimate:
    width = 2 if parent is Parent.EXPONENTIAL and target == "r" else 3
    record: IsrpEstimate = {
        "j": idx + 1, "t_j": float(times[idx]), "value": None, "variance": None,
        "ci_lo": None, "ci_hi": None, "status": "ok", "message": "",
    }
    try:
        mu = triplet(means, idx, float(times[idx]) - baseline[1], h, width)
        if target == "r":
            value = _rate(parent, mu, theta)
            grad = grad_r(parent, mu, theta)
        else:
            value = _capacity(parent, mu, baseline[0], theta)[0]
            grad = grad_K(parent, mu, baseline[0], theta)
    except NumericalError as e:
        logger.debug("interval %d failed: %s", idx + 1, e)
        record["status"] = type(e).__name__
        record["message"] = str(e)
        return record
    record["value"] = value
    if sigma is not None:
        window = slice(idx, idx + width)
        variance = delta_variance(grad, sigma[window, window], n)
        half = NORMAL_QUANTILE_975 * math.sqrt(variance)
        record.update(variance=variance, ci_lo=value - half, ci_hi=value + half)
    return record


def isrp_profile(
    data: FloatArray,
    times: Sequence[float] | FloatArray,
    parent: Parent,
    target: IsrpTarget = "r",
    theta: float | None = None,
    sigma: FloatArray | None = None,
    baseline: tuple[float, float] | None = None,
) -> IsrpSeries:
    """
    ISRP estimates for every admissible interval of a trajectory panel.

    Parameters:
        data (FloatArray): n x q trajectory matrix; a single series is a 1 x q matrix.
        times (Sequence[float] | FloatArray): Uniformly spaced column times.
        parent (Parent): Parent model assumed to generate the data.
        target (IsrpTarget): "r" or "K".
        theta (float | None): Shape exponent for the theta-logistic parent.
        sigma (FloatArray | None): q x q covariance of one trajectory. When omitted it is the
            sample covariance of the columns (unavailable for a single row).
        baseline (tuple[float, float] | None): (mean size, time) used by the K estimator;
            defaults to the first column mean at the first time.

    Returns:
        IsrpSeries: One record per interval ordered by j; failed intervals carry their error name.

    Raises:
        DimensionMismatch: If data, times and sigma disagree in shape or there are too few columns.
        NonUniformGrid: If times are not equally spaced.
    """
    panel = np.atleast_2d(np.asarray(data, dtype=np.float64))
    grid = np.asarray(times, dtype=np.float64)
    n, q = panel.shape
    if grid.size != q:
        raise DimensionMismatch(f"{q} columns but {grid.size} time points")
    if target == "K" and parent is Parent.EXPONENTIAL:
        raise ConfigError("the exponential parent has no carrying capacity")
    width = 2 if parent is Parent.EXPONENTIAL else 3
    if q < width:
        raise DimensionMismatch(f"{parent} needs at least {width} time points, got {q}")
    h = uniform_step(grid)
    if parent is not Parent.EXPONENTIAL:
        _transform(parent, theta)

    means = panel.mean(axis=0)
    if sigma is None and n >= 2:
        sigma = np.atleast_2d(np.cov(panel, rowvar=False))
    if sigma is not None and np.shape(sigma) != (q, q):
        raise DimensionMismatch(f"covariance must be {q} x {q}, got {np.shape(sigma)}")
    base = baseline if baseline is not None else (float(means[0]), float(grid[0]))

    estimates = [
        _interval(parent, target, means, grid, idx, h, theta, base, sigma, n) for idx in range(q - width + 1)
    ]
    failed = sum(1 for e in estimates if e["status"] != "ok")
    if failed:
        logger.info("%d of %d intervals failed under %s", failed, len(estimates), parent)
    return {
        "parent": str(parent),
        "target": target,
        "theta": 1.0 if parent is Parent.LOGISTIC else theta,
        "h": h,
        "n": n,
        "estimates": estimates,
    }


def series_to_rows(series: IsrpSeries) -> list[dict[str, str | int | float | None]]:
    """Rows with the columns j, t_j, estimate, variance, ci_lo, ci_hi, status."""
    return [
        {
            "j": e["j"],
            "t_j": e["t_j"],
            "estimate": e["value"],
            "variance": e["variance"],
            "ci_lo": e["ci_lo"],
            "ci_hi": e["ci_hi"],
            "status": e["status"],
        }
        for e in series["estimates"]
    ]
