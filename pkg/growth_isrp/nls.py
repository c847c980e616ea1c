"""
nls

Damped nonlinear least squares (Levenberg-Marquardt) for catalog size curves and rate forms,
with the information criteria used to compare them and a row bootstrap of the comparison.

Classes:
    ModelCurve: Size curve of a catalog entry, closed form or RK4.
    RateCurve: An explicit curve f(t; params), used for rate forms and RGR profiles.
    FitProblem: Curve, data, initial values, free parameters and box bounds.
    CandidateTemplate: A FitProblem without data, for bootstrap comparisons.

Functions:
    nls_fit: Minimize the residual sum of squares.
    aic / rmse / delta_aic_rule: Comparison metrics.
    bootstrap_select: AIC of every candidate on row-resampled panels.
    initial_guess: Heuristic starting values for a catalog entry.

Dependencies:
    - numpy: residuals and Jacobians.
    - scipy: Cholesky solves of the damped normal equations.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy import linalg

from growth_isrp.errors import (
    DataError,
    DimensionMismatch,
    DomainError,
    GrowthIsrpError,
    NoConvergence,
    SingularJacobian,
)
from growth_isrp.growth_models import get_spec, integrate_times, size
from growth_isrp.isrp import NORMAL_QUANTILE_975
from growth_isrp.model_types import BootstrapReport, FitResult, FloatArray, ModelId, ParameterSet, Parent

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 500
RSS_TOLERANCE = 1e-10
GRADIENT_TOLERANCE = 1e-8
LAMBDA_START = 1e-3
LAMBDA_LIMIT = 1e16
RSS_FLOOR = 1e-9

Params = dict[str, float]
Bounds = dict[str, tuple[float | None, float | None]]


class Curve(Protocol):
    label: str
    names: tuple[str, ...]

    def __call__(self, t: FloatArray, params: Params) -> FloatArray: ...


@dataclass(frozen=True)
class ModelCurve:
    """
    Size curve X(t) of a catalog entry.

    Attributes:
        model (ModelId): The entry.
        label (str): Display name; defaults to the entry's label.
    """

    model: ModelId
    label: str = ""

    def __post_init__(self) -> None:
        if not self.label:
            object.__setattr__(self, "label", get_spec(self.model).label)

    @property
    def names(self) -> tuple[str, ...]:
        return get_spec(self.model).params

    def __call__(self, t: FloatArray, params: Params) -> FloatArray:
        p: ParameterSet = params  # type: ignore[assignment]
        if get_spec(self.model).has_closed_form:
            return np.array([size(self.model, p, float(ti)) for ti in t], dtype=np.float64)
        order = np.argsort(t, kind="stable")
        values = np.empty(len(t), dtype=np.float64)
        values[order] = integrate_times(self.model, p, t[order])
        return values


@dataclass(frozen=True)
class RateCurve:
    """
    An explicit curve f(t; params) evaluated on whole arrays.

    Attributes:
        label (str): Display name.
        names (tuple[str, ...]): Parameters the curve reads.
        fn (Callable[[FloatArray, Params], FloatArray]): The curve.
    """

    label: str
    names: tuple[str, ...]
    fn: Callable[[FloatArray, Params], FloatArray]

    def __call__(self, t: FloatArray, params: Params) -> FloatArray:
        return np.asarray(self.fn(t, params), dtype=np.float64)


@dataclass
class FitProblem:
    """
    One least-squares problem.

    Attributes:
        curve (Curve): Function to fit.
        t (FloatArray): Data times.
        y (FloatArray): Data values.
        init (Params): Starting values; names not in free stay fixed at these values.
        free (tuple[str, ...]): Parameters to estimate; defaults to every curve parameter.
        bounds (Bounds): Optional (low, high) per free parameter, enforced by clipping.
    """

    curve: Curve
    t: FloatArray
    y: FloatArray
    init: Params
    free: tuple[str, ...] = ()
    bounds: Bounds = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.t.shape != self.y.shape or self.t.ndim != 1:
            raise DimensionMismatch(f"times {self.t.shape} and values {self.y.shape} differ")
        if not self.free:
            self.free = tuple(n for n in self.curve.names if n in self.init)
        missing = [n for n in self.curve.names if n not in self.init]
        if missing:
            raise DomainError(f"{self.curve.label}: no value for {', '.join(missing)}")
        if self.t.size < 2:
            raise DataError("a fit needs at least two data points")
        if self.t.size <= len(self.free):
            raise DataError(f"{self.t.size} data points cannot identify {len(self.free)} parameters")


@dataclass(frozen=True)
class CandidateTemplate:
    """A fit problem without data: curve, starting values, free names and bounds."""

    curve: Curve
    init: Params
    free: tuple[str, ...] = ()
    bounds: Bounds = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.curve.label

    def problem(self, t: FloatArray, y: FloatArray) -> FitProblem:
        return FitProblem(self.curve, t, y, dict(self.init), self.free, dict(self.bounds))


def aic(rss: float, m: int, k: int) -> float:
    """
    Gaussian AIC m*ln(2*pi*rss/m) + m + 2(k+1), counting the error variance as a parameter.

    Raises:
        DomainError: If rss <= 0 or m <= 0.
    """
    if rss <= 0.0 or m <= 0:
        raise DomainError(f"AIC needs rss > 0 and m > 0, got rss={rss}, m={m}")
    return m * math.log(2.0 * math.pi * rss / m) + m + 2.0 * (k + 1)


def rmse(rss: float, m: int) -> float:
    if m <= 0:
        raise DomainError("m must be positive")
    return math.sqrt(rss / m)


def delta_aic_rule(aics: Sequence[float]) -> tuple[int, str]:
    """
    Preferred model and strength of the preference.

    Returns:
        tuple[int, str]: Index of the minimum (first one on ties) and "decisive" when the
            runner-up is more than 10 above it, "weak" otherwise.
    """
    if len(aics) < 2:
        raise DomainError("the AIC rule compares at least two values")
    best = min(range(len(aics)), key=lambda i: (aics[i], i))
    runner_up = min(a for i, a in enumerate(aics) if i != best)
    return best, "decisive" if runner_up - aics[best] > 10.0 else "weak"


def _clip(beta: FloatArray, lo: FloatArray, hi: FloatArray) -> FloatArray:
    return np.minimum(np.maximum(beta, lo), hi)


class _Objective:
    def __init__(self, problem: FitProblem):
        self.problem = problem
        self.names = problem.free
        bounds = [problem.bounds.get(n, (None, None)) for n in self.names]
        self.lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=np.float64)
        self.hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=np.float64)

    def params(self, beta: FloatArray) -> Params:
        merged = dict(self.problem.init)
        merged.update(zip(self.names, (float(b) for b in beta)))
        return merged

    def curve(self, beta: FloatArray) -> FloatArray | None:
        try:
            with np.errstate(all="ignore"):
                values = self.problem.curve(self.problem.t, self.params(beta))
        except (GrowthIsrpError, ArithmeticError, ValueError) as e:
            logger.debug("%s undefined at %s: %s", self.problem.curve.label, self.params(beta), e)
            return None
        return values if np.all(np.isfinite(values)) else None

    def jacobian(self, beta: FloatArray, f0: FloatArray) -> FloatArray:
        jac = np.empty((f0.size, beta.size), dtype=np.float64)
        for i in range(beta.size):
            step = 1e-7 * (1.0 + abs(beta[i]))
            if beta[i] + step > self.hi[i]:
                step = -step
            shifted = beta.copy()
            shifted[i] += step
            f1 = self.curve(shifted)
            if f1 is None:
                shifted[i] = beta[i] - step
                f1 = self.curve(shifted)
                step = -step
            if f1 is None:
                raise SingularJacobian(f"cannot differentiate {self.problem.curve.label} in '{self.names[i]}'")
            jac[:, i] = (f1 - f0) / step
        return jac


def _damped_step(jtj: FloatArray, grad: FloatArray, lam: float) -> FloatArray | None:
    scale = np.diag(jtj).copy()
    scale[scale <= 0.0] = 1.0
    try:
        factor = linalg.cho_factor(jtj + lam * np.diag(scale))
    except linalg.LinAlgError:
        return None
    return linalg.cho_solve(factor, grad)


def _stationary(jac: FloatArray, residual: FloatArray, grad: FloatArray, beta: FloatArray,
                obj: _Objective) -> bool:
    # components pushing against an active bound do not count
    outward = ((beta <= obj.lo) & (grad < 0.0)) | ((beta >= obj.hi) & (grad > 0.0))
    projected = np.where(outward, 0.0, grad)
    scale = np.maximum(np.linalg.norm(jac, axis=0) * float(np.linalg.norm(residual)), 1.0)
    return bool(np.all(np.abs(projected) <= GRADIENT_TOLERANCE * scale))


def nls_fit(problem: FitProblem, max_iterations: int = MAX_ITERATIONS, strict: bool = False) -> FitResult:
    """
    Levenberg-Marquardt minimization of sum (y - f(t; beta))^2.

    Steps that leave the curve's domain are rejected and the damping raised. Bounds are
    enforced by clipping each trial point.

    Parameters:
        problem (FitProblem): What to fit.
        max_iterations (int): Iteration cap.
        strict (bool): Raise NoConvergence at the cap instead of returning converged=False.

    Returns:
        FitResult: Best point reached, with standard errors from (J'J)^-1 * rss/(m-k).

    Raises:
        DomainError: If the curve is undefined at the starting values.
        SingularJacobian: If the damped normal equations cannot be solved at any damping.
        NoConvergence: At the cap when strict is set.
    """
    obj = _Objective(problem)
    y = problem.y
    m, k = y.size, len(obj.names)
    beta = _clip(np.array([problem.init[n] for n in obj.names], dtype=np.float64), obj.lo, obj.hi)
    f = obj.curve(beta)
    if f is None:
        raise DomainError(f"{problem.curve.label} is undefined at the starting values {obj.params(beta)}")
    residual = y - f
    rss = float(residual @ residual)
    exact = m * (1e-14 * max(1.0, float(np.max(np.abs(y))))) ** 2
    lam = LAMBDA_START
    converged, message, iterations = False, "iteration cap reached", 0

    for iterations in range(1, max_iterations + 1):
        if rss <= exact:
            converged, message = True, "exact fit"
            break
        jac = obj.jacobian(beta, f)
        if not np.all(np.isfinite(jac)):
            raise SingularJacobian(f"non-finite Jacobian for {problem.curve.label}")
        grad = jac.T @ residual
        if float(np.max(np.abs(grad))) < GRADIENT_TOLERANCE:
            converged, message = True, "gradient below tolerance"
            break
        jtj = jac.T @ jac
        accepted = solvable = False
        while lam <= LAMBDA_LIMIT:
            delta = _damped_step(jtj, grad, lam)
            if delta is None:
                lam *= 10.0
                continue
            solvable = True
            trial = _clip(beta + delta, obj.lo, obj.hi)
            f_trial = obj.curve(trial)
            if f_trial is not None:
                r_trial = y - f_trial
                rss_trial = float(r_trial @ r_trial)
                if rss_trial < rss:
                    accepted = True
                    break
            lam *= 10.0
        if not solvable:
            raise SingularJacobian(f"damped normal equations of {problem.curve.label} are singular at every damping")
        if not accepted:
            converged = _stationary(jac, residual, grad, beta, obj)
            message = "no further decrease (damping limit)" if converged else "stalled with a large gradient"
            logger.debug("%s stalled at rss=%.6g", problem.curve.label, rss)
            break
        decrease = (rss - rss_trial) / rss
        beta, f, residual, rss = trial, f_trial, r_trial, rss_trial
        lam = max(lam / 10.0, 1e-12)
        if decrease < RSS_TOLERANCE:
            converged, message = True, "relative rss decrease below tolerance"
            break

    if not converged:
        logger.warning("%s: no convergence after %d iterations", problem.curve.label, iterations)
        if strict:
            raise NoConvergence(f"{problem.curve.label}: no convergence after {iterations} iterations")

    stderr = _standard_errors(obj, beta, f, rss, m, k)
    estimates = obj.params(beta)
    floored = max(rss, m * (RSS_FLOOR * max(1.0, float(np.max(np.abs(y))))) ** 2)
    return {
        "estimates": estimates,  # type: ignore[typeddict-item]
        "free": list(obj.names),
        "rss": rss,
        "aic": aic(floored, m, k),
        "rmse": rmse(rss, m),
        "stderr": stderr,
        "ci": {
            n: (estimates[n] - NORMAL_QUANTILE_975 * s, estimates[n] + NORMAL_QUANTILE_975 * s)
            for n, s in stderr.items()
        },
        "converged": converged,
        "iterations": iterations,
        "m": m,
        "k": k,
        "message": message,
    }


def _standard_errors(obj: _Objective, beta: FloatArray, f: FloatArray, rss: float, m: int,
                     k: int) -> dict[str, float]:
    if m <= k:
        return {n: math.nan for n in obj.names}
    try:
        jac = obj.jacobian(beta, f)
        cov = np.linalg.inv(jac.T @ jac) * rss / (m - k)
    except (SingularJacobian, np.linalg.LinAlgError):
        logger.debug("standard errors unavailable for %s", obj.problem.curve.label)
        return {n: math.nan for n in obj.names}
    variances = np.diag(cov)
    return {n: math.sqrt(v) if v >= 0.0 else math.nan for n, v in zip(obj.names, variances)}


def fit_or_none(problem: FitProblem) -> FitResult | None:
    """nls_fit, with any package error turned into None."""
    try:
        return nls_fit(problem)
    except GrowthIsrpError as e:
        logger.debug("fit of %s failed: %s", problem.curve.label, e)
        return None


def bootstrap_select(data: FloatArray, times: Sequence[float] | FloatArray, candidates: Sequence[CandidateTemplate],
                     B: int, seed: int, threads: int = 1) -> BootstrapReport:
    """
    Compare candidates on B row-resampled panels.

    Each replicate draws n rows with replacement from its own stream derived from (seed, b),
    fits every candidate to the column means and records the AIC. A failed fit is recorded as
    None and excluded from that replicate's comparison.

    Raises:
        DataError: If the panel has fewer than two rows.
        DomainError: If B < 1 or no candidates are given.
    """
    panel = np.atleast_2d(np.asarray(data, dtype=np.float64))
    grid = np.asarray(times, dtype=np.float64)
    if panel.shape[0] < 2:
        raise DataError("bootstrap needs at least two trajectories")
    if B < 1 or not candidates:
        raise DomainError("bootstrap needs B >= 1 and at least one candidate")
    labels = [c.label for c in candidates]

    def one(b: int) -> list[float | None]:
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        rows = rng.integers(0, panel.shape[0], panel.shape[0])
        means = panel[rows].mean(axis=0)
        results = [fit_or_none(c.problem(grid, means)) for c in candidates]
        return [None if r is None else r["aic"] for r in results]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        samples = list(pool.map(one, range(B)))

    wins = dict.fromkeys(labels, 0)
    failures = 0
    for row in samples:
        scored = [(a, i) for i, a in enumerate(row) if a is not None]
        if not scored:
            failures += 1
            continue
        wins[labels[min(scored)[1]]] += 1
    if failures:
        logger.info("%d of %d bootstrap replicates failed for every candidate", failures, B)
    return {
        "B": B,
        "seed": seed,
        "labels": labels,
        "aic_samples": {label: [row[i] for row in samples] for i, label in enumerate(labels)},
        "wins": wins,
        "failures": failures,
    }


def initial_guess(model: ModelId, t: Sequence[float] | FloatArray, y: Sequence[float] | FloatArray) -> Params:
    """
    Heuristic starting values: K = 1.05*max(y), r from the log-slope of the first three
    points, c = 1, x0 back-extrapolated to t = 0.
    """
    tt = np.asarray(t, dtype=np.float64)
    yy = np.asarray(y, dtype=np.float64)
    head = min(3, tt.size)
    K = 1.05 * float(np.max(yy))
    if np.all(yy[:head] > 0.0) and head >= 2:
        slope = float(np.polyfit(tt[:head], np.log(yy[:head]), 1)[0])
    else:
        slope = 0.1
    r0 = slope if slope > 0.0 else 0.1
    if model.parent is not Parent.EXPONENTIAL and yy[0] < K:
        r0 = r0 / max(1.0 - float(yy[0]) / K, 0.1)
    x0 = float(yy[0]) * math.exp(-r0 * float(tt[0])) if yy[0] > 0.0 else 1e-3 * K
    span = float(tt[-1] - tt[0]) or 1.0
    guesses: Params = {
        "r0": r0, "c": 1.0, "omega": 2.0 * math.pi / span, "K": K, "K0": K, "theta": 1.0,
        "gamma": 0.0, "b": 0.5, "x0": min(x0, 0.5 * K),
    }
    names = get_spec(model).params
    return {n: guesses[n] for n in names}
