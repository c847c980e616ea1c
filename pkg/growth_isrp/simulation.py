"""
simulation

Correlated growth trajectories and Monte-Carlo replication of ISRP estimates.

Trajectories are multivariate normal around a catalog mean function with the stationary
covariance sigma2 * rho^|i-j| between grid points. Every replication draws from its own
stream derived from (seed, replication), so results do not depend on execution order or on
the number of worker threads.

Functions:
    koopman_matrix: The q x q covariance.
    replication_rng: Random stream of one replication.
    simulate: One n x q dataset.
    count_nonpositive: Diagnostic for draws at or below zero.
    replicate_isrp: Empirical distribution of ISRP estimates across replications.
    reference_plan: The reference logistic design.

Dependencies:
    - numpy: Cholesky factor, SeedSequence streams.
    - scipy: sample skewness.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

from growth_isrp.errors import ConfigError, DomainError, NumericalError
from growth_isrp.growth_models import grid_times, size_profile
from growth_isrp.isrp import delta_variance, grad_K, grad_r, isrp_profile, triplet
from growth_isrp.model_types import (
    FloatArray,
    IsrpTarget,
    KoopmanCov,
    ModelId,
    Parent,
    ReplicationSummary,
    SimulationPlan,
    Variation,
)

logger = logging.getLogger(__name__)

QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


def koopman_matrix(cov: KoopmanCov, q: int) -> FloatArray:
    """
    Covariance with entries sigma2 * rho^|i-j|.

    Raises:
        DomainError: If sigma2 <= 0, |rho| >= 1 or q < 1.
    """
    if cov["sigma2"] <= 0.0:
        raise DomainError(f"sigma2 must be positive, got {cov['sigma2']}")
    if not abs(cov["rho"]) < 1.0:
        raise DomainError(f"rho must lie in (-1, 1), got {cov['rho']}")
    if q < 1:
        raise DomainError("q must be at least 1")
    lags = np.abs(np.subtract.outer(np.arange(q), np.arange(q)))
    return cov["sigma2"] * np.power(float(cov["rho"]), lags)


def validate_plan(plan: SimulationPlan) -> None:
    """
    Raises:
        ConfigError: If n, replications or seed are out of range.
    """
    if plan["n"] < 1:
        raise ConfigError("a simulation plan needs n >= 1 trajectories")
    if plan["replications"] < 1:
        raise ConfigError("a simulation plan needs at least one replication")
    if not 0 <= plan["seed"] < 2**64:
        raise ConfigError("seed must be a non-negative 64-bit integer")


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, replication]))


def count_nonpositive(data: FloatArray) -> int:
    return int(np.count_nonzero(np.asarray(data) <= 0.0))


def simulate(plan: SimulationPlan, replication: int = 0) -> FloatArray:
    """
    Draw the n x q dataset of one replication.

    Each row is mu + L z with mu the catalog mean on the grid, L the lower Cholesky factor of
    the covariance and z standard normal. Draws are not truncated at zero.

    Parameters:
        plan (SimulationPlan): Model, grid, covariance, n and seed.
        replication (int): Index of the replication whose stream is used.

    Returns:
        FloatArray: n x q trajectory matrix.
    """
    validate_plan(plan)
    mu = size_profile(plan["model"], plan["params"], plan["grid"])
    chol = np.linalg.cholesky(koopman_matrix(plan["cov"], plan["grid"]["q"]))
    z = replication_rng(plan["seed"], replication).standard_normal((plan["n"], plan["grid"]["q"]))
    data = mu + z @ chol.T
    nonpositive = count_nonpositive(data)
    if nonpositive:
        logger.warning("replication %d has %d non-positive draws", replication, nonpositive)
    return data


def _delta_curve(plan: SimulationPlan, target: IsrpTarget, theta: float | None,
                 sigma: FloatArray) -> list[float | None]:
    parent = plan["model"].parent
    mu = size_profile(plan["model"], plan["params"], plan["grid"])
    times = grid_times(plan["grid"])
    h = plan["grid"]["h"]
    width = 2 if parent is Parent.EXPONENTIAL else 3
    curve: list[float | None] = []
    for idx in range(len(mu) - width + 1):
        window = slice(idx, idx + width)
        try:
            m = triplet(mu, idx, float(times[idx]), h, width)
            grad = grad_r(parent, m, theta) if target == "r" else grad_K(parent, m, plan["params"]["x0"], theta)
        except NumericalError:
            curve.append(None)
            continue
        curve.append(delta_variance(grad, sigma[window, window], plan["n"]))
    return curve


def _summarize(j: int, t_j: float, column: FloatArray, delta: float | None) -> ReplicationSummary:
    values = column[np.isfinite(column)]
    count = int(values.size)
    if count:
        quantiles = [float(v) for v in np.quantile(values, QUANTILES)]
    else:
        quantiles = [math.nan] * len(QUANTILES)
    return {
        "j": j,
        "t_j": t_j,
        "count": count,
        "failures": int(column.size - count),
        "mean": float(values.mean()) if count else math.nan,
        "variance": float(values.var(ddof=1)) if count > 1 else math.nan,
        "skewness": float(stats.skew(values)) if count > 2 else math.nan,
        "q025": quantiles[0],
        "q25": quantiles[1],
        "q50": quantiles[2],
        "q75": quantiles[3],
        "q975": quantiles[4],
        "delta_variance": delta,
    }


def replicate_isrp(plan: SimulationPlan, target: IsrpTarget = "r",
                   threads: int = 1) -> tuple[list[ReplicationSummary], FloatArray]:
    """
    Simulate every replication of a plan and summarize the ISRP estimates per interval.

    The K estimator uses the known x0 at t = 0 as baseline. Delta-method variances are
    evaluated at the true means with the plan's covariance.

    Parameters:
        plan (SimulationPlan): The design.
        target (IsrpTarget): "r" or "K".
        threads (int): Worker threads; the result does not depend on it.

    Returns:
        tuple[list[ReplicationSummary], FloatArray]: Per-interval summaries ordered by j, and
            the replications x intervals matrix of raw estimates (nan where an interval failed).
    """
    validate_plan(plan)
    parent = plan["model"].parent
    theta = plan["params"].get("theta") if parent is Parent.THETA_LOGISTIC else None
    sigma = koopman_matrix(plan["cov"], plan["grid"]["q"])
    times = grid_times(plan["grid"])
    baseline = (plan["params"]["x0"], 0.0)

    def one(replication: int) -> list[float]:
        data = simulate(plan, replication)
        series = isrp_profile(data, times, parent, target, theta, sigma=sigma, baseline=baseline)
        return [math.nan if e["value"] is None else e["value"] for e in series["estimates"]]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        estimates = np.array(list(pool.map(one, range(plan["replications"]))), dtype=np.float64)

    delta = _delta_curve(plan, target, theta, sigma)
    summaries = [
        _summarize(idx + 1, float(times[idx]), estimates[:, idx], delta[idx]) for idx in range(estimates.shape[1])
    ]
    failed = sum(s["failures"] for s in summaries)
    if failed:
        logger.info("%d interval estimates failed across %d replications", failed, plan["replications"])
    return summaries, estimates


def reference_plan(seed: int = 1, replications: int = 1000, n: int = 1000) -> SimulationPlan:
    """Logistic design with r = 0.3, K = 100, x0 = 10 on t = 1..20, sigma2 = 0.001, rho = 0.1."""
    return {
        "model": ModelId(Parent.LOGISTIC, Variation.CONSTANT_PARAMS),
        "params": {"r0": 0.3, "K": 100.0, "x0": 10.0},
        "grid": {"t0": 1.0, "h": 1.0, "q": 20},
        "n": n,
        "cov": {"sigma2": 0.001, "rho": 0.1},
        "replications": replications,
        "seed": seed,
    }
