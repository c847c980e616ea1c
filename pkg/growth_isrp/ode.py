"""
ode

Fixed-step classical Runge-Kutta integration of scalar growth equations dX/dt = f(t, X).

Each output interval is cut into substeps no longer than 1/16 of the reference step. The
substep count is doubled until two successive refinements agree to a relative tolerance at
every output time, so results are deterministic for given inputs.

Functions:
    rk4_path: One pass of RK4 with a fixed number of substeps per output interval.
    integrate_scalar: Refined integration to a sorted list of output times.

Usage:
    from growth_isrp.ode import integrate_scalar

    sizes = integrate_scalar(lambda t, x: 0.3 * x * (1 - x / 100), 10.0, [0.0, 1.0, 2.0])
"""
import logging
import math
from typing import Callable, Sequence

from growth_isrp.errors import DomainError, NumericalBlowup

logger = logging.getLogger(__name__)

Rhs = Callable[[float, float], float]

OVERFLOW_BOUND = 1e300
BASE_SUBSTEPS = 16
MAX_DOUBLINGS = 10


def _check_state(t: float, x: float) -> None:
    if not math.isfinite(x) or x <= 0.0 or x >= OVERFLOW_BOUND:
        raise NumericalBlowup(f"state left (0, {OVERFLOW_BOUND:g}) at t={t:.6g}: X={x!r}")


def _eval(rhs: Rhs, t: float, x: float) -> float:
    try:
        value = rhs(t, x)
    except (ZeroDivisionError, OverflowError, DomainError) as e:
        raise NumericalBlowup(f"right-hand side undefined at t={t:.6g}, X={x:.6g}: {e}") from e
    if not math.isfinite(value):
        raise NumericalBlowup(f"right-hand side not finite at t={t:.6g}, X={x:.6g}")
    return value


def rk4_path(rhs: Rhs, x0: float, times: Sequence[float], substeps: Sequence[int]) -> list[float]:
    """
    Integrate from t = 0 through every output time.

    Parameters:
        rhs (Rhs): Right-hand side f(t, X).
        x0 (float): State at t = 0.
        times (Sequence[float]): Sorted, non-negative output times.
        substeps (Sequence[int]): Substep count for each segment ending at times[i].

    Returns:
        list[float]: State at each output time.

    Raises:
        NumericalBlowup: If the state leaves (0, OVERFLOW_BOUND) or f cannot be evaluated.
    """
    out: list[float] = []
    t, x = 0.0, x0
    for t_next, count in zip(times, substeps):
        if t_next > t:
            dt = (t_next - t) / count
            for i in range(count):
                s = t + i * dt
                k1 = _eval(rhs, s, x)
                k2 = _eval(rhs, s + dt / 2, x + dt * k1 / 2)
                k3 = _eval(rhs, s + dt / 2, x + dt * k2 / 2)
                k4 = _eval(rhs, s + dt, x + dt * k3)
                x = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
                _check_state(s + dt, x)
            t = t_next
        out.append(x)
    return out


def integrate_scalar(
    rhs: Rhs,
    x0: float,
    times: Sequence[float],
    reference_step: float | None = None,
    rel_tol: float = 1e-8,
) -> list[float]:
    """
    Integrate dX/dt = rhs(t, X) with X(0) = x0 and return X at each output time.

    Parameters:
        rhs (Rhs): Right-hand side f(t, X).
        x0 (float): Initial state at t = 0.
        times (Sequence[float]): Sorted, non-negative output times.
        reference_step (float | None): Step the substep length is tied to; defaults to the
            shortest positive gap between consecutive output times (or from 0 to the first).
        rel_tol (float): Relative agreement required between two successive refinements.

    Returns:
        list[float]: X at each output time; an output time of 0 returns x0 exactly.

    Raises:
        DomainError: If times are negative or unsorted, or x0 is not positive.
        NumericalBlowup: If the state leaves (0, OVERFLOW_BOUND).
    """
    if x0 <= 0.0:
        raise DomainError(f"initial size must be positive, got {x0!r}")
    points = [float(t) for t in times]
    if any(t < 0.0 for t in points):
        raise DomainError("output times must be non-negative")
    if any(b < a for a, b in zip(points, points[1:])):
        raise DomainError("output times must be sorted")
    _check_state(0.0, x0)

    starts = [0.0] + points[:-1]
    gaps = [b - a for a, b in zip(starts, points)]
    positive = [g for g in gaps if g > 0.0]
    if not positive:
        return [x0 for _ in points]
    step = reference_step if reference_step is not None else min(positive)
    base = [max(1, math.ceil(g / step - 1e-9)) * BASE_SUBSTEPS for g in gaps]

    previous = rk4_path(rhs, x0, points, base)
    for level in range(1, MAX_DOUBLINGS + 1):
        current = rk4_path(rhs, x0, points, [n * 2**level for n in base])
        worst = max(abs(a - b) / abs(b) for a, b in zip(previous, current))
        if worst <= rel_tol:
            return current
        previous = current
    logger.warning("RK4 refinement stopped at %d doublings with relative change %.3g", MAX_DOUBLINGS, worst)
    return previous
