"""Greedy swing allocation on a fixed step grid.

Hardware swing generators offer discrete levels, so these routines build a
swing vector in increments of a step ``beta`` until the MSE budget is met.
Three greedies are provided:

* discrete_water_fill: raises the bit whose water level (ground plus
  current depth) is lowest. With min-energy grounds this discretizes
  water-filling; with flat grounds (max-speed) it cycles positions and
  returns uniform swings.
* levin_campello: raises the bit whose step removes the most MSE. For a
  separable convex MSE this is exactly optimal on the grid.
* sand_pour_water_fill: alternates one sand step and one water step so the
  peak swing stays small while energy is added, targeting low EDP.

brute_force_discrete enumerates the whole grid as an oracle for the three
objectives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .continuous import Criterion, ground_levels
from .metrics import (
    GAUSSIAN,
    FidelitySpec,
    NoiseModel,
    SwingVector,
    WordFormat,
    tail_prob,
)

MAX_ITERATIONS = 10_000_000
ENUMERATION_BUDGET = 100_000_000


class BudgetError(ValueError):
    """Grid enumeration would exceed the point budget."""


def _check_step(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or beta <= 0.0:
        raise ValueError(f"step must be positive, got {beta!r}")
    return beta


def _check_budget(fidelity: FidelitySpec) -> float:
    if fidelity.mse_budget <= 0.0:
        raise ValueError(f"MSE budget must be positive, got {fidelity.mse_budget}")
    return fidelity.mse_budget


def _greedy(
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    beta: float,
    max_iterations: int,
    pick,
) -> SwingVector:
    """Shared greedy loop: call ``pick(counts)`` for the bit to raise."""
    budget = _check_budget(fidelity)
    beta = _check_step(beta)
    weights = fmt.weights
    counts = np.zeros(fmt.bit_width, dtype=np.int64)
    mse = float(weights @ tail_prob(noise, np.zeros(fmt.bit_width)))
    iterations = 0
    while mse > budget:
        if iterations >= max_iterations:
            raise RuntimeError(
                f"no grid point met the budget within {max_iterations} iterations"
            )
        b = pick(counts)
        old = counts[b] * beta
        gain = weights[b] * (
            tail_prob(noise, old + beta) - tail_prob(noise, old)
        )
        counts[b] += 1
        mse += gain
        iterations += 1
        if iterations % 1024 == 0:  # shed accumulated float drift
            mse = float(weights @ tail_prob(noise, counts * beta))
    final = float(weights @ tail_prob(noise, counts * beta))
    while final > budget:  # drift pushed us just short of the budget
        if iterations >= max_iterations:
            raise RuntimeError(
                f"no grid point met the budget within {max_iterations} iterations"
            )
        b = pick(counts)
        counts[b] += 1
        iterations += 1
        final = float(weights @ tail_prob(noise, counts * beta))
    return SwingVector(counts * beta)


def discrete_water_fill(
    criterion: Criterion,
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    beta: float,
    max_iterations: int = MAX_ITERATIONS,
) -> SwingVector:
    """Grid water-filling for the min-energy or max-speed criterion.

    Each iteration raises the bit with the lowest water level
    g_b + swing_b**2 / (2*sigma**2), ties to the lowest index. Grounds are
    g_b = log(sqrt(2*pi)*sigma / 4**b) for min-energy and 0 for max-speed,
    which makes the max-speed output exactly uniform (up to one step).
    """
    criterion = Criterion(criterion)
    if criterion is Criterion.MIN_EDP:
        raise ValueError("use sand_pour_water_fill for the min-EDP criterion")
    if noise.kind != GAUSSIAN:
        raise ValueError(f"water-fill grounds require gaussian noise, got {noise.kind!r}")
    if criterion is Criterion.MIN_ENERGY:
        ground = ground_levels(fmt.bit_width, noise.sigma)
    else:
        ground = np.zeros(fmt.bit_width)
    beta = _check_step(beta)
    two_s2 = 2.0 * noise.sigma * noise.sigma

    def pick(counts: np.ndarray) -> int:
        d = counts * beta
        return int(np.argmin(ground + d * d / two_s2))

    return _greedy(fmt, noise, fidelity, beta, max_iterations, pick)


def levin_campello(
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    beta: float,
    max_iterations: int = MAX_ITERATIONS,
) -> SwingVector:
    """Exact greedy bit loading: raise the bit with the best MSE drop per step.

    Picks argmin_b 4**b * (tail(swing_b + beta) - tail(swing_b)), ties to
    the lowest index. Because the MSE is separable with convex decreasing
    terms, the result attains the minimum energy among grid points meeting
    the budget. Works for any supported noise model.
    """
    beta = _check_step(beta)
    weights = fmt.weights

    def pick(counts: np.ndarray) -> int:
        d = counts * beta
        gains = weights * (tail_prob(noise, d + beta) - tail_prob(noise, d))
        return int(np.argmin(gains))

    return _greedy(fmt, noise, fidelity, beta, max_iterations, pick)


def sand_pour_water_fill(
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    beta: float,
    max_iterations: int = MAX_ITERATIONS,
) -> SwingVector:
    """Grid allocation for the min-EDP criterion.

    Each iteration first pours one sand step on the bit with the lowest
    ground-plus-sand level, recomputes every sand depth
    s_b = log(1 + eta_b / rho) against the current peak rho (zero while
    rho = 0), then places one water step on the bit with the lowest
    ground-plus-sand-plus-depth level. Sand raises the effective ground of
    significant bits so water spreads instead of growing the peak.
    """
    if noise.kind != GAUSSIAN:
        raise ValueError(f"water-fill grounds require gaussian noise, got {noise.kind!r}")
    budget = _check_budget(fidelity)
    beta = _check_step(beta)
    weights = fmt.weights
    ground = ground_levels(fmt.bit_width, noise.sigma)
    two_s2 = 2.0 * noise.sigma * noise.sigma

    counts = np.zeros(fmt.bit_width, dtype=np.int64)
    eta = np.zeros(fmt.bit_width)
    sand = np.zeros(fmt.bit_width)
    mse = float(weights @ tail_prob(noise, np.zeros(fmt.bit_width)))
    iterations = 0
    while mse > budget:
        if iterations >= max_iterations:
            raise RuntimeError(
                f"no grid point met the budget within {max_iterations} iterations"
            )
        rho = counts.max() * beta
        eta[int(np.argmin(ground + sand))] += beta
        sand = np.log1p(eta / rho) if rho > 0.0 else np.zeros(fmt.bit_width)
        d = counts * beta
        b = int(np.argmin(ground + sand + d * d / two_s2))
        counts[b] += 1
        mse = float(weights @ tail_prob(noise, counts * beta))
        iterations += 1
    return SwingVector(counts * beta)


@dataclass(frozen=True, eq=False)
class GridSearchResult:
    """Exhaustive grid minimizers, one per criterion."""

    swings: dict[Criterion, SwingVector]
    objective: dict[Criterion, float]
    achieved_mse: dict[Criterion, float]


def brute_force_discrete(
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    beta: float,
    swing_cap: float,
    budget: int = ENUMERATION_BUDGET,
) -> GridSearchResult:
    """Enumerate every swing vector on the grid {0, beta, ..., swing_cap}^B.

    Returns the feasible minimizer of energy, peak swing, and EDP. Grid
    points are visited with bit 0 as the slowest digit and ties keep the
    first point visited. Raises BudgetError with the required count when
    the grid exceeds ``budget`` points, and ValueError when no grid point
    meets the MSE budget.
    """
    mse_budget = _check_budget(fidelity)
    beta = _check_step(beta)
    if not math.isfinite(swing_cap) or swing_cap < 0.0:
        raise ValueError(f"swing cap must be nonnegative, got {swing_cap!r}")
    levels = int(math.floor(swing_cap / beta + 1e-9)) + 1
    total = levels ** fmt.bit_width
    if total > budget:
        raise BudgetError(
            f"grid has {total} points, over the budget of {budget}; raise the "
            f"budget, coarsen the step, or lower the cap"
        )
    weights = fmt.weights
    level_tail = tail_prob(noise, beta * np.arange(levels))
    shape = (levels,) * fmt.bit_width

    best_obj = {c: math.inf for c in Criterion}
    best_idx = {c: -1 for c in Criterion}
    best_counts = {c: None for c in Criterion}

    chunk = 1 << 20
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.unravel_index(idx, shape)
        mse = np.zeros(idx.size)
        esum = np.zeros(idx.size)
        emax = np.zeros(idx.size)
        for b in range(fmt.bit_width):
            mse += weights[b] * level_tail[digits[b]]
            esum += digits[b]
            np.maximum(emax, digits[b], out=emax)
        feasible = mse <= mse_budget
        if not feasible.any():
            continue
        objectives = {
            Criterion.MIN_ENERGY: esum * beta,
            Criterion.MAX_SPEED: emax * beta,
            Criterion.MIN_EDP: esum * emax * beta * beta,
        }
        for crit, obj in objectives.items():
            masked = np.where(feasible, obj, math.inf)
            j = int(np.argmin(masked))
            if masked[j] < best_obj[crit] - 0.0:
                best_obj[crit] = float(masked[j])
                best_idx[crit] = int(idx[j])
                best_counts[crit] = np.array([dig[j] for dig in digits], dtype=np.int64)

    if best_idx[Criterion.MIN_ENERGY] < 0:
        raise ValueError(
            f"no grid point meets the MSE budget {mse_budget}; raise the cap or the budget"
        )
    swings = {c: SwingVector(best_counts[c] * beta) for c in Criterion}
    achieved = {
        c: float(weights @ tail_prob(noise, swings[c].swings)) for c in Criterion
    }
    return GridSearchResult(swings=swings, objective=best_obj, achieved_mse=achieved)
