"""Exact solvers for the three fidelity-constrained swing programs.

All three programs pick per-bit swings subject to MSE(swings) <= V under
Gaussian read noise:

* minimum energy: classic water-filling. Position b has ground level
  log(sqrt(2*pi)*sigma / 4**b); water poured to a common level log(nu)
  stands swing**2 / (2*sigma**2) deep over each active ground, and bits
  whose ground sits above the water stay at zero swing.
* maximum speed: the largest swing is minimized, which flattens every
  ground to one level and yields uniform swings.
* minimum energy-delay product: water-filling with the water depth capped
  at rho**2 / (2*sigma**2). Capped positions accumulate "sand" of depth
  log(1 + eta_b / rho), where eta_b is the cap dual.

Each solver returns its dual variables so first-order optimality can be
re-verified independently of the solve path (see kkt_report). Swings are
solved in units of sigma and rescaled on output.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .metrics import (
    GAUSSIAN,
    FidelitySpec,
    NoiseModel,
    SwingVector,
    WordFormat,
    bit_weights,
    mse_uniform,
)

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG4 = math.log(4.0)
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

DEFAULT_TOL = 1e-9


class InfeasibleError(ValueError):
    """The fidelity constraint cannot be met (or is vacuous at V <= 0)."""


class ConvergenceError(RuntimeError):
    """A root search failed to reach its tolerance; carries the residual."""


class Criterion(enum.Enum):
    MIN_ENERGY = "min-energy"
    MAX_SPEED = "max-speed"
    MIN_EDP = "min-edp"


@dataclass(frozen=True, eq=False)
class SolverSolution:
    """Primal swings plus the dual certificate of a solved program.

    ``water_level`` is nu, the multiplier of the MSE constraint.
    ``nonneg_duals`` are the multipliers of swing >= 0, one per bit;
    ``cap_duals`` those of swing <= rho (zero except for min-EDP and the
    uniform program); ``sand_depths`` are log(1 + eta_b / rho) for the
    min-EDP program and zero otherwise. ``saturated`` marks budgets at or
    above the zero-swing MSE, where all-zero swings are already optimal.
    """

    criterion: Criterion
    swings: SwingVector
    water_level: float
    nonneg_duals: np.ndarray
    cap_duals: np.ndarray
    sand_depths: np.ndarray
    achieved_mse: float
    rho: float
    kkt_residual: float
    saturated: bool = False

    @property
    def bit_width(self) -> int:
        return self.swings.bit_width

    @property
    def energy(self) -> float:
        return float(self.swings.swings.sum())

    @property
    def edp(self) -> float:
        return self.energy * self.rho


def _require_gaussian(noise: NoiseModel) -> None:
    if noise.kind != GAUSSIAN:
        raise ValueError(
            f"closed-form swing solvers require gaussian noise, got {noise.kind!r}"
        )


def _unit_tail(x):
    # Gaussian tail at sigma = 1.
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def ground_levels(bit_width: int, sigma: float = 1.0) -> np.ndarray:
    """Water-filling ground levels log(sqrt(2*pi)*sigma / 4**b)."""
    return _LOG_SQRT_2PI + math.log(sigma) - np.arange(bit_width) * _LOG4


def _check_budget(fmt: WordFormat, fidelity: FidelitySpec) -> float:
    v = fidelity.mse_budget
    if v <= 0.0:
        raise InfeasibleError(f"MSE budget must be positive, got {v}")
    return v


def _finalize(
    criterion: Criterion,
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    swings: np.ndarray,
    water_level: float,
    nonneg_duals: np.ndarray,
    cap_duals: np.ndarray,
    sand_depths: np.ndarray,
    saturated: bool = False,
) -> SolverSolution:
    sv = SwingVector(swings)
    nonneg_duals = np.asarray(nonneg_duals, dtype=float)
    cap_duals = np.asarray(cap_duals, dtype=float)
    sand_depths = np.asarray(sand_depths, dtype=float)
    sol = SolverSolution(
        criterion=criterion,
        swings=sv,
        water_level=float(water_level),
        nonneg_duals=nonneg_duals,
        cap_duals=cap_duals,
        sand_depths=sand_depths,
        achieved_mse=mse_uniform(sv, noise),
        rho=float(np.max(sv.swings)),
        kkt_residual=0.0,
        saturated=saturated,
    )
    object.__setattr__(sol, "kkt_residual", kkt_residuals(sol, criterion, fmt, noise, fidelity))
    return sol


def _saturated_solution(
    criterion: Criterion, fmt: WordFormat, noise: NoiseModel, fidelity: FidelitySpec
) -> SolverSolution:
    b = fmt.bit_width
    zeros = np.zeros(b)
    if criterion is Criterion.MIN_ENERGY:
        lam, eta = np.ones(b), zeros
    elif criterion is Criterion.MAX_SPEED:
        eta = fmt.weights / fmt.weight_sum
        lam = eta.copy()
    else:
        lam, eta = zeros, zeros.copy()
    return _finalize(criterion, fmt, noise, fidelity, zeros, 0.0, lam, eta, np.zeros(b), saturated=True)


def _min_energy_unit(
    weights: np.ndarray, ground: np.ndarray, budget: float, tol: float
) -> tuple[float, np.ndarray]:
    """Bisect the log water level until the MSE budget is met (sigma = 1).

    Returns (log nu, swings). MSE is strictly decreasing in the water
    level, from the zero-swing MSE at level ground[-1] downward.
    """

    def swings_at(x: float) -> np.ndarray:
        return np.sqrt(2.0 * np.clip(x - ground, 0.0, None))

    def mse_at(x: float) -> float:
        return float(weights @ _unit_tail(swings_at(x)))

    lo = float(ground[-1])
    step = 1.0
    hi = lo + step
    while mse_at(hi) > budget:
        step *= 2.0
        hi = lo + step
        if step > 1e9:  # budget would need absurd swings; cannot happen for V > 0
            raise ConvergenceError(f"no water level found below {hi}")
    x = 0.5 * (lo + hi)
    for _ in range(200):
        x = 0.5 * (lo + hi)
        m = mse_at(x)
        if abs(m - budget) <= tol * budget:
            return x, swings_at(x)
        if m > budget:
            lo = x
        else:
            hi = x
    residual = abs(mse_at(x) - budget) / budget
    if residual > 100.0 * tol:
        raise ConvergenceError(f"water level bisection stalled, relative MSE residual {residual:.3e}")
    return x, swings_at(x)


def solve_min_energy(
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    tol: float = DEFAULT_TOL,
) -> SolverSolution:
    """Minimize total swing subject to MSE <= V.

    The optimum is water-filling: swing_b = sigma * sqrt(2 * (x - g_b))
    for grounds g_b below the log water level x, zero otherwise, with x
    bisected so the budget binds. Active bits satisfy
    log(nu) = log(sqrt(2*pi)*sigma/4**b) + swing_b**2/(2*sigma**2) and the
    nonnegativity duals are 1 - nu * (4**b/(sqrt(2*pi)*sigma)) * exp(-swing_b**2/(2*sigma**2)).
    """
    _require_gaussian(noise)
    budget = _check_budget(fmt, fidelity)
    if budget >= fmt.zero_swing_mse:
        return _saturated_solution(Criterion.MIN_ENERGY, fmt, noise, fidelity)
    ground = ground_levels(fmt.bit_width)
    x, d = _min_energy_unit(fmt.weights, ground, budget, tol)
    t = x - ground
    lam = np.where(t < 0.0, -np.expm1(np.minimum(t, 0.0)), 0.0)
    sigma = noise.sigma
    return _finalize(
        Criterion.MIN_ENERGY,
        fmt,
        noise,
        fidelity,
        d * sigma,
        math.exp(x) * sigma,
        lam,
        np.zeros(fmt.bit_width),
        np.zeros(fmt.bit_width),
    )


def solve_max_speed(
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    tol: float = DEFAULT_TOL,
) -> SolverSolution:
    """Minimize the largest swing subject to MSE <= V.

    Uniform swings are optimal: every bit flips with the same probability
    p = 3V/(4**B - 1), so rho = inverse_tail(p). The cap duals
    eta_b = 3 * 4**b / (4**B - 1) sum to one and flatten every ground to
    the common level log(3*sqrt(2*pi)*sigma/(4**B - 1)).
    """
    _require_gaussian(noise)
    budget = _check_budget(fmt, fidelity)
    p_target = budget / fmt.weight_sum
    if p_target > 0.5:
        return _saturated_solution(Criterion.MAX_SPEED, fmt, noise, fidelity)
    rho = float(_SQRT2 * special.erfcinv(2.0 * p_target))  # sigma = 1 units
    eta = fmt.weights / fmt.weight_sum
    nu = math.sqrt(2.0 * math.pi) / fmt.weight_sum * math.exp(0.5 * rho * rho)
    sigma = noise.sigma
    return _finalize(
        Criterion.MAX_SPEED,
        fmt,
        noise,
        fidelity,
        np.full(fmt.bit_width, rho * sigma),
        nu * sigma,
        np.zeros(fmt.bit_width),
        eta,
        np.zeros(fmt.bit_width),
    )


def _capped_fill_unit(
    weights: np.ndarray,
    ground: np.ndarray,
    budget: float,
    rho: float,
    tol: float,
) -> tuple[float, np.ndarray]:
    """Water level of the rho-capped fill meeting the budget (sigma = 1)."""

    def swings_at(wl: float) -> np.ndarray:
        return np.minimum(rho, np.sqrt(2.0 * np.clip(wl - ground, 0.0, None)))

    def mse_at(wl: float) -> float:
        return float(weights @ _unit_tail(swings_at(wl)))

    lo = float(ground[-1])
    hi = float(ground[0]) + 0.5 * rho * rho
    wl = hi
    for _ in range(200):
        wl = 0.5 * (lo + hi)
        m = mse_at(wl)
        if abs(m - budget) <= tol * budget or hi - lo <= 4e-16 * max(1.0, abs(wl)):
            return wl, swings_at(wl)
        if m > budget:
            lo = wl
        else:
            hi = wl
    residual = abs(mse_at(wl) - budget) / budget
    if residual > 1e-6:
        raise ConvergenceError(f"capped fill bisection stalled, relative MSE residual {residual:.3e}")
    return wl, swings_at(wl)


def _edp_state(
    weights: np.ndarray, ground: np.ndarray, budget: float, rho: float, tol: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Capped fill at a candidate rho: (water level, swings, cap duals)."""
    wl, d = _capped_fill_unit(weights, ground, budget, rho, tol)
    excess = (wl - ground) - 0.5 * rho * rho
    eta = rho * np.clip(np.expm1(np.minimum(excess, 700.0)), 0.0, None)
    return wl, d, eta


def _all_capped_solution(
    fmt: WordFormat, noise: NoiseModel, fidelity: FidelitySpec, rho: float
) -> SolverSolution:
    # Degenerate boundary where the cap binds on every bit: the solution is
    # uniform and the dual balance sum(eta) = sum(swings) fixes nu.
    b = fmt.bit_width
    nu = 2.0 * b * rho * math.sqrt(2.0 * math.pi) / fmt.weight_sum * math.exp(0.5 * rho * rho)
    eta = nu * fmt.weights / math.sqrt(2.0 * math.pi) * math.exp(-0.5 * rho * rho) - rho
    sand = np.log1p(np.clip(eta, 0.0, None) / rho) if rho > 0 else np.zeros(b)
    sigma = noise.sigma
    return _finalize(
        Criterion.MIN_EDP,
        fmt,
        noise,
        fidelity,
        np.full(b, rho * sigma),
        nu * sigma * sigma,
        np.zeros(b),
        eta * sigma,
        sand,
    )


def solve_min_edp(
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    tol: float = DEFAULT_TOL,
) -> SolverSolution:
    """Minimize energy * max-swing subject to MSE <= V.

    For a fixed peak rho the best swings follow a capped water fill, so the
    solver searches rho between the uniform peak (max-speed) and the
    min-energy peak. EDP(rho) is assumed unimodal: a golden-section search
    is cross-checked against a 64-point scan and falls back to
    scan-plus-local-refine when the scan disagrees. The returned rho is
    polished until the dual balance sum(eta) = sum(swings) holds, which is
    equivalent to stationarity in rho because EDP'(rho) = sum(swings) - sum(eta).
    """
    _require_gaussian(noise)
    budget = _check_budget(fmt, fidelity)
    if budget >= fmt.zero_swing_mse:
        return _saturated_solution(Criterion.MIN_EDP, fmt, noise, fidelity)

    weights = fmt.weights
    ground = ground_levels(fmt.bit_width)
    # The sand-depth identities inherit the dual-balance error divided by
    # rho, so the inner fill and the balance polish both run essentially to
    # machine precision regardless of the user tolerance.
    inner_tol = min(1e-15, tol)

    p_target = budget / fmt.weight_sum
    rho_lo = float(_SQRT2 * special.erfcinv(2.0 * p_target))
    _, d_energy = _min_energy_unit(weights, ground, budget, inner_tol)
    rho_hi = float(d_energy.max())

    if rho_hi <= rho_lo * (1.0 + 1e-12):
        return _all_capped_solution(fmt, noise, fidelity, rho_lo)

    def energy_at(rho: float) -> float:
        _, d, _ = _edp_state(weights, ground, budget, rho, inner_tol)
        return float(d.sum())

    def edp_at(rho: float) -> float:
        return rho * energy_at(rho)

    def balance_at(rho: float) -> float:
        # -EDP'(rho): positive left of the optimum, negative right of it.
        _, d, eta = _edp_state(weights, ground, budget, rho, inner_tol)
        return float(eta.sum() - d.sum())

    if balance_at(rho_lo) <= 0.0:
        return _all_capped_solution(fmt, noise, fidelity, rho_lo)

    # 64-point scan: locate the coarse minimum and check unimodality.
    grid = np.linspace(rho_lo, rho_hi, 64)
    scan = np.array([edp_at(r) for r in grid])
    diffs = np.diff(scan)
    signs = np.sign(diffs[diffs != 0.0])
    unimodal = np.count_nonzero(signs[1:] != signs[:-1]) <= 1
    i_best = int(np.argmin(scan))
    if unimodal:
        a, b = rho_lo, rho_hi
    else:
        a = grid[max(i_best - 1, 0)]
        b = grid[min(i_best + 1, grid.size - 1)]

    xtol = 1e-10 * max(1.0, rho_hi)
    c = b - _INVPHI * (b - a)
    d_ = a + _INVPHI * (b - a)
    fc, fd = edp_at(c), edp_at(d_)
    for _ in range(300):
        if b - a <= xtol:
            break
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - _INVPHI * (b - a)
            fc = edp_at(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + _INVPHI * (b - a)
            fd = edp_at(d_)

    # Polish with bisection on the dual balance, whose sign flips at the optimum.
    lo, hi = a, b
    width = max(hi - lo, xtol)
    while balance_at(lo) <= 0.0 and lo > rho_lo:
        width *= 2.0
        lo = max(rho_lo, lo - width)
    while balance_at(hi) >= 0.0 and hi < rho_hi:
        width *= 2.0
        hi = min(rho_hi, hi + width)
    if balance_at(lo) <= 0.0:
        return _all_capped_solution(fmt, noise, fidelity, rho_lo)
    rho = 0.5 * (lo + hi)
    h_tol = min(tol, 1e-12)
    for _ in range(200):
        rho = 0.5 * (lo + hi)
        h = balance_at(rho)
        if abs(h) <= h_tol * max(1.0, energy_at(rho)) or hi - lo <= 1e-15 * max(1.0, rho):
            break
        if h > 0.0:
            lo = rho
        else:
            hi = rho

    wl, d, eta = _edp_state(weights, ground, budget, rho, inner_tol)
    t = wl - ground
    lam = np.where(t < 0.0, -rho * np.expm1(np.minimum(t, 0.0)), 0.0)
    capped = eta > 0.0
    lam[capped] = 0.0
    sand = np.log1p(eta / rho)
    sigma = noise.sigma
    return _finalize(
        Criterion.MIN_EDP,
        fmt,
        noise,
        fidelity,
        d * sigma,
        rho * math.exp(wl) * sigma * sigma,
        lam * sigma,
        eta * sigma,
        sand,
    )


_SOLVERS = {
    Criterion.MIN_ENERGY: solve_min_energy,
    Criterion.MAX_SPEED: solve_max_speed,
    Criterion.MIN_EDP: solve_min_edp,
}


def solve(
    criterion: Criterion,
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
    tol: float = DEFAULT_TOL,
) -> SolverSolution:
    """Dispatch to the solver for ``criterion``."""
    try:
        solver = _SOLVERS[Criterion(criterion)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown criterion {criterion!r}") from None
    return solver(fmt, noise, fidelity, tol)


def kkt_report(
    solution: SolverSolution,
    criterion: Criterion,
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
) -> dict[str, float]:
    """Named first-order optimality residuals of a claimed solution.

    Evaluates the stationarity, feasibility, dual-sign, and complementary
    slackness conditions of the requested program at the solution's own
    primal/dual values, in sigma-normalized units. All entries are
    nonnegative and vanish at an exact optimum. The MSE entries are
    relative to the budget; for min-EDP the stationarity and dual-balance
    entries are normalized by max(1, rho) and max(1, energy).
    """
    _require_gaussian(noise)
    criterion = Criterion(criterion)
    if solution.bit_width != fmt.bit_width:
        raise ValueError(
            f"solution is {solution.bit_width}-bit but format is {fmt.bit_width}-bit"
        )
    budget = fidelity.mse_budget
    if budget <= 0.0:
        raise InfeasibleError(f"MSE budget must be positive, got {budget}")
    sigma = noise.sigma
    d = solution.swings.swings / sigma
    rho = solution.rho / sigma
    lam = np.asarray(solution.nonneg_duals, dtype=float)
    eta = np.asarray(solution.cap_duals, dtype=float)
    weights = fmt.weights
    mse = float(weights @ _unit_tail(d))
    # nu * 4**b / (sqrt(2*pi)) * exp(-d**2/2) in sigma = 1 units.
    if criterion is Criterion.MIN_EDP:
        nu = solution.water_level / (sigma * sigma)
        lam = lam / sigma
        eta = eta / sigma
    else:
        nu = solution.water_level / sigma
    marg = nu * weights / math.sqrt(2.0 * math.pi) * np.exp(-0.5 * d * d)

    report = {
        "primal_mse": max(0.0, (mse - budget) / budget),
        "primal_nonneg": max(0.0, float(-d.min())),
        "dual_nu": max(0.0, -nu),
        "dual_lambda": max(0.0, float(-lam.min())),
        "comp_mse": abs(mse - budget) / budget if nu > 1e-300 else 0.0,
        "comp_lambda": float(np.max(np.abs(lam * d))),
    }
    if criterion is Criterion.MIN_ENERGY:
        report["stationarity"] = float(np.max(np.abs(1.0 - lam - marg)))
    elif criterion is Criterion.MAX_SPEED:
        report["stationarity"] = float(np.max(np.abs(eta - lam - marg)))
        report["dual_eta"] = max(0.0, float(-eta.min()))
        report["eta_sum"] = abs(float(eta.sum()) - 1.0)
        report["primal_cap"] = max(0.0, float((d - rho).max()))
        report["comp_eta"] = float(np.max(np.abs(eta * (d - rho))))
    else:
        scale = max(1.0, rho)
        report["stationarity"] = float(np.max(np.abs(rho + eta - lam - marg))) / scale
        report["dual_eta"] = max(0.0, float(-eta.min()))
        report["primal_cap"] = max(0.0, float((d - rho).max()))
        report["comp_eta"] = float(np.max(np.abs(eta * (d - rho)))) / scale
        e = float(d.sum())
        report["dual_balance"] = abs(float(eta.sum()) - e) / max(1.0, e)
    return report


def kkt_residuals(
    solution: SolverSolution,
    criterion: Criterion,
    fmt: WordFormat,
    noise: NoiseModel,
    fidelity: FidelitySpec,
) -> float:
    """Largest violation across all KKT conditions of the given program."""
    return max(kkt_report(solution, criterion, fmt, noise, fidelity).values())


def single_cap_sand_capacity(solution: SolverSolution, rtol: float = 1e-9) -> float:
    """Sand depth log(1 + energy/rho) when exactly one bit is capped.

    For a min-EDP solution whose cap binds on a single bit, that bit's cap
    dual equals the total energy, so its sand depth determines the
    peak-to-average swing ratio via PASR = B / (exp(depth) - 1).
    Raises if the cap binds on more or fewer than one bit.
    """
    d = solution.swings.swings
    rho = solution.rho
    if rho <= 0.0:
        raise ValueError("sand capacity undefined for all-zero swings")
    capped = int(np.count_nonzero(np.abs(d - rho) <= rtol * rho))
    if capped != 1:
        raise ValueError(f"expected exactly one capped bit, found {capped}")
    return float(np.log1p(d.sum() / rho))
