"""Analytic fidelity and resource metrics for per-bit swing assignments.

A B-bit word is retrieved through B parallel binary channels, one per bit
position. A decision error at position b shifts the retrieved value by
±2**b, so the word-level mean squared error is a 4**b-weighted combination
of per-position error probabilities. This module provides those
probabilities for the supported noise models, the MSE for uniform and
correlated sources, PSNR conversions, and the resource metrics (energy,
maximum swing, energy-delay product, peak-to-average swing ratio) that the
solvers trade against fidelity.

Swings carry the same units as the noise scale; every formula depends only
on the ratio swing/scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

MAX_BIT_WIDTH = 64

GAUSSIAN = "gaussian"
LAPLACE = "laplace"
BOUNDED_UNIFORM = "bounded-uniform"
NOISE_KINDS = (GAUSSIAN, LAPLACE, BOUNDED_UNIFORM)

_SQRT2 = math.sqrt(2.0)


def bit_weights(bit_width: int) -> np.ndarray:
    """Per-position MSE weights 4**b for b = 0..bit_width-1.

    Powers of four are powers of two squared, so every weight is exact in
    float64 up to b = 63 even though sums of weights lose exactness past
    2**53.
    """
    _check_bit_width(bit_width)
    return 4.0 ** np.arange(bit_width)


def _check_bit_width(bit_width: int) -> None:
    if not isinstance(bit_width, (int, np.integer)):
        raise ValueError(f"bit width must be an integer, got {bit_width!r}")
    if not 1 <= bit_width <= MAX_BIT_WIDTH:
        raise ValueError(
            f"bit width must be in [1, {MAX_BIT_WIDTH}], got {bit_width}"
        )


@dataclass(frozen=True)
class WordFormat:
    """Unsigned fixed-point word of ``bit_width`` bits, weights 4**b."""

    bit_width: int

    def __post_init__(self) -> None:
        _check_bit_width(self.bit_width)

    @property
    def weights(self) -> np.ndarray:
        return bit_weights(self.bit_width)

    @property
    def weight_sum(self) -> float:
        """Sum of all weights, (4**B - 1) / 3."""
        return (4.0 ** self.bit_width - 1.0) / 3.0

    @property
    def zero_swing_mse(self) -> float:
        """MSE of a uniform source when every bit flips with probability 1/2."""
        return (4.0 ** self.bit_width - 1.0) / 6.0

    @property
    def peak_value(self) -> float:
        return 2.0 ** self.bit_width - 1.0


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean symmetric unimodal read noise.

    ``sigma`` is the standard deviation for the Gaussian kind and the
    analogous scale otherwise: the exponential scale for Laplace and the
    half-width of the support for bounded-uniform. All three tails are
    closed-form, nonincreasing and convex on [0, inf), with tail(0) = 1/2.
    """

    kind: str = GAUSSIAN
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(
                f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}"
            )
        sigma = float(self.sigma)
        if not math.isfinite(sigma) or sigma <= 0.0:
            raise ValueError(f"noise scale must be positive, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True, eq=False)
class SwingVector:
    """Nonnegative per-bit swing levels, index b = bit significance."""

    swings: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.swings, dtype=float)
        if arr.ndim != 1:
            raise ValueError("swings must be one-dimensional")
        _check_bit_width(arr.size)
        if not np.all(np.isfinite(arr)):
            raise ValueError("swings must be finite")
        if np.any(arr < 0.0):
            raise ValueError("swings must be nonnegative")
        arr.flags.writeable = False
        object.__setattr__(self, "swings", arr)

    @property
    def bit_width(self) -> int:
        return int(self.swings.size)

    @classmethod
    def zeros(cls, bit_width: int) -> "SwingVector":
        _check_bit_width(bit_width)
        return cls(np.zeros(bit_width))

    @classmethod
    def uniform(cls, level: float, bit_width: int) -> "SwingVector":
        _check_bit_width(bit_width)
        return cls(np.full(bit_width, float(level)))


@dataclass(frozen=True)
class FidelitySpec:
    """MSE budget V for the fidelity constraint MSE(swings) <= V."""

    mse_budget: float

    def __post_init__(self) -> None:
        v = float(self.mse_budget)
        if not math.isfinite(v) or v < 0.0:
            raise ValueError(f"MSE budget must be nonnegative, got {self.mse_budget!r}")
        object.__setattr__(self, "mse_budget", v)

    @classmethod
    def from_psnr(cls, psnr_db: float, bit_width: int) -> "FidelitySpec":
        return cls(mse_from_psnr(psnr_db, bit_width))

    def psnr_db(self, bit_width: int) -> float:
        return psnr_from_mse(self.mse_budget, bit_width)


@dataclass(frozen=True, eq=False)
class SourceStats:
    """Per-bit marginals and pairwise agreement of a word source.

    ``marginals[b]`` is Pr(x_b = 1). ``agreement[b, b']`` is
    Pr(x_b = x_b') - Pr(x_b != x_b'), a symmetric matrix in [-1, 1] with
    unit diagonal. An i.i.d. uniform source has zero agreement off the
    diagonal.
    """

    marginals: np.ndarray
    agreement: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.marginals, dtype=float)
        a = np.array(self.agreement, dtype=float)
        if m.ndim != 1:
            raise ValueError("marginals must be one-dimensional")
        _check_bit_width(m.size)
        if a.shape != (m.size, m.size):
            raise ValueError(
                f"agreement must be {m.size}x{m.size}, got shape {a.shape}"
            )
        if np.any(m < 0.0) or np.any(m > 1.0):
            raise ValueError("marginals must lie in [0, 1]")
        if np.any(np.abs(a) > 1.0 + 1e-12):
            raise ValueError("agreement entries must lie in [-1, 1]")
        if not np.allclose(a, a.T, atol=1e-12):
            raise ValueError("agreement matrix must be symmetric")
        m.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "marginals", m)
        object.__setattr__(self, "agreement", a)

    @property
    def bit_width(self) -> int:
        return int(self.marginals.size)

    @classmethod
    def uniform(cls, bit_width: int) -> "SourceStats":
        _check_bit_width(bit_width)
        return cls(np.full(bit_width, 0.5), np.eye(bit_width))


def tail_prob(noise: NoiseModel, delta):
    """Probability that the noise exceeds a nonnegative threshold ``delta``.

    Equals the per-bit flip probability of a read at swing ``delta``:
    Q(delta/sigma) for Gaussian noise, exp(-delta/sigma)/2 for Laplace,
    and max(0, 1 - delta/sigma)/2 for bounded-uniform. Accepts scalars or
    arrays; tail_prob(noise, 0) == 1/2 exactly.
    """
    arr = np.asarray(delta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("swing must be finite")
    if arr.size and np.any(arr < 0.0):
        raise ValueError("swing must be nonnegative")
    x = arr / noise.sigma
    if noise.kind == GAUSSIAN:
        out = 0.5 * special.erfc(x / _SQRT2)
    elif noise.kind == LAPLACE:
        out = 0.5 * np.exp(-x)
    else:
        out = 0.5 * np.clip(1.0 - x, 0.0, None)
    return float(out) if arr.ndim == 0 else out


def inverse_tail(noise: NoiseModel, p):
    """Swing at which the tail probability equals ``p``, for 0 < p <= 1/2."""
    arr = np.asarray(p, dtype=float)
    if arr.size and (np.any(arr <= 0.0) or np.any(arr > 0.5)):
        raise ValueError("tail probability must lie in (0, 1/2]")
    if noise.kind == GAUSSIAN:
        out = noise.sigma * _SQRT2 * special.erfcinv(2.0 * arr)
    elif noise.kind == LAPLACE:
        out = -noise.sigma * np.log(2.0 * arr)
    else:
        out = noise.sigma * (1.0 - 2.0 * arr)
    return float(out) if arr.ndim == 0 else out


def mse_uniform(swings: SwingVector, noise: NoiseModel) -> float:
    """Word MSE for an i.i.d. uniform source: sum_b 4**b * tail(swing_b)."""
    w = bit_weights(swings.bit_width)
    return float(w @ tail_prob(noise, swings.swings))


def mse_nonuniform(swings: SwingVector, noise: NoiseModel, stats: SourceStats) -> float:
    """Word MSE for a source with known per-bit statistics.

    Exact for any source: independent symmetric flips make the cross terms
    E[e_b e_b'] factor into p_b * p_b' * agreement(b, b'), so

        MSE = sum_b 4**b p_b
              + 2 * sum_{b > b'} 2**(b+b') p_b p_b' agreement(b, b')

    and the uniform-source formula is recovered when agreement vanishes
    off the diagonal.
    """
    if stats.bit_width != swings.bit_width:
        raise ValueError(
            f"source stats are {stats.bit_width}-bit but swings are "
            f"{swings.bit_width}-bit"
        )
    p = tail_prob(noise, swings.swings)
    first = float(bit_weights(swings.bit_width) @ p)
    t = (2.0 ** np.arange(swings.bit_width)) * p
    cross = np.outer(t, t) * stats.agreement
    second = 2.0 * float(np.tril(cross, -1).sum())
    return first + second


def psnr_from_mse(mse: float, bit_width: int) -> float:
    """Peak signal-to-noise ratio in dB, peak value 2**bit_width - 1."""
    _check_bit_width(bit_width)
    if not mse > 0.0:
        raise ValueError(f"MSE must be positive, got {mse!r}")
    peak = 2.0 ** bit_width - 1.0
    return 10.0 * math.log10(peak * peak / mse)


def mse_from_psnr(psnr_db: float, bit_width: int) -> float:
    _check_bit_width(bit_width)
    peak = 2.0 ** bit_width - 1.0
    return peak * peak * 10.0 ** (-psnr_db / 10.0)


def energy(swings: SwingVector) -> float:
    """Total swing, proportional to read energy: sum_b swing_b."""
    return float(swings.swings.sum())


def max_swing(swings: SwingVector) -> float:
    """Largest per-bit swing; the read delay grows with it."""
    return float(swings.swings.max())


def edp(swings: SwingVector) -> float:
    """Energy-delay product proxy: energy(swings) * max_swing(swings)."""
    return energy(swings) * max_swing(swings)


def pasr(swings: SwingVector) -> float:
    """Peak-to-average swing ratio, max / (energy / B). 1 iff uniform."""
    e = energy(swings)
    if e <= 0.0:
        raise ValueError("peak-to-average ratio undefined for all-zero swings")
    return max_swing(swings) * swings.bit_width / e


def overall_ber(swings: SwingVector, noise: NoiseModel) -> float:
    """Expected number of flipped bits per word: sum_b tail(swing_b)."""
    return float(np.sum(tail_prob(noise, swings.swings)))
