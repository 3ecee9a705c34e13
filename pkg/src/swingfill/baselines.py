"""Reference schemes to compare against optimized swing assignments.

Two families are provided. LSB dropping reads the top B-L bits at one
uniform swing and treats the dropped L least significant bits as coin
flips. Selective ECC protects the most significant data bits of one or
more words with a systematic Hamming code whose parity bits overwrite low
significance positions; post-decoding bit error rates come from exact
enumeration of all 2**n error patterns.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .metrics import (
    FidelitySpec,
    NoiseModel,
    WordFormat,
    bit_weights,
    psnr_from_mse,
    tail_prob,
)

_table_lock = threading.Lock()
_weight_tables: dict[int, np.ndarray] = {}


@dataclass(frozen=True, eq=False)
class HammingCode:
    """Systematic single-error-correcting Hamming code.

    Codewords are laid out data-first: positions 0..k-1 carry data,
    positions k..n-1 carry parity. The parity-check matrix columns are the
    binary representations of 1..n with the power-of-two columns (the
    identity block) moved to the parity positions, so every single-bit
    error has a distinct nonzero syndrome.
    """

    n: int
    k: int
    parity_check: np.ndarray
    column_values: np.ndarray  # syndrome value of a flip at each position

    def __post_init__(self) -> None:
        h = np.array(self.parity_check, dtype=np.uint8)
        c = np.array(self.column_values, dtype=np.int64)
        h.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "parity_check", h)
        object.__setattr__(self, "column_values", c)

    @classmethod
    def of_length(cls, n: int) -> "HammingCode":
        r = int(n).bit_length()
        if n < 3 or n != 2**r - 1:
            raise ValueError(f"Hamming length must be 2**r - 1 with r >= 2, got {n}")
        data_vals = [v for v in range(1, n + 1) if v & (v - 1)]
        parity_vals = [1 << i for i in range(r)]
        vals = np.array(data_vals + parity_vals, dtype=np.int64)
        h = ((vals[None, :] >> np.arange(r)[:, None]) & 1).astype(np.uint8)
        return cls(n=n, k=n - r, parity_check=h, column_values=vals)

    @property
    def r(self) -> int:
        return self.n - self.k

    def encode(self, data) -> np.ndarray:
        d = np.asarray(data, dtype=np.uint8)
        if d.shape != (self.k,) or np.any(d > 1):
            raise ValueError(f"data must be {self.k} bits")
        parity = (self.parity_check[:, : self.k] @ d) & 1
        return np.concatenate([d, parity.astype(np.uint8)])

    def decode(self, received) -> np.ndarray:
        """Correct up to one flipped position and return the data bits."""
        r = np.asarray(received, dtype=np.uint8)
        if r.shape != (self.n,) or np.any(r > 1):
            raise ValueError(f"received word must be {self.n} bits")
        syndrome_bits = (self.parity_check @ r) & 1
        syndrome = int(syndrome_bits @ (1 << np.arange(self.r)))
        out = r.copy()
        if syndrome:
            pos = int(np.nonzero(self.column_values == syndrome)[0][0])
            out[pos] ^= 1
        return out[: self.k]


def hamming_7_4() -> HammingCode:
    return HammingCode.of_length(7)


def hamming_15_11() -> HammingCode:
    return HammingCode.of_length(15)


def _decode_weight_table(code: HammingCode) -> np.ndarray:
    """table[i, w] = number of weight-w error patterns that leave data bit i wrong."""
    with _table_lock:
        cached = _weight_tables.get(code.n)
        if cached is not None:
            return cached
        n, k, r = code.n, code.k, code.r
        patterns = np.arange(1 << n, dtype=np.int64)
        bits = ((patterns[:, None] >> np.arange(n)) & 1).astype(np.uint8)
        pattern_weight = bits.sum(axis=1).astype(np.int64)
        syndrome_bits = (bits @ code.parity_check.T) & 1
        syndromes = syndrome_bits.astype(np.int64) @ (1 << np.arange(r))
        flip_of_syndrome = np.zeros(1 << r, dtype=np.int64)
        for pos, val in enumerate(code.column_values):
            flip_of_syndrome[val] = 1 << pos
        corrected = patterns ^ flip_of_syndrome[syndromes]
        table = np.zeros((k, n + 1), dtype=np.int64)
        for i in range(k):
            wrong = (corrected >> i) & 1 == 1
            table[i] = np.bincount(pattern_weight[wrong], minlength=n + 1)
        table.flags.writeable = False
        _weight_tables[code.n] = table
        return table


def decoded_bit_error_rates(code: HammingCode, p: float) -> np.ndarray:
    """Exact post-decoding error probability of each data bit at raw rate p.

    Enumerates all 2**n error patterns once per code (cached) and
    evaluates sum_w count[i, w] * p**w * (1-p)**(n-w) per data bit.
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"raw bit error rate must lie in [0, 1], got {p}")
    table = _decode_weight_table(code)
    w = np.arange(code.n + 1)
    pattern_prob = p**w * (1.0 - p) ** (code.n - w)
    return table @ pattern_prob


def lsb_dropping_mse(
    bit_width: int, dropped: int, swing: float, noise: NoiseModel
) -> float:
    """MSE when the lowest ``dropped`` bits are discarded and the rest share one swing.

    Dropped positions contribute 4**b / 2 each; kept positions contribute
    4**b * tail(swing). dropped = 0 recovers the uniform-swing MSE.
    """
    weights = bit_weights(bit_width)
    if not 0 <= int(dropped) < bit_width:
        raise ValueError(
            f"dropped count must lie in [0, {bit_width - 1}], got {dropped}"
        )
    p = tail_prob(noise, float(swing))
    return float(weights[:dropped].sum() * 0.5 + weights[dropped:].sum() * p)


def lsb_dropping_psnr_ceiling(bit_width: int, dropped: int) -> float:
    """Best PSNR reachable with ``dropped`` low bits discarded (swing -> inf)."""
    if not 1 <= int(dropped) < bit_width:
        raise ValueError(
            f"dropped count must lie in [1, {bit_width - 1}], got {dropped}"
        )
    floor_mse = (4.0**dropped - 1.0) / 6.0
    return psnr_from_mse(floor_mse, bit_width)


@dataclass(frozen=True)
class SelectiveEccLayout:
    """Placement of code data, parity, raw, and dropped bits across words.

    Each inner tuple lists bit positions of one word; all four sets
    together must partition [0, bit_width). ``protected`` positions hold
    code data bits, ``parity`` positions are overwritten by parity (their
    original content is lost and contributes 4**b / 2 to the MSE),
    ``stored`` positions are kept raw at the shared swing, and ``dropped``
    positions are powered off entirely.
    """

    bit_width: int
    protected: tuple[tuple[int, ...], ...]
    parity: tuple[tuple[int, ...], ...]
    stored: tuple[tuple[int, ...], ...]
    dropped: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        norm = lambda groups: tuple(tuple(int(i) for i in g) for g in groups)
        object.__setattr__(self, "protected", norm(self.protected))
        object.__setattr__(self, "parity", norm(self.parity))
        object.__setattr__(self, "stored", norm(self.stored))
        dropped = norm(self.dropped) if self.dropped else tuple(
            () for _ in self.protected
        )
        object.__setattr__(self, "dropped", dropped)
        words = len(self.protected)
        if words < 1:
            raise ValueError("layout needs at least one word")
        if not (len(self.parity) == len(self.stored) == len(dropped) == words):
            raise ValueError("all position groups must cover the same word count")
        full = set(range(self.bit_width))
        for w in range(words):
            sets = [
                set(self.protected[w]),
                set(self.parity[w]),
                set(self.stored[w]),
                set(dropped[w]),
            ]
            if sum(len(s) for s in sets) != len(set().union(*sets)) or set().union(*sets) != full:
                raise ValueError(
                    f"word {w}: protected/parity/stored/dropped must partition "
                    f"[0, {self.bit_width})"
                )

    @property
    def word_count(self) -> int:
        return len(self.protected)

    def data_order(self) -> list[tuple[int, int]]:
        """(word, position) of each code data bit, most significant first."""
        pairs = [(w, pos) for w in range(self.word_count) for pos in self.protected[w]]
        return sorted(pairs, key=lambda wp: (-wp[1], wp[0]))

    def validate_for(self, code: HammingCode) -> None:
        n_protected = sum(len(g) for g in self.protected)
        n_parity = sum(len(g) for g in self.parity)
        if n_protected != code.k:
            raise ValueError(
                f"layout protects {n_protected} bits but the code carries {code.k}"
            )
        if n_parity != code.n - code.k:
            raise ValueError(
                f"layout reserves {n_parity} parity positions but the code needs "
                f"{code.n - code.k}"
            )


def layout_secc_7_4(bit_width: int = 8, keep_unprotected: bool = True) -> SelectiveEccLayout:
    """(7,4) layout on one word: top 4 bits protected, parity in the 3 LSBs.

    The remaining middle positions are stored raw when ``keep_unprotected``
    is true, else powered off (which makes the scheme behave like dropping
    bit_width - 4 low bits at high swing).
    """
    if bit_width < 8:
        raise ValueError(f"(7,4) layout needs at least 8 bits, got {bit_width}")
    protected = tuple(range(bit_width - 4, bit_width))
    parity = (0, 1, 2)
    middle = tuple(range(3, bit_width - 4))
    if keep_unprotected:
        return SelectiveEccLayout(bit_width, (protected,), (parity,), (middle,))
    return SelectiveEccLayout(bit_width, (protected,), (parity,), ((),), (middle,))


def layout_secc_15_11(bit_width: int = 8) -> SelectiveEccLayout:
    """(15,11) layout: one 16-bit word, or four 8-bit words sharing a codeword.

    For bit_width 8 the code spans four words: the 11 most significant bits
    round-robin by significance (bit 7 of words 0-3, bit 6 of words 0-3,
    bit 5 of words 0-2) are protected and each word's LSB holds one parity
    bit. For bit_width 16 a single word protects its top 11 bits with
    parity in the 4 LSBs.
    """
    if bit_width == 8:
        protected = (
            (7, 6, 5),
            (7, 6, 5),
            (7, 6, 5),
            (7, 6),
        )
        parity = ((0,), (0,), (0,), (0,))
        stored = tuple(
            tuple(sorted(set(range(8)) - set(p) - {0})) for p in protected
        )
        return SelectiveEccLayout(8, protected, parity, stored)
    if bit_width == 16:
        protected = (tuple(range(5, 16)),)
        parity = ((0, 1, 2, 3),)
        stored = ((4,),)
        return SelectiveEccLayout(16, protected, parity, stored)
    raise ValueError(f"(15,11) layout is defined for 8- or 16-bit words, got {bit_width}")


def selective_ecc_mse(
    layout: SelectiveEccLayout, code: HammingCode, swing: float, noise: NoiseModel
) -> float:
    """Per-word MSE of a selective-ECC read at one shared swing.

    Parity and dropped positions contribute 4**b / 2 (their payload is
    gone), stored positions 4**b * p at the raw rate p = tail(swing), and
    protected positions 4**b * p_post with the exact post-decoding rate of
    the data bit they carry. Multi-word layouts report the average over
    their words.
    """
    layout.validate_for(code)
    if swing < 0.0:
        raise ValueError(f"swing must be nonnegative, got {swing}")
    weights = bit_weights(layout.bit_width)
    p = tail_prob(noise, float(swing))
    post = decoded_bit_error_rates(code, p)
    rate_of = {wp: post[i] for i, wp in enumerate(layout.data_order())}
    total = 0.0
    for w in range(layout.word_count):
        for pos in layout.parity[w]:
            total += weights[pos] * 0.5
        for pos in layout.dropped[w]:
            total += weights[pos] * 0.5
        for pos in layout.stored[w]:
            total += weights[pos] * p
        for pos in layout.protected[w]:
            total += weights[pos] * rate_of[(w, pos)]
    return total / layout.word_count


def active_positions(layout: SelectiveEccLayout) -> float:
    """Average number of powered bit positions per word (all but dropped)."""
    dropped = sum(len(g) for g in layout.dropped)
    return layout.bit_width - dropped / layout.word_count


def lsb_dropping_curve(
    bit_width: int, dropped: int, swing_grid, noise: NoiseModel
) -> tuple[np.ndarray, np.ndarray]:
    """(energy, PSNR dB) of LSB dropping across a uniform swing grid."""
    grid = np.asarray(swing_grid, dtype=float)
    energies = (bit_width - dropped) * grid
    psnrs = np.array(
        [
            psnr_from_mse(lsb_dropping_mse(bit_width, dropped, s, noise), bit_width)
            for s in grid
        ]
    )
    return energies, psnrs


def selective_ecc_curve(
    layout: SelectiveEccLayout, code: HammingCode, swing_grid, noise: NoiseModel
) -> tuple[np.ndarray, np.ndarray]:
    """(energy, PSNR dB) of a selective-ECC scheme across a swing grid."""
    grid = np.asarray(swing_grid, dtype=float)
    energies = active_positions(layout) * grid
    psnrs = np.array(
        [
            psnr_from_mse(selective_ecc_mse(layout, code, s, noise), layout.bit_width)
            for s in grid
        ]
    )
    return energies, psnrs
