"""Monte-Carlo simulation of the bitwise read channel.

A stored word x is retrieved as x ^ flips, where bit b of ``flips`` is set
independently with probability tail(swing_b). The estimator draws words
from an i.i.d. uniform source or from a corpus (raw bytes or an 8-bit
binary PGM; 16-bit words come from big-endian byte pairs) and reports the
empirical MSE with its standard error.

Randomness comes from the counter-based Philox 4x64 generator. Samples are
split into fixed-size blocks and block j of a run with seed s uses the
Philox key (s, j), so results are bit-identical for a given (seed, sample
count) no matter how many threads process the blocks; partial sums are
reduced in block order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import NoiseModel, SourceStats, SwingVector, _check_bit_width, tail_prob

BLOCK_SIZE = 1 << 16
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    """Sample count, seed, and source of a simulation run.

    ``corpus`` of None draws words uniformly from [0, 2**bit_width);
    otherwise words are drawn with replacement from the corpus file.
    ``workers`` only sets the thread count, never the result.
    """

    samples: int
    seed: int = 0
    bit_width: int = 8
    corpus: str | Path | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if int(self.samples) < 1:
            raise ValueError(f"sample count must be positive, got {self.samples}")
        _check_bit_width(self.bit_width)
        if int(self.workers) < 1:
            raise ValueError(f"worker count must be positive, got {self.workers}")


@dataclass(frozen=True)
class MseEstimate:
    """Empirical MSE with its standard error (None for a single sample)."""

    mean: float
    std_error: float | None
    samples: int


def _block_rng(seed: int, block: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, block & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def read_pgm(path: str | Path) -> np.ndarray:
    """Pixels of a binary (P5) PGM file with maxval 255, flattened."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (missing P5 magic)")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated PGM header")
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            pos = data.index(b"\n", pos) + 1
        elif c.isdigit():
            end = pos
            while end < len(data) and data[end : end + 1].isdigit():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
        else:
            raise ValueError(f"{path}: malformed PGM header")
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=pos + 1)
    if pixels.size < width * height:
        raise ValueError(f"{path}: expected {width * height} pixels, got {pixels.size}")
    return pixels[: width * height].copy()


def load_corpus_words(path: str | Path, bit_width: int) -> np.ndarray:
    """Words of a corpus file: PGM pixels or raw bytes, big-endian pairs for 16-bit."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"P5":
        data = read_pgm(path)
    else:
        data = np.frombuffer(raw, dtype=np.uint8)
    if bit_width == 8:
        words = data.astype(np.uint64)
    elif bit_width == 16:
        if data.size < 2:
            raise ValueError(f"{path}: need at least two bytes for 16-bit words")
        data = data[: data.size - data.size % 2]
        words = (data[0::2].astype(np.uint64) << 8) | data[1::2].astype(np.uint64)
    else:
        raise ValueError(
            f"corpus sources support 8- or 16-bit words, got bit width {bit_width}"
        )
    if words.size == 0:
        raise ValueError(f"{path}: corpus is empty")
    return words


def extract_source_stats(corpus, bit_width: int) -> SourceStats:
    """Per-bit marginals and pairwise agreement of a corpus.

    ``corpus`` may be a path, raw bytes, or an array of words. Agreement is
    E[(1 - 2 x_b)(1 - 2 x_b')], i.e. Pr(x_b = x_b') - Pr(x_b != x_b').
    """
    _check_bit_width(bit_width)
    if isinstance(corpus, (str, Path)):
        words = load_corpus_words(corpus, bit_width)
    elif isinstance(corpus, (bytes, bytearray)):
        if bit_width == 16:
            buf = np.frombuffer(bytes(corpus), dtype=np.uint8)
            buf = buf[: buf.size - buf.size % 2]
            words = (buf[0::2].astype(np.uint64) << 8) | buf[1::2].astype(np.uint64)
        else:
            words = np.frombuffer(bytes(corpus), dtype=np.uint8).astype(np.uint64)
    else:
        words = np.asarray(corpus).astype(np.uint64)
    if words.size == 0:
        raise ValueError("corpus is empty")
    bits = ((words[:, None] >> np.arange(bit_width, dtype=np.uint64)) & 1).astype(float)
    marginals = bits.mean(axis=0)
    signs = 1.0 - 2.0 * bits
    agreement = (signs.T @ signs) / words.size
    return SourceStats(marginals=marginals, agreement=agreement)


def apply_bit_errors(word: int, error_mask: int, bit_width: int) -> int:
    """Retrieved value after flipping the masked bits: word ^ error_mask.

    A flip at position b moves the value by +2**b or -2**b depending on the
    stored bit, e.g. with mask 0b1001 word 9 reads back as 0 and word 6 as
    15.
    """
    _check_bit_width(bit_width)
    limit = 1 << bit_width
    if not 0 <= int(word) < limit:
        raise ValueError(f"word {word} out of range for {bit_width} bits")
    if not 0 <= int(error_mask) < limit:
        raise ValueError(f"error mask {error_mask} out of range for {bit_width} bits")
    return int(word) ^ int(error_mask)


def simulate_read(
    word: int, swings: SwingVector, noise: NoiseModel, rng: np.random.Generator
) -> int:
    """One noisy read: flip bit b with probability tail(swing_b).

    Draws one uniform variate per bit position, in ascending position
    order.
    """
    p = tail_prob(noise, swings.swings)
    flips = rng.random(swings.bit_width) < p
    mask = 0
    for b in range(swings.bit_width):
        if flips[b]:
            mask |= 1 << b
    return apply_bit_errors(word, mask, swings.bit_width)


def _draw_words(
    rng: np.random.Generator, count: int, bit_width: int, corpus_words
) -> np.ndarray:
    if corpus_words is not None:
        idx = rng.integers(0, corpus_words.size, size=count)
        return corpus_words[idx]
    if bit_width == 64:
        lo = rng.integers(0, 1 << 32, size=count, dtype=np.uint64)
        hi = rng.integers(0, 1 << 32, size=count, dtype=np.uint64)
        return (hi << np.uint64(32)) | lo
    return rng.integers(0, 1 << bit_width, size=count, dtype=np.uint64)


def _block_sums(
    seed: int,
    block: int,
    count: int,
    p: np.ndarray,
    bit_width: int,
    corpus_words,
) -> tuple[float, float]:
    """(sum of squared errors, sum of their squares) for one block."""
    rng = _block_rng(seed, block)
    words = _draw_words(rng, count, bit_width, corpus_words)
    mask = np.zeros(count, dtype=np.uint64)
    for b in range(bit_width):
        flips = rng.random(count) < p[b]
        mask |= flips.astype(np.uint64) << np.uint64(b)
    read = words ^ mask
    err = read.astype(np.float64) - words.astype(np.float64)
    sq = err * err
    return float(sq.sum()), float((sq * sq).sum())


def monte_carlo_mse(
    swings: SwingVector, noise: NoiseModel, config: SimConfig
) -> MseEstimate:
    """Empirical word MSE over config.samples noisy reads.

    Deterministic for a given (seed, samples, bit width, corpus): the
    sample stream is partitioned into BLOCK_SIZE blocks keyed by
    (seed, block index) and partial sums are combined in block order.
    """
    if swings.bit_width != config.bit_width:
        raise ValueError(
            f"swings are {swings.bit_width}-bit but the config is "
            f"{config.bit_width}-bit"
        )
    corpus_words = (
        load_corpus_words(config.corpus, config.bit_width)
        if config.corpus is not None
        else None
    )
    p = tail_prob(noise, swings.swings)
    n = int(config.samples)
    blocks = [
        (j, min(BLOCK_SIZE, n - j * BLOCK_SIZE))
        for j in range((n + BLOCK_SIZE - 1) // BLOCK_SIZE)
    ]

    def run(block_count):
        j, count = block_count
        return _block_sums(config.seed, j, count, p, config.bit_width, corpus_words)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            partials = list(pool.map(run, blocks))
    else:
        partials = [run(bc) for bc in blocks]

    s1 = 0.0
    s2 = 0.0
    for a, b in partials:  # fixed block order keeps the reduction deterministic
        s1 += a
        s2 += b
    mean = s1 / n
    if n < 2:
        return MseEstimate(mean=mean, std_error=None, samples=n)
    var = max(0.0, (s2 - n * mean * mean) / (n - 1))
    return MseEstimate(mean=mean, std_error=math.sqrt(var / n), samples=n)
