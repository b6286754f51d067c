"""Monte Carlo verification of expected Malliavin determinants.

Sampling is counter based: the j-th uniform of sample ``index`` always
comes from Philox word ``index * words_per_sample + j`` under the given
key, and normals are produced by the Box-Muller transform (a fixed two
uniforms per pair of normals).  Results are therefore bit-identical for
a given (seed, index) no matter how samples are sharded or ordered.

Reductions accumulate fixed-size chunks in index order, so an estimate
depends only on (seed, n_samples).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .chaos import ChaosExpansion, evaluate
from .malliavin import MalliavinPair, sum_of_squares_eval

__all__ = [
    "CHUNK_SAMPLES",
    "DEFAULT_SAMPLES",
    "Estimate",
    "estimate_expected_det",
    "estimate_moment",
    "sample_gaussian",
    "sample_gaussian_block",
]

DEFAULT_SAMPLES = 100_000

# Fixed reduction granularity; changing it changes rounding, so it is a
# constant, not a parameter.
CHUNK_SAMPLES = 8192

_MASK64 = (1 << 64) - 1
_WORDS_PER_BLOCK = 4  # Philox-4x64


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error.

    stderr is the sample standard deviation divided by sqrt(samples).
    """

    mean: float
    stderr: float
    samples: int
    seed: int


def _raw_words(seed: int, first_word: int, n_words: int) -> np.ndarray:
    """Philox output words [first_word, first_word + n_words) under seed."""
    first_block, offset = divmod(first_word, _WORDS_PER_BLOCK)
    n_blocks = (offset + n_words + _WORDS_PER_BLOCK - 1) // _WORDS_PER_BLOCK
    key = [seed & _MASK64, (seed >> 64) & _MASK64]
    counter = [
        first_block & _MASK64,
        (first_block >> 64) & _MASK64,
        0,
        0,
    ]
    bg = np.random.Philox(counter=counter, key=key)
    words = bg.random_raw(n_blocks * _WORDS_PER_BLOCK)
    return words[offset : offset + n_words]


def sample_gaussian_block(dim: int, seed: int, start: int, count: int) -> np.ndarray:
    """Standard normal vectors for sample indices [start, start + count).

    Shape (count, dim).  Row i equals sample_gaussian(dim, seed, start + i)
    exactly, independent of the blocking used to obtain it.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    if start < 0 or count < 0:
        raise ValueError("start and count must be >= 0")
    if count == 0:
        return np.empty((0, dim))
    uniforms_per_sample = 2 * ((dim + 1) // 2)
    words = _raw_words(
        seed, start * uniforms_per_sample, count * uniforms_per_sample
    ).reshape(count, uniforms_per_sample)
    # 53-bit mantissas; u1 in (0, 1] keeps the log finite, u2 in [0, 1).
    u1 = ((words[:, 0::2] >> np.uint64(11)) + 1.0) * 2.0**-53
    u2 = (words[:, 1::2] >> np.uint64(11)) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * np.pi) * u2
    z = np.empty((count, uniforms_per_sample))
    z[:, 0::2] = radius * np.cos(angle)
    z[:, 1::2] = radius * np.sin(angle)
    return z[:, :dim]


def sample_gaussian(dim: int, seed: int, index: int) -> np.ndarray:
    """The d standard normal coordinates of sample ``index``."""
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    return sample_gaussian_block(dim, seed, index, 1)[0]


def _run_estimator(values_for_block, n_samples: int, seed: int, dump) -> Estimate:
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    total = 0.0
    total_sq = 0.0
    for start in range(0, n_samples, CHUNK_SAMPLES):
        count = min(CHUNK_SAMPLES, n_samples - start)
        vals = values_for_block(start, count)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        if dump is not None:
            for i, v in enumerate(vals):
                dump.writerow((start + i, f"{v:.17g}"))
    mean = total / n_samples
    var = max(total_sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
    return Estimate(
        mean=mean,
        stderr=math.sqrt(var / n_samples),
        samples=n_samples,
        seed=seed,
    )


def estimate_expected_det(
    pair: MalliavinPair,
    k: int,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    dump_path: Optional[Union[str, Path]] = None,
) -> Estimate:
    """Monte Carlo estimate of E det of the k-th iterated Malliavin matrix.

    Averages the pointwise squared-minor form, whose samples are all
    nonnegative, so the mean is too.  ``dump_path`` optionally writes the
    raw samples as CSV rows (index, value).
    """

    def block(start: int, count: int) -> np.ndarray:
        xi = sample_gaussian_block(pair.dim, seed, start, count)
        return sum_of_squares_eval(pair, k, xi)

    if dump_path is None:
        return _run_estimator(block, n_samples, seed, None)
    with open(dump_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("index", "value"))
        return _run_estimator(block, n_samples, seed, writer)


def estimate_moment(
    F: ChaosExpansion, power: int, n_samples: int = DEFAULT_SAMPLES, seed: int = 0
) -> Estimate:
    """Monte Carlo estimate of E[F^power] for power 1 or 2."""
    if power not in (1, 2):
        raise ValueError(f"power must be 1 or 2, got {power}")

    def block(start: int, count: int) -> np.ndarray:
        xi = sample_gaussian_block(F.dim, seed, start, count)
        vals = evaluate(F, xi)
        return vals if power == 1 else vals * vals

    return _run_estimator(block, n_samples, seed, None)
