"""Maxima, argmaxima, extreme-value normalization and Gumbel diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sampler import SampleBatch

QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass
class ExtremeSummary:
    maxima: np.ndarray
    argmax: np.ndarray
    mean: float
    var: float
    quantiles: dict[float, float]
    argmax_hist: np.ndarray = field(repr=False)


def _stable_mean(x: np.ndarray) -> float:
    return math.fsum(x) / len(x)


def _stable_var(x: np.ndarray, mean: float) -> float:
    if len(x) < 2:
        return 0.0
    return math.fsum((x - mean) ** 2) / (len(x) - 1)


def max_argmax(batch: SampleBatch) -> ExtremeSummary:
    """Per-path maximum and first-attaining index, plus batch aggregates."""
    paths = batch.paths
    if paths.size == 0:
        raise ValueError("empty batch")
    maxima = paths.max(axis=1)
    argmax = paths.argmax(axis=1)  # ties -> smallest index
    mean = _stable_mean(maxima)
    var = _stable_var(maxima, mean)
    quants = {q: float(np.quantile(maxima, q)) for q in QUANTILE_LEVELS}
    hist = np.bincount(argmax, minlength=paths.shape[1])
    return ExtremeSummary(maxima, argmax, mean, var, quants, hist)


@dataclass(frozen=True)
class NormalizationConstants:
    n: int
    a_n: float
    b_n: float


def norm_constants(n: int) -> NormalizationConstants:
    """Scaling a_n and centering b_n of the Gumbel limit for normal maxima.

    a_n = (2 log n)^{1/2}
    b_n = (2 log n)^{1/2} - (1/2)(2 log n)^{-1/2} (log log n + log 4 pi)

    n = 2 is allowed even though log log 2 < 0; these small-n values are
    formula probes, the limit statement is asymptotic.
    """
    if n < 2:
        raise ValueError("norm_constants requires n >= 2")
    two_log = 2.0 * math.log(n)
    a = math.sqrt(two_log)
    b = a - 0.5 / a * (math.log(math.log(n)) + math.log(4.0 * math.pi))
    return NormalizationConstants(n, a, b)


def gumbel_cdf(x):
    """P(G <= x) = exp(-exp(-x))."""
    return np.exp(-np.exp(-np.asarray(x, dtype=float)))


def gumbel_sf(x):
    """P(G > x), computed as -expm1(-e^{-x}) for accuracy in the far tail."""
    return -np.expm1(-np.exp(-np.asarray(x, dtype=float)))


def ks_to_gumbel(maxima, n: int) -> float:
    """Exact one-sample KS distance of a_n (M - b_n) to the Gumbel law."""
    m = np.sort(np.asarray(maxima, dtype=float))
    if m.size < 100:
        raise ValueError("ks_to_gumbel needs at least 100 maxima")
    nc = norm_constants(n)
    f = np.atleast_1d(gumbel_cdf(nc.a_n * (m - nc.b_n)))
    i = np.arange(1, m.size + 1)
    d_plus = np.max(i / m.size - f)
    d_minus = np.max(f - (i - 1) / m.size)
    return float(max(d_plus, d_minus))


def centering_gap(maxima, n: int) -> float:
    """Empirical mean of |a_n (M - b_n)|; bounded-centering diagnostic."""
    m = np.asarray(maxima, dtype=float)
    nc = norm_constants(n)
    return _stable_mean(np.abs(nc.a_n * (m - nc.b_n)))


def sample_maxima(
    model, n: int, batch: int, seed: int, method: str | None = None,
    chunk: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-path (maxima, argmax) of a sequence batch, generated in chunks.

    Streams are keyed by absolute path index, so the result is identical
    to a single unchunked call while keeping each chunk inside the memory
    cap.
    """
    from .sampler import sample_sequence

    if chunk is None:
        chunk = max(1, min(batch, (1 << 24) // max(n, 1)))
    maxima = np.empty(batch)
    argmax = np.empty(batch, dtype=np.int64)
    done = 0
    while done < batch:
        b = min(chunk, batch - done)
        sb = sample_sequence(model, n, b, seed, method, stream_offset=done)
        maxima[done : done + b] = sb.paths.max(axis=1)
        argmax[done : done + b] = sb.paths.argmax(axis=1)
        done += b
    return maxima, argmax
