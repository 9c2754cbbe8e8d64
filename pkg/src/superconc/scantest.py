"""Scan test over a class of equal-cardinality index sets.

The test statistic is the maximum of the set sums X_S, S in the class.
The null is an iid standard normal vector; under the alternative one set
has its coordinates shifted by mu.  The decision rule rejects when
2 max_S X_S >= mu K + E_0[max_S X_S].  Two acceptance thresholds for mu
are provided: a Gaussian-concentration threshold and a sharper one based
on the exponential concentration of the maximum, which needs the tail
constant c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .extremes import _stable_mean
from .verify import fit_tail_rate, tail_from_deviations

MAX_ALTERNATIVES = 64


@dataclass(frozen=True)
class ScanClass:
    n: int
    sets: np.ndarray  # (N, K) integer index array

    def __post_init__(self):
        s = np.asarray(self.sets)
        if s.ndim != 2:
            raise ValueError("sets must be an (N, K) index array")
        if s.shape[0] < 2:
            raise ValueError("need at least 2 sets (thresholds involve log N)")
        if s.min(initial=0) < 0 or s.max(initial=0) >= self.n:
            raise ValueError("set indices must lie in [0, n)")
        for row in s:
            if len(np.unique(row)) != s.shape[1]:
                raise ValueError("each set must consist of distinct indices")
        object.__setattr__(self, "sets", np.ascontiguousarray(s, dtype=np.int64))

    @property
    def N(self) -> int:
        return self.sets.shape[0]

    @property
    def K(self) -> int:
        return self.sets.shape[1]

    def key(self) -> tuple:
        return (self.n, self.sets.shape, self.sets.tobytes())


def disjoint_class(N: int, K: int, n: int | None = None) -> ScanClass:
    """N disjoint blocks of K consecutive indices."""
    if n is None:
        n = N * K
    if n < N * K:
        raise ValueError("n too small for N disjoint sets of size K")
    return ScanClass(n, np.arange(N * K).reshape(N, K))


def sliding_class(n: int, K: int) -> ScanClass:
    """All n - K + 1 sliding windows of length K."""
    if K < 1 or K > n - 1:
        raise ValueError("need 1 <= K <= n - 1")
    starts = np.arange(n - K + 1)
    return ScanClass(n, starts[:, None] + np.arange(K)[None, :])


def set_sums(x: np.ndarray, cls: ScanClass) -> np.ndarray:
    """X_S for every S; x is a vector or a (trials, n) matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[cls.sets].sum(axis=1)
    return x[:, cls.sets].sum(axis=2)


def scan_statistic(x, cls: ScanClass) -> tuple[float, int]:
    """Maximum set sum and the first set index attaining it."""
    sums = set_sums(np.asarray(x, dtype=float), cls)
    if sums.ndim != 1:
        raise ValueError("scan_statistic takes a single vector")
    k = int(np.argmax(sums))
    return float(sums[k]), k


def decision(x, cls: ScanClass, tau: float) -> int:
    """1 (reject the null) iff the scan statistic reaches tau."""
    value, _ = scan_statistic(x, cls)
    return int(value >= tau)


def threshold_prop51(K: int, delta: float, e0max: float) -> float:
    """Gaussian-concentration acceptance level for mu."""
    if not 0 < delta <= 2:
        raise ValueError("delta must lie in (0, 2]")
    return e0max / K + 2.0 * math.sqrt(2.0 / K * math.log(2.0 / delta))


def threshold_prop52(K: int, N: int, delta: float, c: float, e0max: float) -> float:
    """Superconcentration acceptance level for mu; needs the tail constant c."""
    if not 0 < delta <= 6:
        raise ValueError("delta must lie in (0, 6]")
    if c <= 0:
        raise ValueError("c must be positive")
    if N < 2:
        raise ValueError("N must be at least 2")
    return e0max / K + math.log(6.0 / delta) * 2.0 / (c * math.sqrt(K * math.log(N)))


def threshold_table(K: int, N: int, e0max: float, deltas, c: float = 1.0):
    """Rows (delta, prop51 threshold, prop52 threshold) for a delta grid."""
    rows = []
    for d in deltas:
        t51 = threshold_prop51(K, d, e0max) if d <= 2 else math.nan
        t52 = threshold_prop52(K, N, d, c, e0max)
        rows.append((float(d), t51, t52))
    return rows


def _null_scan_maxima(cls: ScanClass, trials: int, seed: int,
                      offset: int = 0, mu: float = 0.0,
                      shifted: np.ndarray | None = None) -> np.ndarray:
    out = np.empty(trials)
    for t in range(trials):
        x = rng.stream_generator(seed, offset + t).standard_normal(cls.n)
        if shifted is not None:
            x[shifted] += mu
        out[t] = set_sums(x, cls).max()
    return out


_E0MAX_CACHE: dict[tuple, tuple[float, float]] = {}


def estimate_E0max(cls: ScanClass, trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of E_0[max_S X_S] with its standard error."""
    key = (cls.key(), trials, seed)
    if key not in _E0MAX_CACHE:
        maxima = _null_scan_maxima(cls, trials, seed)
        mean = _stable_mean(maxima)
        se = float(np.std(maxima, ddof=1)) / math.sqrt(trials)
        _E0MAX_CACHE[key] = (mean, se)
    return _E0MAX_CACHE[key]


def calibrate_c(cls: ScanClass, trials: int = 10**4, seed: int = 0) -> float:
    """Fit the exponential tail constant on the null scan maximum.

    The maximum of N set sums of K standard normals concentrates at scale
    sqrt(K / log N), so the deviations are fitted against the bound
    6 exp(-c t / sqrt(K / log N)), recovering the constant of the
    acceptance threshold.
    """
    maxima = _null_scan_maxima(cls, trials, seed, offset=10**6)
    dev = np.abs(maxima - _stable_mean(maxima))
    grid = np.linspace(0.0, float(np.quantile(dev, 0.9995)), 48)[1:]
    tail = tail_from_deviations(dev, grid, "mean", _stable_mean(maxima))
    k_fit = cls.K / math.log(cls.N)
    fit = fit_tail_rate(tail, k_fit)
    if fit.rate <= 0:
        raise ValueError("tail calibration produced a nonpositive rate")
    return fit.rate


@dataclass
class RiskReport:
    mu: float
    delta_target: float | None
    threshold_kind: str
    c_used: float | None
    e0max: float
    e0max_se: float
    tau: float
    type1: float
    type1_se: float
    type2_mean: float
    type2_se: float
    risk: float
    risk_se: float
    trials: int
    n_alternatives: int
    subsampled: bool
    low_resolution: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def estimate_risk(
    cls: ScanClass,
    mu: float | None = None,
    threshold_kind: str = "prop51",
    c: float | None = None,
    trials: int = 2000,
    seed: int = 0,
    delta_target: float | None = None,
    e0max_trials: int | None = None,
) -> RiskReport:
    """Monte Carlo risk (type I plus averaged type II) of the scan test.

    When mu is None it is set to the acceptance threshold of the requested
    kind at delta_target; prop52 calibrates c on the null scan maximum
    unless one is supplied.  When N > 64 the type II average runs over a
    seeded uniform subsample of 64 sets.
    """
    if threshold_kind not in ("prop51", "prop52"):
        raise ValueError("threshold kind must be 'prop51' or 'prop52'")
    e0max, e0se = estimate_E0max(cls, e0max_trials or max(trials, 10**4), seed)

    c_used = c
    if mu is None:
        if delta_target is None:
            raise ValueError("either mu or delta_target must be given")
        if threshold_kind == "prop51":
            mu = threshold_prop51(cls.K, delta_target, e0max)
        else:
            if c_used is None:
                c_used = calibrate_c(cls, seed=seed)
            mu = threshold_prop52(cls.K, cls.N, delta_target, c_used, e0max)

    tau = (mu * cls.K + e0max) / 2.0

    null_max = _null_scan_maxima(cls, trials, seed, offset=2 * 10**6)
    type1 = float(np.mean(null_max >= tau))
    # floor the binomial variance at 1/trials so zero-count cells still
    # report a resolution limit instead of SE = 0
    type1_se = math.sqrt(max(type1 * (1 - type1), 1.0 / trials) / trials)

    subsampled = cls.N > MAX_ALTERNATIVES
    if subsampled:
        picker = rng.stream_generator(seed, 3 * 10**6)
        chosen = picker.choice(cls.N, size=MAX_ALTERNATIVES, replace=False)
    else:
        chosen = np.arange(cls.N)
    p2 = []
    var2 = []
    for j, s_idx in enumerate(chosen):
        alt = _null_scan_maxima(
            cls, trials, seed, offset=(4 + j) * 10**6,
            mu=mu, shifted=cls.sets[s_idx],
        )
        pj = float(np.mean(alt < tau))
        p2.append(pj)
        var2.append(max(pj * (1 - pj), 1.0 / trials) / trials)
    type2 = float(np.mean(p2))
    type2_se = math.sqrt(sum(var2)) / len(p2)

    risk = type1 + type2
    risk_se = math.sqrt(type1_se**2 + type2_se**2)
    low_res = delta_target is not None and risk_se > delta_target / 3.0
    return RiskReport(
        mu=float(mu), delta_target=delta_target, threshold_kind=threshold_kind,
        c_used=c_used, e0max=e0max, e0max_se=e0se, tau=tau,
        type1=type1, type1_se=type1_se, type2_mean=type2, type2_se=type2_se,
        risk=risk, risk_se=risk_se, trials=trials,
        n_alternatives=len(p2), subsampled=subsampled, low_resolution=low_res,
    )
