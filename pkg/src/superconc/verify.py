"""Monte Carlo verification: variance and tail estimates for the maximum,
exponential-rate fitting, and the Laplace-transform variance check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .extremes import _stable_mean, norm_constants, sample_maxima
from .sampler import CoupledBatch

FIT_SURVIVAL_MIN = 1e-3
FIT_SURVIVAL_MAX = 0.3
FIT_MIN_POINTS = 5
FIT_R2_OK = 0.9


def estimate_var_max(
    model, n: int, batch: int, seed: int, method: str | None = None
) -> tuple[float, float]:
    """Unbiased sample variance of per-path maxima with jackknife SE."""
    maxima, _ = sample_maxima(model, n, batch, seed, method)
    return variance_with_se(maxima)


def variance_with_se(x: np.ndarray) -> tuple[float, float]:
    b = len(x)
    if b < 3:
        raise ValueError("need at least 3 samples for a jackknife SE")
    mean = _stable_mean(x)
    d2 = (x - mean) ** 2
    ss = math.fsum(d2)
    var = ss / (b - 1)
    # leave-one-out variances are affine in d2; jackknife variance in closed form
    loo = (ss - d2 * b / (b - 1)) / (b - 2)
    se = math.sqrt((b - 1) / b * float(np.sum((loo - loo.mean()) ** 2)))
    return var, se


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class FitResult:
    rate: float
    intercept: float
    r2: float
    ok: bool
    n_points: int
    t_range: tuple[float, float]
    form: str
    K: float | None = None


@dataclass
class TailEstimate:
    t: np.ndarray
    survival: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    center: str
    center_value: float
    sample_size: int
    low_resolution: np.ndarray = field(repr=False, default=None)
    exp_fit: FitResult | None = None
    gaussian_fit: FitResult | None = None


def tail_from_deviations(dev: np.ndarray, t_grid, center: str,
                         center_value: float) -> TailEstimate:
    t = np.asarray(t_grid, dtype=float)
    b = len(dev)
    counts = np.array([(dev >= ti).sum() for ti in t])
    surv = counts / b
    bands = np.array([wilson_interval(int(k), b) for k in counts])
    low_res = t > dev.max(initial=0.0)
    return TailEstimate(
        t=t, survival=surv, lo=bands[:, 0], hi=bands[:, 1], center=center,
        center_value=center_value, sample_size=b, low_resolution=low_res,
    )


def estimate_tail(
    model, n: int, batch: int, center: str, t_grid, seed: int,
    method: str | None = None, maxima: np.ndarray | None = None,
) -> TailEstimate:
    """Empirical survival of |M - center| on a t grid with Wilson bands."""
    if center not in ("mean", "b_n"):
        raise ValueError("center must be 'mean' or 'b_n'")
    if maxima is None:
        maxima, _ = sample_maxima(model, n, batch, seed, method)
    cval = _stable_mean(maxima) if center == "mean" else norm_constants(n).b_n
    return tail_from_deviations(np.abs(maxima - cval), t_grid, center, cval)


def _select_fit_points(tail: TailEstimate, smin: float, smax: float):
    s = tail.survival
    loose = (s >= 1e-4) & (s <= 0.5) & (tail.t > 0)
    if loose.sum() < FIT_MIN_POINTS:
        raise ValueError(
            f"tail fit needs >= {FIT_MIN_POINTS} grid points with survival "
            "in [1e-4, 0.5]"
        )
    return (s >= smin) & (s <= smax) & (tail.t > 0)


# An exponential tail 6 exp(-c x) has -log(s/6) affine in x with a
# nonnegative intercept; a strongly negative fitted intercept means the
# implied survival at 0 exceeds the constant 6, the signature of a
# super-exponential (Gaussian-like) curve.
FIT_INTERCEPT_MIN = -0.5


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - slope * x - intercept
    tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / tot) if tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_tail_rate(
    tail: TailEstimate, K: float,
    smin: float = FIT_SURVIVAL_MIN, smax: float = FIT_SURVIVAL_MAX,
) -> FitResult:
    """Least-squares rate of survival ~ 6 exp(-c t / sqrt(K)).

    Fits -log(survival/6) against t/sqrt(K) over the admissible survival
    range.  ok is False when the fit detects curvature (R^2 < 0.9 or a
    clearly negative intercept) or the rate is nonpositive.
    """
    mask = _select_fit_points(tail, smin, smax)
    t = tail.t[mask]
    y = -np.log(tail.survival[mask] / 6.0)
    x = t / math.sqrt(K)
    rate, intercept, r2 = _linear_fit(x, y)
    fit = FitResult(
        rate=rate, intercept=intercept, r2=r2,
        ok=(rate > 0 and r2 >= FIT_R2_OK and intercept >= FIT_INTERCEPT_MIN),
        n_points=int(mask.sum()), t_range=(float(t.min()), float(t.max())),
        form="exponential", K=K,
    )
    tail.exp_fit = fit
    return fit


def fit_gaussian_rate(
    tail: TailEstimate,
    smin: float = FIT_SURVIVAL_MIN, smax: float = FIT_SURVIVAL_MAX,
) -> FitResult:
    """Comparison fit of survival ~ 2 exp(-a t^2 / 2) on the same range."""
    mask = _select_fit_points(tail, smin, smax)
    t = tail.t[mask]
    y = -np.log(tail.survival[mask] / 2.0)
    x = t**2 / 2.0
    rate, intercept, r2 = _linear_fit(x, y)
    fit = FitResult(
        rate=rate, intercept=intercept, r2=r2,
        ok=(rate > 0 and r2 >= FIT_R2_OK),
        n_points=int(mask.sum()), t_range=(float(t.min()), float(t.max())),
        form="gaussian",
    )
    tail.gaussian_fit = fit
    return fit


@dataclass
class LaplaceCheck:
    theta: np.ndarray
    margin: np.ndarray
    margin_se: np.ndarray
    overflow: np.ndarray
    C_hat: float
    K: float


def _margin_one(z: np.ndarray, theta: float, K: float) -> float:
    if theta == 0.0:
        return float(np.var(z, ddof=1)) / K
    a = np.exp(theta * z / 2.0)
    var = float(np.var(a, ddof=1))
    e_full = float(np.mean(a * a))
    return var / (theta**2 / 4.0 * K * e_full)


def laplace_check(
    maxima, K: float, theta_points: int = 21, groups: int = 20
) -> LaplaceCheck:
    """Check Var(e^{theta Z/2}) <= (theta^2/4) K E[e^{theta Z}] on the window.

    Z is the mean-centered maximum; the margin is the ratio of the two
    sides, so values <= C (the covering multiplicity) verify the
    inequality.  The window is |theta| <= 2/sqrt(K); theta = 0 uses the
    second-order limit Var(Z)/K.  Standard errors come from contiguous
    group means.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    m = np.asarray(maxima, dtype=float)
    z = m - _stable_mean(m)
    lim = 2.0 / math.sqrt(K)
    thetas = np.linspace(-lim, lim, theta_points)
    margin = np.empty(theta_points)
    se = np.empty(theta_points)
    overflow = np.zeros(theta_points, dtype=bool)
    bounds = np.linspace(0, len(z), groups + 1).astype(int)
    for i, th in enumerate(thetas):
        with np.errstate(over="raise"):
            try:
                margin[i] = _margin_one(z, float(th), K)
                gm = [
                    _margin_one(z[a:b], float(th), K)
                    for a, b in zip(bounds[:-1], bounds[1:])
                    if b - a >= 2
                ]
                se[i] = float(np.std(gm, ddof=1)) / math.sqrt(len(gm))
            except FloatingPointError:
                margin[i] = math.nan
                se[i] = math.nan
                overflow[i] = True
    c_hat = float(np.nanmax(margin))
    return LaplaceCheck(thetas, margin, se, overflow, c_hat, K)


def coupled_max_correlation(coupled: CoupledBatch) -> float:
    """Empirical correlation of the base and evolved per-path maxima."""
    m0 = coupled.base.paths.max(axis=1)
    m1 = coupled.evolved.paths.max(axis=1)
    if np.allclose(m0, m1):
        return 1.0
    return float(np.corrcoef(m0, m1)[0, 1])
