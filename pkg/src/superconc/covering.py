"""Covering constructions and the constants of the tail bounds.

Three pipelines produce a :class:`BoundReport`:

* sequence pipeline — overlapping blocks of width 2 m, m = floor(n^alpha),
  with multiplicity 3; r_0 = phi(m); rho bounded analytically by 4/n^eta
  or estimated from argmax histograms.
* field pipeline — covering number of a box, greedy maximal s_0-net,
  balls of radius 2 s_0 as blocks.
* correlated pipeline — singleton covering for vectors with off-diagonal
  correlations below a given epsilon.

The bound scale is K = max(r_0, 1/log(1/rho)); the resulting tail curve
is 6 exp(-c t / sqrt(K)), to be compared with the classical Gaussian
curve 2 exp(-t^2 / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .covariance import CovarianceModel, check_hypotheses, evaluate, gram_matrix
from .extremes import max_argmax, sample_maxima
from .sampler import sample_field_grid, grid_points

# default Sudakov minoration constant: E[max] >= c_sud * delta_gap * sqrt(log n)
DEFAULT_C_SUD = 1.0 / math.sqrt(2.0 * math.pi * math.log(2.0))

MC_RHO_MIN_PATHS = 10**4


class HypothesisError(ValueError):
    """Covariance model fails a hypothesis of the bound being assembled."""


class TrivialCoveringError(ValueError):
    """The block construction would cover everything with a single block."""


@dataclass
class Covering:
    blocks: list[np.ndarray] = field(repr=False)  # 0-based index arrays
    r0: float = 0.0
    multiplicity: int = 1
    provenance: str = "singletons"
    n: int = 0


def singleton_covering(n: int, r0: float = 0.0) -> Covering:
    blocks = [np.array([i]) for i in range(n)]
    return Covering(blocks, r0=r0, multiplicity=1, provenance="singletons", n=n)


def build_sequence_covering(n: int, alpha: float) -> Covering:
    """Overlapping blocks {(k-1)m .. (k+1)m} (1-based), m = floor(n^alpha).

    Every pair i < j with j - i <= m shares a block and each index lies in
    at most 3 blocks.  Indices are stored 0-based.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    m = int(math.floor(n**alpha))
    if m < 1:
        raise ValueError("floor(n^alpha) must be at least 1")
    if 2 * m >= n:
        raise TrivialCoveringError(
            f"2*floor(n^alpha) = {2 * m} >= n = {n}: a single block would "
            "cover everything; lower alpha"
        )
    k_max = math.ceil(n / m) - 1
    blocks = []
    for k in range(1, k_max + 1):
        lo = max(1, (k - 1) * m)
        hi = min(n, (k + 1) * m)
        blocks.append(np.arange(lo - 1, hi))
    return Covering(blocks, r0=math.nan, multiplicity=3, provenance="sequence-blocks", n=n)


def verify_covering(cov: Covering, gram: np.ndarray, r0: float):
    """Exhaustively check the two covering hypotheses against a gram matrix.

    Returns (ok, witness); witness is None, ("pair", i, j) for a correlated
    pair sharing no block, or ("multiplicity", i) for an over-covered index.
    """
    n = gram.shape[0]
    if cov.n != n:
        raise ValueError("covering size does not match gram dimension")
    member = np.zeros((n, len(cov.blocks)), dtype=bool)
    for b, idx in enumerate(cov.blocks):
        member[idx, b] = True

    counts = member.sum(axis=1)
    if counts.max(initial=0) > cov.multiplicity:
        return False, ("multiplicity", int(np.argmax(counts)))

    shared = member @ member.T  # (i, j) -> number of common blocks
    # pairs whose correlation exceeds r0 must share a block; ties at r0 are
    # separated (matters when phi underflows to 0 at large lags)
    need = gram > r0
    np.fill_diagonal(need, False)
    bad = need & (shared == 0)
    if bad.any():
        i, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
        return False, ("pair", int(i), int(j))
    return True, None


@dataclass
class RhoEstimate:
    rho: float
    source: str  # "analytic" | "monte_carlo"
    se: float = 0.0
    eta: float | None = None
    block_index: int | None = None
    degenerate: bool = False  # rho >= 1: 1/log(1/rho) blows up


def rho_monte_carlo(cov: Covering, argmax_indices) -> RhoEstimate:
    """rho = max over blocks of the empirical argmax probability."""
    idx = np.asarray(argmax_indices)
    npaths = idx.size
    if npaths < MC_RHO_MIN_PATHS:
        raise ValueError(f"Monte Carlo rho needs >= {MC_RHO_MIN_PATHS} paths")
    hist = np.bincount(idx, minlength=cov.n)
    probs = np.array([hist[b].sum() / npaths for b in cov.blocks])
    k = int(np.argmax(probs))
    rho = float(probs[k])
    se = math.sqrt(max(rho * (1 - rho), 1.0 / npaths) / npaths)
    return RhoEstimate(rho, "monte_carlo", se=se, block_index=k, degenerate=rho >= 1.0)


def sudakov_exponent(delta: float, c_sud: float = DEFAULT_C_SUD) -> float:
    """Exponent eps in P(I = i) <= 2/n^eps from the minoration of E[max]."""
    return (c_sud * delta) ** 2 / 2.0


def rho_analytic_sequence(
    n: int, alpha: float, delta: float, c_sud: float = DEFAULT_C_SUD
) -> RhoEstimate:
    """Block argmax probability bound rho = min(1, 4/n^eta), eta = eps - alpha."""
    if delta <= 0:
        raise ValueError("analytic rho needs delta = 2(1 - phi(1)) > 0")
    eps = sudakov_exponent(delta, c_sud)
    eta = eps - alpha
    if eta <= 0:
        raise ValueError(
            f"analytic route invalid: eta = {eta:.4g} <= 0; requires "
            f"alpha < (c*delta)^2/2 = {eps:.4g}"
        )
    rho = min(1.0, 4.0 / n**eta)
    return RhoEstimate(rho, "analytic", eta=eta, degenerate=rho >= 1.0)


def bound_scale(r0: float, rho: float) -> float:
    """K = max(r_0, 1/log(1/rho)); infinite when rho >= 1."""
    if rho >= 1.0:
        return math.inf
    return max(r0, 1.0 / math.log(1.0 / rho))


@dataclass
class BoundReport:
    pipeline: str
    K: float
    r0: float
    rho: float
    rho_source: str
    c: float = 1.0
    n: int | None = None
    alpha: float | None = None
    m: int | None = None
    rho_se: float = 0.0
    eta: float | None = None
    delta: float | None = None
    K_paper: float | None = None
    N_A: int | None = None
    s0: float | None = None
    c1: float | None = None
    c2: float | None = None
    fit_slope: float | None = None
    exponent_ratio: float | None = None
    epsilon: float | None = None
    degenerate: bool = False
    covering: Covering | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if k == "covering":
                if v is not None:
                    out["covering_blocks"] = len(v.blocks)
                    out["covering_multiplicity"] = v.multiplicity
                    out["covering_provenance"] = v.provenance
            elif v is not None:
                out[k] = v
        return out


def _gate_hypotheses(model: CovarianceModel):
    rep = check_hypotheses(model)
    if not rep.nonincreasing:
        raise HypothesisError(
            f"phi must be non-increasing; violated near lags "
            f"{rep.details.get('nonincreasing_witness')}"
        )
    if not rep.phi1_lt_half:
        raise HypothesisError(
            f"phi(1) < 1/2 violated: phi(1) = {rep.details['phi1']:.6g}"
        )


def sequence_bound(
    model: CovarianceModel,
    n: int,
    alpha: float,
    rho_source: str = "monte_carlo",
    c_sud: float = DEFAULT_C_SUD,
    c: float = 1.0,
    batch: int = MC_RHO_MIN_PATHS,
    seed: int = 0,
    method: str | None = None,
) -> BoundReport:
    """Assemble the full constant pipeline of the sequence tail bound."""
    _gate_hypotheses(model)
    phi1 = evaluate(model, 1.0)
    delta = 2.0 * (1.0 - phi1)

    if model.kind == "iid":
        cov = singleton_covering(n)
        m = int(math.floor(n**alpha))
        r0 = 0.0
        if rho_source == "monte_carlo":
            _, argmax = sample_maxima(model, n, batch, seed, method)
            rho = rho_monte_carlo(cov, argmax)
        else:
            # argmax is uniform by exchangeability: rho = 1/n exactly
            rho = RhoEstimate(1.0 / n, "analytic", eta=None)
    else:
        cov = build_sequence_covering(n, alpha)
        m = int(math.floor(n**alpha))
        cov.r0 = r0 = float(evaluate(model, float(m)))
        if rho_source == "monte_carlo":
            _, argmax = sample_maxima(model, n, batch, seed, method)
            rho = rho_monte_carlo(cov, argmax)
        elif rho_source == "analytic":
            rho = rho_analytic_sequence(n, alpha, delta, c_sud)
        else:
            raise ValueError(f"unknown rho source {rho_source!r}")

    K = bound_scale(r0, rho.rho)
    K_paper = max(float(evaluate(model, float(n) ** alpha)), 1.0 / math.log(n))
    return BoundReport(
        pipeline="sequence", K=K, r0=r0, rho=rho.rho, rho_source=rho.source,
        c=c, n=n, alpha=alpha, m=m, rho_se=rho.se, eta=rho.eta, delta=delta,
        K_paper=K_paper, degenerate=rho.degenerate or not math.isfinite(K),
        covering=cov,
    )


# ---------------------------------------------------------------------------
# field pipeline

def covering_number_box(extent, d: int) -> int:
    """Unit-ball covering number of a box: prod(ceil(extent_i / 2)).

    For d = 1 and A = [0, T] this is T/2 (radius-1 balls are length-2
    intervals).
    """
    extents = [float(e) for e in (extent if np.iterable(extent) else [extent] * d)]
    if len(extents) != d:
        raise ValueError("extent must give one length per axis")
    return int(np.prod([math.ceil(e / 2.0) for e in extents]))


def greedy_net(points: np.ndarray, s0: float) -> np.ndarray:
    """Indices of a maximal s0-separated subset, grown greedily in order.

    Kept points are mutually separated by distance > s0; maximality means
    every input point is within s0 of some kept point.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    kept: list[int] = []
    for i in range(pts.shape[0]):
        if not kept:
            kept.append(i)
            continue
        d2 = np.sum((pts[kept] - pts[i]) ** 2, axis=1)
        if np.all(d2 > s0 * s0):
            kept.append(i)
    return np.array(kept)


def verify_net(points: np.ndarray, net_idx: np.ndarray, s0: float):
    """Exhaustive separation + maximality check; returns (ok, witness)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    net = pts[net_idx]
    dn = np.sqrt(np.sum((net[:, None, :] - net[None, :, :]) ** 2, axis=-1))
    np.fill_diagonal(dn, np.inf)
    if dn.min(initial=np.inf) <= s0:
        i, j = np.unravel_index(int(np.argmin(dn)), dn.shape)
        return False, ("separation", int(net_idx[i]), int(net_idx[j]))
    dall = np.sqrt(np.sum((pts[:, None, :] - net[None, :, :]) ** 2, axis=-1))
    nearest = dall.min(axis=1)
    if np.any(nearest > s0):
        return False, ("maximality", int(np.argmax(nearest)))
    return True, None


def net_ball_covering(points: np.ndarray, net_idx: np.ndarray, radius: float,
                      r0: float) -> Covering:
    """Blocks = balls of the given radius around net points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    blocks = []
    for i in net_idx:
        d2 = np.sum((pts - pts[i]) ** 2, axis=1)
        blocks.append(np.nonzero(d2 <= radius * radius)[0])
    member_count = np.zeros(pts.shape[0], dtype=int)
    for b in blocks:
        member_count[b] += 1
    return Covering(blocks, r0=r0, multiplicity=int(member_count.max()),
                    provenance="field-net", n=pts.shape[0])


def estimate_field_growth(
    model: CovarianceModel,
    d: int,
    extent,
    spacing: float = 1.0,
    batch: int = 400,
    seed: int = 0,
) -> tuple[float, float, float, list[tuple[int, float]]]:
    """Estimate c1 <= m(A)/sqrt(log N(A)) <= c2 over dyadic sub-boxes.

    Returns (c1, c2, regression slope, per-scale (N, mean sup) data).
    """
    extents = np.array(
        [float(e) for e in (extent if np.iterable(extent) else [extent] * d)]
    )
    data = []
    cell = 0
    scale = extents.copy()
    while True:
        n_a = covering_number_box(scale, d)
        if n_a <= 1 or any(s < spacing for s in scale):
            break
        sb = sample_field_grid(model, d, scale, spacing, batch, seed,
                               stream_offset=cell * batch)
        data.append((n_a, max_argmax(sb).mean))
        scale = scale / 2.0
        cell += 1
    if len(data) < 2:
        raise ValueError("need at least 2 dyadic scales with N(A) > 1")
    xs = np.array([math.sqrt(math.log(n_a)) for n_a, _ in data])
    ys = np.array([m for _, m in data])
    ratios = ys / xs
    slope = float(np.polyfit(xs, ys, 1)[0])
    return float(ratios.min()), float(ratios.max()), slope, data


def field_bound(
    model: CovarianceModel,
    d: int,
    extent,
    exponent_ratio: float | None = None,
    spacing: float = 1.0,
    batch: int = 400,
    seed: int = 0,
    c: float = 1.0,
    c1: float | None = None,
    c2: float | None = None,
) -> BoundReport:
    """Field-pipeline constants: N(A), s_0-net covering and K_{N(A)}."""
    n_a = covering_number_box(extent, d)
    if n_a <= 1:
        raise ValueError(f"field bound needs N(A) > 1, got {n_a}")
    _gate_hypotheses(model)

    slope = None
    if c1 is None or c2 is None:
        c1, c2, slope, _ = estimate_field_growth(model, d, extent, spacing, batch, seed)
    if exponent_ratio is None:
        exponent_ratio = (c1 / c2) ** 2 / 8.0

    s0 = n_a**exponent_ratio
    pts, _ = grid_points(d, extent, spacing)
    net_idx = greedy_net(pts, s0)
    r0 = float(evaluate(model, s0))
    cov = net_ball_covering(pts, net_idx, 2.0 * s0, r0)

    rho = min(1.0, 1.0 / n_a**exponent_ratio)
    K = max(float(evaluate(model, float(n_a) ** exponent_ratio)),
            1.0 / math.log(n_a))
    return BoundReport(
        pipeline="field", K=K, r0=r0, rho=rho, rho_source="analytic", c=c,
        N_A=n_a, s0=float(s0), c1=c1, c2=c2, fit_slope=slope,
        exponent_ratio=float(exponent_ratio),
        degenerate=rho >= 1.0, covering=cov,
    )


# ---------------------------------------------------------------------------
# epsilon-correlated vectors and sign-vector sets

def correlated_bound(
    eps: float, n: int, gram: np.ndarray | None = None, c: float = 1.0
) -> BoundReport:
    """Singleton-covering bound K = max(eps, 1/log n) for weak correlations."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if n < 2:
        raise ValueError("n must be at least 2")
    if gram is not None:
        off = gram - np.diag(np.diag(gram))
        if np.any(off > eps):
            i, j = np.unravel_index(int(np.argmax(off)), off.shape)
            raise ValueError(
                f"gram entry ({i}, {j}) = {off[i, j]:.6g} exceeds eps = {eps}"
            )
    K = max(eps, 1.0 / math.log(n))
    return BoundReport(
        pipeline="correlated", K=K, r0=eps, rho=1.0 / n, rho_source="analytic",
        c=c, n=n, epsilon=eps, covering=singleton_covering(n, r0=eps),
    )


@dataclass
class SignVectorSet:
    vectors: np.ndarray  # (found, n), entries +-1
    threshold: float
    tries: int
    accepted: int
    saturated: bool
    pair_tests: int
    pair_pass: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.tries if self.tries else math.nan

    @property
    def pair_pass_rate(self) -> float:
        return self.pair_pass / self.pair_tests if self.pair_tests else math.nan


def find_sign_vectors(
    n: int,
    N_target: int,
    threshold: float | None = None,
    seed: int = 0,
    max_tries: int = 10**5,
) -> SignVectorSet:
    """Rejection-sample sign vectors with pairwise |dot| below the threshold.

    Candidates are uniform on {-1, 1}^n; one is kept when its dot product
    with every vector already kept stays within the threshold (default
    n^{2/3}).  If max_tries is exhausted the partial set is returned with
    the saturation flag raised.
    """
    if N_target < 2:
        raise ValueError("N_target must be at least 2")
    if threshold is None:
        threshold = n ** (2.0 / 3.0)
    kept = np.empty((N_target, n), dtype=np.int8)
    found = 0
    tries = 0
    pair_tests = 0
    pair_pass = 0
    while found < N_target and tries < max_tries:
        g = rng.stream_generator(seed, tries)
        cand = (g.integers(0, 2, size=n) * 2 - 1).astype(np.int8)
        tries += 1
        if found:
            dots = kept[:found].astype(np.int64) @ cand.astype(np.int64)
            ok_mask = np.abs(dots) <= threshold
            pair_tests += found
            pair_pass += int(ok_mask.sum())
            if not ok_mask.all():
                continue
        kept[found] = cand
        found += 1
    return SignVectorSet(
        vectors=kept[:found].copy(), threshold=float(threshold), tries=tries,
        accepted=found, saturated=found < N_target,
        pair_tests=pair_tests, pair_pass=pair_pass,
    )


def verify_sign_vectors(vectors: np.ndarray, threshold: float):
    """Exhaustive pairwise check; returns (ok, witness pair or None)."""
    v = np.asarray(vectors, dtype=np.int64)
    dots = v @ v.T
    np.fill_diagonal(dots, 0)
    bad = np.abs(dots) > threshold
    if bad.any():
        i, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
        return False, (int(i), int(j))
    return True, None


# ---------------------------------------------------------------------------
# tail curves

def tail_curve(K: float, c: float, t_grid) -> np.ndarray:
    """Superconcentration bound 6 exp(-c t / sqrt(K)) on a t grid."""
    if K <= 0 or c <= 0:
        raise ValueError("K and c must be positive")
    t = np.asarray(t_grid, dtype=float)
    return 6.0 * np.exp(-c * t / math.sqrt(K))


def gaussian_tail_curve(t_grid) -> np.ndarray:
    """Classical Gaussian concentration bound 2 exp(-t^2 / 2)."""
    t = np.asarray(t_grid, dtype=float)
    return 2.0 * np.exp(-(t**2) / 2.0)


def _bisect(f, lo, hi, rel_tol=1e-9):
    flo = f(lo)
    while hi - lo > rel_tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def crossover_window(K: float, c: float) -> tuple[float, float] | None:
    """t interval on which the superconcentration curve beats the Gaussian one.

    Solves 6 exp(-c t / sqrt(K)) = 2 exp(-t^2 / 2), i.e.
    c t / sqrt(K) = t^2 / 2 + log 3, by bisection.  Returns None when the
    curves never cross (the linear exponent never gains log 3 on t^2/2).
    """
    if K <= 0 or c <= 0:
        raise ValueError("K and c must be positive")
    a = c / math.sqrt(K)
    h = lambda t: a * t - t * t / 2.0 - math.log(3.0)
    t_peak = a
    if h(t_peak) <= 0:
        return None
    hi = 2 * t_peak + 1.0
    while h(hi) > 0:
        hi *= 2.0
    t_lo = _bisect(h, 0.0, t_peak)
    t_hi = _bisect(h, t_peak, hi)
    return (t_lo, t_hi)
