"""Exact samplers for stationary Gaussian sequences and grid fields.

Two exact methods:

* ``cholesky`` — factor the gram matrix; reference method, always exact
  when the factorization succeeds.
* ``circulant`` — embed the Toeplitz gram into a nonnegative-definite
  circulant and diagonalize by FFT; the fast path for long sequences.

Each path draws from its own counter-based stream (see :mod:`superconc.rng`),
so batches are bit-reproducible regardless of chunking or scheduling.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .covariance import CovarianceModel, evaluate, gram_matrix, toeplitz_lags

DEFAULT_CAP_BYTES = 2**31
CHOLESKY_MAX_N = 2048  # default method switches to circulant above this
EMBED_REL_TOL = 1e-10
EMBED_MAX_DOUBLINGS = 6


def capacity_bytes() -> int:
    return int(os.environ.get("SUPERCONC_CAP_BYTES", DEFAULT_CAP_BYTES))


class CapacityError(MemoryError):
    """Requested batch would exceed the configured memory cap."""


class DecompositionError(ValueError):
    """Gram matrix is not numerically positive definite."""

    def __init__(self, order: int):
        self.order = order
        super().__init__(
            f"gram matrix is not positive definite: leading minor of order "
            f"{order} fails Cholesky"
        )


class EmbeddingError(ValueError):
    """Circulant embedding has a significantly negative eigenvalue."""

    def __init__(self, worst: float, sizes: list[int]):
        self.worst = worst
        self.sizes = sizes
        super().__init__(
            f"circulant embedding not nonnegative definite: most negative "
            f"eigenvalue {worst:.3e} after trying sizes {sizes}"
        )


@dataclass(frozen=True)
class GridGeometry:
    d: int
    spacing: float
    extent: tuple[float, ...]
    shape: tuple[int, ...]


@dataclass
class SampleBatch:
    paths: np.ndarray  # (batch, n); fields are flattened C-order
    model: CovarianceModel
    seed: int
    method: str
    stream_offset: int = 0
    geometry: GridGeometry | None = None

    @property
    def n(self) -> int:
        return self.paths.shape[1]

    @property
    def batch(self) -> int:
        return self.paths.shape[0]


@dataclass
class CoupledBatch:
    base: SampleBatch
    evolved: SampleBatch
    t: float


def _check_capacity(nbytes: int):
    cap = capacity_bytes()
    if nbytes > cap:
        raise CapacityError(
            f"request needs ~{nbytes} bytes, cap is {cap} "
            "(override with SUPERCONC_CAP_BYTES)"
        )


def _cholesky_factor(gram: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        # locate the smallest failing leading minor for the error message
        lo, hi = 1, gram.shape[0]
        while lo < hi:
            mid = (lo + hi) // 2
            try:
                np.linalg.cholesky(gram[:mid, :mid])
                lo = mid + 1
            except np.linalg.LinAlgError:
                hi = mid
        raise DecompositionError(lo) from None


def circulant_embedding(
    model: CovarianceModel, n: int, spacing: float = 1.0
) -> tuple[np.ndarray, int]:
    """Nonnegative eigenvalue vector of a circulant embedding of the gram.

    Starts from the even size 2n (first row phi(0..n) followed by its
    reflection) and doubles the padding until the FFT eigenvalues are
    nonnegative within a relative tolerance, clipping residual roundoff.
    """
    tried = []
    worst = math.inf
    for k in range(EMBED_MAX_DOUBLINGS + 1):
        m = 2 * n * 2**k
        wrapped = np.minimum(np.arange(m), m - np.arange(m))
        row = np.atleast_1d(evaluate(model, spacing * wrapped.astype(float)))
        eig = np.fft.fft(row).real
        tried.append(m)
        neg = float(eig.min())
        worst = min(worst, neg)
        if neg >= -EMBED_REL_TOL * float(eig.max()):
            return np.clip(eig, 0.0, None), m
    raise EmbeddingError(worst, tried)


def _circulant_paths(eig, m, batch, seed, offset, out_cols):
    """Sample rows from the circulant with eigenvalues ``eig`` (length m)."""
    _check_capacity(batch * m * 16 + batch * m * 16)
    eps = rng.complex_normal_rows(seed, batch, m, offset=offset)
    amp = np.sqrt(eig / m)
    x = np.fft.fft(amp * eps, axis=1).real
    return np.ascontiguousarray(x[:, :out_cols])


def sample_sequence(
    model: CovarianceModel,
    n: int,
    batch: int,
    seed: int,
    method: str | None = None,
    stream_offset: int = 0,
) -> SampleBatch:
    """Exact draws from N(0, Gamma) with Gamma[i, j] = phi(|i - j|)."""
    if n < 1 or batch < 1:
        raise ValueError("n and batch must be positive")
    if method is None:
        method = "circulant" if n > CHOLESKY_MAX_N else "cholesky"
    if method not in ("cholesky", "circulant"):
        raise ValueError(f"unknown method {method!r}")

    if model.kind == "iid":
        # gram is the identity; both factorizations reduce to raw noise
        _check_capacity(batch * n * 8)
        paths = rng.normal_rows(seed, batch, n, offset=stream_offset)
    elif method == "cholesky":
        _check_capacity(batch * n * 8 + 2 * n * n * 8)
        lower = _cholesky_factor(gram_matrix(model, np.arange(n)))
        noise = rng.normal_rows(seed, batch, n, offset=stream_offset)
        paths = noise @ lower.T
    else:
        eig, m = circulant_embedding(model, n)
        paths = _circulant_paths(eig, m, batch, seed, stream_offset, n)

    return SampleBatch(paths, model, seed, method, stream_offset)


def grid_points(d: int, extent, spacing: float) -> tuple[np.ndarray, GridGeometry]:
    """Regular grid over [0, extent_i] per axis, including both endpoints."""
    if d not in (1, 2):
        raise ValueError("only d in {1, 2} is supported")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    extents = tuple(float(e) for e in (extent if np.iterable(extent) else [extent] * d))
    if len(extents) != d:
        raise ValueError("extent must give one length per axis")
    shape = tuple(int(math.floor(e / spacing + 1e-9)) + 1 for e in extents)
    if any(s < 2 for s in shape):
        raise ValueError("extent/spacing must yield at least 2 points per axis")
    axes = [spacing * np.arange(s) for s in shape]
    if d == 1:
        pts = axes[0][:, None]
    else:
        g0, g1 = np.meshgrid(axes[0], axes[1], indexing="ij")
        pts = np.column_stack([g0.ravel(), g1.ravel()])
    return pts, GridGeometry(d=d, spacing=spacing, extent=extents, shape=shape)


def _circulant_embedding_2d(model, shape, spacing):
    tried = []
    worst = math.inf
    for k in range(EMBED_MAX_DOUBLINGS + 1):
        ms = tuple(2 * s * 2**k for s in shape)
        w0 = np.minimum(np.arange(ms[0]), ms[0] - np.arange(ms[0]))
        w1 = np.minimum(np.arange(ms[1]), ms[1] - np.arange(ms[1]))
        dist = spacing * np.sqrt(w0[:, None] ** 2.0 + w1[None, :] ** 2.0)
        eig = np.fft.fft2(evaluate(model, dist)).real
        tried.append(ms)
        neg = float(eig.min())
        worst = min(worst, neg)
        if neg >= -EMBED_REL_TOL * float(eig.max()):
            return np.clip(eig, 0.0, None), ms
    raise EmbeddingError(worst, tried)


def sample_field_grid(
    model: CovarianceModel,
    d: int,
    extent,
    spacing: float,
    batch: int,
    seed: int,
    method: str | None = None,
    stream_offset: int = 0,
) -> SampleBatch:
    """Exact draw of the field restricted to a regular grid (flattened C-order)."""
    pts, geom = grid_points(d, extent, spacing)
    npts = pts.shape[0]
    if method is None:
        method = "circulant" if npts > CHOLESKY_MAX_N else "cholesky"
    if method not in ("cholesky", "circulant"):
        raise ValueError(f"unknown method {method!r}")

    if model.kind == "iid":
        _check_capacity(batch * npts * 8)
        paths = rng.normal_rows(seed, batch, npts, offset=stream_offset)
    elif method == "cholesky":
        _check_capacity(batch * npts * 8 + 2 * npts * npts * 8)
        lower = _cholesky_factor(gram_matrix(model, pts))
        noise = rng.normal_rows(seed, batch, npts, offset=stream_offset)
        paths = noise @ lower.T
    elif d == 1:
        eig, m = circulant_embedding(model, geom.shape[0], spacing=spacing)
        paths = _circulant_paths(eig, m, batch, seed, stream_offset, geom.shape[0])
    else:
        eig, ms = _circulant_embedding_2d(model, geom.shape, spacing)
        mtot = ms[0] * ms[1]
        _check_capacity(2 * batch * mtot * 16)
        eps = rng.complex_normal_rows(seed, batch, mtot, offset=stream_offset)
        amp = np.sqrt(eig / mtot)
        x = np.fft.fft2(amp[None, :, :] * eps.reshape(batch, *ms), axes=(1, 2)).real
        paths = np.ascontiguousarray(
            x[:, : geom.shape[0], : geom.shape[1]].reshape(batch, npts)
        )

    return SampleBatch(paths, model, seed, method, stream_offset, geometry=geom)


def evolve_pair(batch: SampleBatch, t: float, seed2: int) -> CoupledBatch:
    """Couple the batch with its semigroup evolution at time t.

    evolved = e^{-t} * base + sqrt(1 - e^{-2t}) * independent copy,
    entrywise.  The evolved marginal law equals the base law and
    Cov(base_i, evolved_j) = e^{-t} Gamma_{ij}.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        evolved = replace(batch, paths=batch.paths.copy(), seed=seed2)
        return CoupledBatch(batch, evolved, 0.0)
    if batch.geometry is None:
        fresh = sample_sequence(
            batch.model, batch.n, batch.batch, seed2, batch.method, batch.stream_offset
        )
    else:
        g = batch.geometry
        fresh = sample_field_grid(
            batch.model, g.d, g.extent, g.spacing, batch.batch, seed2,
            batch.method, batch.stream_offset,
        )
    mixed = math.exp(-t) * batch.paths + math.sqrt(-math.expm1(-2 * t)) * fresh.paths
    evolved = replace(fresh, paths=mixed)
    return CoupledBatch(batch, evolved, float(t))


# ---------------------------------------------------------------------------
# binary path dump: 32-byte header + column-major float64 matrix + JSON sidecar

_MAGIC = b"SCPATHS\x00"
_VERSION = 1
_HEADER = struct.Struct("<8sIIII8x")  # magic, version, n, batch, flags


def dump_paths(batch: SampleBatch, path: str):
    flags = 1  # float64
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, batch.n, batch.batch, flags))
        fh.write(np.asfortranarray(batch.paths).tobytes(order="F"))
    sidecar = {
        "model": json.loads(batch.model.to_json()),
        "seed": batch.seed,
        "method": batch.method,
        "stream_offset": batch.stream_offset,
    }
    if batch.geometry is not None:
        g = batch.geometry
        sidecar["geometry"] = {
            "d": g.d, "spacing": g.spacing,
            "extent": list(g.extent), "shape": list(g.shape),
        }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_paths(path: str) -> SampleBatch:
    with open(path, "rb") as fh:
        magic, version, n, nbatch, flags = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError("not a path dump file")
        if version != _VERSION:
            raise ValueError(f"unsupported path dump version {version}")
        if not flags & 1:
            raise ValueError("only float64 dumps are supported")
        data = np.frombuffer(fh.read(n * nbatch * 8), dtype=np.float64)
    paths = np.ascontiguousarray(data.reshape((nbatch, n), order="F"))
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    model = CovarianceModel.from_json(json.dumps(sidecar["model"]))
    geom = None
    if "geometry" in sidecar:
        g = sidecar["geometry"]
        geom = GridGeometry(
            d=g["d"], spacing=g["spacing"],
            extent=tuple(g["extent"]), shape=tuple(g["shape"]),
        )
    return SampleBatch(
        paths, model, sidecar["seed"], sidecar["method"],
        sidecar["stream_offset"], geometry=geom,
    )
