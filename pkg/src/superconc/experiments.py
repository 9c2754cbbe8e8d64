"""Seeded experiment grids and machine-readable result files.

An :class:`ExperimentConfig` fully determines a run: equal configs produce
byte-identical CSV and summary JSON.  The manifest additionally records
wall time and the library version and is exempt from that guarantee.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import CovarianceModel
from .covering import (
    field_bound,
    find_sign_vectors,
    gaussian_tail_curve,
    sequence_bound,
    tail_curve,
)
from .extremes import centering_gap, ks_to_gumbel, sample_maxima
from .sampler import capacity_bytes
from .scantest import (
    ScanClass,
    disjoint_class,
    estimate_E0max,
    estimate_risk,
    sliding_class,
    threshold_table,
)
from .verify import (
    estimate_tail,
    fit_gaussian_rate,
    fit_tail_rate,
    laplace_check,
    variance_with_se,
)

EXPERIMENT_KINDS = (
    "gumbel_convergence",
    "variance_scaling",
    "tail_bounds",
    "laplace_check",
    "field_bound",
    "scan_risk",
    "sign_vectors",
)


class SchemaError(ValueError):
    """Config validation failure; message names the offending field."""


def fmt(x) -> str:
    """Fixed 17-significant-digit float formatting for reproducible files."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class ExperimentConfig:
    kind: str
    model: CovarianceModel = field(default_factory=lambda: CovarianceModel("iid"))
    sizes: tuple[int, ...] = (1024,)
    batch: int = 10**4
    seed: int = 0
    out: str = "out"
    jobs: int = 1
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "model": json.loads(self.model.to_json()),
            "sizes": list(self.sizes),
            "batch": self.batch,
            "seed": self.seed,
            "out": self.out,
            "jobs": self.jobs,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if "kind" not in obj:
            raise SchemaError("missing field 'kind'")
        model = obj.get("model", {"kind": "iid"})
        try:
            model = CovarianceModel.from_json(json.dumps(model))
        except (ValueError, KeyError) as exc:
            raise SchemaError(f"field 'model': {exc}") from exc
        return cls(
            kind=obj["kind"],
            model=model,
            sizes=tuple(int(s) for s in obj.get("sizes", [1024])),
            batch=int(obj.get("batch", 10**4)),
            seed=int(obj.get("seed", 0)),
            out=str(obj.get("out", "out")),
            jobs=int(obj.get("jobs", 1)),
            params=dict(obj.get("params", {})),
        )

    @classmethod
    def from_json_file(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def validate(config: ExperimentConfig) -> list[str]:
    """Dry-run diagnostics; an empty list means the config is runnable."""
    diags = []
    if config.kind not in EXPERIMENT_KINDS:
        diags.append(
            f"field 'kind': unknown experiment kind {config.kind!r}; "
            f"expected one of {', '.join(EXPERIMENT_KINDS)}"
        )
        return diags
    if config.batch < 1:
        diags.append("field 'batch': must be positive")
    if any(s < 1 for s in config.sizes):
        diags.append("field 'sizes': entries must be positive")
    alpha = config.params.get("alpha")
    if alpha is not None and not 0 < alpha < 1:
        diags.append(
            f"field 'params.alpha': {alpha} outside the admissible range (0, 1)"
        )
    # memory estimate for the largest grid cell (chunked generation)
    if config.kind == "field_bound":
        extent = config.params.get("extent", 100.0)
        spacing = config.params.get("spacing", 1.0)
        d = int(config.params.get("d", 1))
        extents = extent if np.iterable(extent) else [extent] * d
        npts = int(np.prod([math.floor(e / spacing) + 1 for e in extents]))
        need = min(config.batch, 400) * npts * 16 + npts * npts * 8
        if need > capacity_bytes():
            diags.append(
                f"capacity: field grid of {npts} points needs ~{need} bytes, "
                f"cap is {capacity_bytes()}"
            )
    elif config.sizes and all(s >= 1 for s in config.sizes):
        n = max(config.sizes)
        chunk = max(1, min(config.batch, (1 << 24) // n))
        need = chunk * n * 32
        if need > capacity_bytes():
            diags.append(
                f"capacity: largest cell (n={n}) needs ~{need} bytes per chunk, "
                f"cap is {capacity_bytes()}"
            )
    return diags


def _cell_seed(seed: int, idx: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(idx,)).generate_state(1)[0])


def _map_cells(fn, cells, jobs: int):
    if jobs <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, cells))


def _write_csv(path: Path, header: list[str], rows: list[tuple]):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, obj):
    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"unserializable {type(o)}")

    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n")


def _run_variance_scaling(cfg):
    def cell(item):
        i, n = item
        maxima, _ = sample_maxima(cfg.model, n, cfg.batch, _cell_seed(cfg.seed, i))
        var, se = variance_with_se(maxima)
        return n, var, se, var * math.log(n)

    rows = _map_cells(cell, list(enumerate(cfg.sizes)), cfg.jobs)
    summary = {
        "per_n": [
            {"n": n, "var": v, "se": se, "var_times_logn": vl}
            for n, v, se, vl in rows
        ]
    }
    return ["n", "var", "se", "var_times_logn"], rows, summary


def _run_gumbel_convergence(cfg):
    def cell(item):
        i, n = item
        maxima, _ = sample_maxima(cfg.model, n, cfg.batch, _cell_seed(cfg.seed, i))
        return n, ks_to_gumbel(maxima, n), centering_gap(maxima, n)

    rows = _map_cells(cell, list(enumerate(cfg.sizes)), cfg.jobs)
    summary = {
        "per_n": [{"n": n, "ks": k, "centering_gap": g} for n, k, g in rows]
    }
    return ["n", "ks", "centering_gap"], rows, summary


def _run_tail_bounds(cfg):
    n = cfg.sizes[0]
    p = cfg.params
    t_grid = np.linspace(0.0, float(p.get("t_max", 2.0)), int(p.get("t_points", 41)))
    tail = estimate_tail(
        cfg.model, n, cfg.batch, p.get("center", "mean"), t_grid,
        _cell_seed(cfg.seed, 0),
    )
    K = float(p.get("K", 1.0 / math.log(n)))
    exp_fit = fit_tail_rate(tail, K)
    gauss_fit = fit_gaussian_rate(tail)
    bound = tail_curve(K, exp_fit.rate, t_grid) if exp_fit.rate > 0 else np.full_like(t_grid, np.nan)
    gbound = gaussian_tail_curve(t_grid)
    rows = [
        (t_grid[i], tail.survival[i], tail.lo[i], tail.hi[i], bound[i], gbound[i])
        for i in range(len(t_grid))
    ]
    summary = {
        "n": n, "K": K, "center": tail.center, "center_value": tail.center_value,
        "c_hat": exp_fit.rate, "r2": exp_fit.r2, "exp_fit_ok": exp_fit.ok,
        "gaussian_rate": gauss_fit.rate, "gaussian_r2": gauss_fit.r2,
    }
    return ["t", "survival", "lo", "hi", "bound", "gaussian_bound"], rows, summary


def _run_laplace_check(cfg):
    theta_points = int(cfg.params.get("theta_points", 21))
    rows = []
    per_n = []
    for i, n in enumerate(cfg.sizes):
        maxima, _ = sample_maxima(cfg.model, n, cfg.batch, _cell_seed(cfg.seed, i))
        K = float(cfg.params.get("K", 1.0 / math.log(n)))
        chk = laplace_check(maxima, K, theta_points)
        for j in range(theta_points):
            rows.append((n, chk.theta[j], chk.margin[j], chk.margin_se[j]))
        per_n.append({"n": n, "K": K, "C_hat": chk.C_hat,
                      "overflow": bool(chk.overflow.any())})
    return ["n", "theta", "margin", "margin_se"], rows, {"per_n": per_n}


def _run_field_bound(cfg):
    p = cfg.params
    report = field_bound(
        cfg.model, int(p.get("d", 1)), p.get("extent", 100.0),
        exponent_ratio=p.get("exponent_ratio"),
        spacing=float(p.get("spacing", 1.0)),
        batch=int(p.get("growth_batch", 400)), seed=cfg.seed,
        c=float(p.get("c", 1.0)),
    )
    t_grid = np.linspace(0.0, float(p.get("t_max", 4.0)), int(p.get("t_points", 41)))
    curve = tail_curve(report.K, report.c, t_grid)
    rows = list(zip(t_grid, curve, gaussian_tail_curve(t_grid)))
    return ["t", "bound", "gaussian_bound"], rows, report.to_dict()


def _build_scan_class(p: dict) -> ScanClass:
    if "sets" in p:
        return ScanClass(int(p["n"]), np.asarray(p["sets"]))
    gen = p.get("generator", "disjoint:10,10")
    name, _, args = gen.partition(":")
    a, b = (int(v) for v in args.split(","))
    if name == "disjoint":
        return disjoint_class(a, b, n=p.get("n"))
    if name == "sliding":
        return sliding_class(a, b)
    raise SchemaError(f"field 'params.generator': unknown generator {name!r}")


def _run_scan_risk(cfg):
    p = cfg.params
    cls = _build_scan_class(p)
    delta = float(p.get("delta", 0.2))
    trials = int(p.get("trials", 2000))
    report = estimate_risk(
        cls, mu=p.get("mu"), threshold_kind=p.get("threshold", "prop51"),
        c=p.get("c"), trials=trials, seed=cfg.seed, delta_target=delta,
    )
    deltas = p.get("delta_grid", [1.0 / math.log(cls.N), 0.2, 0.1, 0.05, 0.01])
    e0max, _ = estimate_E0max(cls, max(trials, 10**4), cfg.seed)
    table_c = float(p.get("table_c", 1.0))
    rows = threshold_table(cls.K, cls.N, e0max, deltas, c=table_c)
    summary = report.to_dict()
    summary["table_c"] = table_c
    summary["N"] = cls.N
    summary["K"] = cls.K
    return ["delta", "threshold_prop51", "threshold_prop52"], rows, summary


def _run_sign_vectors(cfg):
    p = cfg.params
    n = int(p.get("n", 100))
    result = find_sign_vectors(
        n, int(p.get("N_target", 50)), p.get("threshold"),
        seed=cfg.seed, max_tries=int(p.get("max_tries", 10**5)),
    )
    v = result.vectors.astype(np.int64)
    dots = v @ v.T
    np.fill_diagonal(dots, 0)
    rows = [(i, int(np.abs(dots[i]).max())) for i in range(len(v))]
    summary = {
        "n": n, "found": result.accepted, "tries": result.tries,
        "threshold": result.threshold, "saturated": result.saturated,
        "acceptance_rate": result.acceptance_rate,
        "pair_pass_rate": result.pair_pass_rate,
        "pair_tests": result.pair_tests,
    }
    return ["vector", "max_abs_dot"], rows, summary


_RUNNERS = {
    "variance_scaling": _run_variance_scaling,
    "gumbel_convergence": _run_gumbel_convergence,
    "tail_bounds": _run_tail_bounds,
    "laplace_check": _run_laplace_check,
    "field_bound": _run_field_bound,
    "scan_risk": _run_scan_risk,
    "sign_vectors": _run_sign_vectors,
}


def run(config: ExperimentConfig) -> dict[str, Path]:
    """Execute the experiment; writes data.csv, summary.json and manifest.json."""
    diags = validate(config)
    if diags:
        raise SchemaError("; ".join(diags))
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.monotonic()
    header, rows, summary = _RUNNERS[config.kind](config)
    wall = time.monotonic() - t0

    paths = {
        "csv": outdir / "data.csv",
        "summary": outdir / "summary.json",
        "manifest": outdir / "manifest.json",
    }
    _write_csv(paths["csv"], header, rows)
    _write_json(paths["summary"], summary)
    _write_json(
        paths["manifest"],
        {"config": config.to_dict(), "version": __version__,
         "wall_time_s": wall},
    )
    return paths
