"""Command-line front end.

Subcommands: sample, bound, verify, scan, gumbel, signvec.  Global flags
--config / --seed / --jobs / --out.  Progress goes to stderr; data files
and the JSON summary on stdout stay machine-readable.  The env var
SUPERCONC_CAP_BYTES overrides the memory cap.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .covariance import CovarianceModel
from .covering import correlated_bound, field_bound, sequence_bound, tail_curve
from .experiments import ExperimentConfig, SchemaError, fmt, run, validate
from .sampler import dump_paths, sample_field_grid, sample_sequence


def _load_model(spec: str | None) -> CovarianceModel:
    if spec is None:
        return CovarianceModel("iid")
    text = spec
    if not spec.lstrip().startswith("{"):
        text = Path(spec).read_text()
    return CovarianceModel.from_json(text)


def _progress(msg: str):
    print(msg, file=sys.stderr)


def _emit(obj):
    import numpy as np

    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"unserializable {type(o)}")

    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n")


def _cmd_sample(args) -> int:
    model = _load_model(args.cov)
    if args.d:
        batch = sample_field_grid(
            model, args.d, args.extent, args.spacing, args.batch, args.seed,
            method=args.method,
        )
    else:
        batch = sample_sequence(model, args.n, args.batch, args.seed,
                                method=args.method)
    dump_paths(batch, args.out)
    _progress(f"wrote {batch.batch} paths of length {batch.n} to {args.out}")
    return 0


def _cmd_bound(args) -> int:
    model = _load_model(args.cov)
    if args.pipeline == "sequence":
        report = sequence_bound(
            model, args.n, args.alpha, rho_source=args.rho,
            c=args.c, batch=args.batch, seed=args.seed,
        )
    elif args.pipeline == "field":
        report = field_bound(model, args.d or 1, args.extent, c=args.c,
                             spacing=args.spacing, seed=args.seed)
    else:
        report = correlated_bound(args.eps, args.n, c=args.c)
    d = report.to_dict()
    width = max(len(k) for k in d)
    for k in sorted(d):
        v = d[k]
        _progress(f"{k:<{width}}  {fmt(v) if isinstance(v, float) else v}")
    _emit(d)
    if args.csv:
        import numpy as np

        t = np.linspace(0.0, args.t_max, args.t_points)
        curve = tail_curve(report.K, report.c, t)
        lines = ["t,bound"] + [f"{fmt(a)},{fmt(b)}" for a, b in zip(t, curve)]
        Path(args.csv).write_text("\n".join(lines) + "\n")
    return 0


def _experiment_cmd(args, kind: str, params: dict, sizes=None) -> int:
    cfg = ExperimentConfig(
        kind=kind,
        model=_load_model(getattr(args, "cov", None)),
        sizes=tuple(sizes or [1024]),
        batch=getattr(args, "batch", 10**4),
        seed=args.seed,
        out=args.out,
        jobs=args.jobs,
        params=params,
    )
    return _run_config(cfg)


def _run_config(cfg: ExperimentConfig) -> int:
    diags = validate(cfg)
    if diags:
        for d in diags:
            _progress(f"config error: {d}")
        return 2
    paths = run(cfg)
    _progress(f"wrote {paths['csv']} {paths['summary']} {paths['manifest']}")
    sys.stdout.write(paths["summary"].read_text())
    return 0


def _cmd_verify(args) -> int:
    params = {}
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.theta_points is not None:
        params["theta_points"] = args.theta_points
    if args.t_max is not None:
        params["t_max"] = args.t_max
    return _experiment_cmd(args, args.kind, params, sizes=args.sizes)


def _cmd_scan(args) -> int:
    params = {"delta": args.delta, "threshold": args.threshold,
              "trials": args.trials}
    if args.cls:
        obj = json.loads(Path(args.cls).read_text())
        params["n"] = obj["n"]
        params["sets"] = obj["sets"]
    else:
        params["generator"] = args.generator
    if args.mu is not None:
        params["mu"] = args.mu
    if args.c is not None:
        params["c"] = args.c
    return _experiment_cmd(args, "scan_risk", params)


def _cmd_gumbel(args) -> int:
    return _experiment_cmd(args, "gumbel_convergence", {}, sizes=args.sizes)


def _cmd_signvec(args) -> int:
    params = {"n": args.n, "N_target": args.N, "max_tries": args.max_tries}
    if args.threshold is not None:
        params["threshold"] = args.threshold
    return _experiment_cmd(args, "sign_vectors", params)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superconc")
    p.add_argument("--config", help="run an experiment config JSON file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None)
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("sample", help="draw paths and dump them to a binary file")
    s.add_argument("--cov", help="covariance model JSON (inline or file)")
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--batch", type=int, default=100)
    s.add_argument("--method", choices=["cholesky", "circulant"])
    s.add_argument("--d", type=int, choices=[1, 2])
    s.add_argument("--extent", type=float, default=10.0)
    s.add_argument("--spacing", type=float, default=1.0)
    s.set_defaults(fn=_cmd_sample)

    b = sub.add_parser("bound", help="print the constant pipeline of a bound")
    b.add_argument("--pipeline", choices=["sequence", "field", "correlated"],
                   default="sequence")
    b.add_argument("--cov")
    b.add_argument("--n", type=int, default=1024)
    b.add_argument("--alpha", type=float, default=0.5)
    b.add_argument("--rho", choices=["monte_carlo", "analytic"],
                   default="monte_carlo")
    b.add_argument("--c", type=float, default=1.0)
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--d", type=int, choices=[1, 2])
    b.add_argument("--extent", type=float, default=100.0)
    b.add_argument("--spacing", type=float, default=1.0)
    b.add_argument("--batch", type=int, default=10**4)
    b.add_argument("--csv", help="also write a (t, bound) CSV here")
    b.add_argument("--t-max", type=float, default=4.0)
    b.add_argument("--t-points", type=int, default=41)
    b.set_defaults(fn=_cmd_bound)

    v = sub.add_parser("verify", help="Monte Carlo verification experiments")
    v.add_argument("kind", choices=["variance_scaling", "tail_bounds",
                                    "laplace_check"])
    v.add_argument("--cov")
    v.add_argument("--sizes", type=int, nargs="+", default=[64, 1024])
    v.add_argument("--batch", type=int, default=10**4)
    v.add_argument("--alpha", type=float)
    v.add_argument("--theta-points", type=int)
    v.add_argument("--t-max", type=float)
    v.set_defaults(fn=_cmd_verify)

    sc = sub.add_parser("scan", help="scan-test risk estimation")
    sc.add_argument("--class", dest="cls", help="JSON file with {n, sets}")
    sc.add_argument("--generator", default="disjoint:10,10",
                    help="disjoint:N,K or sliding:n,K")
    sc.add_argument("--mu", type=float)
    sc.add_argument("--delta", type=float, default=0.2)
    sc.add_argument("--threshold", choices=["prop51", "prop52"],
                    default="prop51")
    sc.add_argument("--c", type=float)
    sc.add_argument("--trials", type=int, default=2000)
    sc.set_defaults(fn=_cmd_scan)

    g = sub.add_parser("gumbel", help="KS convergence to the Gumbel law")
    g.add_argument("--cov")
    g.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    g.add_argument("--batch", type=int, default=5000)
    g.set_defaults(fn=_cmd_gumbel)

    sv = sub.add_parser("signvec", help="near-orthogonal sign vector search")
    sv.add_argument("--n", type=int, default=100)
    sv.add_argument("--N", type=int, default=50)
    sv.add_argument("--threshold", type=float)
    sv.add_argument("--max-tries", type=int, default=10**5)
    sv.set_defaults(fn=_cmd_signvec)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = ExperimentConfig.from_json_file(args.config)
        except SchemaError as exc:
            _progress(f"config error: {exc}")
            return 2
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        if args.jobs is not None:
            cfg.jobs = args.jobs
        return _run_config(cfg)
    if args.seed is None:
        args.seed = 0
    if args.jobs is None:
        args.jobs = 1
    if args.out is None:
        args.out = "out"
    if not args.command:
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.fn(args)
    except SchemaError as exc:
        _progress(f"config error: {exc}")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
