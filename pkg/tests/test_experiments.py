import json
import math

import numpy as np
import pytest

from superconc.covariance import CovarianceModel
from superconc.experiments import (
    EXPERIMENT_KINDS,
    ExperimentConfig,
    SchemaError,
    fmt,
    run,
    validate,
)


def _cfg(tmp_path, **kw):
    base = dict(
        kind="variance_scaling",
        model=CovarianceModel("iid"),
        sizes=(16,),
        batch=500,
        seed=0,
        out=str(tmp_path / "out"),
        jobs=1,
        params={},
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_fmt_round_trips_floats():
    for x in (1 / 3, math.pi, 1e-300, 123456789.123456789, 0.1):
        assert float(fmt(x)) == x
    assert fmt(7) == "7"
    assert fmt(np.int64(7)) == "7"


def test_config_dict_round_trip(tmp_path):
    cfg = _cfg(tmp_path, params={"alpha": 0.5})
    back = ExperimentConfig.from_dict(cfg.to_dict())
    assert back == cfg


def test_config_requires_kind():
    with pytest.raises(SchemaError, match="kind"):
        ExperimentConfig.from_dict({})


def test_config_bad_model_named():
    with pytest.raises(SchemaError, match="model"):
        ExperimentConfig.from_dict({"kind": "variance_scaling", "model": {"kind": "bogus"}})


def test_validate_unknown_kind(tmp_path):
    diags = validate(_cfg(tmp_path, kind="nope"))
    assert len(diags) == 1
    assert "kind" in diags[0]
    for k in EXPERIMENT_KINDS:
        assert k in diags[0]


def test_validate_alpha_range_message(tmp_path):
    diags = validate(_cfg(tmp_path, params={"alpha": 1.5}))
    assert any("alpha" in d and "(0, 1)" in d for d in diags)


def test_validate_capacity_estimate(tmp_path, monkeypatch):
    monkeypatch.setenv("SUPERCONC_CAP_BYTES", "1000")
    diags = validate(_cfg(tmp_path, sizes=(4096,), batch=10**4))
    assert any(d.startswith("capacity") for d in diags)


def test_validate_bad_batch_and_sizes(tmp_path):
    diags = validate(_cfg(tmp_path, batch=0, sizes=(0,)))
    assert any("batch" in d for d in diags)
    assert any("sizes" in d for d in diags)


def test_run_writes_three_files(tmp_path):
    paths = run(_cfg(tmp_path))
    assert paths["csv"].exists()
    assert paths["summary"].exists()
    assert paths["manifest"].exists()
    header = paths["csv"].read_text().splitlines()[0]
    assert header == "n,var,se,var_times_logn"
    manifest = json.loads(paths["manifest"].read_text())
    assert manifest["config"]["kind"] == "variance_scaling"
    assert "wall_time_s" in manifest


def test_run_rejects_invalid_config(tmp_path):
    with pytest.raises(SchemaError):
        run(_cfg(tmp_path, kind="nope"))


def test_rerun_is_byte_identical(tmp_path):
    a = run(_cfg(tmp_path, out=str(tmp_path / "a")))
    b = run(_cfg(tmp_path, out=str(tmp_path / "b")))
    assert a["csv"].read_bytes() == b["csv"].read_bytes()
    assert a["summary"].read_bytes() == b["summary"].read_bytes()


def test_jobs_do_not_change_results(tmp_path):
    a = run(_cfg(tmp_path, sizes=(16, 32, 64), out=str(tmp_path / "a"), jobs=1))
    b = run(_cfg(tmp_path, sizes=(16, 32, 64), out=str(tmp_path / "b"), jobs=3))
    assert a["csv"].read_bytes() == b["csv"].read_bytes()


def test_gumbel_experiment(tmp_path):
    paths = run(_cfg(tmp_path, kind="gumbel_convergence", sizes=(32, 64), batch=300))
    rows = paths["csv"].read_text().splitlines()
    assert rows[0] == "n,ks,centering_gap"
    assert len(rows) == 3


def test_tail_bounds_experiment(tmp_path):
    cfg = _cfg(tmp_path, kind="tail_bounds", sizes=(64,), batch=4000,
               params={"t_max": 1.5, "t_points": 31})
    paths = run(cfg)
    summary = json.loads(paths["summary"].read_text())
    assert summary["n"] == 64
    assert "c_hat" in summary and "gaussian_r2" in summary


def test_laplace_experiment(tmp_path):
    cfg = _cfg(tmp_path, kind="laplace_check", sizes=(32,), batch=2000,
               params={"theta_points": 5})
    paths = run(cfg)
    summary = json.loads(paths["summary"].read_text())
    assert summary["per_n"][0]["n"] == 32
    assert summary["per_n"][0]["C_hat"] > 0


def test_scan_experiment_generator_parse(tmp_path):
    cfg = _cfg(tmp_path, kind="scan_risk", sizes=(1,), batch=1,
               params={"generator": "disjoint:4,4", "trials": 100, "mu": 2.0})
    paths = run(cfg)
    summary = json.loads(paths["summary"].read_text())
    assert summary["N"] == 4 and summary["K"] == 4
    assert 0 <= summary["risk"] <= 2
    rows = paths["csv"].read_text().splitlines()
    assert rows[0] == "delta,threshold_prop51,threshold_prop52"


def test_scan_experiment_bad_generator(tmp_path):
    cfg = _cfg(tmp_path, kind="scan_risk", sizes=(1,), batch=1,
               params={"generator": "spiral:4,4", "trials": 10})
    with pytest.raises(SchemaError, match="generator"):
        run(cfg)


def test_scan_experiment_explicit_sets(tmp_path):
    cfg = _cfg(tmp_path, kind="scan_risk", sizes=(1,), batch=1,
               params={"n": 6, "sets": [[0, 1], [2, 3], [4, 5]],
                       "trials": 100, "mu": 2.0})
    summary = json.loads(run(cfg)["summary"].read_text())
    assert summary["N"] == 3 and summary["K"] == 2


def test_sign_vectors_experiment(tmp_path):
    cfg = _cfg(tmp_path, kind="sign_vectors", sizes=(1,), batch=1,
               params={"n": 64, "N_target": 6})
    summary = json.loads(run(cfg)["summary"].read_text())
    assert summary["found"] == 6
    assert not summary["saturated"]
    assert 0 < summary["pair_pass_rate"] <= 1


def test_field_bound_experiment(tmp_path):
    cfg = _cfg(tmp_path, kind="field_bound", sizes=(1,), batch=1,
               model=CovarianceModel("gaussian_smooth", lam2=2.0),
               params={"d": 1, "extent": 32.0, "growth_batch": 50})
    summary = json.loads(run(cfg)["summary"].read_text())
    assert summary["N_A"] == 16
    assert summary["c1"] <= summary["c2"]
