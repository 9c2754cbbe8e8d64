import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superconc.covariance import CovarianceModel, gram_matrix
from superconc.sampler import (
    CapacityError,
    DecompositionError,
    EmbeddingError,
    circulant_embedding,
    dump_paths,
    evolve_pair,
    grid_points,
    load_paths,
    sample_field_grid,
    sample_sequence,
)

NOT_PSD = CovarianceModel("table", table=((0.0, 1.0), (1.0, 0.9), (2.0, 0.0)))


def test_same_seed_same_paths(ou):
    a = sample_sequence(ou, 16, 8, seed=3)
    b = sample_sequence(ou, 16, 8, seed=3)
    assert np.array_equal(a.paths, b.paths)


def test_different_seeds_differ(ou):
    a = sample_sequence(ou, 16, 8, seed=3)
    b = sample_sequence(ou, 16, 8, seed=4)
    assert not np.array_equal(a.paths, b.paths)


def test_stream_offset_is_path_indexed(ou):
    whole = sample_sequence(ou, 16, 8, seed=3)
    tail = sample_sequence(ou, 16, 3, seed=3, stream_offset=5)
    assert np.array_equal(whole.paths[5:], tail.paths)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=9))
def test_chunking_invariance(split):
    model = CovarianceModel("ornstein_uhlenbeck", rate=0.5)
    whole = sample_sequence(model, 12, 10, seed=7).paths
    head = sample_sequence(model, 12, split, seed=7).paths
    rest = sample_sequence(model, 12, 10 - split, seed=7, stream_offset=split).paths
    # the noise streams are identical per path; the matmul against the
    # Cholesky factor may differ by an ulp between BLAS kernel shapes
    assert np.allclose(np.vstack([head, rest]), whole, rtol=0, atol=1e-12)


def test_methods_agree_for_iid(iid):
    a = sample_sequence(iid, 10, 5, seed=1, method="cholesky")
    b = sample_sequence(iid, 10, 5, seed=1, method="circulant")
    assert np.array_equal(a.paths, b.paths)


def test_default_method_switch(ou):
    small = sample_sequence(ou, 64, 2, seed=0)
    assert small.method == "cholesky"
    big = sample_sequence(ou, 4096, 2, seed=0)
    assert big.method == "circulant"


@pytest.mark.parametrize("method", ["cholesky", "circulant"])
def test_empirical_covariance(ou, method):
    batch = 40000
    b = sample_sequence(ou, 4, batch, seed=9, method=method)
    emp = b.paths.T @ b.paths / batch
    g = gram_matrix(ou, np.arange(4))
    se = np.sqrt((1 + g**2) / batch)
    assert np.all(np.abs(emp - g) <= 5 * se)


def test_unknown_method_rejected(ou):
    with pytest.raises(ValueError):
        sample_sequence(ou, 8, 2, seed=0, method="magic")


def test_circulant_embedding_base_size(ou):
    eig, m = circulant_embedding(ou, 4)
    assert m == 8
    assert np.all(eig >= 0)
    # eigenvalues are the DFT of the symmetrized first row phi(0..4) + mirror
    wrapped = np.minimum(np.arange(8), 8 - np.arange(8))
    row = np.exp(-wrapped.astype(float))
    assert np.allclose(eig, np.fft.fft(row).real)


def test_circulant_embedding_smooth_model_pads(gs):
    eig, m = circulant_embedding(gs, 16)
    assert m % 32 == 0
    assert np.all(eig >= 0)


def test_cholesky_failure_names_minor_order():
    with pytest.raises(DecompositionError) as exc:
        sample_sequence(NOT_PSD, 3, 2, seed=0, method="cholesky")
    assert 1 <= exc.value.order <= 3


def test_embedding_failure_reports_sizes():
    # phi = (1, 0.9, 0, 0, ...) keeps a -0.8 circulant eigenvalue at every
    # padded size, so the doubling loop exhausts itself
    stubborn = CovarianceModel(
        "table", table=((0.0, 1.0), (1.0, 0.9), (2.0, 0.0), (1000.0, 0.0))
    )
    with pytest.raises(EmbeddingError) as exc:
        circulant_embedding(stubborn, 2)
    assert exc.value.worst < 0
    assert len(exc.value.sizes) >= 1


def test_capacity_cap(monkeypatch, ou):
    monkeypatch.setenv("SUPERCONC_CAP_BYTES", "1000")
    with pytest.raises(CapacityError):
        sample_sequence(ou, 64, 64, seed=0)


def test_grid_points_1d():
    pts, geom = grid_points(1, 10.0, 1.0)
    assert pts.shape == (11, 1)
    assert geom.shape == (11,)
    assert pts[-1, 0] == pytest.approx(10.0)


def test_grid_points_2d():
    pts, geom = grid_points(2, [4.0, 6.0], 2.0)
    assert geom.shape == (3, 4)
    assert pts.shape == (12, 2)


def test_grid_points_validation():
    with pytest.raises(ValueError):
        grid_points(3, 4.0, 1.0)
    with pytest.raises(ValueError):
        grid_points(1, 4.0, 0.0)
    with pytest.raises(ValueError):
        grid_points(1, 0.5, 1.0)  # fewer than 2 points


@pytest.mark.parametrize("method", ["cholesky", "circulant"])
def test_field_covariance_2d(gs, method):
    batch = 30000
    b = sample_field_grid(gs, 2, [2.0, 2.0], 1.0, batch, seed=4, method=method)
    pts, _ = grid_points(2, [2.0, 2.0], 1.0)
    emp = b.paths.T @ b.paths / batch
    g = gram_matrix(gs, pts)
    se = np.sqrt((1 + g**2) / batch)
    assert np.all(np.abs(emp - g) <= 5 * se)


def test_field_1d_matches_sequence_for_unit_spacing(ou):
    f = sample_field_grid(ou, 1, 9.0, 1.0, 4, seed=2, method="circulant")
    s = sample_sequence(ou, 10, 4, seed=2, method="circulant")
    assert np.array_equal(f.paths, s.paths)


def test_evolve_pair_zero_time(ou):
    base = sample_sequence(ou, 8, 5, seed=1)
    pair = evolve_pair(base, 0.0, seed2=2)
    assert np.array_equal(pair.base.paths, pair.evolved.paths)
    assert pair.evolved.paths is not pair.base.paths


def test_evolve_pair_cross_covariance(iid):
    base = sample_sequence(iid, 2, 60000, seed=1)
    t = 0.7
    pair = evolve_pair(base, t, seed2=99)
    x = pair.base.paths[:, 0]
    y = pair.evolved.paths[:, 0]
    assert np.var(y) == pytest.approx(1.0, abs=0.03)
    assert np.mean(x * y) == pytest.approx(math.exp(-t), abs=0.03)


def test_evolve_pair_negative_time(ou):
    base = sample_sequence(ou, 4, 2, seed=0)
    with pytest.raises(ValueError):
        evolve_pair(base, -0.1, seed2=1)


def test_dump_load_round_trip(tmp_path, ou):
    b = sample_sequence(ou, 12, 7, seed=5, method="cholesky")
    target = str(tmp_path / "paths.bin")
    dump_paths(b, target)
    back = load_paths(target)
    assert np.array_equal(back.paths, b.paths)
    assert back.model == b.model
    assert back.seed == 5
    assert back.method == "cholesky"


def test_dump_load_field_geometry(tmp_path, gs):
    b = sample_field_grid(gs, 2, [3.0, 3.0], 1.0, 2, seed=0)
    target = str(tmp_path / "field.bin")
    dump_paths(b, target)
    back = load_paths(target)
    assert back.geometry == b.geometry


def test_load_rejects_foreign_file(tmp_path):
    bad = tmp_path / "junk.bin"
    bad.write_bytes(b"\x00" * 64)
    with pytest.raises(ValueError):
        load_paths(str(bad))
