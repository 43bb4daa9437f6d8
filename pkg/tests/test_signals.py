import numpy as np
import pytest

from tvgrid.graphs import (
    TimeHorizon,
    VertexGraph,
    build_operators,
    build_time_operators,
    smoothness_constant,
)
from tvgrid.signals import (
    Ftvgs,
    ZeroRankError,
    incoherence,
    load_matrix_csv,
    save_matrix_csv,
    synth_ftvgs,
    thin_svd,
    thin_svd_array,
)


def wrap(mat, graph=None):
    mat = np.asarray(mat, dtype=float)
    graph = graph or VertexGraph.path(mat.shape[0]) if mat.shape[0] > 1 else VertexGraph(1, ())
    return Ftvgs(mat, graph, TimeHorizon(mat.shape[1]))


def test_ftvgs_validation():
    g = VertexGraph.path(2)
    with pytest.raises(ValueError):
        Ftvgs(np.zeros((3, 4)), g, TimeHorizon(4))
    with pytest.raises(ValueError):
        Ftvgs(np.array([[np.nan, 0, 0], [0, 0, 0]]), g, TimeHorizon(3))


def test_thin_svd_diagonal():
    f = thin_svd(wrap(np.diag([3.0, 1.0]).dot(np.eye(2, 3))))
    assert np.allclose(f.sigma, [3.0, 1.0])
    assert np.allclose(np.abs(f.u), np.eye(2), atol=1e-12)
    assert f.u[0, 0] > 0 and f.u[1, 1] > 0  # sign convention


def test_thin_svd_rank_one_outer():
    u = np.array([3.0, 4.0]) / 5.0
    v = np.ones(4) / 2.0
    f = thin_svd(wrap(np.outer(u, v)))
    assert f.rank == 1
    assert f.sigma[0] == pytest.approx(1.0)


def test_thin_svd_all_ones():
    f = thin_svd_array(np.ones((2, 2)))
    assert f.rank == 1
    assert f.sigma[0] == pytest.approx(2.0)


def test_thin_svd_zero_matrix():
    with pytest.raises(ZeroRankError):
        thin_svd(wrap(np.zeros((3, 4)), VertexGraph.path(3)))


def test_thin_svd_round_trip_and_orthonormal():
    rng = np.random.default_rng(0)
    for shape in ((20, 35), (120, 80), (500, 500)):
        mat = rng.standard_normal(shape)
        f = thin_svd_array(mat)
        rel = np.linalg.norm(mat - f.compose()) / np.linalg.norm(mat)
        assert rel <= 1e-10
        assert np.abs(f.u.T @ f.u - np.eye(f.rank)).max() <= 1e-10
        assert np.abs(f.v.T @ f.v - np.eye(f.rank)).max() <= 1e-10
        assert (np.diff(f.sigma) <= 0).all()


def test_incoherence_flat_rank_one():
    n, t = 16, 9
    x = np.outer(np.ones(n) / np.sqrt(n), np.ones(t) / np.sqrt(t))
    prof = incoherence(wrap(x, VertexGraph.ring(n)))
    assert prof.mu1 == pytest.approx(1.0)
    assert prof.mu2 == pytest.approx(1.0)
    assert prof.kappa == pytest.approx(1.0)


def test_incoherence_single_spike():
    n, t = 12, 7
    x = np.zeros((n, t))
    x[0, 0] = 1.0
    prof = incoherence(wrap(x, VertexGraph.ring(n)))
    assert prof.mu1 == pytest.approx(n)
    assert prof.mu2 == pytest.approx(t)


def test_incoherence_permutation_and_scale_invariance():
    rng = np.random.default_rng(1)
    n, t = 14, 10
    mat = rng.standard_normal((n, 3)) @ rng.standard_normal((3, t))
    base = incoherence(wrap(mat, VertexGraph.ring(n)))
    perm = rng.permutation(n)
    shuffled = incoherence(wrap(mat[perm], VertexGraph.ring(n)))
    assert shuffled.mu1 == pytest.approx(base.mu1, rel=1e-9)
    scaled = incoherence(wrap(3.7 * mat, VertexGraph.ring(n)))
    assert scaled.mu1 == pytest.approx(base.mu1, rel=1e-9)
    assert scaled.mu2 == pytest.approx(base.mu2, rel=1e-9)
    assert scaled.kappa == pytest.approx(base.kappa, rel=1e-9)


def test_incoherence_ranges():
    rng = np.random.default_rng(2)
    n, t = 18, 11
    for _ in range(25):
        mat = rng.standard_normal((n, t))
        prof = incoherence(wrap(mat, VertexGraph.ring(n)))
        r = prof.rank
        assert 1.0 - 1e-9 <= prof.mu1 <= n / r + 1e-9
        assert 1.0 - 1e-9 <= prof.mu2 <= t / r + 1e-9
        assert prof.kappa >= 1.0 - 1e-12


def test_synth_constant_for_band_one():
    x = synth_ftvgs(VertexGraph.ring(9), TimeHorizon(12), 1, 1, 1, seed=5)
    assert np.allclose(x.data, x.data[0, 0], atol=1e-12)


def test_synth_deterministic():
    g = VertexGraph.ring(15)
    a = synth_ftvgs(g, TimeHorizon(20), 2, 5, 6, seed=9)
    b = synth_ftvgs(g, TimeHorizon(20), 2, 5, 6, seed=9)
    assert np.array_equal(a.data, b.data)
    c = synth_ftvgs(g, TimeHorizon(20), 2, 5, 6, seed=10)
    assert not np.array_equal(a.data, c.data)


def test_synth_exact_rank_rate():
    g = VertexGraph.ring(30)
    horizon = TimeHorizon(40)
    ops = build_operators(g)
    tops = build_time_operators(horizon)
    hits = 0
    total = 300
    for seed in range(total):
        x = synth_ftvgs(g, horizon, 3, 8, 10, seed, ops=ops, tops=tops)
        hits += thin_svd(x).rank == 3
    assert hits / total >= 0.99


def test_synth_is_smooth_versus_noise():
    g = VertexGraph.ring(60)
    horizon = TimeHorizon(80)
    ops = build_operators(g)
    tops = build_time_operators(horizon)
    x = synth_ftvgs(g, horizon, 3, 8, 10, seed=11, ops=ops, tops=tops)
    assert thin_svd(x).rank == 3
    rng = np.random.default_rng(11)
    noise = rng.standard_normal((60, 80))
    noise /= np.linalg.norm(noise)
    c_synth = smoothness_constant(x.data, ops, tops)
    c_noise = smoothness_constant(noise, ops, tops)
    assert c_synth < 0.2 * c_noise


def test_synth_infeasible_band():
    g = VertexGraph.ring(10)
    with pytest.raises(ValueError):
        synth_ftvgs(g, TimeHorizon(12), 4, 3, 5, seed=0)
    with pytest.raises(ValueError):
        synth_ftvgs(g, TimeHorizon(12), 2, 11, 5, seed=0)


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    mat = rng.standard_normal((6, 4))
    path = tmp_path / "m.csv"
    save_matrix_csv(path, mat)
    assert np.array_equal(load_matrix_csv(path), mat)
    save_matrix_csv(tmp_path / "again.csv", load_matrix_csv(path))
    assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()


def test_matrix_csv_rejects_bad_input(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2,3\n4,5\n")
    with pytest.raises(ValueError):
        load_matrix_csv(ragged)
    bad = tmp_path / "nonnum.csv"
    bad.write_text("1,2\nx,4\n")
    with pytest.raises(ValueError):
        load_matrix_csv(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValueError):
        load_matrix_csv(empty)
    inf = tmp_path / "inf.csv"
    inf.write_text("1,inf\n2,3\n")
    with pytest.raises(ValueError):
        load_matrix_csv(inf)
