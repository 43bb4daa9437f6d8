import numpy as np
import pytest

from tvgrid.evaluation import (
    ExperimentConfig,
    SynthSpec,
    build_correlation_graph,
    build_knn_graph,
    derive_seed,
    ingest_dataset,
    load_coordinates_csv,
    nrmse,
    run_experiment_grid,
    verify_incoherence_propagation,
    verify_rank_preservation,
    write_grid_csv,
    write_grid_json,
    write_plot_data,
)
from tvgrid.graphs import TimeHorizon, VertexGraph, build_operators, build_time_operators
from tvgrid.signals import numerical_rank, save_matrix_csv, synth_ftvgs


def test_nrmse_basics():
    x = np.array([[2.0, 0.0], [0.0, 0.0]])
    y = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert nrmse(x, x) == 0.0
    assert nrmse(x, np.zeros_like(x)) == 1.0
    assert nrmse(x, y) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        nrmse(np.zeros((2, 2)), y)
    with pytest.raises(ValueError):
        nrmse(x, np.zeros((3, 2)))


def test_nrmse_numerator_is_frobenius_distance():
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.standard_normal((7, 5))
        y = rng.standard_normal((7, 5))
        assert nrmse(x, y) * np.linalg.norm(x) == pytest.approx(
            np.linalg.norm(x - y), rel=1e-12)


def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(42, 1, 2) == derive_seed(42, 1, 2)
    seen = {derive_seed(42, i, j) for i in range(10) for j in range(10)}
    assert len(seen) == 100


def test_rank_check_full_selection_always_succeeds():
    # a tiny delta pushes the bound past the matrix size, capping selection
    # at every row and column, so rank preservation is certain
    spec = SynthSpec(n_vertices=40, n_steps=50, rank=3)
    report = verify_rank_preservation(spec, delta=1e-12, epsilon=0.5,
                                      trials=20, base_seed=1)
    assert report.rows_capped == 20
    assert report.cols_capped == 20
    assert report.row_success_rate == 1.0
    assert report.block_success_rate == 1.0


def test_rank_check_reports_floors():
    spec = SynthSpec(n_vertices=100, n_steps=120, rank=3)
    report = verify_rank_preservation(spec, delta=0.1, epsilon=0.5,
                                      trials=30, base_seed=2)
    assert report.row_floor == pytest.approx(0.9)
    assert report.block_floor == pytest.approx(0.81)
    assert 0.0 <= report.row_success_rate <= 1.0
    assert report.mean_mu1 >= 1.0


def test_fewer_rows_than_rank_cannot_preserve_rank():
    g = VertexGraph.ring(30)
    x = synth_ftvgs(g, TimeHorizon(40), 3, 6, 8, seed=3)
    assert numerical_rank(x.data[:2, :]) == 2


def test_incoherence_check_reports_everything():
    spec = SynthSpec(n_vertices=80, n_steps=100, rank=8)
    report = verify_incoherence_propagation(spec, eta=0.5, trials=25, base_seed=4)
    assert report.trials == 25
    assert report.vacuous  # the floor never exceeds zero
    assert report.floor == 0.0
    assert report.failure_p >= 1.0
    assert 0.0 <= report.both_bound_rate <= 1.0
    assert report.both_bound_rate <= min(report.u_bound_rate, report.v_bound_rate)
    assert report.rank_deficient + report.trials >= report.trials  # counted, not dropped


def test_incoherence_check_full_selection_holds():
    # with every row and column selected the block factors are the signal's
    # own, so the measured norms sit inside the bounds at moderate eta
    spec = SynthSpec(n_vertices=30, n_steps=36, rank=3)
    report = verify_incoherence_propagation(spec, eta=0.5, trials=10,
                                            delta=1e-12, epsilon=0.5,
                                            base_seed=5)
    assert report.u_bound_rate == 1.0
    assert report.v_bound_rate == 1.0


def test_experiment_grid_single_cell(tmp_path):
    spec = SynthSpec(n_vertices=207, n_steps=512, rank=3)
    cfg = ExperimentConfig(settings=((0.9, 0.9), (0.8, 0.8), (0.6, 0.6)),
                           methods=("svt",), n_seeds=1, base_seed=7,
                           synth=spec, svt_kwargs={"iters": 2})
    result = run_experiment_grid(cfg)
    assert len(result.cells) == 3
    assert [round(100.0 * c.rho_total, 2) for c in result.cells] == [72.81, 51.37, 21.55]
    assert len(result.outcomes) == 3
    write_grid_csv(result, tmp_path / "results.csv")
    write_grid_json(result, tmp_path / "report.json")
    files = write_plot_data(result, tmp_path)
    text = (tmp_path / "results.csv").read_text()
    assert "72.81" in text and "51.37" in text and "21.55" in text
    assert files and files[0].read_text().startswith("# method: svt")


def test_experiment_config_validation():
    spec = SynthSpec(n_vertices=10, n_steps=12, rank=2)
    with pytest.raises(ValueError):
        ExperimentConfig(settings=(), methods=("svt",), synth=spec)
    with pytest.raises(ValueError):
        ExperimentConfig(settings=((0.5, 0.5),), methods=("nope",), synth=spec)
    with pytest.raises(ValueError):
        ExperimentConfig(settings=((0.5, 0.5),), methods=("svt",))


def test_dataset_ingestion_windows(tmp_path):
    rng = np.random.default_rng(8)
    sensors, total, window = 6, 25, 8
    data = rng.standard_normal((sensors, total))
    path = tmp_path / "data.csv"
    save_matrix_csv(path, data)
    windows = ingest_dataset(path, window, n_sensors=sensors)
    assert len(windows) == total // window == 3
    # windowing partitions the ingested prefix exactly
    stitched = np.hstack([w.data for w in windows])
    assert np.array_equal(stitched, data[:, :3 * window])
    assert all(w.graph.num_vertices == sensors for w in windows)

    # transpose detection by the declared sensor count
    save_matrix_csv(tmp_path / "t.csv", data.T)
    windows_t = ingest_dataset(tmp_path / "t.csv", window, n_sensors=sensors)
    assert np.array_equal(windows_t[0].data, windows[0].data)

    exact = ingest_dataset(path, 25, n_sensors=sensors)
    assert len(exact) == 1
    floor_one = ingest_dataset(path, 13, n_sensors=sensors)
    assert len(floor_one) == 1
    with pytest.raises(ValueError):
        ingest_dataset(path, 30, n_sensors=sensors)
    with pytest.raises(ValueError):
        ingest_dataset(path, 8, n_sensors=99)


def test_dataset_with_coordinates(tmp_path):
    rng = np.random.default_rng(9)
    data = rng.standard_normal((5, 12))
    dpath = tmp_path / "d.csv"
    save_matrix_csv(dpath, data)
    cpath = tmp_path / "coords.csv"
    cpath.write_text("sensor_id,lat,lon\n0,0.0,0.0\n1,0.0,1.0\n2,1.0,0.0\n"
                     "3,1.0,1.0\n4,0.5,0.5\n")
    coords = load_coordinates_csv(cpath)
    assert coords.shape == (5, 2)
    windows = ingest_dataset(dpath, 6, n_sensors=5, coords_path=cpath, k=2)
    assert windows[0].graph.num_edges >= 4


def test_knn_graph_properties():
    rng = np.random.default_rng(10)
    pts = rng.standard_normal((12, 2))
    g = build_knn_graph(pts, k=3)
    assert g.num_vertices == 12
    assert all(0.0 < w <= 1.0 for _, _, w in g.edges)
    degrees = np.zeros(12)
    for u, v, _ in g.edges:
        degrees[u] += 1
        degrees[v] += 1
    assert degrees.min() >= 3  # every vertex keeps at least its own neighbors


def test_correlation_graph_fallback():
    rng = np.random.default_rng(11)
    base = rng.standard_normal(30)
    data = np.vstack([base + 0.01 * rng.standard_normal(30) for _ in range(4)]
                     + [rng.standard_normal(30) for _ in range(4)])
    g = build_correlation_graph(data, k=2)
    assert g.num_vertices == 8
    assert g.num_edges >= 8
    flat = np.vstack([data, np.zeros((1, 30))])
    g2 = build_correlation_graph(flat, k=2)  # zero-variance row must not crash
    assert g2.num_vertices == 9
