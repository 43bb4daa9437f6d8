"""Metrics, Monte Carlo verification of the sampling guarantees, dataset
ingestion/windowing and the ratio-grid experiment runner.

The verifiers draw synthetic low-rank smooth signals, select rows/columns at
the computed minimums and check the rank-preservation and incoherence-
propagation claims empirically, reporting success fractions next to the
predicted probability floors (flagging vacuous floors instead of hiding
them). The experiment runner scores reconstruction methods over a grid of
sampling ratios and aggregates per-cell statistics.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .graphs import (
    GraphOperators,
    TimeHorizon,
    TimeOperators,
    VertexGraph,
    build_operators,
    build_time_operators,
)
from .reconstruction import (
    CompletionConfig,
    JointSolverConfig,
    TvInpaintConfig,
    solve_joint,
    svt_baseline,
    tnnr_baseline,
    two_stage_reconstruct,
)
from .sampling import (
    SamplingPlan,
    min_cols_for_rank,
    min_rows_for_rank,
    incoherence_failure_probability,
    subset_random_sample,
    total_ratio,
)
from .signals import (
    Ftvgs,
    incoherence,
    load_matrix_csv,
    numerical_rank,
    row_norm_inf,
    synth_ftvgs,
    thin_svd_array,
)

__all__ = [
    "nrmse",
    "SynthSpec",
    "derive_seed",
    "RankCheckReport",
    "IncoherenceCheckReport",
    "verify_rank_preservation",
    "verify_incoherence_propagation",
    "ExperimentConfig",
    "TrialOutcome",
    "GridCell",
    "ExperimentResult",
    "run_experiment_grid",
    "write_grid_csv",
    "write_grid_json",
    "write_plot_data",
    "ingest_dataset",
    "build_knn_graph",
    "build_correlation_graph",
    "load_coordinates_csv",
]

FLOAT_FMT = ".17g"


def nrmse(x_a: np.ndarray, x_b: np.ndarray) -> float:
    """Frobenius error of x_b against reference x_a, normalized by the
    reference norm."""
    x_a = np.asarray(getattr(x_a, "data", x_a), dtype=float)
    x_b = np.asarray(getattr(x_b, "data", x_b), dtype=float)
    if x_a.shape != x_b.shape:
        raise ValueError(f"shape mismatch {x_a.shape} vs {x_b.shape}")
    ref = np.linalg.norm(x_a)
    if ref == 0.0:
        raise ValueError("reference matrix is all zeros; metric undefined")
    return float(np.linalg.norm(x_a - x_b) / ref)


def derive_seed(base: int, *indices: int) -> int:
    """Deterministic sub-seed from a base seed and index path."""
    ss = np.random.SeedSequence([int(base), *[int(i) for i in indices]])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class SynthSpec:
    """Blueprint for the synthetic signal generator used by the verifiers and
    the experiment runner. Bands default to the rank, which pins the singular
    subspaces to the leading basis modes (flattest row norms)."""

    n_vertices: int
    n_steps: int
    rank: int
    graph_band: int | None = None
    time_band: int | None = None
    graph: VertexGraph | None = None

    def resolved_graph(self) -> VertexGraph:
        return self.graph if self.graph is not None else VertexGraph.ring(self.n_vertices)

    def bands(self) -> tuple[int, int]:
        return (self.graph_band or self.rank, self.time_band or self.rank)

    def make(self, seed: int, ops: GraphOperators | None = None,
             tops: TimeOperators | None = None) -> Ftvgs:
        kg, kt = self.bands()
        return synth_ftvgs(self.resolved_graph(), TimeHorizon(self.n_steps),
                           self.rank, kg, kt, seed, ops=ops, tops=tops)


@dataclass(frozen=True)
class RankCheckReport:
    """Empirical rank-preservation rates next to the predicted floors."""

    trials: int
    rank: int
    delta: float
    epsilon: float
    row_success_rate: float
    block_success_rate: float
    row_floor: float
    block_floor: float
    mean_mu1: float
    mean_mu2: float
    max_mu1: float
    max_mu2: float
    mean_rows_selected: float
    mean_cols_selected: float
    rows_capped: int
    cols_capped: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def verify_rank_preservation(spec: SynthSpec, delta: float, epsilon: float,
                             trials: int, base_seed: int = 0) -> RankCheckReport:
    """Monte Carlo check that row/column selection at the computed minimums
    preserves the rank of the row submatrix and the block."""
    if trials < 1:
        raise ValueError("need at least one trial")
    graph = spec.resolved_graph()
    ops = build_operators(graph)
    tops = build_time_operators(TimeHorizon(spec.n_steps))
    n, t = spec.n_vertices, spec.n_steps
    row_ok = block_ok = 0
    mu1_sum = mu2_sum = rows_sum = cols_sum = 0.0
    mu1_max = mu2_max = 0.0
    rows_capped = cols_capped = 0
    for i in range(trials):
        x = spec.make(derive_seed(base_seed, i, 0), ops=ops, tops=tops)
        prof = incoherence(x, ops=ops, tops=tops)
        want_rows = min_rows_for_rank(prof.rank, prof.mu1, delta, epsilon)
        want_cols = min_cols_for_rank(prof.rank, prof.mu2, delta, epsilon)
        if want_rows > n:
            rows_capped += 1
        if want_cols > t:
            cols_capped += 1
        n_rows, n_cols = min(want_rows, n), min(want_cols, t)
        rng = np.random.default_rng(derive_seed(base_seed, i, 1))
        sel_rows = np.sort(rng.choice(n, size=n_rows, replace=False))
        sel_cols = np.sort(rng.choice(t, size=n_cols, replace=False))
        x_r = x.data[sel_rows, :]
        x_rc = x_r[:, sel_cols]
        if numerical_rank(x_r) == prof.rank:
            row_ok += 1
        if numerical_rank(x_rc) == prof.rank:
            block_ok += 1
        mu1_sum += prof.mu1
        mu2_sum += prof.mu2
        mu1_max = max(mu1_max, prof.mu1)
        mu2_max = max(mu2_max, prof.mu2)
        rows_sum += n_rows
        cols_sum += n_cols
    return RankCheckReport(
        trials=trials, rank=spec.rank, delta=delta, epsilon=epsilon,
        row_success_rate=row_ok / trials, block_success_rate=block_ok / trials,
        row_floor=1.0 - delta, block_floor=(1.0 - delta) ** 2,
        mean_mu1=mu1_sum / trials, mean_mu2=mu2_sum / trials,
        max_mu1=mu1_max, max_mu2=mu2_max,
        mean_rows_selected=rows_sum / trials, mean_cols_selected=cols_sum / trials,
        rows_capped=rows_capped, cols_capped=cols_capped)


@dataclass(frozen=True)
class IncoherenceCheckReport:
    """Per-trial check of the block singular-subspace row-norm bounds, with
    rank-deficient draws counted separately (never dropped)."""

    trials: int
    rank: int
    eta: float
    delta: float
    epsilon: float
    failure_p: float
    floor_raw: float
    floor: float
    vacuous: bool
    rank_deficient: int
    u_bound_rate: float
    v_bound_rate: float
    both_bound_rate: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def verify_incoherence_propagation(spec: SynthSpec, eta: float, trials: int,
                                   delta: float = 0.1, epsilon: float = 0.5,
                                   base_seed: int = 0) -> IncoherenceCheckReport:
    """Monte Carlo check of the incoherence bounds of the sampled block's
    singular factors against the predicted floor (1-p)^2."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0.0 <= eta < 1.0:
        raise ValueError("eta must lie in [0, 1)")
    graph = spec.resolved_graph()
    ops = build_operators(graph)
    tops = build_time_operators(TimeHorizon(spec.n_steps))
    n, t = spec.n_vertices, spec.n_steps
    u_ok = v_ok = both_ok = deficient = 0
    for i in range(trials):
        x = spec.make(derive_seed(base_seed, i, 0), ops=ops, tops=tops)
        prof = incoherence(x, ops=ops, tops=tops)
        n_rows = min(min_rows_for_rank(prof.rank, prof.mu1, delta, epsilon), n)
        n_cols = min(min_cols_for_rank(prof.rank, prof.mu2, delta, epsilon), t)
        rng = np.random.default_rng(derive_seed(base_seed, i, 1))
        sel_rows = np.sort(rng.choice(n, size=n_rows, replace=False))
        sel_cols = np.sort(rng.choice(t, size=n_cols, replace=False))
        x_rc = x.data[np.ix_(sel_rows, sel_cols)]
        factors = thin_svd_array(x_rc)
        if factors.rank < prof.rank:
            deficient += 1
        u_bound = prof.kappa * np.sqrt(
            prof.mu1 * prof.rank / ((1.0 - eta) * n_rows))
        v_bound = (prof.kappa / (1.0 - eta)) * np.sqrt(
            prof.mu2 * n * prof.rank / (n_rows * n_cols))
        u_holds = row_norm_inf(factors.u) <= u_bound
        v_holds = row_norm_inf(factors.v) <= v_bound
        u_ok += u_holds
        v_ok += v_holds
        both_ok += u_holds and v_holds
    p, vacuous = incoherence_failure_probability(spec.rank, eta)
    floor_raw = (1.0 - p) ** 2
    return IncoherenceCheckReport(
        trials=trials, rank=spec.rank, eta=eta, delta=delta, epsilon=epsilon,
        failure_p=p, floor_raw=floor_raw,
        floor=0.0 if vacuous else min(max(floor_raw, 0.0), 1.0),
        vacuous=vacuous, rank_deficient=deficient,
        u_bound_rate=u_ok / trials, v_bound_rate=v_ok / trials,
        both_bound_rate=both_ok / trials)


@dataclass(frozen=True)
class ExperimentConfig:
    """Ratio grid x methods x seeds over synthetic signals or dataset
    windows."""

    settings: tuple[tuple[float, float], ...]
    methods: tuple[str, ...]
    n_seeds: int = 10
    base_seed: int = 42
    synth: SynthSpec | None = None
    windows: tuple[Ftvgs, ...] | None = None
    joint_cfg: JointSolverConfig = field(default_factory=JointSolverConfig)
    completion_cfg: CompletionConfig = field(default_factory=CompletionConfig)
    tv_cfg: TvInpaintConfig = field(default_factory=TvInpaintConfig)
    svt_kwargs: dict = field(default_factory=dict)
    tnnr_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.settings:
            raise ValueError("no ratio settings")
        for rc, sub in self.settings:
            if not (0.0 < rc <= 1.0 and 0.0 < sub <= 1.0):
                raise ValueError(f"ratios ({rc}, {sub}) outside (0, 1]")
        if self.n_seeds < 1:
            raise ValueError("need at least one seed")
        known = {"joint", "two_stage", "svt", "tnnr"}
        bad = set(self.methods) - known
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}; pick from {sorted(known)}")
        if (self.synth is None) == (self.windows is None):
            raise ValueError("give exactly one of synth spec or dataset windows")


@dataclass(frozen=True)
class TrialOutcome:
    method: str
    rho_rc: float
    rho_sub: float
    seed: int
    nrmse: float
    runtime: float
    converged: bool
    n_distinct: int


@dataclass(frozen=True)
class GridCell:
    rho_rc: float
    rho_sub: float
    rho_total: float
    method: str
    median_nrmse: float
    mean_nrmse: float
    n_trials: int


@dataclass(frozen=True)
class ExperimentResult:
    outcomes: tuple[TrialOutcome, ...]
    cells: tuple[GridCell, ...]


def _reconstruct(method: str, sample, x: Ftvgs, ops, tops, cfg: ExperimentConfig):
    shape = x.data.shape
    if method == "joint":
        res = solve_joint(sample, ops, tops, cfg.joint_cfg)
        return res.x_hat, res.converged
    if method == "two_stage":
        res = two_stage_reconstruct(sample, ops, tops, cfg.completion_cfg, cfg.tv_cfg)
        return res.x_hat, res.converged
    if method == "svt":
        return svt_baseline(sample, shape, **cfg.svt_kwargs), True
    if method == "tnnr":
        kwargs = dict(cfg.tnnr_kwargs)
        kwargs.setdefault("trunc_r", cfg.synth.rank if cfg.synth else 5)
        return tnnr_baseline(sample, shape, **kwargs), True
    raise ValueError(f"unknown method {method!r}")


def run_experiment_grid(cfg: ExperimentConfig) -> ExperimentResult:
    """Sample, reconstruct and score every (setting, method, trial) cell.

    Synthetic mode draws a fresh signal per trial; dataset mode cycles the
    ingested windows. Per-trial sampling seeds derive deterministically from
    (base seed, setting index, trial index), so results are schedule
    independent.
    """
    outcomes: list[TrialOutcome] = []
    cells: list[GridCell] = []
    if cfg.synth is not None:
        graph = cfg.synth.resolved_graph()
        horizon = TimeHorizon(cfg.synth.n_steps)
    else:
        graph = cfg.windows[0].graph
        horizon = cfg.windows[0].horizon
    ops = build_operators(graph)
    tops = build_time_operators(horizon)
    for si, (rc, sub) in enumerate(cfg.settings):
        plan = SamplingPlan(rho_rc=rc, rho_sub=sub)
        rho_tot = total_ratio(plan, graph.num_vertices, horizon.num_steps)
        per_method: dict[str, list[float]] = {m: [] for m in cfg.methods}
        for ti in range(cfg.n_seeds):
            if cfg.synth is not None:
                x = cfg.synth.make(derive_seed(cfg.base_seed, si, ti, 0),
                                   ops=ops, tops=tops)
            else:
                x = cfg.windows[ti % len(cfg.windows)]
            sample_seed = derive_seed(cfg.base_seed, si, ti, 1)
            sample = subset_random_sample(x, plan, sample_seed)
            for method in cfg.methods:
                start = time.perf_counter()
                x_hat, converged = _reconstruct(method, sample, x, ops, tops, cfg)
                elapsed = time.perf_counter() - start
                err = nrmse(x.data, x_hat)
                per_method[method].append(err)
                outcomes.append(TrialOutcome(
                    method=method, rho_rc=rc, rho_sub=sub, seed=sample_seed,
                    nrmse=err, runtime=elapsed, converged=converged,
                    n_distinct=sample.n_distinct))
        for method in cfg.methods:
            errs = np.array(per_method[method])
            cells.append(GridCell(
                rho_rc=rc, rho_sub=sub, rho_total=rho_tot, method=method,
                median_nrmse=float(np.median(errs)),
                mean_nrmse=float(np.mean(errs)), n_trials=len(errs)))
    return ExperimentResult(outcomes=tuple(outcomes), cells=tuple(cells))


def write_grid_csv(result: ExperimentResult, path) -> None:
    """Per-cell aggregate table: one row per (ratio setting, method)."""
    with open(path, "w") as fh:
        fh.write("rho_rc,rho_sub,rho_total_percent,method,median_nrmse,mean_nrmse,n_trials\n")
        for c in result.cells:
            fh.write(",".join([
                format(c.rho_rc, FLOAT_FMT),
                format(c.rho_sub, FLOAT_FMT),
                format(100.0 * c.rho_total, ".2f"),
                c.method,
                format(c.median_nrmse, FLOAT_FMT),
                format(c.mean_nrmse, FLOAT_FMT),
                str(c.n_trials),
            ]) + "\n")


def write_grid_json(result: ExperimentResult, path) -> None:
    """Full run report: aggregates plus per-trial outcomes (no wall-clock
    fields, so identical runs produce identical bytes)."""
    payload = {
        "cells": [{
            "rho_rc": c.rho_rc, "rho_sub": c.rho_sub,
            "rho_total": c.rho_total, "method": c.method,
            "median_nrmse": c.median_nrmse, "mean_nrmse": c.mean_nrmse,
            "n_trials": c.n_trials,
        } for c in result.cells],
        "outcomes": [{
            "method": o.method, "rho_rc": o.rho_rc, "rho_sub": o.rho_sub,
            "seed": o.seed, "nrmse": o.nrmse, "converged": o.converged,
            "n_distinct": o.n_distinct,
        } for o in result.outcomes],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def write_plot_data(result: ExperimentResult, directory) -> list:
    """One gnuplot-style data file per method: columns are total sampling
    ratio (percent), median NRMSE, mean NRMSE."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for method in sorted({c.method for c in result.cells}):
        path = directory / f"plotdata_{method}.dat"
        rows = sorted((c.rho_total, c.median_nrmse, c.mean_nrmse)
                      for c in result.cells if c.method == method)
        with open(path, "w") as fh:
            fh.write(f"# method: {method}\n")
            fh.write("# rho_total_percent median_nrmse mean_nrmse\n")
            for rho, med, mean in rows:
                fh.write(f"{100.0 * rho:{FLOAT_FMT}} {med:{FLOAT_FMT}} "
                         f"{mean:{FLOAT_FMT}}\n")
        written.append(path)
    return written


# --- dataset ingestion --------------------------------------------------------

def load_coordinates_csv(path) -> np.ndarray:
    """Read a ``sensor_id,lat,lon`` sidecar; rows ordered by sensor id."""
    import csv as _csv

    records = []
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["sensor_id", "lat", "lon"]:
            raise ValueError(f"{path}: expected header 'sensor_id,lat,lon'")
        for row in reader:
            if not row:
                continue
            records.append((int(row[0]), float(row[1]), float(row[2])))
    if not records:
        raise ValueError(f"{path}: no coordinates found")
    records.sort()
    return np.array([[lat, lon] for _, lat, lon in records])


def _knn_edges(dist: np.ndarray, k: int) -> tuple[tuple[int, int, float], ...]:
    """Symmetrized k-nearest-neighbor edge set with Gaussian kernel weights;
    the kernel width is the mean neighbor distance."""
    n = dist.shape[0]
    k = min(k, n - 1)
    if k < 1:
        raise ValueError("need at least two points for a k-NN graph")
    pairs = set()
    neighbor_d = []
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        picked = [j for j in order if j != i][:k]
        for j in picked:
            pairs.add((min(i, j), max(i, j)))
            neighbor_d.append(dist[i, j])
    sigma = float(np.mean(neighbor_d))
    if sigma <= 0.0:
        sigma = 1.0
    edges = tuple(sorted(
        (u, v, float(np.exp(-(dist[u, v] ** 2) / sigma ** 2)))
        for u, v in pairs))
    return edges


def build_knn_graph(points: np.ndarray, k: int = 5) -> VertexGraph:
    """Gaussian-kernel k-NN graph on coordinate rows."""
    points = np.asarray(points, dtype=float)
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    return VertexGraph(points.shape[0], _knn_edges(dist, k))


def build_correlation_graph(data: np.ndarray, k: int = 5) -> VertexGraph:
    """k-NN graph with distance 1 - |Pearson correlation| between signal
    rows (fallback when no coordinates exist)."""
    data = np.asarray(data, dtype=float)
    centered = data - data.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    corr = (centered / safe[:, None]) @ (centered / safe[:, None]).T
    corr[norms == 0, :] = 0.0
    corr[:, norms == 0] = 0.0
    dist = 1.0 - np.abs(np.clip(corr, -1.0, 1.0))
    np.fill_diagonal(dist, 0.0)
    return VertexGraph(data.shape[0], _knn_edges(dist, k))


def ingest_dataset(path, window_len: int, n_sensors: int | None = None,
                   coords_path=None, k: int = 5) -> list[Ftvgs]:
    """Load a sensors x timesteps CSV (or its transpose, resolved by the
    declared sensor count), split it into non-overlapping windows and attach
    a k-NN graph built from coordinates when given, else from row
    correlations."""
    raw = load_matrix_csv(path)
    if n_sensors is not None:
        if raw.shape[0] == n_sensors:
            pass
        elif raw.shape[1] == n_sensors:
            raw = raw.T
        else:
            raise ValueError(
                f"{path}: neither dimension {raw.shape} matches {n_sensors} sensors")
    if window_len < 3:
        raise ValueError("window length must be at least 3")
    total = raw.shape[1]
    if total < window_len:
        raise ValueError(f"{path}: {total} timesteps < window length {window_len}")
    if coords_path is not None:
        coords = load_coordinates_csv(coords_path)
        if coords.shape[0] != raw.shape[0]:
            raise ValueError("coordinate count does not match sensor count")
        graph = build_knn_graph(coords, k)
    else:
        graph = build_correlation_graph(raw, k)
    horizon = TimeHorizon(window_len)
    count = total // window_len
    return [Ftvgs(data=raw[:, w * window_len:(w + 1) * window_len],
                  graph=graph, horizon=horizon)
            for w in range(count)]
