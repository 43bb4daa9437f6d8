"""Time-vertex signal matrices and their SVD-derived diagnostics.

A signal is a real N x T matrix bound to a vertex graph (rows) and a time
horizon (columns). This module measures numerical rank, row/column
incoherence, condition number and the smoothness constant, and generates
synthetic low-rank smooth signals by mixing leading GFT and DFT modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import (
    GraphOperators,
    TimeHorizon,
    TimeOperators,
    VertexGraph,
    build_operators,
    build_time_operators,
    smoothness_constant,
)

__all__ = [
    "Ftvgs",
    "SvdFactors",
    "IncoherenceProfile",
    "ZeroRankError",
    "thin_svd",
    "thin_svd_array",
    "numerical_rank",
    "incoherence",
    "synth_ftvgs",
    "load_matrix_csv",
    "save_matrix_csv",
]

DEFAULT_RANK_TOL = 1e-9


class ZeroRankError(ValueError):
    """Raised for all-zero matrices, whose rank diagnostics are undefined."""


@dataclass(frozen=True)
class Ftvgs:
    """Real N x T time-vertex signal matrix with its graph and horizon."""

    data: np.ndarray
    graph: VertexGraph
    horizon: TimeHorizon

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        n, t = self.graph.num_vertices, self.horizon.num_steps
        if data.shape != (n, t):
            raise ValueError(
                f"data shape {data.shape} does not match graph/horizon ({n}, {t})")
        if not np.all(np.isfinite(data)):
            raise ValueError("signal contains non-finite entries")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD truncated at the numerical rank, with deterministic signs."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    rank: int

    def compose(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class IncoherenceProfile:
    """Tightest certifying constants for row/column energy spread, plus the
    condition number and smoothness constant of the signal."""

    rank: int
    mu1: float
    mu2: float
    kappa: float
    smoothness_c: float


def thin_svd_array(mat: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> SvdFactors:
    """Thin SVD of a plain 2-D array; see :func:`thin_svd`."""
    mat = np.asarray(mat, dtype=float)
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise ZeroRankError("matrix is all zeros; rank diagnostics undefined")
    r = int(np.count_nonzero(s > rank_tol * s[0]))
    u, s, v = u[:, :r].copy(), s[:r].copy(), vt[:r, :].T.copy()
    # flip paired columns so U keeps the leading-positive convention while
    # U @ diag(s) @ V.T is unchanged
    for k in range(r):
        mags = np.abs(u[:, k])
        lead = int(np.argmax(mags > 1e-8 * mags.max()))
        if u[lead, k] < 0:
            u[:, k] = -u[:, k]
            v[:, k] = -v[:, k]
    return SvdFactors(u=u, sigma=s, v=v, rank=r)


def thin_svd(x: Ftvgs, rank_tol: float = DEFAULT_RANK_TOL) -> SvdFactors:
    """Thin SVD truncated at numerical rank (singular values above
    rank_tol * sigma_max), with each U column's first nonzero entry positive.
    """
    return thin_svd_array(x.data, rank_tol)


def numerical_rank(mat: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count of singular values above rank_tol times the largest one."""
    s = np.linalg.svd(np.asarray(mat, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


def row_norm_inf(mat: np.ndarray) -> float:
    """Largest Euclidean row norm (the 2,inf operator norm)."""
    return float(np.sqrt((np.asarray(mat) ** 2).sum(axis=1).max()))


def incoherence(x: Ftvgs, ops: GraphOperators | None = None,
                tops: TimeOperators | None = None,
                rank_tol: float = DEFAULT_RANK_TOL) -> IncoherenceProfile:
    """Measure the tightest incoherence constants of a nonzero signal.

    mu1 = (N/r) * max row norm^2 of U, mu2 = (T/r) * max row norm^2 of V,
    kappa = sigma_1 / sigma_r. Operators may be passed in to avoid rebuilding
    them inside Monte Carlo loops.
    """
    factors = thin_svd(x, rank_tol)
    n, t = x.data.shape
    r = factors.rank
    mu1 = (n / r) * row_norm_inf(factors.u) ** 2
    mu2 = (t / r) * row_norm_inf(factors.v) ** 2
    kappa = float(factors.sigma[0] / factors.sigma[-1])
    if ops is None:
        ops = build_operators(x.graph)
    if tops is None:
        tops = build_time_operators(x.horizon)
    c = smoothness_constant(x.data, ops, tops)
    return IncoherenceProfile(rank=r, mu1=float(mu1), mu2=float(mu2),
                              kappa=kappa, smoothness_c=c)


def synth_ftvgs(graph: VertexGraph, horizon: TimeHorizon, rank: int,
                graph_band: int, time_band: int, seed: int,
                ops: GraphOperators | None = None,
                tops: TimeOperators | None = None) -> Ftvgs:
    """Generate a unit-Frobenius rank-`rank` signal supported on the leading
    graph_band GFT modes and time_band DFT modes (real part), deterministic
    per seed.
    """
    n, t = graph.num_vertices, horizon.num_steps
    if not (1 <= rank <= min(graph_band, time_band)):
        raise ValueError("need 1 <= rank <= min(graph_band, time_band)")
    if graph_band > n or time_band > t:
        raise ValueError("spectral band exceeds matrix dimensions")
    if ops is None:
        ops = build_operators(graph)
    if tops is None:
        tops = build_time_operators(horizon)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((graph_band, rank))
    b = rng.standard_normal((time_band, rank))
    graph_modes = ops.gft_basis[:, :graph_band]
    time_modes = np.real(tops.dft_basis[:, :time_band])
    data = (graph_modes @ a) @ (time_modes @ b).T
    norm = np.linalg.norm(data)
    if norm == 0.0:
        raise ValueError("degenerate draw produced a zero signal")
    return Ftvgs(data=data / norm, graph=graph, horizon=horizon)


def save_matrix_csv(path, mat: np.ndarray) -> None:
    """Write a dense matrix as CSV, row-major, no header, 17 significant digits."""
    mat = np.asarray(mat, dtype=float)
    with open(path, "w") as fh:
        for row in mat:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def load_matrix_csv(path) -> np.ndarray:
    """Read a dense headerless CSV matrix, checking rectangular shape and
    finiteness."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric entry") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: ragged row "
                                 f"({len(row)} fields, expected {width})")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    mat = np.array(rows, dtype=float)
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{path}: matrix contains non-finite entries")
    return mat
