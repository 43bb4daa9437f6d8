"""Vertex-graph and temporal difference operators.

Builds the weighted incidence matrix, graph Laplacian, graph Fourier basis
(Laplacian eigenvectors), first/second-order temporal difference matrices and
the unitary DFT basis, plus the smoothness functionals defined on top of them
(graph total variation, joint vertex/time gradient, second time difference).

Conventions: edges are stored as (u, v, weight) with u < v; the incidence
column of an edge carries +sqrt(w) at u (tail) and -sqrt(w) at v, so that
Q @ Q.T reproduces the weighted Laplacian. Eigenvector and singular-vector
signs are fixed so the first nonzero component is positive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "VertexGraph",
    "TimeHorizon",
    "GraphOperators",
    "TimeOperators",
    "build_operators",
    "build_time_operators",
    "dft_matrix",
    "fix_column_signs",
    "graph_total_variation",
    "joint_gradient_norm",
    "smoothness_constant",
]


@dataclass(frozen=True)
class VertexGraph:
    """Undirected weighted graph with a fixed edge orientation (u < v).

    edges: tuple of (u, v, weight) with 0 <= u < v < num_vertices, weight > 0.
    """

    num_vertices: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.num_vertices < 1:
            raise ValueError("graph must have at least one vertex")
        seen = set()
        for u, v, w in self.edges:
            if not (0 <= u < v < self.num_vertices):
                raise ValueError(f"bad edge ({u}, {v}): need 0 <= u < v < N")
            if w <= 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @classmethod
    def path(cls, n: int, weight: float = 1.0) -> "VertexGraph":
        return cls(n, tuple((i, i + 1, weight) for i in range(n - 1)))

    @classmethod
    def ring(cls, n: int, weight: float = 1.0) -> "VertexGraph":
        if n < 3:
            raise ValueError("ring graph needs at least 3 vertices")
        edges = [(i, i + 1, weight) for i in range(n - 1)] + [(0, n - 1, weight)]
        return cls(n, tuple(sorted(edges)))

    @classmethod
    def from_csv(cls, path) -> "VertexGraph":
        """Read an edge list CSV with header ``u,v,weight`` (0-based indices)."""
        edges = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:3]] != ["u", "v", "weight"]:
                raise ValueError(f"{path}: expected header 'u,v,weight'")
            for row in reader:
                if not row:
                    continue
                if len(row) < 3:
                    raise ValueError(f"{path}: short edge row {row!r}")
                u, v, w = int(row[0]), int(row[1]), float(row[2])
                if u > v:
                    u, v = v, u
                edges.append((u, v, w))
        if not edges:
            raise ValueError(f"{path}: no edges found")
        n = max(v for _, v, _ in edges) + 1
        return cls(n, tuple(sorted(edges)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["u", "v", "weight"])
            for u, v, w in self.edges:
                writer.writerow([u, v, format(w, ".17g")])


@dataclass(frozen=True)
class TimeHorizon:
    """Discrete time axis of num_steps samples; needs >= 3 steps so the
    second-difference operator is nonempty."""

    num_steps: int

    def __post_init__(self):
        if self.num_steps < 3:
            raise ValueError("time horizon must have at least 3 steps")


@dataclass(frozen=True)
class GraphOperators:
    """Incidence matrix Q (N x M), Laplacian L = Q Q^T and orthonormal GFT
    basis (Laplacian eigenvectors, eigenvalues ascending)."""

    incidence: np.ndarray
    laplacian: np.ndarray
    gft_basis: np.ndarray
    gft_eigenvalues: np.ndarray


@dataclass(frozen=True)
class TimeOperators:
    """First/second forward-difference matrices (T x (T-1), T x (T-2)) and
    the unitary DFT basis."""

    d1: np.ndarray
    d2: np.ndarray
    dft_basis: np.ndarray


def fix_column_signs(mat: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's first nonzero component is positive.

    Nonzero is judged against 1e-8 times the column's max magnitude, which
    keeps the convention stable under eigensolver roundoff.
    """
    out = np.array(mat)
    for k in range(out.shape[1]):
        col = out[:, k]
        mags = np.abs(col)
        top = mags.max()
        if top == 0.0:
            continue
        lead = int(np.argmax(mags > 1e-8 * top))
        if np.real(col[lead]) < 0:
            out[:, k] = -col
    return out


def build_operators(graph: VertexGraph) -> GraphOperators:
    """Assemble incidence, Laplacian and GFT basis for a vertex graph."""
    n, m = graph.num_vertices, graph.num_edges
    q = np.zeros((n, m))
    for e, (u, v, w) in enumerate(graph.edges):
        root = np.sqrt(w)
        q[u, e] = root
        q[v, e] = -root
    lap = q @ q.T
    eigvals, eigvecs = np.linalg.eigh(lap)
    order = np.argsort(eigvals, kind="stable")
    eigvals = eigvals[order]
    eigvecs = fix_column_signs(eigvecs[:, order])
    return GraphOperators(incidence=q, laplacian=lap, gft_basis=eigvecs,
                          gft_eigenvalues=eigvals)


def dft_matrix(t: int) -> np.ndarray:
    """Unitary DFT matrix, entry (row, k) = exp(-2 pi i row k / t) / sqrt(t)."""
    if t < 1:
        raise ValueError("DFT size must be positive")
    idx = np.arange(t)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / t) / np.sqrt(t)


def build_time_operators(horizon: TimeHorizon) -> TimeOperators:
    """Assemble D1, D2 and the DFT basis for a time horizon."""
    t = horizon.num_steps
    d1 = np.zeros((t, t - 1))
    for j in range(t - 1):
        d1[j, j] = -1.0
        d1[j + 1, j] = 1.0
    d2 = np.zeros((t, t - 2))
    for j in range(t - 2):
        d2[j, j] = 1.0
        d2[j + 1, j] = -2.0
        d2[j + 2, j] = 1.0
    return TimeOperators(d1=d1, d2=d2, dft_basis=dft_matrix(t))


def _check_matrix(x, ops: GraphOperators) -> np.ndarray:
    data = np.asarray(getattr(x, "data", x), dtype=float)
    if data.ndim != 2 or data.shape[0] != ops.laplacian.shape[0]:
        raise ValueError("matrix rows do not match the graph operators")
    return data


def graph_total_variation(data: np.ndarray, ops: GraphOperators, j: int) -> float:
    """Quadratic-form smoothness x^T L x of column j (= sum of weighted
    squared edge differences, always >= 0)."""
    data = _check_matrix(data, ops)
    if not 0 <= j < data.shape[1]:
        raise ValueError(f"column index {j} out of range")
    diffs = ops.incidence.T @ data[:, j]
    return float(diffs @ diffs)


def joint_gradient_norm(data: np.ndarray, ops: GraphOperators,
                        tops: TimeOperators, i: int, j: int) -> float:
    """Euclidean norm of the stacked vertex/time gradient at entry (i, j).

    The vertex block holds the weighted edge differences of column j on the
    edges incident to vertex i; the time block holds the first forward
    difference, absent at the last column (D1 has T-1 columns).
    """
    data = _check_matrix(data, ops)
    n, t = data.shape
    if not (0 <= i < n and 0 <= j < t):
        raise ValueError(f"index ({i}, {j}) out of range")
    incident = ops.incidence[i, :] != 0.0
    edge_part = (ops.incidence.T @ data[:, j])[incident]
    total = float(edge_part @ edge_part)
    if j < t - 1:
        td = data[i, j + 1] - data[i, j]
        total += td * td
    return float(np.sqrt(total))


def smoothness_constant(data: np.ndarray, ops: GraphOperators,
                        tops: TimeOperators) -> float:
    """Tightest constant bounding the graph total variation, the joint
    gradient norms and the second time differences over all entries."""
    data = _check_matrix(data, ops)
    n, t = data.shape
    if tops.d1.shape[0] != t:
        raise ValueError("matrix columns do not match the time operators")
    edge_diffs = ops.incidence.T @ data                      # M x T
    tv_max = float(np.abs((edge_diffs ** 2).sum(axis=0)).max()) if t else 0.0

    incident = (ops.incidence != 0.0).astype(float)          # N x M
    grad_sq = incident @ (edge_diffs ** 2)                   # vertex blocks, N x T
    td = data @ tops.d1                                      # N x (T-1)
    grad_sq[:, : t - 1] += td ** 2
    grad_max = float(np.sqrt(grad_sq.max())) if grad_sq.size else 0.0

    d2 = data @ tops.d2
    d2_max = float(np.abs(d2).max()) if d2.size else 0.0
    return max(tv_max, grad_max, d2_max)
