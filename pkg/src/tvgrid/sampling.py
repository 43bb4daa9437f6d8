"""Subset random sampling, projection, and sample-complexity bounds.

The sampler draws a uniform row subset I and column subset J without
replacement, then draws entries uniformly with replacement inside the I x J
block, so no observation ever lands on an unselected row or column. Companion
samplers reproduce the two classical footprints used for comparison: uniform
entries over the whole matrix, and entries confined to a cross of full rows
plus full columns.

Bound calculators evaluate the rank-preservation row/column minimums, the
recovery sample-count bound and the associated probability expressions, with
vacuous results flagged rather than silently clamped. All logarithms are
natural.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .signals import Ftvgs

__all__ = [
    "SamplingPlan",
    "SampleSet",
    "BoundReport",
    "SampleBound",
    "round_half_away",
    "subset_random_sample",
    "project",
    "min_rows_for_rank",
    "min_cols_for_rank",
    "min_samples_for_recovery",
    "incoherence_failure_probability",
    "recovery_probability",
    "total_ratio",
    "mc_uniform_sample",
    "ccs_sample",
    "build_bound_report",
]


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


@dataclass(frozen=True)
class SamplingPlan:
    """Either ratio-based (rho_rc for rows and columns, rho_sub inside the
    block) or explicit counts for |I|, |J|, |S|."""

    rho_rc: float | None = None
    rho_sub: float | None = None
    n_rows: int | None = None
    n_cols: int | None = None
    n_samples: int | None = None

    def __post_init__(self):
        ratio_mode = self.rho_rc is not None or self.rho_sub is not None
        count_mode = (self.n_rows is not None or self.n_cols is not None
                      or self.n_samples is not None)
        if ratio_mode and count_mode:
            raise ValueError("give either ratios or explicit counts, not both")
        if ratio_mode:
            if self.rho_rc is None or self.rho_sub is None:
                raise ValueError("ratio plans need both rho_rc and rho_sub")
            for rho in (self.rho_rc, self.rho_sub):
                if not 0.0 < rho <= 1.0:
                    raise ValueError(f"sampling ratio {rho} outside (0, 1]")
        elif count_mode:
            if None in (self.n_rows, self.n_cols, self.n_samples):
                raise ValueError("count plans need n_rows, n_cols and n_samples")
        else:
            raise ValueError("empty sampling plan")

    @property
    def is_ratio(self) -> bool:
        return self.rho_rc is not None

    def resolve(self, n: int, t: int) -> tuple[int, int, int]:
        """Concrete (|I|, |J|, |S|) for an N x T matrix."""
        if self.is_ratio:
            n_rows = round_half_away(self.rho_rc * n)
            n_cols = round_half_away(self.rho_rc * t)
            n_samples = round_half_away(self.rho_sub * n_rows * n_cols)
        else:
            n_rows, n_cols, n_samples = self.n_rows, self.n_cols, self.n_samples
        if min(n_rows, n_cols, n_samples) < 1:
            raise ValueError(f"plan resolves to empty selection "
                             f"({n_rows} rows, {n_cols} cols, {n_samples} samples)")
        if n_rows > n or n_cols > t:
            raise ValueError(f"plan requests {n_rows} rows / {n_cols} cols from "
                             f"a {n} x {t} matrix")
        return n_rows, n_cols, n_samples

    @classmethod
    def from_string(cls, text: str) -> "SamplingPlan":
        """Parse ``rc=0.9,sub=0.8`` or ``rows=50,cols=60,samples=1000``."""
        fields: dict[str, float] = {}
        for part in text.split(","):
            if "=" not in part:
                raise ValueError(f"bad plan fragment {part!r}")
            key, val = part.split("=", 1)
            fields[key.strip()] = float(val)
        if set(fields) == {"rc", "sub"}:
            return cls(rho_rc=fields["rc"], rho_sub=fields["sub"])
        if set(fields) == {"rows", "cols", "samples"}:
            return cls(n_rows=int(fields["rows"]), n_cols=int(fields["cols"]),
                       n_samples=int(fields["samples"]))
        raise ValueError(f"plan {text!r} must be rc=..,sub=.. or rows=..,cols=..,samples=..")


@dataclass(frozen=True)
class SampleSet:
    """Observed entries of a matrix: row subset, column subset, entry draws
    (with replacement, duplicates kept) and their values.

    For the whole-matrix and cross footprints, rows/cols list every index the
    sampler may touch; cross_rows/cross_cols record the selected cross when
    applicable (not serialized).
    """

    rows: np.ndarray
    cols: np.ndarray
    entries: np.ndarray
    values: np.ndarray
    seed: int
    cross_rows: np.ndarray | None = field(default=None, compare=False)
    cross_cols: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=int)
        cols = np.asarray(self.cols, dtype=int)
        entries = np.asarray(self.entries, dtype=int).reshape(-1, 2)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "values", values)
        if len(values) != len(entries):
            raise ValueError("values and entries length mismatch")
        if len(entries) == 0:
            raise ValueError("sample set has no entries")
        if not (np.isin(entries[:, 0], rows).all()
                and np.isin(entries[:, 1], cols).all()):
            raise ValueError("entry outside the selected rows/columns")

    @property
    def n_samples(self) -> int:
        return len(self.values)

    @property
    def n_distinct(self) -> int:
        return len(np.unique(self.entries, axis=0))

    def to_json(self) -> str:
        payload = {
            "seed": int(self.seed),
            "rows": [int(i) for i in self.rows],
            "cols": [int(j) for j in self.cols],
            "entries": [[int(i), int(j)] for i, j in self.entries],
            "values": [float(v) for v in self.values],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "SampleSet":
        payload = json.loads(text)
        missing = {"seed", "rows", "cols", "entries", "values"} - set(payload)
        if missing:
            raise ValueError(f"sample set JSON missing fields {sorted(missing)}")
        return cls(rows=np.array(payload["rows"], dtype=int),
                   cols=np.array(payload["cols"], dtype=int),
                   entries=np.array(payload["entries"], dtype=int).reshape(-1, 2),
                   values=np.array(payload["values"], dtype=float),
                   seed=int(payload["seed"]))


def subset_random_sample(x: Ftvgs, plan: SamplingPlan, seed: int) -> SampleSet:
    """Draw a sample set per the subset scheme: rows and columns uniformly
    without replacement, then entries uniformly with replacement inside the
    selected block. A ratio plan with rho_sub exactly 1.0 enumerates the block
    deterministically (full observation).
    """
    data = np.asarray(getattr(x, "data", x), dtype=float)
    n, t = data.shape
    n_rows, n_cols, n_samples = plan.resolve(n, t)
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(n, size=n_rows, replace=False))
    cols = np.sort(rng.choice(t, size=n_cols, replace=False))
    if plan.is_ratio and plan.rho_sub == 1.0:
        gi, gj = np.meshgrid(rows, cols, indexing="ij")
        entries = np.column_stack([gi.ravel(), gj.ravel()])
    else:
        flat = rng.integers(0, n_rows * n_cols, size=n_samples)
        entries = np.column_stack([rows[flat // n_cols], cols[flat % n_cols]])
    values = data[entries[:, 0], entries[:, 1]]
    return SampleSet(rows=rows, cols=cols, entries=entries, values=values,
                     seed=seed)


def mc_uniform_sample(x: Ftvgs, count: int, seed: int) -> SampleSet:
    """Entries uniform with replacement over the whole matrix (every row and
    column is a candidate, so the footprint record lists them all)."""
    data = np.asarray(getattr(x, "data", x), dtype=float)
    n, t = data.shape
    if count < 1:
        raise ValueError("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    flat = rng.integers(0, n * t, size=count)
    entries = np.column_stack([flat // t, flat % t])
    values = data[entries[:, 0], entries[:, 1]]
    return SampleSet(rows=np.arange(n), cols=np.arange(t), entries=entries,
                     values=values, seed=seed)


def ccs_sample(x: Ftvgs, plan: SamplingPlan, seed: int) -> SampleSet:
    """Entries uniform with replacement over a cross of full selected rows
    plus full selected columns. Footprint comparison only: the cross rows and
    columns are kept on the result, and the candidate region spans the whole
    matrix ranges.
    """
    data = np.asarray(getattr(x, "data", x), dtype=float)
    n, t = data.shape
    n_rows, n_cols, _ = plan.resolve(n, t)
    rng = np.random.default_rng(seed)
    cross_rows = np.sort(rng.choice(n, size=n_rows, replace=False))
    cross_cols = np.sort(rng.choice(t, size=n_cols, replace=False))
    row_mask = np.zeros(n, dtype=bool)
    row_mask[cross_rows] = True
    col_mask = np.zeros(t, dtype=bool)
    col_mask[cross_cols] = True
    cell_mask = row_mask[:, None] | col_mask[None, :]
    cells = np.flatnonzero(cell_mask.ravel())
    if plan.is_ratio:
        n_samples = round_half_away(plan.rho_sub * len(cells))
    else:
        n_samples = plan.n_samples
    if n_samples < 1:
        raise ValueError("cross plan resolves to zero samples")
    flat = cells[rng.integers(0, len(cells), size=n_samples)]
    entries = np.column_stack([flat // t, flat % t])
    values = data[entries[:, 0], entries[:, 1]]
    return SampleSet(rows=np.arange(n), cols=np.arange(t), entries=entries,
                     values=values, seed=seed,
                     cross_rows=cross_rows, cross_cols=cross_cols)


def project(shape: tuple[int, int], s: SampleSet) -> np.ndarray:
    """Zero matrix with the observed values written at the sampled positions
    (duplicate draws rewrite the same value)."""
    n, t = shape
    if (s.entries[:, 0].max() >= n or s.entries[:, 1].max() >= t
            or s.entries.min() < 0):
        raise ValueError("sample index outside the target shape")
    out = np.zeros((n, t))
    out[s.entries[:, 0], s.entries[:, 1]] = s.values
    return out


# --- bound calculators -------------------------------------------------------

def min_rows_for_rank(rank: int, mu: float, delta: float, epsilon: float) -> int:
    """Smallest row count guaranteeing rank preservation of the row submatrix
    with probability at least 1 - delta: ceil(3 r mu ln(2r/delta) / eps^2)."""
    if rank < 1:
        raise ValueError("rank must be at least 1")
    if mu < 1.0:
        raise ValueError("incoherence constant must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return math.ceil(3.0 * rank * mu * math.log(2.0 * rank / delta) / epsilon ** 2)


def min_cols_for_rank(rank: int, mu: float, delta: float, epsilon: float) -> int:
    """Column-side analogue of :func:`min_rows_for_rank` (uses mu2)."""
    return min_rows_for_rank(rank, mu, delta, epsilon)


class SampleBound(NamedTuple):
    count: int
    vacuous: bool


def min_samples_for_recovery(rank: int, mu1: float, mu2: float, kappa: float,
                             n_vertices: int, eta: float, beta: float,
                             n_rows: int, n_cols: int) -> SampleBound:
    """Sample-count lower bound for recovery:
    32 beta kappa^4 r^2 N (1-eta)^-3 mu1 mu2 (|I|+|J|)/|I| ln^2(2n),
    n = max(|I|, |J|). Flagged vacuous when it exceeds the block size."""
    if beta <= 1.0:
        raise ValueError("beta must exceed 1")
    if not 0.0 <= eta < 1.0:
        raise ValueError("eta must lie in [0, 1)")
    if min(n_rows, n_cols) < 1:
        raise ValueError("row/column counts must be at least 1")
    if rank < 1 or n_vertices < 1:
        raise ValueError("rank and vertex count must be at least 1")
    if min(mu1, mu2) < 1.0 or kappa < 1.0:
        raise ValueError("incoherence constants and kappa must be at least 1")
    n = max(n_rows, n_cols)
    raw = (32.0 * beta * kappa ** 4 * rank ** 2 * n_vertices
           / (1.0 - eta) ** 3 * mu1 * mu2
           * (n_rows + n_cols) / n_rows * math.log(2.0 * n) ** 2)
    count = math.ceil(raw)
    return SampleBound(count=count, vacuous=count > n_rows * n_cols)


def incoherence_failure_probability(rank: int, eta: float) -> tuple[float, bool]:
    """Failure probability p = r [e^-eta / (1-eta)^(1-eta)]^ln(r) for the
    incoherence propagation guarantee. Returns (p, vacuous); p >= 1 is
    vacuous (always so at rank 1, where the exponent vanishes)."""
    if rank < 1:
        raise ValueError("rank must be at least 1")
    if not 0.0 <= eta < 1.0:
        raise ValueError("eta must lie in [0, 1)")
    bracket = math.exp(-eta) / (1.0 - eta) ** (1.0 - eta)
    p = rank * bracket ** math.log(rank)
    return p, p >= 1.0


def recovery_probability(delta: float, p: float, beta: float,
                         n_rows: int, n_cols: int) -> float:
    """Raw success-probability expression
    (1-delta)^2 (1-p)^2 - 6 ln(n)/(|I|+|J|)^(2 beta - 2) - n^(2 - 2 sqrt(beta)),
    which may be negative (vacuous)."""
    if min(n_rows, n_cols) < 1:
        raise ValueError("row/column counts must be at least 1")
    n = max(n_rows, n_cols)
    return ((1.0 - delta) ** 2 * (1.0 - p) ** 2
            - 6.0 * math.log(n) / (n_rows + n_cols) ** (2.0 * beta - 2.0)
            - n ** (2.0 - 2.0 * math.sqrt(beta)))


def total_ratio(plan: SamplingPlan, n: int, t: int) -> float:
    """Fraction of matrix entries drawn: |S| / (N T) after resolving the plan."""
    _, _, n_samples = plan.resolve(n, t)
    return n_samples / (n * t)


@dataclass(frozen=True)
class BoundReport:
    """Evaluated lower bounds and probability expressions for one parameter
    choice, with rawness preserved and vacuous results flagged."""

    rank: int
    mu1: float
    mu2: float
    kappa: float
    delta: float
    epsilon: float
    eta: float
    beta: float
    min_rows: int
    min_cols: int
    min_samples: int
    samples_vacuous: bool
    rank_prob: float
    incoherence_p: float
    incoherence_prob_raw: float
    incoherence_prob: float
    incoherence_vacuous: bool
    recovery_prob_raw: float
    recovery_prob: float
    recovery_vacuous: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def build_bound_report(rank: int, mu1: float, mu2: float, kappa: float,
                       n_vertices: int, delta: float, epsilon: float,
                       eta: float, beta: float,
                       n_rows: int | None = None,
                       n_cols: int | None = None) -> BoundReport:
    """Evaluate every bound at one parameter point. When explicit row/column
    counts are omitted, the rank-preservation minimums are used for the
    sample bound and probability expression."""
    min_rows = min_rows_for_rank(rank, mu1, delta, epsilon)
    min_cols = min_cols_for_rank(rank, mu2, delta, epsilon)
    rows = min_rows if n_rows is None else n_rows
    cols = min_cols if n_cols is None else n_cols
    samples = min_samples_for_recovery(rank, mu1, mu2, kappa, n_vertices,
                                       eta, beta, rows, cols)
    p, p_vacuous = incoherence_failure_probability(rank, eta)
    inc_raw = (1.0 - p) ** 2
    inc = 0.0 if p_vacuous else min(max(inc_raw, 0.0), 1.0)
    rec_raw = recovery_probability(delta, p, beta, rows, cols)
    rec_vacuous = p_vacuous or rec_raw <= 0.0
    return BoundReport(
        rank=rank, mu1=mu1, mu2=mu2, kappa=kappa, delta=delta, epsilon=epsilon,
        eta=eta, beta=beta, min_rows=min_rows, min_cols=min_cols,
        min_samples=samples.count, samples_vacuous=samples.vacuous,
        rank_prob=(1.0 - delta) ** 2,
        incoherence_p=p, incoherence_prob_raw=inc_raw, incoherence_prob=inc,
        incoherence_vacuous=p_vacuous,
        recovery_prob_raw=rec_raw,
        recovery_prob=0.0 if rec_vacuous else min(rec_raw, 1.0),
        recovery_vacuous=rec_vacuous,
    )
