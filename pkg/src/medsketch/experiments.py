"""Moment experiments over grids of ``(t, s)`` and their CSV reports.

A frequency experiment rebuilds the sketch of a vector ``trials`` times with
fresh per-trial seeds and averages ``|estimate - truth|**order`` over the
queried indices.  An inner-product experiment does the same for the median
of row-wise dot products of two sketches sharing hash functions.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from . import datasets, oracle
from .datasets import Dataset, DatasetSpec
from .hashing import SignFamily, log2_exact
from .median import DiscreteDist, empirical_moment, sample_medians
from .simulate import (
    MULTIPLY_SHIFT, NUMBA, MomentAccumulator, QueryPlan, SimulationSetup,
    inner_error_batches, point_error_batches,
)

CSV_HEADER = ("dataset", "t", "s", "order", "n", "moment", "moment_x_s", "moment_x_s2")
ORDERS = (1, 2, 4)

STANDARD_TRIALS, STANDARD_QUERIES = 1000, 100
SMALL_TRIALS, SMALL_QUERIES = 10**6, 1
SMALL_DATA_ITEMS = 5000


def protocol_for(items: int) -> tuple[int, int]:
    """``(trials, queries_per_trial)``: many single-query sketches for small inputs."""
    if items < SMALL_DATA_ITEMS:
        return SMALL_TRIALS, SMALL_QUERIES
    return STANDARD_TRIALS, STANDARD_QUERIES


@dataclass
class ExperimentConfig:
    dataset: DatasetSpec
    t_values: Sequence[int] = (1, 2)
    s_grid: Sequence[int] = (1024,)
    trials: int = STANDARD_TRIALS
    queries_per_trial: int = STANDARD_QUERIES
    order: int = 2
    query_mode: str | None = None
    seed: int = 0
    sign_family: SignFamily = SignFamily.PAIRWISE
    hash_model: str = MULTIPLY_SHIFT
    backend: str = NUMBA
    dataset_w: DatasetSpec | None = None
    out_path: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.queries_per_trial < 1:
            raise ValueError("queries per trial must be >= 1")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order}")
        if not self.t_values or min(self.t_values) < 1:
            raise ValueError("t values must be >= 1")
        if not self.s_grid:
            raise ValueError("empty s grid")
        for s in self.s_grid:
            log2_exact(s)
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.t_values = tuple(sorted(set(int(t) for t in self.t_values)))
        self.s_grid = tuple(sorted(set(int(s) for s in self.s_grid)))
        self.sign_family = SignFamily(self.sign_family)
        if self.query_mode is None:
            self.query_mode = datasets.default_query_mode(self.dataset)

    def setup(self) -> SimulationSetup:
        return SimulationSetup(self.t_values, self.s_grid, self.trials, self.seed,
                               self.sign_family, self.hash_model, backend=self.backend)


@dataclass(frozen=True)
class MomentRow:
    dataset: str
    t: int
    s: int
    order: int
    n: int
    moment: float
    stderr: float = field(default=float("nan"), compare=False)

    @property
    def moment_x_s(self) -> float:
        return self.moment * self.s

    @property
    def moment_x_s2(self) -> float:
        return self.moment * self.s * self.s


@dataclass
class MomentReport:
    rows: list[MomentRow] = field(default_factory=list)

    def sorted_rows(self) -> list[MomentRow]:
        return sorted(self.rows, key=lambda r: (r.dataset, r.t, r.s, r.order))

    def get(self, t: int, s: int) -> MomentRow:
        for row in self.rows:
            if row.t == t and row.s == s:
                return row
        raise KeyError((t, s))

    def series(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """``(s, moment)`` over the grid for one ``t``."""
        rows = sorted((r for r in self.rows if r.t == t), key=lambda r: r.s)
        return np.array([r.s for r in rows], dtype=float), np.array([r.moment for r in rows])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MomentReport):
            return NotImplemented
        return self.sorted_rows() == other.sorted_rows()


def _report(tag: str, cfg: ExperimentConfig, acc: MomentAccumulator) -> MomentReport:
    rows = []
    for t in cfg.t_values:
        for s in cfg.s_grid:
            est = acc.result(t, s, cfg.order)
            rows.append(MomentRow(tag, t, s, cfg.order, est.samples, est.moment, est.stderr))
    return MomentReport(rows)


def run_freq_experiment(cfg: ExperimentConfig, data: Dataset | None = None) -> MomentReport:
    data = data or datasets.load(cfg.dataset)
    candidates = datasets.query_candidates(data, cfg.query_mode)
    plan = QueryPlan.sample_from(candidates, cfg.queries_per_trial)
    acc = MomentAccumulator((cfg.order,)).consume(point_error_batches(data.vector, plan, cfg.setup()))
    return _report(data.tag, cfg, acc)


def load_pair(cfg: ExperimentConfig):
    """The two vectors of an inner-product experiment and their tag."""
    data = datasets.load(cfg.dataset)
    if len(data.vectors) == 2:
        return data.tag, data.vectors[0], data.vectors[1]
    if cfg.dataset_w is None:
        raise ValueError(f"dataset {data.tag} is a single vector; give a second one")
    other = datasets.load(cfg.dataset_w)
    return f"{data.tag}+{other.tag}", data.vector, other.vector


def run_inner_experiment(cfg: ExperimentConfig) -> MomentReport:
    tag, v, w = load_pair(cfg)
    acc = MomentAccumulator((cfg.order,)).consume(inner_error_batches(v, w, cfg.setup()))
    return _report(tag, cfg, acc)


@dataclass(frozen=True)
class MedianCheckReport:
    """Both sides of ``E|Y - E[X]|**(tq) <= C(2t-1, t) (E|X - E[X]|**q)**t``."""

    t: int
    q: int
    exact_lhs: float | None
    rhs: float
    mc_lhs: float
    mc_stderr: float
    trials: int

    @property
    def ratio(self) -> float | None:
        if self.exact_lhs is None:
            return None
        return self.exact_lhs / self.rhs if self.rhs > 0 else 0.0

    @property
    def holds(self) -> bool | None:
        if self.exact_lhs is None:
            return None
        return self.exact_lhs <= self.rhs * (1 + 1e-9) + 1e-12

    def lines(self) -> list[str]:
        exact = "n/a" if self.exact_lhs is None else f"{self.exact_lhs:.6e}"
        ratio = "n/a" if self.ratio is None else f"{self.ratio:.4f}"
        return [
            f"t={self.t} q={self.q}",
            f"exact lhs   {exact}",
            f"mc lhs      {self.mc_lhs:.6e} +- {self.mc_stderr:.2e} ({self.trials} trials)",
            f"rhs         {self.rhs:.6e}",
            f"ratio       {ratio}",
            f"holds       {self.holds}",
        ]


def run_median_moment_check(dist: DiscreteDist, t: int, q: int, trials: int = 10**5,
                            seed: int = 0) -> MedianCheckReport:
    mu = dist.mean()
    rhs = comb(2 * t - 1, t) * dist.central_abs_moment(q) ** t
    try:
        exact = oracle.median_of_iid_distribution(dist, t).moment(t * q, center=mu)
    except oracle.EnumerationTooLarge:
        exact = None
    meds = sample_medians(dist, t, trials, np.random.default_rng(seed))
    dev = np.abs(meds - mu) ** (t * q)
    se = float(dev.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan")
    return MedianCheckReport(t, q, exact, rhs, empirical_moment(meds, mu, t * q), se, trials)


def parse_dist(text: str) -> DiscreteDist:
    """``tightness:K``, ``uniform:X1,X2,...`` or ``pmf:X1=P1,X2=P2,...``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "tightness":
            from .median import tightness_dist

            return tightness_dist(int(rest))
        if kind == "uniform":
            vals = [float(x) for x in rest.split(",")]
            return DiscreteDist(vals, np.full(len(vals), 1.0 / len(vals)))
        if kind == "pmf":
            pairs = [item.split("=") for item in rest.split(",")]
            return DiscreteDist([float(x) for x, _ in pairs], [float(p) for _, p in pairs])
    except ValueError as exc:
        raise ValueError(f"bad distribution {text!r}: {exc}") from None
    raise ValueError(f"unknown distribution {text!r}; use tightness:K, uniform:..., pmf:...")


def csv_text(report: MomentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in report.sorted_rows():
        writer.writerow([r.dataset, r.t, r.s, r.order, r.n,
                         repr(r.moment), repr(r.moment_x_s), repr(r.moment_x_s2)])
    return buf.getvalue()


def emit_csv(report: MomentReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(report))


def read_csv(path) -> MomentReport:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = [MomentRow(d, int(t), int(s), int(o), int(n), float(m))
                for d, t, s, o, n, m, *_ in reader]
    return MomentReport(rows)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("need at least two positive points")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
