"""Scoring synthetic populations and running benchmark grids.

The headline metric is the mean relative constraint error: the average
over constraints of |achieved - target| / target, where the achieved value
is the empirical frequency of the constraint's pattern in a sampled
integer population.  The benchmark harness sweeps (problem, method, size,
seed) cells, fitting each method once per problem and sampling fresh
populations per cell, and reports per-cell errors plus a winner/gap
summary per (problem, size).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._dense import DEFAULT_ENUM_CAP, ScopeLayout
from .core import Population
from .errors import ValidationError
from .extraction import ConstraintSet
from .model import DEFAULT_MAX_ITER, DEFAULT_TOL, fit_hard
from .raking import DEFAULT_RAKE_ITERATIONS, rake
from .sampling import draw_cells

METHODS = ("maxent", "raking")


@dataclass(frozen=True)
class WorstConstraint:
    index: int
    pattern: str
    target: float
    achieved: float
    rel_error: float


@dataclass(frozen=True)
class EvalResult:
    """Mean relative constraint error with per-arity breakdown."""

    mre: float
    per_arity: dict[int, float]
    worst: tuple[WorstConstraint, ...]
    n: int
    seconds: float = field(compare=False, default=0.0)


def mre(pop: Population, constraints: ConstraintSet) -> EvalResult:
    """Score a population against a constraint set (lower is better)."""
    if pop.schema != constraints.schema:
        raise ValidationError("population schema does not match constraint set")
    if pop.total == 0:
        raise ValidationError("cannot score an empty population")
    t0 = time.perf_counter()
    layout = ScopeLayout(constraints.schema, constraints.patterns())
    achieved = layout.sparse_masses(pop.cells, pop.counts, pop.total)
    targets = constraints.targets()
    rel = np.abs(achieved - targets) / targets
    arities = constraints.arities()
    per_arity = {
        int(a): float(rel[arities == a].mean()) for a in np.unique(arities)
    }
    order = np.lexsort((np.arange(rel.size), -rel))[:10]
    worst = tuple(
        WorstConstraint(
            index=int(j),
            pattern=constraints.constraints[j].pattern.describe(constraints.schema),
            target=float(targets[j]),
            achieved=float(achieved[j]),
            rel_error=float(rel[j]),
        )
        for j in order
    )
    return EvalResult(
        mre=float(rel.mean()),
        per_arity=per_arity,
        worst=worst,
        n=pop.total,
        seconds=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class BenchmarkProblem:
    """One constraint system in a grid, labeled by its name."""

    name: str
    constraints: ConstraintSet

    @property
    def k(self) -> int:
        return self.constraints.schema.k

    @property
    def max_arity(self) -> int:
        return max((c.arity for c in self.constraints.constraints), default=0)


@dataclass(frozen=True)
class BenchmarkGrid:
    """Axes and method options of one benchmark run."""

    problems: tuple[BenchmarkProblem, ...]
    sizes: tuple[int, ...]
    seeds: tuple[int, ...]
    methods: tuple[str, ...] = METHODS
    fit_tol: float = DEFAULT_TOL
    fit_max_iter: int = DEFAULT_MAX_ITER
    rake_iterations: int = DEFAULT_RAKE_ITERATIONS
    rake_tol: float | None = None
    enum_cap: int = DEFAULT_ENUM_CAP
    jobs: int = 1

    def __post_init__(self):
        if not self.problems or not self.sizes or not self.seeds:
            raise ValidationError("benchmark grid needs problems, sizes, and seeds")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValidationError("benchmark seeds must be distinct")
        if any(n < 1 for n in self.sizes):
            raise ValidationError("population sizes must be >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValidationError(f"methods must be a nonempty subset of {METHODS}")


@dataclass(frozen=True)
class BenchmarkRow:
    problem: str
    k: int
    max_arity: int
    method: str
    n: int
    seed: int
    mre: float
    mre_unary: float
    mre_binary: float
    mre_ternary: float
    fit_seconds: float
    sample_seconds: float
    converged: bool

    def key_fields(self) -> tuple:
        """Row content minus wall-time diagnostics (the deterministic part)."""
        return (self.problem, self.k, self.max_arity, self.method, self.n,
                self.seed, self.mre, self.mre_unary, self.mre_binary,
                self.mre_ternary, self.converged)


@dataclass(frozen=True)
class BenchmarkSummary:
    problem: str
    n: int
    mean_mre: dict[str, float]
    winner: str
    gap: float


def relative_gap(winner_mre: float, loser_mre: float) -> float:
    """Relative reduction of the winner over the weaker method."""
    return (loser_mre - winner_mre) / loser_mre


@dataclass
class BenchmarkReport:
    rows: list[BenchmarkRow]
    summaries: list[BenchmarkSummary]
    failures: list[str] = field(default_factory=list)


def _fit_method(problem: BenchmarkProblem, method: str, grid: BenchmarkGrid):
    """Returns (distribution over cells, fit seconds, converged flag)."""
    if method == "maxent":
        t0 = time.perf_counter()
        model, report = fit_hard(
            problem.constraints,
            tol=grid.fit_tol,
            max_iter=grid.fit_max_iter,
            enum_cap=grid.enum_cap,
        )
        dist = model.probabilities()
        return dist, time.perf_counter() - t0, report.converged
    t0 = time.perf_counter()
    wv = rake(
        problem.constraints,
        iterations=grid.rake_iterations,
        tol=grid.rake_tol,
        enum_cap=grid.enum_cap,
    )
    return wv.weights, time.perf_counter() - t0, True


def run_benchmark(grid: BenchmarkGrid) -> BenchmarkReport:
    """Sweep the grid; fit once per (problem, method), sample per (n, seed).

    Cell failures are recorded in the report instead of raised.  Rows come
    back in deterministic grid order (problem, method, n, seed) regardless
    of the worker count.
    """
    rows: list[BenchmarkRow] = []
    failures: list[str] = []
    acc: dict[tuple[str, int, str], list[float]] = {}

    for problem in grid.problems:
        layout = ScopeLayout(problem.constraints.schema, problem.constraints.patterns())
        targets = problem.constraints.targets()
        arities = problem.constraints.arities()
        n_cells = problem.constraints.schema.n_cells

        for method in grid.methods:
            try:
                dist, fit_seconds, converged = _fit_method(problem, method, grid)
            except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                failures.append(f"{problem.name}/{method}: fit failed: {exc}")
                continue

            def cell_job(n: int, seed: int):
                t0 = time.perf_counter()
                draws = draw_cells(dist, n, seed)
                counts = np.bincount(draws, minlength=n_cells)
                occupied = np.flatnonzero(counts)
                sample_seconds = time.perf_counter() - t0
                achieved = layout.sparse_masses(occupied, counts[occupied], n)
                rel = np.abs(achieved - targets) / targets
                by_arity = {
                    a: float(rel[arities == a].mean()) if np.any(arities == a) else math.nan
                    for a in (1, 2, 3)
                }
                return BenchmarkRow(
                    problem=problem.name,
                    k=problem.k,
                    max_arity=problem.max_arity,
                    method=method,
                    n=n,
                    seed=seed,
                    mre=float(rel.mean()),
                    mre_unary=by_arity[1],
                    mre_binary=by_arity[2],
                    mre_ternary=by_arity[3],
                    fit_seconds=fit_seconds,
                    sample_seconds=sample_seconds,
                    converged=converged,
                )

            cells = [(n, seed) for n in grid.sizes for seed in grid.seeds]
            if grid.jobs > 1:
                with ThreadPoolExecutor(max_workers=grid.jobs) as pool:
                    results = list(pool.map(lambda c: cell_job(*c), cells))
            else:
                results = [cell_job(*c) for c in cells]
            for row in results:
                rows.append(row)
                acc.setdefault((problem.name, row.n, method), []).append(row.mre)

    summaries: list[BenchmarkSummary] = []
    for problem in grid.problems:
        for n in grid.sizes:
            mean_mre = {
                method: float(np.mean(acc[(problem.name, n, method)]))
                for method in grid.methods
                if (problem.name, n, method) in acc
            }
            if not mean_mre:
                continue
            if len(mean_mre) == 1:
                (winner,) = mean_mre
                gap = 0.0
            else:
                ordered = sorted(mean_mre.items(), key=lambda kv: kv[1])
                (winner, best), (_, worst) = ordered[0], ordered[-1]
                if best == worst:
                    winner = "equal"
                    gap = 0.0
                else:
                    gap = relative_gap(best, worst)
            summaries.append(BenchmarkSummary(problem.name, n, mean_mre, winner, gap))
    return BenchmarkReport(rows, summaries, failures)


RESULT_COLUMNS = (
    "problem", "k", "max_arity", "method", "n", "seed", "mre",
    "mre_unary", "mre_binary", "mre_ternary",
    "fit_seconds", "sample_seconds", "converged",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def results_table(report: BenchmarkReport, header_comments=()) -> str:
    """Flat delimited results table (one row per grid cell)."""
    lines = [f"# {c}" for c in header_comments]
    lines.append(",".join(RESULT_COLUMNS))
    for row in report.rows:
        lines.append(",".join(_fmt(getattr(row, col)) for col in RESULT_COLUMNS))
    return "\n".join(lines) + "\n"


def summary_table(report: BenchmarkReport, header_comments=()) -> str:
    """Per-(problem, n) winner and relative-advantage summary."""
    lines = [f"# {c}" for c in header_comments]
    methods = sorted({m for s in report.summaries for m in s.mean_mre})
    cols = ["problem", "n"] + [f"mre_{m}" for m in methods] + ["winner", "gap"]
    lines.append(",".join(cols))
    for s in report.summaries:
        vals = [s.problem, str(s.n)]
        vals += [_fmt(s.mean_mre.get(m, math.nan)) for m in methods]
        vals += [s.winner, _fmt(s.gap)]
        lines.append(",".join(vals))
    for failure in report.failures:
        lines.append(f"# FAILURE {failure}")
    return "\n".join(lines) + "\n"
